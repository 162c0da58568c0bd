//! Batch runs of the invariant suite behind `ebchan verify`.

use ebchan::invariants::{check_batch, random_suite_channel, CheckOutcome};
use ebchan::{Execution, HolevoForm, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub channel: usize,
    pub label: String,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSummary {
    pub label: String,
    pub checks_run: usize,
    pub checks_passed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub channels: Vec<ChannelSummary>,
    pub checks_run: usize,
    pub passed: bool,
    pub failures: Vec<Failure>,
}

/// A channel to verify, or the reason it could not be built.
pub type Subject = (String, Result<HolevoForm, (String, String)>);

pub fn random_subjects(count: usize, seed: u64, tol: &Tolerances) -> Vec<Subject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let form = random_suite_channel(&mut rng, tol);
            (
                format!("random #{i} (n = {}, r = {})", form.n(), form.r()),
                Ok(form),
            )
        })
        .collect()
}

pub fn verify(subjects: Vec<Subject>, seed: u64, tol: &Tolerances) -> VerifySummary {
    let (labels, built): (Vec<String>, Vec<_>) = subjects.into_iter().unzip();
    let forms: Vec<HolevoForm> = built
        .iter()
        .filter_map(|b| b.as_ref().ok().cloned())
        .collect();
    let mut outcomes = check_batch(&forms, seed, tol, Execution::default()).into_iter();

    let mut channels = Vec::new();
    let mut failures = Vec::new();
    for (channel, (label, b)) in labels.into_iter().zip(built).enumerate() {
        let results: Vec<(String, bool, String)> = match b {
            Ok(_) => outcomes
                .next()
                .expect("one outcome list per form")
                .into_iter()
                .map(|o: CheckOutcome| (o.check.to_string(), o.passed, o.detail))
                .collect(),
            Err((check, detail)) => vec![(check, false, detail)],
        };
        for (check, _, detail) in results.iter().filter(|o| !o.1) {
            failures.push(Failure {
                channel,
                label: label.clone(),
                check: check.clone(),
                detail: detail.clone(),
            });
        }
        channels.push(ChannelSummary {
            label,
            checks_run: results.len(),
            checks_passed: results.iter().filter(|o| o.1).count(),
        });
    }
    VerifySummary {
        seed,
        checks_run: channels.iter().map(|c| c.checks_run).sum(),
        passed: failures.is_empty(),
        channels,
        failures,
    }
}

pub fn plural(count: usize, noun: &str) -> String {
    if count == 1 {
        format!("1 {noun}")
    } else {
        format!("{count} {noun}s")
    }
}

impl VerifySummary {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.channels {
            out += &format!(
                "{}: {}/{} checks passed\n",
                c.label, c.checks_passed, c.checks_run
            );
        }
        out += &format!(
            "{}, {}, {} failed (seed {})\n",
            plural(self.channels.len(), "channel"),
            plural(self.checks_run, "check"),
            self.failures.len(),
            self.seed
        );
        if !self.failures.is_empty() {
            for f in &self.failures {
                out += &format!("FAIL {} [{}]: {}\n", f.label, f.check, f.detail);
            }
            out += &serde_json::to_string(&self.failures).expect("failures serialize");
            out.push('\n');
        }
        out
    }
}
