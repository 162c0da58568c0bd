//! The invariant suite run by batch verification: every structural identity
//! and index bound the crate relies on, checked on one channel at a time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::HolevoForm;
use crate::exec::Execution;
use crate::matrix::{self, ComplexMatrix, Tolerances};
use crate::primitivity::{
    channel_primitivity_index, holevo_q_bound, holevo_rank_bounds, is_primitive_channel,
    strictly_positive_at, PositivityOptions, SearchWindow,
};
use crate::random;
use crate::stochastic::{wielandt_bound, StochasticMatrix};

/// The brute-force primitivity sweep is only run up to this many pairs.
pub const SWEEP_MAX_PAIRS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(check: &'static str, detail: impl Into<String>) -> Self {
        Self {
            check,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(check: &'static str, detail: impl Into<String>) -> Self {
        Self {
            check,
            passed: false,
            detail: detail.into(),
        }
    }

    fn bound(check: &'static str, value: f64, limit: f64) -> Self {
        let detail = format!("{value:.3e} (limit {limit:.0e})");
        if value <= limit {
            Self::pass(check, detail)
        } else {
            Self::fail(check, detail)
        }
    }
}

/// Runs the whole suite on `form`. Randomized checks draw from a generator
/// seeded with `seed`, so a run is reproducible.
pub fn check_channel(form: &HolevoForm, seed: u64, tol: &Tolerances) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    out.extend(povm_closure(form, tol));
    out.push(linear_extension(form, &mut rng));
    out.push(CheckOutcome::bound(
        "choi-formulas",
        form.choi().max_diff(&form.choi_from_pairs()),
        1e-10,
    ));

    let s = match form.stochastic_rep(tol) {
        Ok(s) => s,
        Err(e) => {
            out.push(CheckOutcome::fail("stochastic-rep", e.to_string()));
            return out;
        }
    };
    out.push(CheckOutcome::bound(
        "stochastic-columns",
        s.column_sum_residual(),
        tol.stochastic_tol,
    ));
    out.push(match form.representation_residuals(tol) {
        Ok(res) => CheckOutcome::bound(
            "factorization",
            res.ab_minus_natural.max(res.ba_minus_stochastic),
            1e-10,
        ),
        Err(e) => CheckOutcome::fail("factorization", e.to_string()),
    });
    out.push(measurement_weights(form, &s, &mut rng));
    out.push(match form.compare_nonzero_spectrum(tol) {
        Ok(cmp) if cmp.matched => CheckOutcome::pass(
            "nonzero-spectrum",
            format!(
                "{} values, max distance {:.3e}",
                cmp.channel_nonzero.len(),
                cmp.max_pair_distance
            ),
        ),
        Ok(cmp) => CheckOutcome::fail(
            "nonzero-spectrum",
            format!(
                "{} vs {} values, max distance {:.3e}",
                cmp.channel_nonzero.len(),
                cmp.matrix_nonzero.len(),
                cmp.max_pair_distance
            ),
        ),
        Err(e) => CheckOutcome::fail("nonzero-spectrum", e.to_string()),
    });
    out.push(qc_round_trip(&s, tol));
    out.push(index_minimality(&s, tol));
    out.push(stationary(&s, tol));
    out.extend(fixed_point(form, &s, &mut rng, tol));
    out.extend(primitivity(form, tol));
    out.push(match holevo_rank_bounds(form, tol) {
        Ok(b) if b.lower <= b.upper => {
            CheckOutcome::pass("rank-bounds", format!("{} <= rank <= {}", b.lower, b.upper))
        }
        Ok(b) => CheckOutcome::fail(
            "rank-bounds",
            format!("rank of [Phi] {} exceeds r = {}", b.lower, b.upper),
        ),
        Err(e) => CheckOutcome::fail("rank-bounds", e.to_string()),
    });
    out
}

/// [`check_channel`] over a batch, the `i`-th channel seeded with `seed + i`.
pub fn check_batch(
    forms: &[HolevoForm],
    seed: u64,
    tol: &Tolerances,
    execution: Execution,
) -> Vec<Vec<CheckOutcome>> {
    execution.map_range(forms.len(), |i| {
        check_channel(&forms[i], seed.wrapping_add(i as u64), tol)
    })
}

fn povm_closure(form: &HolevoForm, tol: &Tolerances) -> Vec<CheckOutcome> {
    let identity = ComplexMatrix::identity(form.n());
    let mut out = vec![CheckOutcome::bound(
        "povm-closure",
        form.effect_sum().max_diff(&identity),
        tol.stochastic_tol,
    )];
    let worst = (2..=3)
        .map(|m| {
            form.iterated_form(m, tol)
                .map(|g| g.effect_sum().max_diff(&identity))
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    out.push(CheckOutcome::bound("iterated-povm-closure", worst, 1e-10));
    out
}

fn linear_extension(form: &HolevoForm, rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = form.n();
    let natural = form.natural_rep();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = random::gaussian_matrix(rng, n, n);
        let Ok(image) = form.apply_linear(&x) else {
            return CheckOutcome::fail("linear-extension", "apply failed");
        };
        let via_rep = natural.mul_vec(&matrix::vec(&x));
        let diff = matrix::vec(&image)
            .iter()
            .zip(&via_rep)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff / (1.0 + x.max_abs()));
    }
    CheckOutcome::bound("linear-extension", worst, 1e-10)
}

/// `S c = a` with `c_k = tr(F_k rho)` and `a_k = tr(F_k Phi(rho))`.
fn measurement_weights(
    form: &HolevoForm,
    s: &StochasticMatrix,
    rng: &mut ChaCha8Rng,
) -> CheckOutcome {
    let rho = random::random_state(rng, form.n());
    let Ok(image) = form.apply(&rho) else {
        return CheckOutcome::fail("measurement-weights", "apply failed");
    };
    let c: Vec<f64> = form.weights(rho.matrix()).iter().map(|z| z.re).collect();
    let a: Vec<f64> = form.weights(image.matrix()).iter().map(|z| z.re).collect();
    let diff = s
        .mul_vec(&c)
        .iter()
        .zip(&a)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    CheckOutcome::bound("measurement-weights", diff, 1e-10)
}

fn qc_round_trip(s: &StochasticMatrix, tol: &Tolerances) -> CheckOutcome {
    let r = s.r();
    if (0..r).any(|i| (0..r).all(|j| s.get(i, j) == 0.0)) {
        return CheckOutcome::pass("qc-round-trip", "skipped: S has a zero row");
    }
    match HolevoForm::qc_from_stochastic(s, tol).and_then(|f| f.stochastic_rep(tol)) {
        Ok(back) => {
            let diff = s
                .entries()
                .iter()
                .zip(back.entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            CheckOutcome::bound("qc-round-trip", diff, 1e-12)
        }
        Err(e) => CheckOutcome::fail("qc-round-trip", e.to_string()),
    }
}

fn index_minimality(s: &StochasticMatrix, tol: &Tolerances) -> CheckOutcome {
    let verdict = s.primitivity(tol);
    let pattern = s.pattern(tol);
    let power = |m: usize| (1..m).fold(pattern.clone(), |acc, _| acc.product(&pattern));
    match verdict.index {
        Some(p) if p > verdict.wielandt_bound => CheckOutcome::fail(
            "index-minimality",
            format!("p = {p} exceeds {}", verdict.wielandt_bound),
        ),
        Some(p) if !power(p).all_positive() || (p >= 2 && power(p - 1).all_positive()) => {
            CheckOutcome::fail(
                "index-minimality",
                format!("p = {p} is not the least positive power"),
            )
        }
        Some(p) => CheckOutcome::pass("index-minimality", format!("p = {p}")),
        None if power(verdict.wielandt_bound).all_positive() => {
            CheckOutcome::fail("index-minimality", "reported imprimitive but S^w > 0")
        }
        None => CheckOutcome::pass("index-minimality", "S not primitive"),
    }
}

fn stationary(s: &StochasticMatrix, tol: &Tolerances) -> CheckOutcome {
    match s.stationary_distribution(tol) {
        Ok(st) if st.residual > 1e-10 => {
            CheckOutcome::fail("stationary", format!("|S pi - pi| = {:.3e}", st.residual))
        }
        Ok(st)
            if s.is_primitive(tol) && !(st.unique && st.distribution.iter().all(|&x| x > 0.0)) =>
        {
            CheckOutcome::fail(
                "stationary",
                "primitive S without a unique positive stationary vector",
            )
        }
        Ok(st) => CheckOutcome::pass("stationary", format!("|S pi - pi| = {:.3e}", st.residual)),
        Err(e) => CheckOutcome::fail("stationary", e.to_string()),
    }
}

/// Steps after which `|lambda_2(S)|^m` drops below `eps`.
fn gap_steps(s: &StochasticMatrix, eps: f64) -> usize {
    let Ok(m) = ComplexMatrix::from_real(s.r(), s.r(), s.entries()) else {
        return 0;
    };
    let Ok(values) = matrix::eig_general(&m) else {
        return 0;
    };
    let mut moduli: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    match moduli.get(1) {
        Some(&l2) if l2 > 1e-12 && l2 < 1.0 => (eps.ln() / l2.ln()).ceil() as usize,
        _ => 0,
    }
}

fn fixed_point(
    form: &HolevoForm,
    s: &StochasticMatrix,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<CheckOutcome> {
    let fp = match form.fixed_point(tol) {
        Ok(fp) => fp,
        Err(e) => return vec![CheckOutcome::fail("fixed-point", e.to_string())],
    };
    let mut out = vec![CheckOutcome::bound("fixed-point", fp.residual, 1e-10)];
    if !matches!(is_primitive_channel(form, tol), Ok(true)) {
        return out;
    }
    let budget = 4 * wielandt_bound(s.r()) + 100 + gap_steps(s, 1e-9);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let mut rho = random::random_state(rng, form.n());
        for _ in 0..budget {
            if rho.matrix().max_diff(fp.state.matrix()) <= 1e-6 {
                break;
            }
            match form.apply(&rho) {
                Ok(next) => rho = next,
                Err(e) => return vec![CheckOutcome::fail("convergence", e.to_string())],
            }
        }
        worst = worst.max(rho.matrix().max_diff(fp.state.matrix()));
    }
    out.push(CheckOutcome::bound("convergence", worst, 1e-6));
    out
}

fn primitivity(form: &HolevoForm, tol: &Tolerances) -> Vec<CheckOutcome> {
    let opts = PositivityOptions::default();
    let mut out = Vec::new();
    let decided = match is_primitive_channel(form, tol) {
        Ok(d) => d,
        Err(e) => return vec![CheckOutcome::fail("primitivity", e.to_string())],
    };
    if form.r() <= SWEEP_MAX_PAIRS {
        let mut any_positive = false;
        let mut worst_witness = f64::NEG_INFINITY;
        let mut witness_failure = None;
        for m in 1..=holevo_q_bound(form.r()) {
            let verdict = match strictly_positive_at(form, m, tol, &opts) {
                Ok(v) => v,
                Err(e) => {
                    return vec![CheckOutcome::fail("primitivity-equivalence", e.to_string())]
                }
            };
            any_positive |= verdict.positive;
            if let Some(w) = verdict.witness {
                match w.evaluate(form, m) {
                    Ok(value) => {
                        worst_witness = worst_witness.max(value);
                        if value > 1e-8 {
                            witness_failure = Some(format!("m = {m}: value {value:.3e}"));
                        }
                    }
                    Err(e) => witness_failure = Some(e.to_string()),
                }
            }
        }
        out.push(if decided == any_positive {
            CheckOutcome::pass("primitivity-equivalence", format!("primitive = {decided}"))
        } else {
            CheckOutcome::fail(
                "primitivity-equivalence",
                format!("test says {decided}, sweep to r^2 - 2r + 3 says {any_positive}"),
            )
        });
        out.push(match witness_failure {
            Some(detail) => CheckOutcome::fail("witness-soundness", detail),
            None if worst_witness == f64::NEG_INFINITY => {
                CheckOutcome::pass("witness-soundness", "no negative verdicts")
            }
            None => CheckOutcome::pass(
                "witness-soundness",
                format!("max value {worst_witness:.3e}"),
            ),
        });
    }
    if decided {
        out.push(
            match channel_primitivity_index(form, tol, &opts, SearchWindow::Full) {
                Ok(report) => match (report.p_index, report.q_index) {
                    (Some(p), Some(q)) if q.abs_diff(p) <= 1 && q <= holevo_q_bound(form.r()) => {
                        CheckOutcome::pass("index-bounds", format!("p = {p}, q = {q}"))
                    }
                    (p, q) if report.q_method == crate::primitivity::QMethod::BoundsOnly => {
                        CheckOutcome::pass(
                            "index-bounds",
                            format!("bounds only: p = {p:?}, q = {q:?}"),
                        )
                    }
                    (p, q) => CheckOutcome::fail("index-bounds", format!("p = {p:?}, q = {q:?}")),
                },
                Err(e) => CheckOutcome::fail("index-bounds", e.to_string()),
            },
        );
    }
    out
}

/// Random channel for batch runs: `n` in `1..=3`, `r` in `1..=5`.
pub fn random_suite_channel(rng: &mut impl Rng, tol: &Tolerances) -> HolevoForm {
    let n = rng.random_range(1..=3);
    let r = rng.random_range(1..=5);
    random::random_mixed_form(rng, n, r, tol)
}
