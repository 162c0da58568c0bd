use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ebchan::random::random_mixed_form;
use ebchan::{HolevoForm, Tolerances};
use ebchan_cli::document::{emit_channel_document, parse_channel_document, ChannelDocument};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ebchan");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout))
}

/// `[[re, im], ...]` rows into real parts, asserting vanishing imaginary parts.
fn real_matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|z| {
                    assert!(z[1].as_f64().unwrap().abs() <= 1e-12);
                    z[0].as_f64().unwrap()
                })
                .collect()
        })
        .collect()
}

fn assert_close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn build_depolarizing_gives_identity_and_maximally_mixed_state() {
    let out = run(&["build", "depolarizing", "--n", "2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out);
    assert_eq!(doc["n"], 2);
    assert_eq!(doc["format_version"], "1");
    let pairs = doc["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 1);
    assert_close(
        &real_matrix(&pairs[0]["F"]),
        &[vec![1.0, 0.0], vec![0.0, 1.0]],
        0.0,
    );
    assert_close(
        &real_matrix(&pairs[0]["R"]),
        &[vec![0.5, 0.0], vec![0.0, 0.5]],
        0.0,
    );
}

#[test]
fn build_qc_from_uniform_matrix() {
    let dir = TempDir::new().unwrap();
    let s = write(
        &dir,
        "s.json",
        r#"{"r": 2, "entries": [[0.5, 0.5], [0.5, 0.5]]}"#,
    );
    let target = dir.path().join("qc.json");
    let out = run(&[
        "build".as_ref(),
        "qc".as_ref(),
        "--stochastic".as_ref(),
        s.as_os_str(),
        "-o".as_ref(),
        target.as_os_str(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let form = parse_channel_document(
        &fs::read_to_string(&target).unwrap(),
        &Tolerances::default(),
    )
    .unwrap();
    assert_eq!(form.r(), 2);
    for (k, pair) in form.pairs().iter().enumerate() {
        // F_k = sum_j s_kj |j><j|, R_k = |k><k|
        for i in 0..2 {
            for j in 0..2 {
                let f = if i == j { 0.5 } else { 0.0 };
                let r = if i == k && j == k { 1.0 } else { 0.0 };
                assert_eq!(pair.effect[(i, j)].re, f);
                assert_eq!(pair.state[(i, j)].re, r);
            }
        }
    }
}

#[test]
fn build_from_kraus_matches_kraus_action() {
    let dir = TempDir::new().unwrap();
    // V_1 = |0><+|, V_2 = |1><-|
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let text = format!(
        r#"{{"n": 2, "kraus": [[[[{h},0],[{h},0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[{h},0],[-{h},0]]]]}}"#
    );
    let k = write(&dir, "k.json", &text);
    let out = run(&[
        "build".as_ref(),
        "from-kraus".as_ref(),
        "--kraus".as_ref(),
        k.as_os_str(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let form = parse_channel_document(&out.stdout, &Tolerances::default()).unwrap();
    let expected = ebchan::catalog::hadamard_measure_prepare();
    for (a, b) in form.pairs().iter().zip(expected.pairs()) {
        assert!(a.effect.max_diff(&b.effect) <= 1e-12);
        assert!(a.state.max_diff(&b.state) <= 1e-12);
    }
}

#[test]
fn build_rejects_bad_parameters() {
    assert_eq!(run(&["build", "diag", "--n", "0"]).code, 2);
    assert_eq!(run(&["build", "depolarizing"]).code, 2);
    assert_eq!(run(&["build", "qc"]).code, 2);
    assert_eq!(run(&["build", "from-kraus"]).code, 2);
    assert_eq!(run(&["build", "unitary", "--n", "2"]).code, 2);
    let dir = TempDir::new().unwrap();
    let s = write(
        &dir,
        "s.json",
        r#"{"r": 2, "entries": [[0.5, 0.5], [0.6, 0.5]]}"#,
    );
    assert_eq!(
        run(&[
            "build".as_ref(),
            "qc".as_ref(),
            "--stochastic".as_ref(),
            s.as_os_str()
        ])
        .code,
        2
    );
}

#[test]
fn analyze_hadamard_example() {
    let out = run(&[
        "analyze".as_ref(),
        data("hadamard-measure-prepare.json").as_os_str(),
        "--format".as_ref(),
        "machine".as_ref(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report = json(&out);
    assert_eq!(report["primitivity"]["p_index"], 1);
    assert_eq!(report["primitivity"]["q_index"], 2);
    assert_eq!(report["primitivity"]["channel_primitive"], true);
    assert_eq!(report["spectrum_comparison"]["matched"], true);
    assert_close(
        &real_matrix(&report["fixed_point"]["state"]),
        &[vec![0.5, 0.0], vec![0.0, 0.5]],
        1e-12,
    );
    let s: Vec<Vec<f64>> = serde_json::from_value(report["stochastic_matrix"].clone()).unwrap();
    assert_close(&s, &[vec![0.5, 0.5], vec![0.5, 0.5]], 1e-15);
    assert_eq!(report["passed"], true);
}

#[test]
fn analyze_redundant_depolarizing_example() {
    let out = run(&[
        "analyze".as_ref(),
        data("redundant-depolarizing.json").as_os_str(),
        "--format".as_ref(),
        "machine".as_ref(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report = json(&out);
    assert_eq!(report["primitivity"]["q_index"], 1);
    assert_eq!(report["primitivity"]["p_index"], 2);
}

#[test]
fn analyze_map_to_diagonal() {
    let dir = TempDir::new().unwrap();
    let doc = write(
        &dir,
        "d.json",
        &emit_channel_document(&HolevoForm::map_to_diagonal(3).unwrap()),
    );
    let out = run(&[
        "analyze".as_ref(),
        doc.as_os_str(),
        "--format".as_ref(),
        "machine".as_ref(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report = json(&out);
    assert_eq!(report["primitivity"]["channel_primitive"], false);
    assert_eq!(report["primitivity"]["s_primitive"], false);
    let s: Vec<Vec<f64>> = serde_json::from_value(report["stochastic_matrix"].clone()).unwrap();
    let identity: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    assert_close(&s, &identity, 0.0);
}

#[test]
fn text_report_uses_six_significant_digits() {
    let dir = TempDir::new().unwrap();
    let third = 1.0 / 3.0;
    let s = write(
        &dir,
        "s.json",
        &format!(
            r#"{{"r": 2, "entries": [[{third}, 0.5], [{}, 0.5]]}}"#,
            1.0 - third
        ),
    );
    let doc = dir.path().join("qc.json");
    assert_eq!(
        run(&[
            "build".as_ref(),
            "qc".as_ref(),
            "--stochastic".as_ref(),
            s.as_os_str(),
            "-o".as_ref(),
            doc.as_os_str()
        ])
        .code,
        0
    );
    let out = run(&["analyze".as_ref(), doc.as_os_str()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("0.333333  "), "{}", out.stdout);
    assert!(out.stdout.contains("0.666667  "), "{}", out.stdout);
    assert!(!out.stdout.contains("0.3333333"), "{}", out.stdout);
}

#[test]
fn machine_report_reproduces_its_verdicts() {
    let dir = TempDir::new().unwrap();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..4 {
        let form = random_mixed_form(&mut rng, 2 + i % 2, 3, &tol);
        let first = write(&dir, "first.json", &emit_channel_document(&form));
        let out = run(&[
            "analyze".as_ref(),
            first.as_os_str(),
            "--format".as_ref(),
            "machine".as_ref(),
            "--match-tol".as_ref(),
            "1e-7".as_ref(),
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let report = json(&out);

        // Everything needed is inside the report: the channel and the tolerances.
        let doc: ChannelDocument = serde_json::from_value(report["channel"].clone()).unwrap();
        let again = write(&dir, "again.json", &doc.emit());
        let t = &report["tolerances_used"];
        let mut args: Vec<String> = vec![
            "analyze".into(),
            again.display().to_string(),
            "--format".into(),
            "machine".into(),
        ];
        for (flag, key) in [
            ("--psd-tol", "psd_tol"),
            ("--zero-eig-tol", "zero_eig_tol"),
            ("--match-tol", "match_tol"),
            ("--stochastic-tol", "stochastic_tol"),
        ] {
            args.push(flag.into());
            args.push(t[key].to_string());
        }
        let rerun = json(&run(&args));
        for key in [
            "primitivity",
            "stochastic_matrix",
            "checks",
            "passed",
            "holevo_rank_bounds",
            "tolerances_used",
        ] {
            assert_eq!(report[key], rerun[key], "{key}");
        }
        assert_eq!(
            report["spectrum_comparison"]["matched"],
            rerun["spectrum_comparison"]["matched"]
        );
    }
}

#[test]
fn analyze_rejects_bad_tolerances_and_missing_files() {
    let doc = data("hadamard-measure-prepare.json");
    assert_eq!(
        run(&[
            "analyze".as_ref(),
            doc.as_os_str(),
            "--psd-tol".as_ref(),
            "-1".as_ref()
        ])
        .code,
        2
    );
    assert_eq!(
        run(&[
            "analyze".as_ref(),
            doc.as_os_str(),
            "--match-tol".as_ref(),
            "NaN".as_ref()
        ])
        .code,
        2
    );
    assert_eq!(run(&["analyze", "/nonexistent/channel.json"]).code, 2);
}

#[test]
fn truncated_document_reports_byte_offset() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(data("hadamard-measure-prepare.json")).unwrap();
    let cut = 150;
    let doc = write(&dir, "cut.json", &text[..cut]);
    let out = run(&["analyze".as_ref(), doc.as_os_str()]);
    assert_eq!(out.code, 2);
    let offset: usize = out
        .stderr
        .split("syntax error at byte ")
        .nth(1)
        .and_then(|rest| rest.split(':').next())
        .and_then(|n| n.parse().ok())
        .unwrap_or_else(|| panic!("no offset in {}", out.stderr));
    assert!(offset < cut && offset + 1 >= cut, "offset {offset}");
}

#[test]
fn zero_effect_is_reported_for_pair_zero() {
    let dir = TempDir::new().unwrap();
    let mut doc: Value =
        serde_json::from_str(&fs::read_to_string(data("hadamard-measure-prepare.json")).unwrap())
            .unwrap();
    doc["pairs"][0]["F"] = serde_json::json!([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]);
    let path = write(&dir, "zero.json", &doc.to_string());
    let out = run(&["analyze".as_ref(), path.as_os_str()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("ZeroEffect: pair 0"), "{}", out.stderr);
}

fn iterate_machine(doc: &Path, state: &Path, steps: usize) -> Value {
    let out = run(&[
        "iterate".as_ref(),
        doc.as_os_str(),
        "--state".as_ref(),
        state.as_os_str(),
        "--steps".as_ref(),
        steps.to_string().as_ref(),
        "--format".as_ref(),
        "machine".as_ref(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    json(&out)
}

#[test]
fn iterate_hadamard_example_from_minus_state() {
    let trajectory = iterate_machine(
        &data("hadamard-measure-prepare.json"),
        &data("minus-state.json"),
        2,
    );
    let records = trajectory["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert_close(
        &real_matrix(&records[1]["state"]),
        &[vec![0.0, 0.0], vec![0.0, 1.0]],
        1e-12,
    );
    assert_close(
        &real_matrix(&records[2]["state"]),
        &[vec![0.5, 0.0], vec![0.0, 0.5]],
        1e-12,
    );
    assert!(records[2]["distance_to_fixed_point"].as_f64().unwrap() <= 1e-12);
    assert_eq!(trajectory["agreement_ok"], true);
}

#[test]
fn iterate_depolarizing_is_immediately_mixed() {
    let dir = TempDir::new().unwrap();
    let doc = write(
        &dir,
        "dep.json",
        &emit_channel_document(&HolevoForm::depolarizing(2).unwrap()),
    );
    let trajectory = iterate_machine(&doc, &data("minus-state.json"), 3);
    for rec in &trajectory["records"].as_array().unwrap()[1..] {
        assert_close(
            &real_matrix(&rec["state"]),
            &[vec![0.5, 0.0], vec![0.0, 0.5]],
            1e-15,
        );
    }
}

/// `(S - I) pi = 0`, `sum pi = 1` by Gaussian elimination with partial pivoting.
fn stationary_oracle(s: &[Vec<f64>]) -> Vec<f64> {
    let r = s.len();
    let mut a: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let mut row: Vec<f64> = (0..r)
                .map(|j| s[i][j] - f64::from(u8::from(i == j)))
                .collect();
            row.push(0.0);
            row
        })
        .collect();
    a[r - 1] = vec![1.0; r + 1];
    for col in 0..r {
        let pivot = (col..r)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..r {
            if row != col {
                let factor = a[row][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    (0..r).map(|i| a[i][r] / a[i][i]).collect()
}

#[test]
fn iterate_random_primitive_channels_converge_to_stationary_state() {
    let dir = TempDir::new().unwrap();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut tested = 0;
    while tested < 5 {
        let form = random_mixed_form(&mut rng, 2, 3, &tol);
        if !ebchan::primitivity::is_primitive_channel(&form, &tol).unwrap() {
            continue;
        }
        tested += 1;
        let doc = write(&dir, "c.json", &emit_channel_document(&form));
        let state = write(
            &dir,
            "rho.json",
            r#"{"n": 2, "rho": [[[1,0],[0,0]],[[0,0],[0,0]]]}"#,
        );
        let trajectory = iterate_machine(&doc, &state, 100);
        let records = trajectory["records"].as_array().unwrap();
        let distances: Vec<f64> = records
            .iter()
            .map(|r| r["distance_to_fixed_point"].as_f64().unwrap())
            .collect();
        assert!(*distances.last().unwrap() < 1e-6, "{distances:?}");
        // Eventually decreasing: the tail after some step never increases beyond round-off.
        let start = distances
            .iter()
            .position(|&d| d < 1e-3)
            .expect("gets close");
        for w in distances[start..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{distances:?}");
        }

        // rho* = sum_k pi_k R_k with pi from an independent linear solve.
        let s: Vec<Vec<f64>> = form.stochastic_rep(&tol).unwrap().to_rows();
        let pi = stationary_oracle(&s);
        let last = records.last().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected: f64 = form
                    .pairs()
                    .iter()
                    .zip(&pi)
                    .map(|(p, w)| w * p.state[(i, j)].re)
                    .sum();
                let got = last["state"][i][j][0].as_f64().unwrap();
                assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
            }
        }
        assert_eq!(trajectory["agreement_ok"], true);
    }
}

#[test]
fn iterate_rejects_bad_input() {
    let doc = data("hadamard-measure-prepare.json");
    let state = data("minus-state.json");
    let base = |steps: &str| {
        run(&[
            "iterate".as_ref(),
            doc.as_os_str(),
            "--state".as_ref(),
            state.as_os_str(),
            "--steps".as_ref(),
            steps.as_ref(),
        ])
        .code
    };
    assert_eq!(base("0"), 2);
    assert_eq!(base("-3"), 2);
    let dir = TempDir::new().unwrap();
    let wrong_dim = write(&dir, "rho.json", r#"{"n": 1, "rho": [[[1,0]]]}"#);
    let not_density = write(
        &dir,
        "rho2.json",
        r#"{"n": 2, "rho": [[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    for bad in [wrong_dim, not_density] {
        let code = run(&[
            "iterate".as_ref(),
            doc.as_os_str(),
            "--state".as_ref(),
            bad.as_os_str(),
            "--steps".as_ref(),
            "1".as_ref(),
        ])
        .code;
        assert_eq!(code, 2);
    }
}

#[test]
fn verify_random_suite_passes() {
    let out = run(&["verify", "--random", "50"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("50 channels"), "{}", out.stdout);
    let seeded = run(&[
        "verify", "--random", "20", "--seed", "99", "--format", "machine",
    ]);
    assert_eq!(seeded.code, 0);
    assert_eq!(json(&seeded)["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let a = run(&[
        "verify", "--random", "10", "--seed", "5", "--format", "machine",
    ]);
    let b = run(&[
        "verify", "--random", "10", "--seed", "5", "--format", "machine",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_hadamard_example_passes_every_invariant() {
    let out = run(&[
        "verify".as_ref(),
        data("hadamard-measure-prepare.json").as_os_str(),
        "--format".as_ref(),
        "machine".as_ref(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let summary = json(&out);
    let channel = &summary["channels"][0];
    assert_eq!(channel["checks_run"], channel["checks_passed"]);
    assert!(channel["checks_run"].as_u64().unwrap() >= 15);
}

#[test]
fn verify_lists_povm_violation() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(data("redundant-depolarizing.json")).unwrap();
    let bad = write(
        &dir,
        "bad.json",
        &text.replacen("[[0.5,0.0],[0.0,0.0]],", "[[0.6,0.0],[0.0,0.0]],", 1),
    );
    let out = run(&["verify".as_ref(), bad.as_os_str()]);
    assert_eq!(out.code, 1);
    let list: Value = serde_json::from_str(out.stdout.lines().last().unwrap()).unwrap();
    assert_eq!(list[0]["check"], "validation");
    assert!(list[0]["detail"].as_str().unwrap().starts_with("NotPOVM"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run::<&str>(&[]).code, 2);
    assert_eq!(run(&["transmogrify"]).code, 2);
    assert_eq!(run(&["verify", "x.json", "--random", "3"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}
