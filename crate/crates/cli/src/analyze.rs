//! The analysis pipeline behind `ebchan analyze`.

use ebchan::primitivity::{
    channel_primitivity_index, holevo_q_bound, holevo_rank_bounds, HolevoRankBounds,
};
use ebchan::{
    ChannelPrimitivityReport, HolevoForm, PositivityOptions, QMethod, SearchWindow, Tolerances, C64,
};
use serde::Serialize;

use crate::document::{matrix_to_literal, ChannelDocument, MatrixLiteral};
use crate::format;

/// Tolerance for the exact algebraic identities (factorization, fixed point).
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub channel_nonzero: Vec<C64>,
    pub matrix_nonzero: Vec<C64>,
    pub max_pair_distance: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSummary {
    pub state: MatrixLiteral,
    pub stationary: Vec<f64>,
    pub unique: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub channel: ChannelDocument,
    pub stochastic_matrix: Vec<Vec<f64>>,
    pub column_sum_residual: f64,
    pub factorization_residual: f64,
    pub spectrum_comparison: SpectrumSummary,
    pub primitivity: ChannelPrimitivityReport,
    pub fixed_point: FixedPointSummary,
    pub holevo_rank_bounds: HolevoRankBounds,
    pub tolerances_used: Tolerances,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn analyze(
    doc: ChannelDocument,
    form: &HolevoForm,
    tol: &Tolerances,
) -> Result<AnalysisReport, String> {
    let s = form.stochastic_rep(tol).map_err(|e| e.to_string())?;
    let residuals = form
        .representation_residuals(tol)
        .map_err(|e| e.to_string())?;
    let spectrum = form
        .compare_nonzero_spectrum(tol)
        .map_err(|e| e.to_string())?;
    let primitivity =
        channel_primitivity_index(form, tol, &PositivityOptions::default(), SearchWindow::Full)
            .map_err(|e| e.to_string())?;
    let fp = form.fixed_point(tol).map_err(|e| e.to_string())?;
    let rank = holevo_rank_bounds(form, tol).map_err(|e| e.to_string())?;

    let factorization_residual = residuals
        .ab_minus_natural
        .max(residuals.ba_minus_stochastic);
    let checks = vec![
        Check {
            name: "column sums of S",
            passed: s.column_sum_residual() <= tol.stochastic_tol,
        },
        Check {
            name: "AB = [Phi] and BA = S",
            passed: factorization_residual <= IDENTITY_TOL,
        },
        Check {
            name: "nonzero spectra of [Phi] and S agree",
            passed: spectrum.matched,
        },
        Check {
            name: "primitive iff S primitive and sum R_k > 0",
            passed: primitivity.channel_primitive
                == (primitivity.s_primitive && primitivity.sum_r_pd),
        },
        Check {
            name: "|q - p| <= 1",
            passed: primitivity.bound_abs_diff_ok != Some(false),
        },
        Check {
            name: "q <= r^2 - 2r + 3",
            passed: primitivity.holevo_rank_bound_ok != Some(false),
        },
        Check {
            name: "positivity persists past q",
            passed: primitivity.monotone_check != Some(false),
        },
        Check {
            name: "fixed point residual",
            passed: fp.residual <= IDENTITY_TOL,
        },
        Check {
            name: "rank [Phi] <= r",
            passed: rank.lower <= rank.upper,
        },
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(AnalysisReport {
        channel: doc,
        stochastic_matrix: s.to_rows(),
        column_sum_residual: s.column_sum_residual(),
        factorization_residual,
        spectrum_comparison: SpectrumSummary {
            channel_nonzero: spectrum.channel_nonzero,
            matrix_nonzero: spectrum.matrix_nonzero,
            max_pair_distance: spectrum.max_pair_distance,
            matched: spectrum.matched,
        },
        primitivity,
        fixed_point: FixedPointSummary {
            state: matrix_to_literal(fp.state.matrix()),
            stationary: fp.stationary,
            unique: fp.unique,
            residual: fp.residual,
        },
        holevo_rank_bounds: rank,
        tolerances_used: *tol,
        checks,
        passed,
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn index(i: Option<usize>) -> String {
    i.map_or("none".into(), |v| v.to_string())
}

impl AnalysisReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let r = self.stochastic_matrix.len();
        out += &format!("channel: n = {}, r = {r}\n\n", self.channel.n);

        out += &format!(
            "stochastic matrix S (max column sum deviation {}):\n",
            format::real(self.column_sum_residual)
        );
        let rows: Vec<Vec<String>> = self
            .stochastic_matrix
            .iter()
            .map(|row| row.iter().map(|&x| format::real(x)).collect())
            .collect();
        out += &format::table(&rows, "  ");
        out += &format!(
            "factorization residual: {}\n\n",
            format::real(self.factorization_residual)
        );

        let sc = &self.spectrum_comparison;
        let list = |v: &[C64]| {
            v.iter()
                .map(|&z| format::complex(z))
                .collect::<Vec<_>>()
                .join(", ")
        };
        out += &format!(
            "nonzero spectrum: {} (max pairing distance {})\n  [Phi]: {}\n  S:     {}\n\n",
            if sc.matched { "matched" } else { "MISMATCH" },
            format::real(sc.max_pair_distance),
            list(&sc.channel_nonzero),
            list(&sc.matrix_nonzero)
        );

        let p = &self.primitivity;
        out += "primitivity:\n";
        out += &format!(
            "  S primitive: {}, p = {}\n",
            yes_no(p.s_primitive),
            index(p.p_index)
        );
        out += &format!("  sum of R_k positive definite: {}\n", yes_no(p.sum_r_pd));
        out += &format!(
            "  channel primitive: {}, q = {}",
            yes_no(p.channel_primitive),
            index(p.q_index)
        );
        match (p.q_method, p.q_window) {
            (QMethod::Exact, Some((lo, hi))) => out += &format!(" (searched m = {lo}..{hi})\n"),
            (QMethod::BoundsOnly, Some((lo, hi))) => {
                out += &format!(" (bounds only: {lo} <= q <= {hi})\n")
            }
            _ => out += "\n",
        }
        out += &format!("  q bound r^2 - 2r + 3 = {}\n\n", holevo_q_bound(r));

        let fp = &self.fixed_point;
        out += &format!(
            "fixed point ({}, residual {}):\n",
            if fp.unique { "unique" } else { "not unique" },
            format::real(fp.residual)
        );
        let rows: Vec<Vec<String>> = fp
            .state
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&[re, im]| format::complex(C64::new(re, im)))
                    .collect()
            })
            .collect();
        out += &format::table(&rows, "  ");
        let pi: Vec<String> = fp.stationary.iter().map(|&x| format::real(x)).collect();
        out += &format!("  stationary distribution: {}\n\n", pi.join(", "));

        let b = &self.holevo_rank_bounds;
        out += &format!("Holevo rank: {} <= rank <= {}\n\n", b.lower, b.upper);

        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        if failed.is_empty() {
            out += &format!("checks: all {} passed\n", self.checks.len());
        } else {
            out += &format!("checks: FAILED {}\n", failed.join("; "));
        }
        let t = &self.tolerances_used;
        out += &format!(
            "tolerances: psd {:e}, zero-eig {:e}, match {:e}, stochastic {:e}\n",
            t.psd_tol, t.zero_eig_tol, t.match_tol, t.stochastic_tol
        );
        out
    }
}
