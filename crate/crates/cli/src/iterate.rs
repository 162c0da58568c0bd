//! Trajectories `rho, Phi(rho), ..., Phi^m(rho)` alongside `S^t c`.

use ebchan::{DensityMatrix, HolevoForm, Tolerances};
use serde::Serialize;

use crate::analyze::IDENTITY_TOL;
use crate::document::{matrix_to_literal, MatrixLiteral};
use crate::format;

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub state: MatrixLiteral,
    /// `max |Phi^t(rho) - rho*|`
    pub distance_to_fixed_point: f64,
    /// `tr(F_k Phi^t(rho))`
    pub weights: Vec<f64>,
    /// `S^t c` with `c_k = tr(F_k rho)`.
    pub stochastic_weights: Vec<f64>,
    pub agreement_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub fixed_point: MatrixLiteral,
    pub records: Vec<StepRecord>,
    pub max_agreement_error: f64,
    pub agreement_ok: bool,
}

fn real_weights(form: &HolevoForm, rho: &DensityMatrix) -> Vec<f64> {
    form.weights(rho.matrix()).iter().map(|z| z.re).collect()
}

pub fn iterate(
    form: &HolevoForm,
    rho0: DensityMatrix,
    steps: usize,
    tol: &Tolerances,
) -> Result<Trajectory, String> {
    let s = form.stochastic_rep(tol).map_err(|e| e.to_string())?;
    let fp = form.fixed_point(tol).map_err(|e| e.to_string())?;
    let mut rho = rho0;
    let mut c = real_weights(form, &rho);
    let mut records = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            rho = form.apply(&rho).map_err(|e| e.to_string())?;
            c = s.mul_vec(&c);
        }
        let weights = real_weights(form, &rho);
        let agreement_error = weights
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        records.push(StepRecord {
            step,
            state: matrix_to_literal(rho.matrix()),
            distance_to_fixed_point: rho.matrix().max_diff(fp.state.matrix()),
            weights,
            stochastic_weights: c.clone(),
            agreement_error,
        });
    }
    let max_agreement_error = records
        .iter()
        .map(|r| r.agreement_error)
        .fold(0.0, f64::max);
    Ok(Trajectory {
        fixed_point: matrix_to_literal(fp.state.matrix()),
        records,
        max_agreement_error,
        agreement_ok: max_agreement_error <= IDENTITY_TOL,
    })
}

impl Trajectory {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out += &format!(
                "step {}: distance to fixed point {}, |weights - S^t c| = {}\n",
                rec.step,
                format::real(rec.distance_to_fixed_point),
                format::real(rec.agreement_error)
            );
            let rows: Vec<Vec<String>> = rec
                .state
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&[re, im]| format::complex(ebchan::C64::new(re, im)))
                        .collect()
                })
                .collect();
            out += &format::table(&rows, "  ");
            let w: Vec<String> = rec
                .stochastic_weights
                .iter()
                .map(|&x| format::real(x))
                .collect();
            out += &format!("  S^t c: {}\n", w.join(", "));
        }
        out += &format!(
            "apply vs S agreement: {} (max {})\n",
            if self.agreement_ok { "ok" } else { "FAILED" },
            format::real(self.max_agreement_error)
        );
        out
    }
}
