//! Entanglement breaking channels in Holevo form
//! `Phi(rho) = sum_k tr(F_k rho) R_k`, with `{F_k}` a POVM and every `R_k`
//! a density matrix.

mod assignment;
mod builders;
mod spectrum;

use serde::Serialize;
use thiserror::Error;

use crate::matrix::{self, tensor, ComplexMatrix, LinalgError, Tolerances, C64, ONE};
use crate::stochastic::{StochasticError, StochasticMatrix};

pub use assignment::min_cost_assignment;
pub use builders::apply_kraus;
pub use spectrum::SpectrumComparison;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("effect F_{pair} is zero")]
    ZeroEffect { pair: usize },
    #[error("effects do not form a POVM{}: {detail}", pair_suffix(*.pair))]
    NotPovm { pair: Option<usize>, detail: String },
    #[error("R_{pair} is not a density matrix: {detail}")]
    NotDensity { pair: usize, detail: String },
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("Kraus operator {index} has numerical rank {rank}, expected 1")]
    KrausRankTooHigh { index: usize, rank: usize },
    #[error("Kraus operators are not trace preserving (max deviation {deviation:.3e})")]
    TracePreservationViolation { deviation: f64 },
    #[error(
        "q-c construction needs a square stochastic matrix of size n = {expected}, got {found}"
    )]
    NotStochastic { expected: usize, found: usize },
    #[error("iteration count must be at least 1")]
    ZeroPower,
}

fn pair_suffix(pair: Option<usize>) -> String {
    pair.map(|k| format!(" (pair {k})")).unwrap_or_default()
}

impl ChannelError {
    /// Index of the offending (F, R) pair, where the error is tied to one.
    pub fn pair_index(&self) -> Option<usize> {
        match self {
            ChannelError::ZeroEffect { pair } | ChannelError::NotDensity { pair, .. } => {
                Some(*pair)
            }
            ChannelError::NotPovm { pair, .. } => *pair,
            _ => None,
        }
    }
}

/// A validated density matrix: positive semidefinite with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix, tol: &Tolerances) -> Result<Self, ChannelError> {
        check_density(&m, tol).map_err(ChannelError::InvalidState)?;
        Ok(Self(m))
    }

    /// Skips validation; for values that are density matrices by construction.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(ComplexMatrix::identity(n).scale_real(1.0 / n as f64))
    }

    /// `|psi><psi|` for a normalized `psi`.
    pub fn pure(psi: &[C64], tol: &Tolerances) -> Result<Self, ChannelError> {
        Self::new(ComplexMatrix::projector(psi), tol)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

fn check_density(m: &ComplexMatrix, tol: &Tolerances) -> Result<(), String> {
    m.ensure_square().map_err(|e| e.to_string())?;
    if !matrix::is_psd(m, tol).map_err(|e| e.to_string())? {
        return Err("not positive semidefinite".into());
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > tol.stochastic_tol || tr.im.abs() > tol.stochastic_tol {
        return Err(format!("trace is {:.12}{:+.3e}i, expected 1", tr.re, tr.im));
    }
    Ok(())
}

/// One `(F_k, R_k)` pair of a Holevo form.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoPair {
    pub effect: ComplexMatrix,
    pub state: ComplexMatrix,
}

impl HolevoPair {
    pub fn new(effect: ComplexMatrix, state: ComplexMatrix) -> Self {
        Self { effect, state }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolevoForm {
    n: usize,
    pairs: Vec<HolevoPair>,
}

/// The two factors of the natural representation: `[Phi] = A B` and `S = B A`.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// `n^2 x r`; column `k` is `vec(R_k)`.
    pub a: ComplexMatrix,
    /// `r x n^2`; row `k` is `vec(F_k^T)^T`.
    pub b: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub state: DensityMatrix,
    pub stationary: Vec<f64>,
    /// False when the eigenvalue-1 eigenspace of `S` has dimension above one.
    pub unique: bool,
    /// `max |Phi(rho*) - rho*|`
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationResiduals {
    pub ab_minus_natural: f64,
    pub ba_minus_stochastic: f64,
}

impl HolevoForm {
    /// Validates every invariant of a Holevo form: matching dimensions,
    /// nonzero PSD effects summing to the identity, and density matrices `R_k`.
    pub fn new(n: usize, pairs: Vec<HolevoPair>, tol: &Tolerances) -> Result<Self, ChannelError> {
        if n == 0 {
            return Err(ChannelError::DimensionMismatch("n must be positive".into()));
        }
        if pairs.is_empty() {
            return Err(ChannelError::NotPovm {
                pair: None,
                detail: "no effects given".into(),
            });
        }
        let mut total = ComplexMatrix::zeros(n, n);
        for (k, pair) in pairs.iter().enumerate() {
            for (name, m) in [("F", &pair.effect), ("R", &pair.state)] {
                if (m.rows(), m.cols()) != (n, n) {
                    return Err(ChannelError::DimensionMismatch(format!(
                        "{name}_{k} is {}x{}, expected {n}x{n}",
                        m.rows(),
                        m.cols()
                    )));
                }
            }
            if pair.effect.max_abs() <= tol.stochastic_tol {
                return Err(ChannelError::ZeroEffect { pair: k });
            }
            let psd = matrix::is_psd(&pair.effect, tol).map_err(|e| ChannelError::NotPovm {
                pair: Some(k),
                detail: e.to_string(),
            })?;
            if !psd {
                return Err(ChannelError::NotPovm {
                    pair: Some(k),
                    detail: "effect is not positive semidefinite".into(),
                });
            }
            check_density(&pair.state, tol)
                .map_err(|detail| ChannelError::NotDensity { pair: k, detail })?;
            total += &pair.effect;
        }
        let deviation = total.max_diff(&ComplexMatrix::identity(n));
        if deviation > tol.stochastic_tol {
            return Err(ChannelError::NotPovm {
                pair: None,
                detail: format!("sum of effects deviates from I by {deviation:.3e}"),
            });
        }
        Ok(Self { n, pairs })
    }

    /// For forms derived from a validated one (iterates), whose effects may
    /// legitimately vanish.
    pub(crate) fn from_parts_unchecked(n: usize, pairs: Vec<HolevoPair>) -> Self {
        Self { n, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pairs `r`.
    pub fn r(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[HolevoPair] {
        &self.pairs
    }

    pub fn effects(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.pairs.iter().map(|p| &p.effect)
    }

    pub fn states(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.pairs.iter().map(|p| &p.state)
    }

    pub fn effect_sum(&self) -> ComplexMatrix {
        sum_of(self.n, self.effects())
    }

    pub fn state_sum(&self) -> ComplexMatrix {
        sum_of(self.n, self.states())
    }

    /// Measurement weights `c_k = tr(F_k X)`.
    pub fn weights(&self, x: &ComplexMatrix) -> Vec<C64> {
        self.effects().map(|f| f.trace_product(x)).collect()
    }

    /// `sum_k w_k R_k`
    pub fn combine_states(&self, w: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for (wk, r) in w.iter().zip(self.states()) {
            out.add_scaled(*wk, r);
        }
        out
    }

    /// The channel's linear extension to all of `M_n`.
    pub fn apply_linear(&self, x: &ComplexMatrix) -> Result<ComplexMatrix, ChannelError> {
        if (x.rows(), x.cols()) != (self.n, self.n) {
            return Err(ChannelError::DimensionMismatch(format!(
                "input is {}x{}, channel acts on {n}x{n}",
                x.rows(),
                x.cols(),
                n = self.n
            )));
        }
        Ok(self.combine_states(&self.weights(x)))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, ChannelError> {
        self.apply_linear(rho.matrix())
            .map(DensityMatrix::new_unchecked)
    }

    /// `Phi^m(rho)` by `m` successive applications.
    pub fn apply_times(
        &self,
        rho: &DensityMatrix,
        m: usize,
    ) -> Result<DensityMatrix, ChannelError> {
        let mut cur = rho.clone();
        for _ in 0..m {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// `[Phi]`, the `n^2 x n^2` matrix of the channel on row-major vectorized
    /// operators. Column `(i, j)` is `vec(Phi(E_ij))`.
    pub fn natural_rep(&self) -> ComplexMatrix {
        let n = self.n;
        let mut rep = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let image = self.unit_image(i, j);
                rep.set_column(i * n + j, &matrix::vec(&image));
            }
        }
        rep
    }

    /// `Phi(E_ij)`; only `F_k[j][i]` enters the weights.
    fn unit_image(&self, i: usize, j: usize) -> ComplexMatrix {
        let w: Vec<C64> = self.effects().map(|f| f[(j, i)]).collect();
        self.combine_states(&w)
    }

    /// Choi matrix `sum_ij E_ij (x) Phi(E_ij)`.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.n;
        let mut j = ComplexMatrix::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                j += &tensor(&ComplexMatrix::matrix_unit(n, a, b), &self.unit_image(a, b));
            }
        }
        j
    }

    /// The same Choi matrix assembled as `sum_k F_k^T (x) R_k`.
    pub fn choi_from_pairs(&self) -> ComplexMatrix {
        let n = self.n;
        let mut j = ComplexMatrix::zeros(n * n, n * n);
        for p in &self.pairs {
            j += &tensor(&p.effect.transpose(), &p.state);
        }
        j
    }

    pub fn factorization(&self) -> Factorization {
        let n2 = self.n * self.n;
        let r = self.r();
        let mut a = ComplexMatrix::zeros(n2, r);
        let mut b = ComplexMatrix::zeros(r, n2);
        for (k, p) in self.pairs.iter().enumerate() {
            a.set_column(k, &matrix::vec(&p.state));
            for (s, z) in matrix::vec(&p.effect.transpose()).into_iter().enumerate() {
                b[(k, s)] = z;
            }
        }
        Factorization { a, b }
    }

    /// Residuals of `AB = [Phi]` and `BA = S`, each computed independently of the factors.
    pub fn representation_residuals(
        &self,
        tol: &Tolerances,
    ) -> Result<RepresentationResiduals, ChannelError> {
        let Factorization { a, b } = self.factorization();
        let s = self.stochastic_rep(tol)?;
        let s_complex = ComplexMatrix::from_real(s.r(), s.r(), s.entries())?;
        Ok(RepresentationResiduals {
            ab_minus_natural: (&a * &b).max_diff(&self.natural_rep()),
            ba_minus_stochastic: (&b * &a).max_diff(&s_complex),
        })
    }

    /// Raw `tr(F_i R_j)` values before validation.
    pub fn stochastic_entries(&self) -> Vec<C64> {
        self.effects()
            .flat_map(|f| self.states().map(move |r| f.trace_product(r)))
            .collect()
    }

    /// `S = (tr(F_i R_j))_{ij}`.
    pub fn stochastic_rep(&self, tol: &Tolerances) -> Result<StochasticMatrix, ChannelError> {
        let entries = self
            .stochastic_entries()
            .into_iter()
            .map(|z| z.re)
            .collect();
        Ok(StochasticMatrix::new(self.r(), entries, tol)?)
    }

    /// Holevo form of `Phi^m`: effects `G_k = sum_j (S^{m-1})_{kj} F_j` with
    /// the same states `R_k`. Some `G_k` may vanish.
    pub fn iterated_form(&self, m: usize, tol: &Tolerances) -> Result<HolevoForm, ChannelError> {
        if m == 0 {
            return Err(ChannelError::ZeroPower);
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let s = self.stochastic_rep(tol)?;
        let power = s.power(m - 1);
        let r = self.r();
        let pairs = (0..r)
            .map(|k| {
                let mut g = ComplexMatrix::zeros(self.n, self.n);
                for (j, f) in self.effects().enumerate() {
                    let c = power[k * r + j];
                    if c != 0.0 {
                        g.add_scaled(C64::new(c, 0.0), f);
                    }
                }
                HolevoPair::new(g, self.pairs[k].state.clone())
            })
            .collect();
        Ok(Self::from_parts_unchecked(self.n, pairs))
    }

    /// `rho* = sum_k pi_k R_k` for a stationary distribution `pi` of `S`.
    pub fn fixed_point(&self, tol: &Tolerances) -> Result<FixedPoint, ChannelError> {
        let s = self.stochastic_rep(tol)?;
        let st = s.stationary_distribution(tol)?;
        let w: Vec<C64> = st.distribution.iter().map(|&p| C64::new(p, 0.0)).collect();
        let state = self.combine_states(&w);
        let residual = self.apply_linear(&state)?.max_diff(&state);
        Ok(FixedPoint {
            state: DensityMatrix::new_unchecked(state),
            stationary: st.distribution,
            unique: st.unique,
            residual,
        })
    }

    pub fn compare_nonzero_spectrum(
        &self,
        tol: &Tolerances,
    ) -> Result<SpectrumComparison, ChannelError> {
        let channel = matrix::nonzero_eigenvalues(&self.natural_rep(), tol.zero_eig_tol)?;
        let s = self.stochastic_rep(tol)?;
        let stoch = matrix::nonzero_eigenvalues(
            &ComplexMatrix::from_real(s.r(), s.r(), s.entries())?,
            tol.zero_eig_tol,
        )?;
        Ok(SpectrumComparison::from_spectra(&channel, &stoch, tol))
    }
}

fn sum_of<'a>(n: usize, items: impl Iterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    let mut total = ComplexMatrix::zeros(n, n);
    for m in items {
        total += m;
    }
    total
}

/// `|k><k|` on `C^n`.
pub(crate) fn basis_projector(n: usize, k: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(k, k)] = ONE;
    m
}
