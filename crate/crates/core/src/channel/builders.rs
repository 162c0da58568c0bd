use super::{basis_projector, ChannelError, HolevoForm, HolevoPair};
use crate::matrix::{self, ComplexMatrix, Tolerances, C64};
use crate::stochastic::StochasticMatrix;

impl HolevoForm {
    /// Completely depolarizing channel `X -> tr(X) I / n`, as the single pair `(I, I/n)`.
    pub fn depolarizing(n: usize) -> Result<Self, ChannelError> {
        if n == 0 {
            return Err(ChannelError::DimensionMismatch("n must be positive".into()));
        }
        let id = ComplexMatrix::identity(n);
        let mixed = id.scale_real(1.0 / n as f64);
        Ok(Self::from_parts_unchecked(
            n,
            vec![HolevoPair::new(id, mixed)],
        ))
    }

    /// Map-to-diagonal channel with `F_k = R_k = |k><k|`.
    pub fn map_to_diagonal(n: usize) -> Result<Self, ChannelError> {
        if n == 0 {
            return Err(ChannelError::DimensionMismatch("n must be positive".into()));
        }
        let pairs = (0..n)
            .map(|k| HolevoPair::new(basis_projector(n, k), basis_projector(n, k)))
            .collect();
        Ok(Self::from_parts_unchecked(n, pairs))
    }

    /// Quantum-classical channel of a square column-stochastic matrix:
    /// `F_k = sum_j s_kj |j><j|`, `R_k = |k><k|`. Rows of `S` that vanish
    /// would give zero effects and are rejected.
    pub fn qc_from_stochastic(
        s: &StochasticMatrix,
        tol: &Tolerances,
    ) -> Result<Self, ChannelError> {
        let n = s.r();
        let pairs = (0..n)
            .map(|k| {
                let row: Vec<f64> = (0..n).map(|j| s.get(k, j)).collect();
                HolevoPair::new(ComplexMatrix::from_diagonal(&row), basis_projector(n, k))
            })
            .collect();
        Self::new(n, pairs, tol)
    }

    /// Holevo form of a channel given by rank-one Kraus operators
    /// `V_k = |a_k><b_k|`: `F_k = V_k^* V_k`, `R_k = V_k V_k^* / tr(V_k V_k^*)`.
    pub fn from_rank_one_kraus(
        kraus: &[ComplexMatrix],
        tol: &Tolerances,
    ) -> Result<Self, ChannelError> {
        let first = kraus.first().ok_or_else(|| ChannelError::NotPovm {
            pair: None,
            detail: "no Kraus operators given".into(),
        })?;
        let n = first.rows();
        for (index, v) in kraus.iter().enumerate() {
            if (v.rows(), v.cols()) != (n, n) {
                return Err(ChannelError::DimensionMismatch(format!(
                    "Kraus operator {index} is {}x{}, expected {n}x{n}",
                    v.rows(),
                    v.cols()
                )));
            }
            match matrix::numerical_rank(v, tol.zero_eig_tol)? {
                0 => return Err(ChannelError::ZeroEffect { pair: index }),
                1 => {}
                rank => return Err(ChannelError::KrausRankTooHigh { index, rank }),
            }
        }
        let mut completeness = ComplexMatrix::zeros(n, n);
        for v in kraus {
            completeness += &(&v.adjoint() * v);
        }
        let deviation = completeness.max_diff(&ComplexMatrix::identity(n));
        if deviation > tol.stochastic_tol {
            return Err(ChannelError::TracePreservationViolation { deviation });
        }
        let pairs = kraus
            .iter()
            .map(|v| {
                let vd = v.adjoint();
                let out = v * &vd;
                let norm = out.trace().re;
                HolevoPair::new(&vd * v, out.scale(C64::new(1.0 / norm, 0.0)))
            })
            .collect();
        Self::new(n, pairs, tol)
    }
}

/// `sum_k V_k X V_k^*`
pub fn apply_kraus(kraus: &[ComplexMatrix], x: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(x.rows(), x.cols());
    for v in kraus {
        out += &(&(v * x) * &v.adjoint());
    }
    out
}
