//! Column-stochastic matrices: validation, primitivity, index of primitivity
//! and stationary distributions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{self, ComplexMatrix, Tolerances, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochasticError {
    #[error("stochastic matrix must have r >= 1")]
    Empty,
    #[error("expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) = {value:.3e} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("column {col} sums to {sum:.12}, expected 1")]
    ColumnSumViolation { col: usize, sum: f64 },
    #[error("stationary distribution solve failed (residual {residual:.3e})")]
    StationarySolveFailure { residual: f64 },
}

/// An `r x r` nonnegative matrix whose columns are probability vectors.
#[derive(Clone, PartialEq, Serialize)]
pub struct StochasticMatrix {
    r: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Validates row-major `entries`. Negative entries within
    /// `stochastic_tol` of zero are clamped to zero.
    pub fn new(r: usize, mut entries: Vec<f64>, tol: &Tolerances) -> Result<Self, StochasticError> {
        if r == 0 {
            return Err(StochasticError::Empty);
        }
        if entries.len() != r * r {
            return Err(StochasticError::Shape {
                expected: r * r,
                found: entries.len(),
            });
        }
        for (pos, x) in entries.iter_mut().enumerate() {
            let (row, col) = (pos / r, pos % r);
            if !x.is_finite() {
                return Err(StochasticError::NonFinite { row, col });
            }
            if *x < 0.0 {
                if *x < -tol.stochastic_tol {
                    return Err(StochasticError::NegativeEntry {
                        row,
                        col,
                        value: *x,
                    });
                }
                *x = 0.0;
            }
        }
        let s = Self { r, entries };
        for col in 0..r {
            let sum = s.column_sum(col);
            if (sum - 1.0).abs() > tol.stochastic_tol {
                return Err(StochasticError::ColumnSumViolation { col, sum });
            }
        }
        Ok(s)
    }

    pub fn from_rows(rows: &[Vec<f64>], tol: &Tolerances) -> Result<Self, StochasticError> {
        let r = rows.len();
        if let Some(bad) = rows.iter().find(|row| row.len() != r) {
            return Err(StochasticError::Shape {
                expected: r,
                found: bad.len(),
            });
        }
        Self::new(r, rows.concat(), tol)
    }

    pub fn identity(r: usize) -> Self {
        let mut entries = vec![0.0; r * r];
        for i in 0..r {
            entries[i * r + i] = 1.0;
        }
        Self { r, entries }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.r + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.r).map(<[f64]>::to_vec).collect()
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        (0..self.r).map(|i| self.get(i, col)).sum()
    }

    /// Largest `|column sum - 1|`.
    pub fn column_sum_residual(&self) -> f64 {
        (0..self.r)
            .map(|c| (self.column_sum(c) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.r);
        self.entries
            .chunks(self.r)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row-major entries of `S^m` by repeated multiplication (`S^0 = I`).
    pub fn power(&self, m: usize) -> Vec<f64> {
        let mut acc = Self::identity(self.r).entries;
        for _ in 0..m {
            acc = real_matmul(self.r, &acc, &self.entries);
        }
        acc
    }

    /// Zero pattern with `entry > stochastic_tol` counted as positive.
    pub fn pattern(&self, tol: &Tolerances) -> ZeroPattern {
        ZeroPattern::from_nonnegative(self.r, &self.entries, tol.stochastic_tol)
    }

    pub fn is_primitive(&self, tol: &Tolerances) -> bool {
        self.pattern(tol).is_primitive()
    }

    pub fn primitivity(&self, tol: &Tolerances) -> PrimitivityVerdict {
        self.pattern(tol).primitivity()
    }

    /// Solves the stacked least-squares system `[(S - I); 1^T] pi = [0; 1]`.
    pub fn stationary_distribution(&self, tol: &Tolerances) -> Result<Stationary, StochasticError> {
        let r = self.r;
        let shifted = ComplexMatrix::from_fn(r, r, |i, j| {
            C64::new(self.get(i, j) - if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let stacked = ComplexMatrix::from_fn(r + 1, r, |i, j| {
            if i < r {
                shifted[(i, j)]
            } else {
                C64::new(1.0, 0.0)
            }
        });
        let mut rhs = vec![C64::new(0.0, 0.0); r + 1];
        rhs[r] = C64::new(1.0, 0.0);

        let solve_failure = |_| StochasticError::StationarySolveFailure { residual: f64::NAN };
        let svd = matrix::svd(&stacked).map_err(solve_failure)?;
        let raw = svd.solve(&rhs, 1e-13 * svd.values[0]);

        let mut pi: Vec<f64> = raw.iter().map(|z| z.re).collect();
        if pi.iter().any(|&x| !x.is_finite() || x < -tol.match_tol) {
            return Err(StochasticError::StationarySolveFailure {
                residual: f64::INFINITY,
            });
        }
        for x in &mut pi {
            *x = x.max(0.0);
        }
        let total: f64 = pi.iter().sum();
        if total <= 0.0 {
            return Err(StochasticError::StationarySolveFailure { residual: f64::NAN });
        }
        for x in &mut pi {
            *x /= total;
        }
        let image = self.mul_vec(&pi);
        let residual = image
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual > 100.0 * tol.stochastic_tol {
            return Err(StochasticError::StationarySolveFailure { residual });
        }

        let sv = matrix::singular_values(&shifted).map_err(solve_failure)?;
        let floor = tol.zero_eig_tol * sv[0].max(1.0);
        let eigenspace_dim = sv.iter().filter(|&&s| s <= floor).count();
        Ok(Stationary {
            distribution: pi,
            unique: eigenspace_dim == 1,
            residual,
        })
    }
}

impl fmt::Debug for StochasticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StochasticMatrix")
            .field("r", &self.r)
            .field("rows", &self.to_rows())
            .finish()
    }
}

pub(crate) fn real_matmul(r: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; r * r];
    for i in 0..r {
        for k in 0..r {
            let aik = a[i * r + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..r {
                out[i * r + j] += aik * b[k * r + j];
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    /// Whether the eigenvalue-1 eigenspace is numerically one-dimensional.
    pub unique: bool,
    /// `max |S pi - pi|`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitivityVerdict {
    pub primitive: bool,
    pub index: Option<usize>,
    pub wielandt_bound: usize,
}

/// Wielandt's bound `r^2 - 2r + 2` on the index of an `r x r` primitive matrix.
pub fn wielandt_bound(r: usize) -> usize {
    assert!(r >= 1, "wielandt_bound needs r >= 1");
    r * r + 2 - 2 * r
}

/// Boolean support of a square nonnegative matrix. Powers of the pattern are
/// the supports of the matrix powers, which keeps primitivity decisions
/// exact where floating-point powers would underflow.
#[derive(Clone, PartialEq, Eq)]
pub struct ZeroPattern {
    r: usize,
    cells: Vec<bool>,
}

impl ZeroPattern {
    pub fn from_nonnegative(r: usize, entries: &[f64], threshold: f64) -> Self {
        assert_eq!(entries.len(), r * r);
        Self {
            r,
            cells: entries.iter().map(|&x| x > threshold).collect(),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.r + j]
    }

    pub fn all_positive(&self) -> bool {
        self.cells.iter().all(|&b| b)
    }

    pub fn product(&self, other: &Self) -> Self {
        let r = self.r;
        let mut cells = vec![false; r * r];
        for i in 0..r {
            for k in 0..r {
                if !self.cells[i * r + k] {
                    continue;
                }
                for j in 0..r {
                    cells[i * r + j] |= other.cells[k * r + j];
                }
            }
        }
        Self { r, cells }
    }

    /// Least `m` with `A^m > 0`, searched linearly up to the Wielandt bound.
    pub fn index_of_primitivity(&self) -> Option<usize> {
        let bound = wielandt_bound(self.r);
        let mut power = self.clone();
        for m in 1..=bound {
            if power.all_positive() {
                return Some(m);
            }
            if m < bound {
                power = power.product(self);
            }
        }
        None
    }

    pub fn is_primitive(&self) -> bool {
        let bound = wielandt_bound(self.r);
        let mut power = self.clone();
        // Square-and-multiply to A^bound; beyond the bound nothing changes.
        let mut acc: Option<Self> = None;
        let mut e = bound;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => power.clone(),
                    Some(a) => a.product(&power),
                });
            }
            e >>= 1;
            if e > 0 {
                power = power.product(&power);
            }
        }
        acc.is_some_and(|a| a.all_positive())
    }

    pub fn primitivity(&self) -> PrimitivityVerdict {
        let index = self.index_of_primitivity();
        PrimitivityVerdict {
            primitive: index.is_some(),
            index,
            wielandt_bound: wielandt_bound(self.r),
        }
    }
}

impl fmt::Debug for ZeroPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.r) {
            let line: String = row.iter().map(|&b| if b { '+' } else { '0' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
