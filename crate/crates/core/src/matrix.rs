//! Dense complex matrices and the handful of spectral primitives the rest of
//! the crate is built on.
//!
//! Storage is row-major. Operator vectorization follows the same ordering:
//! the matrix unit `E_ij` of an `n x n` space maps to linear index `i * n + j`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scalar type used everywhere in the crate.
pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

const EIG_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected {expected} entries for a {rows}x{cols} matrix, found {found}")]
    InvalidShape {
        rows: usize,
        cols: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix dimensions must be positive")]
    EmptyMatrix,
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:.3e}, allowed {allowed:.3e})")]
    NotHermitian { deviation: f64, allowed: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("eigensolver did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Numerical thresholds shared by every decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative slack for Hermiticity and semidefiniteness tests.
    pub psd_tol: f64,
    /// Relative eigenvalue threshold below which a direction counts as kernel.
    pub zero_eig_tol: f64,
    /// Maximal distance when pairing eigenvalue multisets.
    pub match_tol: f64,
    /// Absolute slack for probability sums, traces and clamping.
    pub stochastic_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd_tol: 1e-9,
            zero_eig_tol: 1e-8,
            match_tol: 1e-6,
            stochastic_tol: 1e-10,
        }
    }
}

impl Tolerances {
    /// Returns `None` if any field is negative or not finite.
    pub fn validated(self) -> Option<Self> {
        let fields = [
            self.psd_tol,
            self.zero_eig_tol,
            self.match_tol,
            self.stochastic_tol,
        ];
        fields
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0)
            .then_some(self)
    }
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::InvalidShape {
                rows,
                cols,
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO },
        )
    }

    /// The matrix unit `E_ij = |i><j|` on an `n`-dimensional space.
    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        assert!(i < n && j < n, "matrix unit index out of range");
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    /// `|ket><bra|`
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        Self::from_fn(ket.len(), bra.len(), |i, j| ket[i] * bra[j].conj())
    }

    pub fn projector(ket: &[C64]) -> Self {
        Self::outer(ket, ket)
    }

    /// Inverse of [`vec`]: reshapes a length `n^2` column back into an `n x n` matrix.
    pub fn unvec(n: usize, v: &[C64]) -> Result<Self, LinalgError> {
        Self::new(n, n, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn ensure_square(&self) -> Result<usize, LinalgError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for (i, z) in v.iter().enumerate() {
            self[(i, j)] = *z;
        }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert!(
            self.cols == other.rows && self.rows == other.cols,
            "trace_product shape mismatch"
        );
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Max-entry norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `<v|self|v>`
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mv = self.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.add_scaled(ONE, rhs);
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out.add_scaled(-ONE, rhs);
        out
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors, stored as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V diag(values) V*`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        &scaled * &self.vectors.adjoint()
    }
}

fn check_hermitian(h: &ComplexMatrix, tol: &Tolerances) -> Result<usize, LinalgError> {
    let n = h.ensure_square()?;
    let allowed = tol.psd_tol * (1.0 + h.max_abs());
    let deviation = h.hermitian_deviation();
    if deviation > allowed {
        return Err(LinalgError::NotHermitian { deviation, allowed });
    }
    Ok(n)
}

pub fn eig_hermitian(h: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEigen, LinalgError> {
    let n = check_hermitian(h, tol)?;
    // Feed the solver the exactly Hermitian part.
    let sym = (h + &h.adjoint()).scale_real(0.5);
    let eig = SymmetricEigen::try_new(sym.to_nalgebra(), f64::EPSILON, EIG_MAX_ITERATIONS).ok_or(
        LinalgError::ConvergenceFailure {
            iterations: EIG_MAX_ITERATIONS,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

fn psd_floor(eig: &HermitianEigen, tol: &Tolerances) -> f64 {
    tol.psd_tol * eig.max().max(1.0)
}

pub fn is_psd(h: &ComplexMatrix, tol: &Tolerances) -> Result<bool, LinalgError> {
    let eig = eig_hermitian(h, tol)?;
    Ok(eig.min() >= -psd_floor(&eig, tol))
}

pub fn is_pd(h: &ComplexMatrix, tol: &Tolerances) -> Result<bool, LinalgError> {
    let eig = eig_hermitian(h, tol)?;
    Ok(eig.min() > psd_floor(&eig, tol))
}

/// Orthonormal basis of the kernel of a positive semidefinite matrix.
///
/// A direction belongs to the kernel when its eigenvalue is below
/// `zero_eig_tol * max(1, lambda_max)`.
pub fn kernel_psd(h: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<Vec<C64>>, LinalgError> {
    let eig = eig_hermitian(h, tol)?;
    if eig.min() < -psd_floor(&eig, tol) {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let cutoff = tol.zero_eig_tol * eig.max().max(1.0);
    Ok(eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < cutoff)
        .map(|(k, _)| eig.vector(k))
        .collect())
}

/// All eigenvalues of a general square matrix, with algebraic multiplicity,
/// read off the diagonal of a complex Schur form.
pub fn eig_general(m: &ComplexMatrix) -> Result<Vec<C64>, LinalgError> {
    let n = m.ensure_square()?;
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let max_iterations = EIG_MAX_ITERATIONS.max(100 * n);
    let schur = Schur::try_new(m.to_nalgebra(), f64::EPSILON, max_iterations).ok_or(
        LinalgError::ConvergenceFailure {
            iterations: max_iterations,
        },
    )?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Nonzero eigenvalues of a square matrix, with algebraic multiplicity.
///
/// The kernel is deflated before any eigenvalues are computed: with
/// `M = U_k S_k V_k^*` at numerical rank `k`, the nonzero spectrum of `M` is
/// that of the `k x k` core `S_k V_k^* U_k`. Repeating until the core has full
/// rank strips every zero Jordan block layer by layer, where a plain Schur
/// form would scatter a defective zero into values of size `eps^(1/size)`.
/// Singular values at or below `rel_tol * sigma_max` count as zero.
pub fn nonzero_eigenvalues(m: &ComplexMatrix, rel_tol: f64) -> Result<Vec<C64>, LinalgError> {
    m.ensure_square()?;
    let mut core = m.clone();
    loop {
        let dim = core.rows;
        let svd = svd(&core)?;
        let k = svd.rank(rel_tol);
        if k == 0 {
            return Ok(Vec::new());
        }
        if k == dim {
            return eig_general(&core);
        }
        core = ComplexMatrix::from_fn(k, k, |a, b| {
            let dot: C64 = (0..dim).map(|t| svd.v[(t, a)].conj() * svd.u[(t, b)]).sum();
            dot * svd.values[a]
        });
    }
}

/// Thin singular value decomposition `M = U diag(values) V^*` with values
/// in descending order. `U` is `rows x cols`; its columns for zero singular
/// values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub values: Vec<f64>,
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let Some(&max) = self.values.first() else {
            return 0;
        };
        if max == 0.0 {
            return 0;
        }
        self.values.iter().filter(|&&x| x > rel_tol * max).count()
    }

    /// Minimum-norm least-squares solution of `M x = b`, treating singular
    /// values at or below `cutoff` as zero.
    pub fn solve(&self, b: &[C64], cutoff: f64) -> Vec<C64> {
        let (rows, cols) = (self.u.rows, self.v.rows);
        assert_eq!(b.len(), rows);
        let mut x = vec![ZERO; cols];
        for (k, &sigma) in self.values.iter().enumerate() {
            if sigma <= cutoff {
                continue;
            }
            let coeff: C64 = (0..rows).map(|i| self.u[(i, k)].conj() * b[i]).sum::<C64>() / sigma;
            for (j, xj) in x.iter_mut().enumerate() {
                *xj += self.v[(j, k)] * coeff;
            }
        }
        x
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// One-sided (Hestenes) Jacobi SVD: columns are rotated pairwise until they
/// are mutually orthogonal; their norms are then the singular values.
pub fn svd(m: &ComplexMatrix) -> Result<Svd, LinalgError> {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(cols);
    // Pairs count as orthogonal at relative level `rows * eps`, or when their
    // overlap is below round-off of the whole matrix.
    let rel = rows.max(1) as f64 * f64::EPSILON;
    let frob_sq: f64 = m.data.iter().map(|z| z.norm_sqr()).sum();
    let floor = f64::EPSILON * f64::EPSILON * frob_sq;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                for i in 0..rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let g = gamma.norm();
                if g <= floor || g <= rel * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate column q by the phase of gamma, then a real rotation.
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.rows {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase;
                        mat[(i, p)] = x * c - y * s;
                        mat[(i, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::ConvergenceFailure {
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    let norms: Vec<f64> = (0..cols).map(|j| vector_norm(&a.column(j))).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut v_sorted = ComplexMatrix::zeros(cols, cols);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        for i in 0..rows {
            u[(i, k)] = if sigma > 0.0 { a[(i, j)] / sigma } else { ZERO };
        }
        for i in 0..cols {
            v_sorted[(i, k)] = v[(i, j)];
        }
    }
    Ok(Svd {
        values: order.iter().map(|&j| norms[j]).collect(),
        u,
        v: v_sorted,
    })
}

/// Row-major coordinates of a square matrix in the matrix-unit basis.
pub fn vec(m: &ComplexMatrix) -> Vec<C64> {
    assert!(m.is_square(), "vec is defined for square matrices");
    m.data.clone()
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Singular values, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(svd(m)?.values)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> Result<usize, LinalgError> {
    Ok(svd(m)?.rank(rel_tol))
}

/// `M^{-1/2}` for a positive definite `M`.
pub fn inverse_sqrt_pd(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix, LinalgError> {
    let eig = eig_hermitian(m, tol)?;
    if eig.min() <= 0.0 {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let inv_sqrt = HermitianEigen {
        values: eig.values.iter().map(|v| v.sqrt().recip()).collect(),
        vectors: eig.vectors,
    };
    Ok(inv_sqrt.reconstruct())
}

pub fn basis_vector(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
