//! Random states, POVMs and Holevo forms for property suites and
//! verification runs. All generators take the RNG explicitly so runs are
//! reproducible from a seed.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelError, DensityMatrix, HolevoForm, HolevoPair};
use crate::matrix::{self, ComplexMatrix, Tolerances, C64};
use crate::stochastic::StochasticMatrix;

/// Regularization added to a singular POVM normalizer.
pub const POVM_EPSILON: f64 = 1e-6;

pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Uniformly random unit vector.
pub fn random_pure_state(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let norm = matrix::vector_norm(&v);
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Random PSD matrix `G G^*` with `G` an `n x rank` complex Gaussian.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, rank.max(1));
    &g * &g.adjoint()
}

/// `G G^* / tr(G G^*)` with `G` an `n x rank` complex Gaussian.
pub fn random_density_matrix(rng: &mut impl Rng, n: usize, rank: usize) -> DensityMatrix {
    let w = random_psd(rng, n, rank);
    let tr = w.trace().re;
    DensityMatrix::new_unchecked(w.scale_real(1.0 / tr))
}

/// Random density matrix of uniformly random rank.
pub fn random_state(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    let rank = rng.random_range(1..=n);
    random_density_matrix(rng, n, rank)
}

/// Unitary whose columns are the eigenvectors of a random Hermitian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let h = random_hermitian(rng, n);
    matrix::eig_hermitian(&h, &Tolerances::default())
        .expect("Hermitian by construction")
        .vectors
}

/// POVM `F_k = M^{-1/2} A_k M^{-1/2}` from random PSD `A_k` with `M = sum A_k`.
/// A rank-deficient `M` is made full rank by spreading `epsilon * I` over the
/// `A_k`. A second normalization pass with the (well conditioned) sum of the
/// first-pass effects pushes `sum F_k - I` down to round-off.
pub fn random_povm(rng: &mut impl Rng, n: usize, r: usize, tol: &Tolerances) -> Vec<ComplexMatrix> {
    loop {
        let mut a: Vec<ComplexMatrix> = (0..r)
            .map(|_| {
                let rank = rng.random_range(1..=n);
                random_psd(rng, n, rank)
            })
            .collect();
        let total = sum(n, &a);
        let eig = matrix::eig_hermitian(&total, tol).expect("Hermitian by construction");
        if eig.min() < POVM_EPSILON * eig.max() {
            let shift = ComplexMatrix::identity(n).scale_real(POVM_EPSILON * eig.max() / r as f64);
            for ak in &mut a {
                *ak += &shift;
            }
        }
        let Ok(mut effects) = normalize(n, &a, tol) else {
            continue;
        };
        if let Ok(refined) = normalize(n, &effects, tol) {
            effects = refined;
        }
        let dev = sum(n, &effects).max_diff(&ComplexMatrix::identity(n));
        if dev <= 0.01 * tol.stochastic_tol {
            return effects;
        }
    }
}

fn sum(n: usize, ms: &[ComplexMatrix]) -> ComplexMatrix {
    let mut total = ComplexMatrix::zeros(n, n);
    for m in ms {
        total += m;
    }
    total
}

fn normalize(
    n: usize,
    a: &[ComplexMatrix],
    tol: &Tolerances,
) -> Result<Vec<ComplexMatrix>, matrix::LinalgError> {
    let inv_sqrt = matrix::inverse_sqrt_pd(&sum(n, a), tol)?;
    Ok(a.iter()
        .map(|ak| {
            let f = &(&inv_sqrt * ak) * &inv_sqrt;
            (&f + &f.adjoint()).scale_real(0.5)
        })
        .collect())
}

/// Generic random Holevo form: density matrices `R_k = G_k G_k^* / tr(.)` of
/// random rank and a [`random_povm`].
pub fn random_holevo_form(rng: &mut impl Rng, n: usize, r: usize, tol: &Tolerances) -> HolevoForm {
    loop {
        let effects = random_povm(rng, n, r, tol);
        let pairs = effects
            .into_iter()
            .map(|f| HolevoPair::new(f, random_state(rng, n).into_matrix()))
            .collect();
        if let Ok(form) = HolevoForm::new(n, pairs, tol) {
            return form;
        }
    }
}

/// Random form with sparse structure: effects diagonal in one random basis,
/// states diagonal in the same or another basis, both with random supports.
/// Unlike [`random_holevo_form`] this regularly produces reducible or
/// periodic `S` and singular `sum_k R_k`.
pub fn random_structured_form(
    rng: &mut impl Rng,
    n: usize,
    r: usize,
    tol: &Tolerances,
) -> HolevoForm {
    loop {
        let u = random_unitary(rng, n);
        let v = if rng.random_bool(0.5) {
            u.clone()
        } else {
            random_unitary(rng, n)
        };
        // Every effect claims one basis direction, every direction gets at
        // least one effect, then each direction is normalized across effects.
        let mut weights = vec![vec![0.0; n]; r];
        for row in weights.iter_mut() {
            row[rng.random_range(0..n)] += rng.random_range(0.2..1.0);
        }
        for l in 0..n {
            if weights.iter().all(|row| row[l] == 0.0) {
                weights[rng.random_range(0..r)][l] += rng.random_range(0.2..1.0);
            }
            let total: f64 = weights.iter().map(|row| row[l]).sum();
            for row in weights.iter_mut() {
                row[l] /= total;
            }
        }
        let pairs = weights
            .iter()
            .map(|row| {
                let support = rng.random_range(1..=n);
                let mut diag = vec![0.0; n];
                for _ in 0..support {
                    diag[rng.random_range(0..n)] += rng.random_range(0.2..1.0);
                }
                let total: f64 = diag.iter().sum();
                diag.iter_mut().for_each(|x| *x /= total);
                HolevoPair::new(conjugate(&u, row), conjugate(&v, &diag))
            })
            .collect();
        if let Ok(form) = HolevoForm::new(n, pairs, tol) {
            return form;
        }
    }
}

/// `U diag(d) U^*`, symmetrized.
fn conjugate(u: &ComplexMatrix, d: &[f64]) -> ComplexMatrix {
    let m = &(u * &ComplexMatrix::from_diagonal(d)) * &u.adjoint();
    (&m + &m.adjoint()).scale_real(0.5)
}

/// Half generic, half structured.
pub fn random_mixed_form(rng: &mut impl Rng, n: usize, r: usize, tol: &Tolerances) -> HolevoForm {
    if rng.random_bool(0.5) {
        random_holevo_form(rng, n, r, tol)
    } else {
        random_structured_form(rng, n, r, tol)
    }
}

/// Random `r x r` column-stochastic matrix with random zeros and no zero row.
pub fn random_stochastic(rng: &mut impl Rng, r: usize, tol: &Tolerances) -> StochasticMatrix {
    loop {
        let mut entries = vec![0.0; r * r];
        for j in 0..r {
            let mut col: Vec<f64> = (0..r)
                .map(|_| {
                    if rng.random_bool(0.6) {
                        rng.random_range(0.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = col.iter().sum();
            if total == 0.0 {
                col[rng.random_range(0..r)] = 1.0;
            } else {
                col.iter_mut().for_each(|x| *x /= total);
            }
            for (i, x) in col.into_iter().enumerate() {
                entries[i * r + j] = x;
            }
        }
        let zero_row = (0..r).any(|i| (0..r).all(|j| entries[i * r + j] == 0.0));
        if zero_row {
            continue;
        }
        if let Ok(s) = StochasticMatrix::new(r, entries, tol) {
            return s;
        }
    }
}

/// Random Holevo form whose effects are all positive definite.
pub fn random_pd_effect_form(
    rng: &mut impl Rng,
    n: usize,
    r: usize,
    tol: &Tolerances,
) -> Result<HolevoForm, ChannelError> {
    let a: Vec<ComplexMatrix> = (0..r)
        .map(|_| {
            let mut m = random_psd(rng, n, n);
            m += &ComplexMatrix::identity(n).scale_real(0.1);
            m
        })
        .collect();
    let effects = normalize(n, &a, tol)?;
    let effects = normalize(n, &effects, tol)?;
    let pairs = effects
        .into_iter()
        .map(|f| HolevoPair::new(f, random_state(rng, n).into_matrix()))
        .collect();
    HolevoForm::new(n, pairs, tol)
}
