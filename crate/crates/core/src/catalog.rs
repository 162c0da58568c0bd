//! Named qubit channels used as regression fixtures.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::channel::{HolevoForm, HolevoPair};
use crate::matrix::{ComplexMatrix, Tolerances, C64};

pub fn ket_plus() -> Vec<C64> {
    vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
}

pub fn ket_minus() -> Vec<C64> {
    vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)]
}

/// Measures in the `|+>, |->` basis and prepares `|0>` or `|1>`.
///
/// `S` is the all-halves matrix (`p = 1`) but `Phi(|-><-|) = |1><1|`, so the
/// channel only becomes strictly positive at the second iterate (`q = 2`).
pub fn hadamard_measure_prepare() -> HolevoForm {
    let pairs = vec![
        HolevoPair::new(
            ComplexMatrix::projector(&ket_plus()),
            ComplexMatrix::matrix_unit(2, 0, 0),
        ),
        HolevoPair::new(
            ComplexMatrix::projector(&ket_minus()),
            ComplexMatrix::matrix_unit(2, 1, 1),
        ),
    ];
    HolevoForm::new(2, pairs, &Tolerances::default()).expect("valid fixture")
}

/// A redundant three-pair Holevo form of the qubit completely depolarizing
/// channel: `F = (|0><0|/2, |1><1|/2, I/2)`, `R = (|0><0|, |0><0|, |1><1|)`.
///
/// Here `q = 1` while `S` has zeros, so `p = 2`.
pub fn redundant_depolarizing() -> HolevoForm {
    let e00 = ComplexMatrix::matrix_unit(2, 0, 0);
    let e11 = ComplexMatrix::matrix_unit(2, 1, 1);
    let pairs = vec![
        HolevoPair::new(e00.scale_real(0.5), e00.clone()),
        HolevoPair::new(e11.scale_real(0.5), e00.clone()),
        HolevoPair::new(ComplexMatrix::identity(2).scale_real(0.5), e11),
    ];
    HolevoForm::new(2, pairs, &Tolerances::default()).expect("valid fixture")
}
