//! Entanglement breaking channels in Holevo form, their column-stochastic
//! matrix representations, and primitivity of both.
//!
//! The main entry points:
//!
//! * [`HolevoForm`] with builders ([`HolevoForm::depolarizing`],
//!   [`HolevoForm::map_to_diagonal`], [`HolevoForm::qc_from_stochastic`],
//!   [`HolevoForm::from_rank_one_kraus`]) and representations
//!   ([`HolevoForm::natural_rep`], [`HolevoForm::choi`],
//!   [`HolevoForm::factorization`], [`HolevoForm::stochastic_rep`]).
//! * [`StochasticMatrix`] with exact primitivity decisions on zero patterns.
//! * [`primitivity`]: the channel primitivity test, the exact index `q` and
//!   the associated bounds.

pub mod catalog;
pub mod channel;
pub mod exec;
pub mod invariants;
pub mod matrix;
pub mod primitivity;
pub mod random;
pub mod stochastic;

pub use channel::{
    ChannelError, DensityMatrix, Factorization, FixedPoint, HolevoForm, HolevoPair,
    SpectrumComparison,
};
pub use exec::Execution;
pub use matrix::{ComplexMatrix, LinalgError, Tolerances, C64};
pub use primitivity::{
    ChannelPrimitivityReport, HolevoRankBounds, PositivityOptions, PositivityVerdict,
    PrimitivityError, QMethod, SearchWindow, Witness,
};
pub use stochastic::{PrimitivityVerdict, StochasticError, StochasticMatrix, ZeroPattern};
