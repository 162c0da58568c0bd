//! Channel primitivity.
//!
//! A Holevo-form channel is primitive exactly when its stochastic matrix `S`
//! is primitive and `sum_k R_k` is positive definite. The channel index
//! `q(Phi)` lies within one of `p(S)`, which gives a three-value search
//! window for the exact positivity test below.
//!
//! # Deciding strict positivity of `Phi^m`
//!
//! Write `Phi^m(rho) = sum_k tr(G_k rho) R_k` with the effects of
//! [`HolevoForm::iterated_form`]. Because `lambda_min` is concave, it is
//! enough to look at pure inputs `psi`, and for a unit vector `phi`
//!
//! ```text
//! <phi| Phi^m(psi psi*) |phi> = sum_k <psi|G_k|psi> <phi|R_k|phi>,
//! ```
//!
//! a sum of nonnegative terms. It vanishes iff there is a subset `T` with
//! `phi` annihilated by every `R_k`, `k in T`, and `psi` annihilated by every
//! `G_k`, `k not in T`. Kernels of PSD sums are intersections of kernels, so
//! `Phi^m` fails to be strictly positive iff some `T` has both
//! `ker(sum_{k in T} R_k)` and `ker(sum_{k not in T} G_k)` nontrivial (empty
//! sums have the whole space as kernel). The test enumerates subsets in
//! lexicographic order and returns the first such `T` together with the
//! witnesses `psi`, `phi`.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, HolevoForm};
use crate::exec::Execution;
use crate::matrix::{self, basis_vector, ComplexMatrix, LinalgError, Tolerances, C64};
use crate::stochastic::wielandt_bound;

pub const DEFAULT_SUBSET_CAP: usize = 20;

/// Subtrees this close to the root are searched in parallel.
const PARALLEL_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrimitivityError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("r = {r} exceeds the subset enumeration cap {cap}")]
    SubsetCapExceeded { r: usize, cap: usize },
    #[error("iteration count must be at least 1")]
    ZeroPower,
}

impl From<crate::stochastic::StochasticError> for PrimitivityError {
    fn from(e: crate::stochastic::StochasticError) -> Self {
        PrimitivityError::Channel(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositivityOptions {
    pub subset_cap: usize,
    pub execution: Execution,
}

impl Default for PositivityOptions {
    fn default() -> Self {
        Self {
            subset_cap: DEFAULT_SUBSET_CAP,
            execution: Execution::default(),
        }
    }
}

/// Certificate that `Phi^m(psi psi*)` is singular with `phi` in its kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Pairs whose states annihilate `phi`; the remaining iterated effects annihilate `psi`.
    pub subset: Vec<usize>,
    pub psi: Vec<C64>,
    pub phi: Vec<C64>,
}

impl Witness {
    /// `<phi| Phi^m(psi psi*) |phi>` evaluated through `m` applications of the channel.
    pub fn evaluate(&self, form: &HolevoForm, m: usize) -> Result<f64, ChannelError> {
        let mut x = ComplexMatrix::projector(&self.psi);
        for _ in 0..m {
            x = form.apply_linear(&x)?;
        }
        Ok(x.expectation(&self.phi).re)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub m: usize,
    pub positive: bool,
    /// Present exactly when `positive` is false.
    pub witness: Option<Witness>,
}

pub fn sum_states_positive_definite(
    form: &HolevoForm,
    tol: &Tolerances,
) -> Result<bool, LinalgError> {
    matrix::is_pd(&form.state_sum(), tol)
}

struct SubsetSearch<'a> {
    n: usize,
    states: Vec<&'a ComplexMatrix>,
    effects: Vec<ComplexMatrix>,
    tol: &'a Tolerances,
    execution: Execution,
}

impl SubsetSearch<'_> {
    fn r(&self) -> usize {
        self.states.len()
    }

    fn kernel(&self, m: &ComplexMatrix) -> Result<Vec<Vec<C64>>, LinalgError> {
        matrix::kernel_psd(m, self.tol)
    }

    /// Visits `subset` and then its children `subset + {k}`, `k > last`, in
    /// lexicographic preorder. `state_sum` is `sum_{k in subset} R_k`.
    fn visit(
        &self,
        subset: &[usize],
        state_sum: &ComplexMatrix,
    ) -> Result<Option<Witness>, LinalgError> {
        let phi = if subset.is_empty() {
            basis_vector(self.n, 0)
        } else {
            match self.kernel(state_sum)?.into_iter().next() {
                Some(v) => v,
                // Kernels only shrink as pairs are added: prune the subtree.
                None => return Ok(None),
            }
        };
        if subset.len() == self.r() {
            return Ok(Some(Witness {
                subset: subset.to_vec(),
                psi: basis_vector(self.n, 0),
                phi,
            }));
        }
        let mut complement = ComplexMatrix::zeros(self.n, self.n);
        for (k, g) in self.effects.iter().enumerate() {
            if !subset.contains(&k) {
                complement += g;
            }
        }
        if let Some(psi) = self.kernel(&complement)?.into_iter().next() {
            return Ok(Some(Witness {
                subset: subset.to_vec(),
                psi,
                phi,
            }));
        }

        let start = subset.last().map_or(0, |&l| l + 1);
        let child = |k: usize| -> Option<Result<Witness, LinalgError>> {
            let mut next = subset.to_vec();
            next.push(k);
            let sum = state_sum + self.states[k];
            self.visit(&next, &sum).transpose()
        };
        let found = if subset.len() < PARALLEL_DEPTH {
            self.execution.find_map_first(start, self.r(), child)
        } else {
            (start..self.r()).find_map(child)
        };
        found.transpose()
    }
}

/// Decides whether `Phi^m(rho)` is positive definite for every density
/// matrix `rho`. A negative verdict carries a [`Witness`].
pub fn strictly_positive_at(
    form: &HolevoForm,
    m: usize,
    tol: &Tolerances,
    opts: &PositivityOptions,
) -> Result<PositivityVerdict, PrimitivityError> {
    if m == 0 {
        return Err(PrimitivityError::ZeroPower);
    }
    if form.r() > opts.subset_cap {
        return Err(PrimitivityError::SubsetCapExceeded {
            r: form.r(),
            cap: opts.subset_cap,
        });
    }
    let iterated = form.iterated_form(m, tol)?;
    let search = SubsetSearch {
        n: form.n(),
        states: form.states().collect(),
        effects: iterated.effects().cloned().collect(),
        tol,
        execution: opts.execution,
    };
    let witness = search.visit(&[], &ComplexMatrix::zeros(form.n(), form.n()))?;
    Ok(PositivityVerdict {
        m,
        positive: witness.is_none(),
        witness,
    })
}

/// `S` primitive and `sum_k R_k` positive definite.
pub fn is_primitive_channel(form: &HolevoForm, tol: &Tolerances) -> Result<bool, PrimitivityError> {
    let s = form.stochastic_rep(tol)?;
    Ok(s.is_primitive(tol) && sum_states_positive_definite(form, tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QMethod {
    Exact,
    BoundsOnly,
}

/// Which `m` values are tried when searching for `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchWindow {
    /// `max(1, p - 1) ..= p + 1`.
    #[default]
    AroundIndex,
    /// `1 ..= p + 1`, which also re-checks the lower half of the window.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelPrimitivityReport {
    pub s_primitive: bool,
    pub sum_r_pd: bool,
    pub channel_primitive: bool,
    pub p_index: Option<usize>,
    pub q_index: Option<usize>,
    /// `|q - p| <= 1`; `Some(false)` also when no `q` was found in the window.
    pub bound_abs_diff_ok: Option<bool>,
    /// `q <= r^2 - 2r + 3` for the given `r`.
    pub holevo_rank_bound_ok: Option<bool>,
    pub q_method: QMethod,
    /// Inclusive `m` range searched (or reported, for bounds-only).
    pub q_window: Option<(usize, usize)>,
    /// Whether `Phi^{q+1}` is strictly positive too; checked when `q < p + 1`.
    pub monotone_check: Option<bool>,
    /// Certificate that `Phi^{q-1}` is not strictly positive, when `q - 1` was searched.
    pub below_q_witness: Option<Witness>,
}

pub fn channel_primitivity_index(
    form: &HolevoForm,
    tol: &Tolerances,
    opts: &PositivityOptions,
    window: SearchWindow,
) -> Result<ChannelPrimitivityReport, PrimitivityError> {
    let s = form.stochastic_rep(tol)?;
    let verdict = s.primitivity(tol);
    let sum_r_pd = sum_states_positive_definite(form, tol)?;
    let channel_primitive = verdict.primitive && sum_r_pd;
    let mut report = ChannelPrimitivityReport {
        s_primitive: verdict.primitive,
        sum_r_pd,
        channel_primitive,
        p_index: verdict.index,
        q_index: None,
        bound_abs_diff_ok: None,
        holevo_rank_bound_ok: None,
        q_method: QMethod::Exact,
        q_window: None,
        monotone_check: None,
        below_q_witness: None,
    };
    let Some(p) = verdict.index.filter(|_| channel_primitive) else {
        return Ok(report);
    };
    let lo = match window {
        SearchWindow::AroundIndex => p.saturating_sub(1).max(1),
        SearchWindow::Full => 1,
    };
    let hi = p + 1;
    report.q_window = Some((lo, hi));
    if form.r() > opts.subset_cap {
        report.q_method = QMethod::BoundsOnly;
        return Ok(report);
    }

    let mut last_failure = None;
    for m in lo..=hi {
        let v = strictly_positive_at(form, m, tol, opts)?;
        if v.positive {
            report.q_index = Some(m);
            break;
        }
        last_failure = v.witness;
    }
    match report.q_index {
        Some(q) => {
            report.below_q_witness = last_failure;
            report.bound_abs_diff_ok = Some(q.abs_diff(p) <= 1);
            report.holevo_rank_bound_ok = Some(q <= holevo_q_bound(form.r()));
            if q < hi {
                report.monotone_check =
                    Some(strictly_positive_at(form, q + 1, tol, opts)?.positive);
            }
        }
        None => {
            report.bound_abs_diff_ok = Some(false);
            report.holevo_rank_bound_ok = Some(false);
        }
    }
    Ok(report)
}

/// `r^2 - 2r + 3`, one more than Wielandt's bound.
pub fn holevo_q_bound(r: usize) -> usize {
    wielandt_bound(r) + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HolevoRankBounds {
    /// Numerical rank of `[Phi]`; every Holevo form needs at least this many pairs.
    pub lower: usize,
    /// Number of pairs in the given form.
    pub upper: usize,
    pub q_upper_from_rank: usize,
}

pub fn holevo_rank_bounds(
    form: &HolevoForm,
    tol: &Tolerances,
) -> Result<HolevoRankBounds, LinalgError> {
    Ok(HolevoRankBounds {
        lower: matrix::numerical_rank(&form.natural_rep(), tol.zero_eig_tol)?,
        upper: form.r(),
        q_upper_from_rank: holevo_q_bound(form.r()),
    })
}

/// Upper bounds on `q` side by side: `r^2 - 2r + 3` from the Holevo form and
/// `(n^2 - d + 1) n^2` for a channel with `d` Kraus operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WielandtComparison {
    pub q_bound_holevo: i64,
    pub q_bound_quantum: i64,
}

pub fn quantum_wielandt_comparison(n: usize, r: usize, d: usize) -> WielandtComparison {
    let n2 = (n * n) as i64;
    WielandtComparison {
        q_bound_holevo: holevo_q_bound(r) as i64,
        q_bound_quantum: (n2 - d as i64 + 1) * n2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{hadamard_measure_prepare, redundant_depolarizing};
    use crate::channel::HolevoPair;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn opts(execution: Execution) -> PositivityOptions {
        PositivityOptions {
            execution,
            ..Default::default()
        }
    }

    #[test]
    fn sum_of_states() {
        assert!(sum_states_positive_definite(&hadamard_measure_prepare(), &tol()).unwrap());
        assert!(
            sum_states_positive_definite(&HolevoForm::map_to_diagonal(3).unwrap(), &tol()).unwrap()
        );
        let e00 = ComplexMatrix::matrix_unit(2, 0, 0);
        let pairs = vec![
            HolevoPair::new(e00.clone(), e00.clone()),
            HolevoPair::new(ComplexMatrix::matrix_unit(2, 1, 1), e00),
        ];
        let form = HolevoForm::new(2, pairs, &tol()).unwrap();
        assert!(!sum_states_positive_definite(&form, &tol()).unwrap());
        assert!(!is_primitive_channel(&form, &tol()).unwrap());
    }

    #[test]
    fn positivity_of_measure_prepare_channel() {
        let form = hadamard_measure_prepare();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v1 = strictly_positive_at(&form, 1, &tol(), &opts(exec)).unwrap();
            assert!(!v1.positive);
            let w = v1.witness.as_ref().unwrap();
            assert!(w.evaluate(&form, 1).unwrap() <= 1e-8);
            let v2 = strictly_positive_at(&form, 2, &tol(), &opts(exec)).unwrap();
            assert!(v2.positive && v2.witness.is_none());
        }
    }

    #[test]
    fn depolarizing_is_positive_immediately() {
        for n in 1..4 {
            let form = HolevoForm::depolarizing(n).unwrap();
            assert!(
                strictly_positive_at(&form, 1, &tol(), &Default::default())
                    .unwrap()
                    .positive
            );
        }
    }

    #[test]
    fn zero_power_and_cap() {
        let form = hadamard_measure_prepare();
        assert!(matches!(
            strictly_positive_at(&form, 0, &tol(), &Default::default()),
            Err(PrimitivityError::ZeroPower)
        ));
        let tight = PositivityOptions {
            subset_cap: 1,
            ..Default::default()
        };
        assert!(matches!(
            strictly_positive_at(&form, 1, &tol(), &tight),
            Err(PrimitivityError::SubsetCapExceeded { r: 2, cap: 1 })
        ));
        let report =
            channel_primitivity_index(&form, &tol(), &tight, SearchWindow::AroundIndex).unwrap();
        assert_eq!(report.q_method, QMethod::BoundsOnly);
        assert_eq!(report.q_index, None);
        assert_eq!(report.q_window, Some((1, 2)));
    }

    #[test]
    fn primitive_channel_examples() {
        assert!(is_primitive_channel(&hadamard_measure_prepare(), &tol()).unwrap());
        assert!(is_primitive_channel(&redundant_depolarizing(), &tol()).unwrap());
        for n in 2..5 {
            assert!(
                !is_primitive_channel(&HolevoForm::map_to_diagonal(n).unwrap(), &tol()).unwrap()
            );
        }
        assert!(is_primitive_channel(&HolevoForm::map_to_diagonal(1).unwrap(), &tol()).unwrap());
    }

    #[test]
    fn channel_indices() {
        for window in [SearchWindow::AroundIndex, SearchWindow::Full] {
            let r = channel_primitivity_index(
                &hadamard_measure_prepare(),
                &tol(),
                &Default::default(),
                window,
            )
            .unwrap();
            assert_eq!((r.p_index, r.q_index), (Some(1), Some(2)));
            assert_eq!(r.bound_abs_diff_ok, Some(true));
            assert_eq!(r.holevo_rank_bound_ok, Some(true));
            assert!(r.below_q_witness.is_some());

            let r = channel_primitivity_index(
                &redundant_depolarizing(),
                &tol(),
                &Default::default(),
                window,
            )
            .unwrap();
            assert_eq!((r.p_index, r.q_index), (Some(2), Some(1)));
            assert_eq!(r.monotone_check, Some(true));
        }
        let r = channel_primitivity_index(
            &HolevoForm::depolarizing(3).unwrap(),
            &tol(),
            &Default::default(),
            SearchWindow::AroundIndex,
        )
        .unwrap();
        assert_eq!((r.p_index, r.q_index), (Some(1), Some(1)));

        let r = channel_primitivity_index(
            &HolevoForm::map_to_diagonal(2).unwrap(),
            &tol(),
            &Default::default(),
            SearchWindow::AroundIndex,
        )
        .unwrap();
        assert!(!r.channel_primitive && r.q_index.is_none() && r.p_index.is_none());
    }

    #[test]
    fn rank_bounds() {
        let b = holevo_rank_bounds(&HolevoForm::depolarizing(2).unwrap(), &tol()).unwrap();
        assert_eq!((b.lower, b.upper, b.q_upper_from_rank), (1, 1, 2));
        let kraus: Vec<ComplexMatrix> = (0..2)
            .flat_map(|i| {
                (0..2).map(move |j| ComplexMatrix::matrix_unit(2, i, j).scale_real(0.5f64.sqrt()))
            })
            .collect();
        let form = HolevoForm::from_rank_one_kraus(&kraus, &tol()).unwrap();
        let b = holevo_rank_bounds(&form, &tol()).unwrap();
        assert_eq!((b.lower, b.upper), (1, 4));
        let b = holevo_rank_bounds(&hadamard_measure_prepare(), &tol()).unwrap();
        assert_eq!(b.q_upper_from_rank, 3);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn wielandt_comparison_values() {
        let cases = [
            ((2, 2, 2), (3, 12)),
            ((2, 1, 4), (2, 4)),
            ((3, 3, 9), (6, 9)),
        ];
        for ((n, r, d), (h, q)) in cases {
            let c = quantum_wielandt_comparison(n, r, d);
            assert_eq!((c.q_bound_holevo, c.q_bound_quantum), (h, q));
        }
    }
}
