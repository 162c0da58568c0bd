use serde::Serialize;

use super::assignment::min_cost_assignment;
use crate::matrix::{Tolerances, C64};

/// Optimal assignment is used up to this many values per side.
const EXACT_PAIRING_LIMIT: usize = 32;

/// Non-zero eigenvalues of `[Phi]` and of `S`, paired by distance.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumComparison {
    pub channel_nonzero: Vec<C64>,
    pub matrix_nonzero: Vec<C64>,
    /// `(channel index, matrix index)` pairs.
    pub pairing: Vec<(usize, usize)>,
    pub max_pair_distance: f64,
    pub matched: bool,
}

impl SpectrumComparison {
    pub fn from_spectra(channel: &[C64], matrix: &[C64], tol: &Tolerances) -> Self {
        let keep = |v: &[C64]| -> Vec<C64> {
            let mut kept: Vec<C64> = v
                .iter()
                .copied()
                .filter(|z| z.norm() >= tol.zero_eig_tol)
                .collect();
            kept.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)));
            kept
        };
        let channel_nonzero = keep(channel);
        let matrix_nonzero = keep(matrix);
        let pairing = pair_values(&channel_nonzero, &matrix_nonzero);
        let max_pair_distance = pairing
            .iter()
            .map(|&(i, j)| (channel_nonzero[i] - matrix_nonzero[j]).norm())
            .fold(0.0, f64::max);
        let matched =
            channel_nonzero.len() == matrix_nonzero.len() && max_pair_distance <= tol.match_tol;
        Self {
            channel_nonzero,
            matrix_nonzero,
            pairing,
            max_pair_distance,
            matched,
        }
    }
}

/// Pairs `min(|a|, |b|)` values; unmatched leftovers of the longer list are dropped.
fn pair_values(a: &[C64], b: &[C64]) -> Vec<(usize, usize)> {
    let k = a.len().max(b.len());
    if k == 0 {
        return Vec::new();
    }
    if k <= EXACT_PAIRING_LIMIT {
        // Pad to square with zero-cost dummies.
        let cost: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| match (a.get(i), b.get(j)) {
                        (Some(x), Some(y)) => (x - y).norm(),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        return min_cost_assignment(&cost)
            .into_iter()
            .enumerate()
            .filter(|&(i, j)| i < a.len() && j < b.len())
            .collect();
    }
    let mut used = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (i, x) in a.iter().enumerate() {
        let best = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&p, &q| (x - b[p]).norm().total_cmp(&(x - b[q]).norm()));
        if let Some(j) = best {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}
