use ebchan::matrix::{self, ComplexMatrix};
use ebchan::random;
use ebchan::{DensityMatrix, HolevoForm, StochasticMatrix, Tolerances};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn form(seed: u64, n: usize, r: usize) -> HolevoForm {
    random::random_mixed_form(&mut rng(seed), n, r, &Tolerances::default())
}

/// `sum_k F_k^T ⊗ R_k` assembled entry by entry, without the tensor helper.
fn choi_by_entries(form: &HolevoForm) -> ComplexMatrix {
    let n = form.n();
    ComplexMatrix::from_fn(n * n, n * n, |row, col| {
        let (i, a) = (row / n, row % n);
        let (j, b) = (col / n, col % n);
        form.pairs()
            .iter()
            .map(|p| p.effect[(j, i)] * p.state[(a, b)])
            .sum()
    })
}

/// Steps after which `|lambda_2|^m` drops below `eps`.
fn steps_for_gap(s: &StochasticMatrix, eps: f64) -> usize {
    let m = ComplexMatrix::from_real(s.r(), s.r(), s.entries()).unwrap();
    let mut moduli: Vec<f64> = matrix::eig_general(&m)
        .unwrap()
        .iter()
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    match moduli.get(1) {
        Some(&l2) if l2 > 1e-12 => (eps.ln() / l2.ln()).ceil() as usize,
        _ => 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn povm_closes_for_every_iterate(seed in any::<u64>(), n in 1usize..4, r in 1usize..6, m in 1usize..6) {
        let tol = Tolerances::default();
        let f = form(seed, n, r);
        let identity = ComplexMatrix::identity(n);
        prop_assert!(f.effect_sum().max_diff(&identity) <= tol.stochastic_tol);
        let g = f.iterated_form(m, &tol).unwrap();
        prop_assert!(g.effect_sum().max_diff(&identity) <= 1e-10);
    }

    #[test]
    fn natural_rep_extends_the_channel_linearly(seed in any::<u64>(), n in 1usize..4, r in 1usize..6) {
        let f = form(seed, n, r);
        let natural = f.natural_rep();
        let mut rng = rng(seed ^ 0x5eed);
        for _ in 0..50 {
            let x = random::gaussian_matrix(&mut rng, n, n);
            let direct = matrix::vec(&f.apply_linear(&x).unwrap());
            let via_rep = natural.mul_vec(&matrix::vec(&x));
            let diff = direct.iter().zip(&via_rep).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-10 * (1.0 + x.max_abs()));
        }
    }

    #[test]
    fn choi_formulas_agree(seed in any::<u64>(), n in 1usize..4, r in 1usize..6) {
        let f = form(seed, n, r);
        let units = f.choi();
        prop_assert!(units.max_diff(&f.choi_from_pairs()) <= 1e-10);
        prop_assert!(units.max_diff(&choi_by_entries(&f)) <= 1e-10);
    }

    #[test]
    fn factorization_reproduces_both_representations(seed in any::<u64>(), n in 1usize..4, r in 1usize..7) {
        let tol = Tolerances::default();
        let res = form(seed, n, r).representation_residuals(&tol).unwrap();
        prop_assert!(res.ab_minus_natural <= 1e-10);
        prop_assert!(res.ba_minus_stochastic <= 1e-10);
    }

    #[test]
    fn stochastic_rep_tracks_measurement_weights(seed in any::<u64>(), n in 1usize..4, r in 1usize..6) {
        // S c = a where c_k = tr(F_k rho) and a_k = tr(F_k Phi(rho)).
        let tol = Tolerances::default();
        let f = form(seed, n, r);
        let s = f.stochastic_rep(&tol).unwrap();
        let rho = random::random_state(&mut rng(seed.wrapping_add(1)), n);
        let c: Vec<f64> = f.weights(rho.matrix()).iter().map(|z| z.re).collect();
        let a: Vec<f64> = f.weights(f.apply(&rho).unwrap().matrix()).iter().map(|z| z.re).collect();
        let sc = s.mul_vec(&c);
        prop_assert!(sc.iter().zip(&a).all(|(x, y)| (x - y).abs() <= 1e-12));
    }

    #[test]
    fn fixed_point_is_fixed_and_attracting(seed in any::<u64>(), n in 1usize..4, r in 1usize..6) {
        let tol = Tolerances::default();
        let f = form(seed, n, r);
        let fp = f.fixed_point(&tol).unwrap();
        prop_assert!(fp.residual <= 1e-10);
        prop_assert!(DensityMatrix::new(fp.state.matrix().clone(), &tol).is_ok());
        let s = f.stochastic_rep(&tol).unwrap();
        if let Some(p) = s.primitivity(&tol).index {
            // The nonzero spectrum of the channel is that of S, so |lambda_2(S)| sets the rate.
            let cap = 10 * p + 200 + steps_for_gap(&s, 1e-9);
            let mut rng = rng(seed ^ 0xf17ed);
            for _ in 0..20 {
                let mut rho = random::random_state(&mut rng, n);
                let mut steps = 0;
                while rho.matrix().max_diff(fp.state.matrix()) > 1e-6 && steps < cap {
                    rho = f.apply(&rho).unwrap();
                    steps += 1;
                }
                prop_assert!(rho.matrix().max_diff(fp.state.matrix()) <= 1e-6, "no convergence within {} steps", cap);
            }
        }
    }

    #[test]
    fn qc_round_trip(seed in any::<u64>(), r in 1usize..9) {
        let tol = Tolerances::default();
        let s = random::random_stochastic(&mut rng(seed), r, &tol);
        let back = HolevoForm::qc_from_stochastic(&s, &tol).unwrap().stochastic_rep(&tol).unwrap();
        let diff = s.entries().iter().zip(back.entries()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12);
    }

    #[test]
    fn nonzero_spectra_coincide(seed in any::<u64>(), n in 2usize..4, r in 1usize..7) {
        let tol = Tolerances::default();
        let cmp = form(seed, n, r).compare_nonzero_spectrum(&tol).unwrap();
        prop_assert!(cmp.matched, "{:?}", cmp);
        prop_assert_eq!(cmp.channel_nonzero.len(), cmp.matrix_nonzero.len());
        prop_assert!(cmp.max_pair_distance <= tol.match_tol);
    }
}

#[test]
fn depolarizing_kraus_import_matches_on_matrix_units() {
    let tol = Tolerances::default();
    for n in 1..=4 {
        let scale = 1.0 / (n as f64).sqrt();
        let kraus: Vec<ComplexMatrix> = (0..n)
            .flat_map(|i| {
                (0..n).map(move |j| ComplexMatrix::matrix_unit(n, i, j).scale_real(scale))
            })
            .collect();
        let imported = HolevoForm::from_rank_one_kraus(&kraus, &tol).unwrap();
        let canonical = HolevoForm::depolarizing(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let e = ComplexMatrix::matrix_unit(n, i, j);
                let want = if i == j {
                    ComplexMatrix::identity(n).scale_real(1.0 / n as f64)
                } else {
                    ComplexMatrix::zeros(n, n)
                };
                assert!(imported.apply_linear(&e).unwrap().max_diff(&want) <= 1e-10);
                assert!(canonical.apply_linear(&e).unwrap().max_diff(&want) <= 1e-10);
            }
        }
    }
}
