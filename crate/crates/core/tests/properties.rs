//! Randomized invariants across tensors, representations, channels and
//! compression. Instances are drawn from a seeded generator so every
//! proptest case is a reproducible random state.

use lpdo_core::circuits::haar_random_unitary;
use lpdo_core::linalg::{qr_phase_fixed, svd_split, svd_thin};
use lpdo_core::truncation::lpdo_compress;
use lpdo_core::{
    build_brickwall, contract, frobenius_loss, run_circuit, supervector_fidelity, supervector_overlap, Caps,
    DensityMatrix, Evolve, GateSource, KrausChannel, Lpdo, MetricSet, MixedState, Mpo, NormMode, Tensor,
};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn dense_distance<A: MixedState, B: MixedState>(a: &A, b: &B) -> f64 {
    a.to_dense().unwrap().frobenius_distance(&b.to_dense().unwrap()).unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn contraction_is_bilinear(seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian_tensor(&[2, 3, 4], &mut rng);
        let b = gaussian_tensor(&[4, 3, 5], &mut rng);
        let alpha = C64::new(re, im);
        let lhs = contract(&a.scaled(alpha), &b, &[(1, 1), (2, 0)]).unwrap();
        let rhs = contract(&a, &b, &[(1, 1), (2, 0)]).unwrap().scaled(alpha);
        prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn svd_split_reconstructs_and_weighs(seed in any::<u64>(), keep in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = gaussian_tensor(&[2, 3, 2, 2], &mut rng);
        let f = svd_split(&t, &[0, 1], None, None).unwrap();
        let k = f.singular_values.len();
        let w: Vec<C64> = f.singular_values.iter().map(|&s| C64::new(s, 0.0)).collect();
        let scaled = Tensor::from_fn(f.left.shape(), |i| f.left.get(i) * w[i[2]]);
        let back = contract(&scaled, &f.right, &[(2, 0)]).unwrap();
        prop_assert!(back.distance(&t).unwrap() <= 1e-10 * t.norm());
        prop_assert_eq!(k, 4);

        let trunc = svd_split(&t, &[0, 1], Some(keep), None).unwrap();
        let (m, _, _) = t.matricize(&[0, 1]).unwrap();
        let (_, s, _) = svd_thin(&m).unwrap();
        let total: f64 = s.iter().map(|x| x * x).sum();
        let kept: f64 = s.iter().take(keep.min(4)).map(|x| x * x).sum();
        prop_assert!((trunc.discarded_weight - (1.0 - kept / total)).abs() <= 1e-12);
    }

    #[test]
    fn qr_is_deterministic_with_nonnegative_diagonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((5, 3), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let (q1, r1) = qr_phase_fixed(&m).unwrap();
        let (q2, r2) = qr_phase_fixed(&m.clone()).unwrap();
        prop_assert_eq!(&q1, &q2);
        prop_assert_eq!(&r1, &r2);
        for i in 0..3 {
            prop_assert!(r1[(i, i)].im.abs() < 1e-14 && r1[(i, i)].re >= 0.0);
        }
        let back = q1.dot(&r1);
        prop_assert!((&back - &m).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-12);
    }

    #[test]
    fn lpdo_views_agree(seed in any::<u64>(), n in 2usize..6, chi in 1usize..4, dk in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = Lpdo::random(n, 2, chi, dk, &mut rng);
        let rho = l.to_dense().unwrap();
        // MPO view reproduces the same operator.
        prop_assert!(dense_distance(&l.to_mpo(), &rho) <= 1e-12);
        // Positivity by construction.
        prop_assert!(rho.min_eigenvalue().unwrap() >= -1e-10);
        // Trace-normalized purity bounds.
        let p = l.purity();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(p <= 1.0 + 1e-10 && p >= 0.5f64.powi(n as i32) - 1e-10);
        prop_assert!((p - rho.purity()).abs() < 1e-10);
        // Network overlap equals the dense formula.
        let m = Lpdo::random(n, 2, chi + 1, dk, &mut rng);
        let net = supervector_fidelity(&l, &m).unwrap();
        let dense = rho.supervector_fidelity(&m.to_dense().unwrap()).unwrap();
        prop_assert!((net - dense).abs() <= 1e-10);
    }

    #[test]
    fn pure_state_entropy_doubles(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = Lpdo::random(n, 2, 4, 1, &mut rng);
        let rho = l.to_dense().unwrap();
        let cut = n / 2;
        // State Schmidt spectrum from the eigenvalues of the reduced state.
        let dl = 1usize << cut;
        let dr = 1usize << (n - cut);
        let mut reduced = Array2::<C64>::zeros((dl, dl));
        for a in 0..dl { for b in 0..dl { for r in 0..dr {
            reduced[(a, b)] += rho.matrix()[(a * dr + r, b * dr + r)];
        }}}
        let ev = DensityMatrix::new(cut, 2, reduced).unwrap().eigenvalues().unwrap();
        let s_state: f64 = ev.iter().filter(|&&x| x > 1e-14).map(|&x| -x * x.ln()).sum();
        let s_op = l.entanglement_entropy(cut).unwrap();
        prop_assert!((s_op - 2.0 * s_state).abs() <= 1e-8, "{} vs {}", s_op, 2.0 * s_state);
    }

    #[test]
    fn gates_preserve_trace_and_purity(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = Lpdo::random(n, 2, 2, 2, &mut rng);
        let mut m = l.to_mpo();
        let (p0, t0) = (l.purity(), l.trace());
        let site = rng.random_range(0..n - 1);
        let u = haar_random_unitary(4, &mut rng);
        let caps = Caps::default();
        l.apply_unitary_2q(site, &u, &caps).unwrap();
        m.apply_unitary_2q(site, &u, &caps).unwrap();
        let v = haar_random_unitary(2, &mut rng);
        l.apply_unitary_1q(n - 1, &v).unwrap();
        m.apply_unitary_1q(n - 1, &v).unwrap();
        prop_assert!((l.purity() - p0).abs() <= 1e-10);
        prop_assert!((m.purity() - p0).abs() <= 1e-10);
        prop_assert!((l.trace() - t0).norm() <= 1e-10);
        prop_assert!((m.trace() - t0).norm() <= 1e-10);
    }

    #[test]
    fn single_qubit_gates_keep_bond_spectra(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = Lpdo::random(n, 2, 3, 2, &mut rng);
        let before: Vec<f64> = (1..n).map(|c| l.entanglement_entropy(c).unwrap()).collect();
        for j in 0..n {
            l.apply_unitary_1q(j, &haar_random_unitary(2, &mut rng)).unwrap();
        }
        for (c, b) in (1..n).zip(&before) {
            prop_assert!((l.entanglement_entropy(c).unwrap() - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn channels_match_operator_sum(seed in any::<u64>(), n in 2usize..5, eps in 0.0f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = Lpdo::random(n, 2, 2, 1, &mut rng);
        let mut m = l.to_mpo();
        let mut rho = l.to_dense().unwrap();
        let ch = KrausChannel::depolarizing_2q(eps).unwrap();
        let site = rng.random_range(0..n - 1);
        let caps = Caps::default();
        l.apply_channel_2q(site, &ch, &caps).unwrap();
        m.apply_channel_2q(site, &ch, &caps).unwrap();
        rho.apply_channel_2q(site, &ch, &caps).unwrap();
        prop_assert!(dense_distance(&l, &rho) <= 1e-9);
        prop_assert!(dense_distance(&m, &rho) <= 1e-9);
        prop_assert!((rho.trace().re - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn noiseless_layer_entropy_growth_is_bounded(seed in any::<u64>(), n in 4usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = build_brickwall(n, 3, &GateSource::Haar, 0.0, 1.0, &mut rng).unwrap();
        let (_, rec) = run_circuit(Lpdo::all_zeros(n), &c, &Caps::default(), None, MetricSet::default()).unwrap();
        let mut prev = 0.0;
        for row in &rec.rows {
            let s = row.half_cut_ee.unwrap();
            prop_assert!((s - prev).abs() <= 4.0 * 2f64.ln() + 1e-9);
            prev = s;
        }
    }

    #[test]
    fn compression_stays_physical_and_monotone(seed in any::<u64>(), n in 3usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = Lpdo::random(n, 2, 4, 3, &mut rng);
        let mut last = 0.0;
        for chi in 1..=4 {
            let (c, _) = lpdo_compress(&l, chi, 3, 0.0).unwrap();
            let rho = c.to_dense().unwrap();
            prop_assert!(rho.min_eigenvalue().unwrap() >= -1e-10);
            prop_assert!(c.purity() <= 1.0 + 1e-10);
            let f = supervector_fidelity(&l, &c).unwrap();
            prop_assert!(f >= last - 1e-9, "chi {}: {} < {}", chi, f, last);
            last = f;
        }
        let mut last = 0.0;
        for dk in 1..=3 {
            let (c, _) = lpdo_compress(&l, 4, dk, 0.0).unwrap();
            let f = supervector_fidelity(&l, &c).unwrap();
            prop_assert!(f >= last - 1e-9, "dkappa {}: {} < {}", dk, f, last);
            last = f;
        }
    }

    #[test]
    fn loss_identity(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Lpdo::random(n, 2, 3, 2, &mut rng);
        let x = Lpdo::random(n, 2, 2, 2, &mut rng);
        let cross = supervector_overlap(&t, &x).unwrap().re;
        let expect = t.purity() + x.purity() - 2.0 * cross;
        prop_assert!((frobenius_loss(&t, &x).unwrap() - expect).abs() <= 1e-10);
        let tm: Mpo = t.to_mpo();
        prop_assert!((frobenius_loss(&tm, &x).unwrap() - expect).abs() <= 1e-10);
    }

    #[test]
    fn seeded_runs_replay(seed in any::<u64>(), eps in 0.0f64..0.1) {
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            build_brickwall(5, 4, &GateSource::Haar, eps, 0.8, &mut rng).unwrap()
        };
        let (c1, c2) = (make(), make());
        prop_assert_eq!(&c1, &c2);
        let caps = Caps { chi_max: 4, dkappa_max: 2, ..Caps::default() };
        let (s1, r1) = run_circuit(Lpdo::all_zeros(5), &c1, &caps, None, MetricSet::default()).unwrap();
        let (s2, r2) = run_circuit(Lpdo::all_zeros(5), &c2, &caps, None, MetricSet::default()).unwrap();
        prop_assert_eq!(s1, s2);
        prop_assert_eq!(&r1, &r2);
        for row in &r1.rows {
            prop_assert!((row.trace - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn normalization_scale_lives_on_last_site() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let l = Lpdo::random(4, 2, 2, 2, &mut rng);
    let mut scaled = Lpdo::new(l.sites().iter().map(|s| s.scaled(C64::new(1.7, 0.0))).collect()).unwrap();
    let firsts: Vec<Tensor> = scaled.sites()[..3].to_vec();
    scaled.normalize(NormMode::Trace).unwrap();
    assert!((scaled.trace().re - 1.0).abs() < 1e-12);
    assert_eq!(&scaled.sites()[..3], &firsts[..]);
}
