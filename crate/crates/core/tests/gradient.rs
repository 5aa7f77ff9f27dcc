use std::f64::consts::PI;

use hybrid_precoding::capacity::{gradient_la, lower_bound_approx, noise_variance};
use hybrid_precoding::channel::{sample_path_angles, MeanAngle};
use hybrid_precoding::optimizer::riemannian_gradient;
use hybrid_precoding::rng::{complex_gaussian, stream};
use hybrid_precoding::subarray::fixed_partition;
use hybrid_precoding::{CMat, HybridPrecoder, Modulation, RMat, SignalSet, StatisticalCsi};
use nalgebra::Complex;
use proptest::prelude::*;
use rand::Rng;

fn random_precoder(seed: u64, n_t: usize, n_rf: usize, n_s: usize) -> HybridPrecoder {
    let mut rng = stream(seed, 3);
    let phases = RMat::from_fn(n_t, n_rf, |_, _| rng.random::<f64>() * 2.0 * PI);
    let b = CMat::from_fn(n_rf, n_s, |_, _| complex_gaussian(&mut rng, 1.0));
    let b = &b * Complex::new(1.0 / b.norm(), 0.0);
    HybridPrecoder::new(fixed_partition(n_t, n_rf).unwrap(), phases, b, 1.0).unwrap()
}

/// Relative error between central differences of the approximate bound and the
/// analytic gradient, over all phases on the support and all digital entries.
fn relative_error(csi: &StatisticalCsi, p: &HybridPrecoder, s: &SignalSet, sigma2: f64) -> f64 {
    let g = gradient_la(csi, p, s, sigma2).unwrap();
    let f = |q: &HybridPrecoder| lower_bound_approx(csi, q, s, sigma2).unwrap().value;
    let h = 1e-6;
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..p.n_t() {
        let j = p.partition().owner(i);
        let (mut up, mut down) = (p.phases().clone(), p.phases().clone());
        up[(i, j)] += h;
        down[(i, j)] -= h;
        let num = (f(&p.with_phases(up)) - f(&p.with_phases(down))) / (2.0 * h);
        diff += (num - g.grad_phi[(i, j)]).powi(2);
        norm += g.grad_phi[(i, j)].powi(2);
    }
    for i in 0..p.n_rf() {
        for j in 0..p.n_s() {
            for dir in [Complex::new(h, 0.0), Complex::new(0.0, h)] {
                let (mut up, mut down) = (p.digital().clone(), p.digital().clone());
                up[(i, j)] += dir;
                down[(i, j)] -= dir;
                let num = (f(&p.with_digital(up)) - f(&p.with_digital(down))) / (2.0 * h);
                let ana = 2.0 * (g.grad_b[(i, j)].conj() * dir).re / h;
                diff += (num - ana).powi(2);
                norm += ana * ana;
            }
        }
    }
    (diff / norm).sqrt()
}

#[test]
fn gradient_matches_central_differences_on_desk_instance() {
    let s = SignalSet::new(Modulation::Qpsk, 2).unwrap();
    let angles = sample_path_angles(&mut stream(8, 0), 3, MeanAngle::Uniform, 0.5, PI / 18.0).unwrap();
    let csi = StatisticalCsi::new(angles, 8, 16);
    let p = random_precoder(1, 16, 2, 2);
    for snr in [-15.0, 0.0, 10.0] {
        let e = relative_error(&csi, &p, &s, noise_variance(snr, 1.0));
        assert!(e < 1e-4, "{snr} dB: {e}");
    }
}

#[test]
fn gradient_is_zero_off_the_partition() {
    let s = SignalSet::new(Modulation::Bpsk, 2).unwrap();
    let angles = sample_path_angles(&mut stream(4, 0), 2, MeanAngle::Uniform, 0.5, PI / 18.0).unwrap();
    let csi = StatisticalCsi::new(angles, 4, 8);
    let p = random_precoder(2, 8, 2, 2);
    let g = gradient_la(&csi, &p, &s, 0.5).unwrap();
    for i in 0..8 {
        for j in 0..2 {
            if p.partition().owner(i) != j {
                assert_eq!(g.grad_phi[(i, j)], 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gradient_agrees_with_differences(seed in 0u64..5_000, snr in -20.0f64..10.0, paths in 1usize..4) {
        let s = SignalSet::new(Modulation::Qpsk, 2).unwrap();
        let angles = sample_path_angles(&mut stream(seed, 0), paths, MeanAngle::Uniform, 0.9, PI / 18.0).unwrap();
        let csi = StatisticalCsi::new(angles, 4, 8);
        let p = random_precoder(seed, 8, 2, 2);
        let e = relative_error(&csi, &p, &s, noise_variance(snr, 1.0));
        prop_assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn riemannian_gradient_is_tangent(seed in 0u64..5_000) {
        let mut rng = stream(seed, 0);
        let b = CMat::from_fn(3, 2, |_, _| complex_gaussian(&mut rng, 1.0));
        let g = CMat::from_fn(3, 2, |_, _| complex_gaussian(&mut rng, 1.0));
        let power = b.norm_squared();
        let t = riemannian_gradient(&g, &b, power);
        let inner: f64 = t.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        prop_assert!(inner.abs() < 1e-12 * (1.0 + g.norm() * b.norm()));
    }
}
