use std::f64::consts::PI;

use hybrid_precoding::capacity::{instantaneous_mi, lower_bound_approx, noise_variance};
use hybrid_precoding::channel::{effective_channel, sample_channel, sample_path_angles, MeanAngle};
use hybrid_precoding::optimizer::{
    algorithm2, block_coordinate_ascent, default_digital_init, digital_only_solve, no_precoding_baseline,
    project_sphere, riemannian_gradient, unconstrained_benchmark, DigitalOptions,
};
use hybrid_precoding::rng::{complex_gaussian, stream};
use hybrid_precoding::subarray::{algorithm1, DesignOptions};
use hybrid_precoding::{AscentOptions, CMat, HybridPrecoder, Modulation, SignalSet, StatisticalCsi};
use nalgebra::Complex;
use proptest::prelude::*;

fn setup(seed: u64) -> (StatisticalCsi, HybridPrecoder, SignalSet) {
    let mut rng = stream(seed, 7);
    let angles = sample_path_angles(&mut rng, 3, MeanAngle::Uniform, PI / 4.0, PI / 18.0).unwrap();
    let csi = StatisticalCsi::new(angles, 4, 8);
    let design = algorithm1(&csi.a_t, 2, &mut rng, &DesignOptions { restarts: 2, ..Default::default() }).unwrap();
    let b = default_digital_init(&csi.a_t, &design.f_bar, 2, 1.0).unwrap();
    let p = HybridPrecoder::new(design.partition, design.phases, b, 1.0).unwrap();
    (csi, p, SignalSet::new(Modulation::Qpsk, 2).unwrap())
}

#[test]
fn trace_csv_has_the_documented_columns() {
    let (csi, p, s) = setup(1);
    let report = algorithm2(&csi, p, &s, noise_variance(-10.0, 1.0), &AscentOptions::default()).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,objective,grad_phi_sq,grad_b_sq,rho"));
    assert_eq!(lines.count(), report.records.len());
    assert_eq!(report.records[0].rho, 0.0);
}

#[test]
fn manifold_ascent_improves_and_keeps_power() {
    let (csi, p, s) = setup(2);
    let s2 = noise_variance(-15.0, 1.0);
    let start = lower_bound_approx(&csi, &p, &s, s2).unwrap().value;
    let report = algorithm2(&csi, p, &s, s2, &AscentOptions::default()).unwrap();
    assert_eq!(report.monotonicity_violations(), 0);
    assert!(report.final_objective() >= start);
    let q = &report.precoder;
    assert!((q.product().norm_squared() - 1.0).abs() < 1e-9);
    let reeval = lower_bound_approx(&csi, q, &s, s2).unwrap().value;
    assert!((reeval - report.final_objective()).abs() < 1e-9);
}

#[test]
fn block_baseline_is_monotone_too() {
    let (csi, p, s) = setup(3);
    let opts = AscentOptions { max_iter: 80, ..AscentOptions::default() };
    let report = block_coordinate_ascent(&csi, p, &s, noise_variance(-10.0, 1.0), &opts).unwrap();
    assert_eq!(report.monotonicity_violations(), 0);
    assert!(report.iterations() <= 80);
}

#[test]
fn digital_solve_does_not_lose_information() {
    let (csi, p, s) = setup(4);
    let s2 = noise_variance(0.0, 1.0);
    let mut rng = stream(4, 8);
    let h = sample_channel(&mut rng, &csi).h;
    let h_eff = effective_channel(&h, p.analog()).unwrap();
    let opts = DigitalOptions { ascent: AscentOptions { max_iter: 30, ..Default::default() }, n_noise: 300 };
    let report = digital_only_solve(&h_eff, None, &s, s2, 1.0, &mut rng, &opts).unwrap();
    let trace = report.objective_trace();
    assert!(trace.last().unwrap() >= trace.first().unwrap());
    assert!((report.precoder.digital().norm_squared() - 1.0).abs() < 1e-9);

    // on common noise the solved B is no worse than the SVD start
    let solved = p.with_digital(report.precoder.digital().clone());
    let a = instantaneous_mi(&mut stream(5, 0), &h, &solved, &s, s2, 4000).unwrap();
    let b = instantaneous_mi(&mut stream(5, 0), &h, &p, &s, s2, 4000).unwrap();
    assert!(a.value >= b.value - 0.05, "{} vs {}", a.value, b.value);
}

#[test]
fn unconstrained_benchmark_is_at_least_as_good_as_hybrid() {
    let (csi, p, s) = setup(5);
    let s2 = noise_variance(-15.0, 1.0);
    let hybrid = algorithm2(&csi, p, &s, s2, &AscentOptions::default()).unwrap();
    let digital = unconstrained_benchmark(&csi, &s, s2, 1.0, &AscentOptions::default()).unwrap();
    assert!(digital.final_objective() >= hybrid.final_objective() - 1e-6);
}

#[test]
fn no_precoding_requires_square_digital_part() {
    assert!(no_precoding_baseline(8, 2, 1, 1.0).is_err());
    let p = no_precoding_baseline(8, 2, 2, 2.0).unwrap();
    assert!((p.product().norm_squared() - 2.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_lands_on_sphere(seed in 0u64..1000, power in 0.1f64..10.0) {
        let mut rng = stream(seed, 0);
        let b = CMat::from_fn(3, 2, |_, _| complex_gaussian(&mut rng, 1.0));
        let p = project_sphere(&b, power).unwrap();
        prop_assert!((p.norm_squared() - power).abs() < 1e-9 * power);
    }

    #[test]
    fn riemannian_gradient_is_tangent(seed in 0u64..1000) {
        let mut rng = stream(seed, 1);
        let b = project_sphere(&CMat::from_fn(4, 2, |_, _| complex_gaussian(&mut rng, 1.0)), 1.0).unwrap();
        let g = CMat::from_fn(4, 2, |_, _| complex_gaussian(&mut rng, 1.0));
        let r = riemannian_gradient(&g, &b, 1.0);
        let inner: Complex<f64> = (b.adjoint() * &r).trace();
        prop_assert!(inner.re.abs() < 1e-10);
    }
}
