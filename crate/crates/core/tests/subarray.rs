use std::collections::HashSet;
use std::f64::consts::PI;

use hybrid_precoding::channel::{sample_path_angles, MeanAngle};
use hybrid_precoding::rng::{complex_gaussian, stream};
use hybrid_precoding::subarray::{
    algorithm1, effective_gain, exhaustive_oracle, fixed_partition, for_each_partition, stirling_count, DesignOptions,
    SelectionMatrix,
};
use hybrid_precoding::{CMat, Error, Partition, RMat, StatisticalCsi};
use num_bigint::BigUint;
use proptest::prelude::*;

fn steering_at(seed: u64, n_t: usize, paths: usize) -> CMat {
    let angles = sample_path_angles(&mut stream(seed, 0), paths, MeanAngle::Uniform, 1.1, PI / 18.0).unwrap();
    StatisticalCsi::new(angles, 2, n_t).a_t
}

#[test]
fn known_partition_counts() {
    assert_eq!(stirling_count(16, 4).unwrap(), BigUint::from(171_798_901u64));
    assert_eq!(stirling_count(6, 2).unwrap(), BigUint::from(31u32));
    assert_eq!(stirling_count(64, 1).unwrap(), BigUint::from(1u32));
    assert_eq!(stirling_count(5, 5).unwrap(), BigUint::from(1u32));
    assert!(stirling_count(3, 4).is_err());
    assert!(stirling_count(3, 0).is_err());
}

#[test]
fn enumeration_visits_distinct_partitions() {
    let mut seen = HashSet::new();
    let count = for_each_partition(7, 3, |owner| {
        let p = Partition::from_assignment(owner, 3).unwrap();
        let mut key: Vec<Vec<usize>> = p.sets().to_vec();
        key.sort();
        assert!(seen.insert(key));
    });
    assert_eq!(BigUint::from(count), stirling_count(7, 3).unwrap());
}

#[test]
fn oracle_refuses_large_searches() {
    let a = steering_at(1, 16, 3);
    assert!(matches!(exhaustive_oracle(&a, 4, &mut stream(0, 0)), Err(Error::TooLarge { .. })));
}

#[test]
fn design_never_beats_the_oracle() {
    for seed in 0..6 {
        let a = steering_at(seed, 6, 3);
        let design = algorithm1(&a, 2, &mut stream(seed, 1), &DesignOptions::default()).unwrap();
        let oracle = exhaustive_oracle(&a, 2, &mut stream(seed, 2)).unwrap();
        assert!(design.gain <= oracle.gain * (1.0 + 1e-9), "{} > {}", design.gain, oracle.gain);
        assert_eq!(oracle.visited, 31);
    }
}

#[test]
fn fixed_blocks_need_divisibility() {
    let p = fixed_partition(12, 3).unwrap();
    assert_eq!(p.set(1), &[4, 5, 6, 7]);
    assert!(matches!(fixed_partition(10, 3), Err(Error::NotDivisible { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stirling_recurrence(n in 2usize..30, k in 2usize..8) {
        prop_assume!(k < n);
        let lhs = stirling_count(n, k).unwrap();
        let rhs = BigUint::from(k) * stirling_count(n - 1, k).unwrap() + stirling_count(n - 1, k - 1).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn partition_text_round_trip(owner in proptest::collection::vec(0usize..4, 4..20)) {
        let n_rf = owner.iter().copied().collect::<HashSet<_>>().len();
        // relabel the chains densely in order of first appearance
        let mut labels = Vec::new();
        let dense: Vec<usize> = owner
            .iter()
            .map(|o| labels.iter().position(|l| l == o).unwrap_or_else(|| { labels.push(*o); labels.len() - 1 }))
            .collect();
        let p = Partition::from_assignment(&dense, n_rf).unwrap();
        prop_assert_eq!(Partition::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn designs_are_feasible(seed in 0u64..1_000, n_rf in 1usize..5, paths in 1usize..6) {
        let n_t = 12;
        let mut rng = stream(seed, 9);
        let a = CMat::from_fn(n_t, paths, |_, _| complex_gaussian(&mut rng, 1.0));
        let d = algorithm1(&a, n_rf, &mut rng, &DesignOptions { restarts: 2, ..Default::default() }).unwrap();
        prop_assert!((d.f_bar.adjoint() * &d.f_bar - CMat::identity(n_rf, n_rf)).norm() < 1e-10);
        prop_assert_eq!(d.partition.n_rf(), n_rf);
        for i in 0..n_t {
            let j = d.partition.owner(i);
            prop_assert!((d.f_bar[(i, j)].norm() - d.partition.amplitude(j)).abs() < 1e-12);
        }
        prop_assert!((effective_gain(&d.f_bar, &a).unwrap() - d.gain).abs() < 1e-9 * (1.0 + d.gain));
        for t in &d.restart_traces {
            prop_assert!(t.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn selection_matrix_round_trip(seed in 0u64..1_000) {
        let mut rng = stream(seed, 4);
        let owner: Vec<usize> = (0..9).map(|i| if i < 3 { i } else { rand::Rng::random_range(&mut rng, 0..3) }).collect();
        let p = Partition::from_assignment(&owner, 3).unwrap();
        let phases = RMat::from_fn(9, 3, |_, _| rand::Rng::random_range(&mut rng, -PI..PI));
        let s = SelectionMatrix::from_partition(&p, &phases);
        prop_assert_eq!(s.partition().unwrap(), p.clone());
        let f_bar = s.normalized().unwrap();
        prop_assert!((f_bar - p.analog_precoder(&phases)).norm() < 1e-12);
    }
}
