//! Distributional checks for mutation and the exact transition law.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

use tworate_ea::analysis::stats::{chi_square_gof, chi_square_two_sample};
use tworate_ea::exact::{exact_point_prob, ExactDistribution};
use tworate_ea::mutation::{mutate, sample_delta, MutationDelta};
use tworate_ea::point::{onemax, random_search_point, SearchPoint};

fn binomial_probs(n: u64, p: f64) -> Vec<f64> {
    let b = Binomial::new(p, n).unwrap();
    (0..=n).map(|x| b.pmf(x)).collect()
}

#[test]
fn random_points_have_binomial_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = vec![0u64; 21];
    for _ in 0..100_000 {
        let x = random_search_point(20, &mut rng).unwrap();
        counts[20 - onemax(&x) as usize] += 1;
    }
    assert!(chi_square_gof(&counts, &binomial_probs(20, 0.5)) >= 0.001);
}

#[test]
fn fair_mutation_moves_binomially_far() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let parent = random_search_point(20, &mut rng).unwrap();
    let mut counts = vec![0u64; 21];
    for _ in 0..100_000 {
        let child = mutate(&parent, 0.5, &mut rng).unwrap();
        counts[parent.hamming_distance(&child) as usize] += 1;
    }
    assert!(chi_square_gof(&counts, &binomial_probs(20, 0.5)) >= 0.001);
}

#[test]
fn delta_sampler_agrees_with_materialised_mutation() {
    let (n, k, p) = (12usize, 5u64, 0.3);
    let mut parent = SearchPoint::zeros(n).unwrap();
    for i in 0..k as usize {
        parent.flip(n - 1 - 2 * i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cell = |d: MutationDelta| d.ones_flipped as usize * (n + 1 - k as usize) + d.zeros_flipped as usize;
    let mut from_points = vec![0u64; (k as usize + 1) * (n + 1 - k as usize)];
    let mut from_deltas = from_points.clone();
    for _ in 0..100_000 {
        let child = mutate(&parent, p, &mut rng).unwrap();
        from_points[cell(MutationDelta::between(&parent, &child))] += 1;
        from_deltas[cell(sample_delta(k, n as u64, p, &mut rng).unwrap())] += 1;
    }
    assert!(chi_square_two_sample(&from_points, &from_deltas) >= 0.001);
}

#[test]
fn child_distance_matches_exact_law() {
    let (n, k, r) = (30u64, 9u64, 3.0);
    let law = ExactDistribution::new(n, k, r).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = vec![0u64; n as usize + 1];
    for _ in 0..200_000 {
        let d = sample_delta(k, n, r / n as f64, &mut rng).unwrap();
        counts[d.child_distance(k) as usize] += 1;
    }
    let probs: Vec<f64> = (0..=n).map(|d| law.point(k as i64 - d as i64)).collect();
    assert!(chi_square_gof(&counts, &probs) >= 0.001);
}

#[test]
fn tails_are_monotone() {
    let (n, r) = (40u64, 2.5);
    for k in 0..=n {
        let law = ExactDistribution::new(n, k, r).unwrap();
        let mut prev = law.tail(-(n as i64) - 1);
        assert!((prev - 1.0).abs() < 1e-12);
        for i in -(n as i64)..=(n as i64) {
            let t = law.tail(i);
            assert!(t <= prev + 1e-15, "tail not decreasing at k={k}, i={i}");
            prev = t;
        }
    }
    // A parent closer to the optimum finds improvements less often.
    for i in 1..=5 {
        let mut prev = f64::INFINITY;
        for k in (i as u64..=n).rev() {
            let t = ExactDistribution::new(n, k, r).unwrap().tail(i);
            assert!(t <= prev + 1e-15, "tail not monotone in k at k={k}, i={i}");
            prev = t;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_law_sums_to_one(n in 1u64..=64, k_frac in 0.0f64..=1.0, r_frac in 0.001f64..=1.0) {
        let k = (k_frac * n as f64).round() as u64;
        let r = r_frac * n as f64;
        let total: f64 = (-(n as i64)..=(n as i64))
            .map(|i| exact_point_prob(n, k, i, r).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "total = {}", total);
        prop_assert!((ExactDistribution::new(n, k, r).unwrap().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_and_convolved_laws_agree(n in 1u64..=200, k_frac in 0.0f64..=1.0, r in 0.1f64..=8.0) {
        prop_assume!(r <= n as f64);
        let k = (k_frac * n as f64).round() as u64;
        let law = ExactDistribution::new(n, k, r).unwrap();
        for i in -(n as i64)..=(k as i64) {
            let direct = exact_point_prob(n, k, i, r).unwrap();
            prop_assert!((direct - law.point(i)).abs() < 1e-12);
        }
    }
}
