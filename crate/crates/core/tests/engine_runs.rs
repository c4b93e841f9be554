//! End-to-end behaviour of the engine and its agreement with the exact drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tworate_ea::analysis::stats::chi_square_two_sample;
use tworate_ea::analysis::verify::two_rate_subpopulations;
use tworate_ea::analysis::exact_drift;
use tworate_ea::engine::{sample_generation, Kernel};
use tworate_ea::point::onemax;
use tworate_ea::{random_search_point, run_ea, Controller, ControllerSpec, ControllerState, EAConfig, EAState};

fn histogram(values: &[u64], bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &v in values {
        h[(v as usize).min(bins - 1)] += 1;
    }
    h
}

#[test]
fn delta_kernel_matches_bit_level_kernel() {
    let spec = ControllerSpec::default();
    let runs = 2000;
    let lengths = |kernel: Kernel, salt: u64| -> Vec<u64> {
        let config = EAConfig::new(24, 4).unwrap().with_kernel(kernel);
        (0..runs)
            .map(|i| run_ea(&config, &spec, salt + i).unwrap().generations / 4)
            .collect()
    };
    let delta = lengths(Kernel::Delta, 0);
    let bits = lengths(Kernel::BitLevel, 1_000_000);
    let p = chi_square_two_sample(&histogram(&delta, 30), &histogram(&bits, 30));
    assert!(p >= 0.001, "run-length laws differ, p = {p}");

    // One generation from a fixed parent, recording (next distance, new rate).
    let config = EAConfig::new(10, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let parent = random_search_point(10, &mut rng).unwrap();
    let controller = Controller::SelfAdjusting(ControllerState::new(10, 1.5, true, 3, Some(2.25)).unwrap());
    let mut counts = [vec![0u64; 11 * 3], vec![0u64; 11 * 3]];
    for (slot, kernel) in [Kernel::Delta, Kernel::BitLevel].into_iter().enumerate() {
        let config = config.with_kernel(kernel);
        for _ in 0..50_000 {
            let mut s = EAState::new(parent.clone(), controller);
            let out = s.step(&config, &mut rng).unwrap();
            counts[slot][s.parent_distance() as usize * 3 + out.winner_subpopulation] += 1;
        }
    }
    let p = chi_square_two_sample(&counts[0], &counts[1]);
    assert!(p >= 0.001, "one-generation laws differ, p = {p}");
}

#[test]
fn elitism_and_bookkeeping_hold_along_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (n, lambda, spec) in [
        (300, 10, ControllerSpec::default()),
        (200, 9, serde_json::from_str(r#"{"kind":"self-adjusting","subpopulations":3}"#).unwrap()),
        (150, 8, serde_json::from_str(r#"{"kind":"fitness-dependent"}"#).unwrap()),
        (150, 8, serde_json::from_str(r#"{"kind":"static","rate":"half-ln-lambda"}"#).unwrap()),
    ] {
        for kernel in [Kernel::Delta, Kernel::BitLevel] {
            let config = EAConfig::new(n, lambda).unwrap().with_kernel(kernel);
            let mut state = EAState::new(
                random_search_point(n, &mut rng).unwrap(),
                spec.build(n, lambda).unwrap(),
            );
            while state.parent_distance() > 0 {
                let before = state.parent_distance();
                state.step(&config, &mut rng).unwrap();
                assert!(state.parent_distance() <= before);
                assert_eq!(state.parent_distance(), onemax(state.parent()) as u64);
                assert_eq!(state.evaluations, state.generation * lambda as u64);
                if let Controller::SelfAdjusting(c) = &state.controller {
                    assert!(c.rate >= c.lower_clamp && c.rate <= c.upper_clamp);
                }
            }
        }
    }
}

#[test]
fn self_adjusting_rate_is_small_near_the_optimum() {
    let config = EAConfig::new(5000, 1000).unwrap();
    let spec = ControllerSpec::default();
    let runs = 100;
    let mut small = 0;
    for seed in 0..runs {
        let rec = run_ea(&config, &spec, seed).unwrap();
        assert!(rec.hit_optimum);
        assert_eq!(rec.evaluations, rec.generations * 1000);
        if rec.last_improving_rate.unwrap() <= 8.0 {
            small += 1;
        }
    }
    assert!(small * 10 >= runs * 9, "only {small} of {runs} runs ended with rate <= 8");
}

#[test]
fn exact_drift_matches_simulated_generations() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let samples = 40_000;
    for case in 0..20 {
        let n: u64 = rng.random_range(6..=60);
        let k = rng.random_range(1..=n);
        let lambda = 2 * rng.random_range(1..=8u64);
        let r = rng.random_range(0.3..=n as f64 / 2.0);
        let exact = exact_drift(n, k, r, lambda).unwrap().value;
        let subs = two_rate_subpopulations(n, r, lambda).unwrap();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            let g = sample_generation(k, n, &subs, &mut rng).unwrap();
            let gain = k.saturating_sub(g.best_distance) as f64;
            sum += gain;
            sum_sq += gain * gain;
        }
        let mean = sum / samples as f64;
        let se = ((sum_sq / samples as f64 - mean * mean).max(0.0) / samples as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 4.5 * se + 1e-9,
            "case {case}: n={n} k={k} lambda={lambda} r={r:.3}: exact {exact} vs simulated {mean} (se {se})"
        );
    }

    // Smallest population with two single-offspring subpopulations.
    let exact = exact_drift(10, 3, 2.0, 2).unwrap().value;
    let subs = two_rate_subpopulations(10, 2.0, 2).unwrap();
    let mut sum = 0.0;
    let draws = 200_000;
    for _ in 0..draws {
        sum += 3u64.saturating_sub(sample_generation(3, 10, &subs, &mut rng).unwrap().best_distance) as f64;
    }
    assert!((sum / draws as f64 - exact).abs() < 0.01);
}
