//! Monte Carlo verifiers for the one-generation rate-drift claims.
//!
//! Every verifier simulates single generations in delta space. Sample `i`
//! draws from its own stream seeded with `split_seed(seed, tag, i)`, so the
//! estimate does not depend on how samples are scheduled across threads.
//! Preconditions of each claim are evaluated and reported, never enforced:
//! several of them only hold at population sizes far beyond desk scale.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drift::{exact_drift, region_bounds};
use super::stats::{wilson_interval, MonteCarloEstimate};
use crate::controller::{ControllerState, GenerationOutcome, Subpopulation};
use crate::engine::sample_generation;
use crate::error::{config_err, Result};
use crate::numeric::split_seed;

/// Confidence level of every reported interval.
pub const DEFAULT_LEVEL: f64 = 0.99;

/// A named precondition and whether it holds for the chosen parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    pub holds: bool,
}

fn pre(name: impl Into<String>, holds: bool) -> Precondition {
    Precondition {
        name: name.into(),
        holds,
    }
}

pub fn all_hold(pres: &[Precondition]) -> bool {
    pres.iter().all(|p| p.holds)
}

/// The two subpopulations of the two-rate scheme at rate `r`, without clamping.
pub fn two_rate_subpopulations(n: u64, r: f64, lambda: u64) -> Result<Vec<Subpopulation>> {
    if lambda < 2 || !lambda.is_multiple_of(2) {
        return config_err(format!("lambda = {lambda} must be even and at least 2"));
    }
    if r.is_nan() || r <= 0.0 {
        return config_err(format!("rate {r} must be positive"));
    }
    Ok([r / 2.0, 2.0 * r]
        .iter()
        .map(|&rate| Subpopulation {
            size: (lambda / 2) as usize,
            rate,
            probability: (rate / n as f64).min(1.0),
        })
        .collect())
}

/// Counts samples for which `event` holds, in parallel.
fn count_events<F>(samples: u64, seed: u64, tag: u64, event: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, tag, i));
            event(&mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerOrigin {
    /// The selected (tie-broken) best offspring came from the `2r` subpopulation.
    pub high_wins: MonteCarloEstimate,
    /// At least one best offspring came from the `2r` subpopulation.
    pub high_among_best: MonteCarloEstimate,
    /// Every best offspring came from the `r/2` subpopulation.
    pub low_strict: MonteCarloEstimate,
    /// Preconditions of the rate-increase claim (`high_wins ≥ 0.64`).
    pub increase_preconditions: Vec<Precondition>,
    /// Preconditions of the rate-decrease claim (`low_strict ≥ 0.51`).
    pub decrease_preconditions: Vec<Precondition>,
}

/// Where the best offspring of one generation come from, for a parent at
/// distance `k` and rate `r`.
pub fn mc_winner_origin(n: u64, k: u64, r: f64, lambda: u64, samples: u64, seed: u64) -> Result<WinnerOrigin> {
    let subs = two_rate_subpopulations(n, r, lambda)?;
    let mut origin = mc_winner_origin_with(n, k, &subs, samples, seed)?;
    let ln_l = (lambda as f64).ln();
    let bounds = region_bounds(n, k).ok();
    origin.increase_preconditions = vec![
        pre("0 < k < n/2", bounds.is_some()),
        pre("k >= n/ln(lambda)", k as f64 >= n as f64 / ln_l),
        pre("r <= c1(k) ln(lambda)", bounds.is_some_and(|b| r <= b.c1 * ln_l)),
    ];
    origin.decrease_preconditions = vec![
        pre("0 < k < n/2", bounds.is_some()),
        pre("lambda >= 100", lambda >= 100),
        pre("r >= c2(k) ln(lambda)", bounds.is_some_and(|b| r >= b.c2 * ln_l)),
        pre("r <= n/4", r <= n as f64 / 4.0),
    ];
    Ok(origin)
}

/// [`mc_winner_origin`] with explicit subpopulations; index 0 is the low
/// rate, the last index the high rate. Preconditions are left empty.
pub fn mc_winner_origin_with(
    n: u64,
    k: u64,
    subs: &[Subpopulation],
    samples: u64,
    seed: u64,
) -> Result<WinnerOrigin> {
    if samples == 0 {
        return config_err("need at least one sample");
    }
    let high = subs.len() - 1;
    let counts = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 1, i));
            let g = sample_generation(k, n, subs, &mut rng)?;
            let low_only = g.best_counts.iter().skip(1).all(|&c| c == 0);
            Ok([
                u64::from(g.winner_subpopulation == high),
                u64::from(g.best_counts[high] > 0),
                u64::from(low_only),
            ])
        })
        .try_reduce(|| [0; 3], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]))?;
    let est = |c| wilson_interval(c, samples, DEFAULT_LEVEL);
    Ok(WinnerOrigin {
        high_wins: est(counts[0]),
        high_among_best: est(counts[1]),
        low_strict: est(counts[2]),
        increase_preconditions: Vec::new(),
        decrease_preconditions: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllWorse {
    pub estimate: MonteCarloEstimate,
    pub preconditions: Vec<Precondition>,
}

/// Probability that every offspring is strictly worse than the parent.
pub fn mc_all_worse(
    n: u64,
    k: u64,
    r: f64,
    lambda: u64,
    gamma: f64,
    samples: u64,
    seed: u64,
) -> Result<AllWorse> {
    if samples == 0 {
        return config_err("need at least one sample");
    }
    let subs = two_rate_subpopulations(n, r, lambda)?;
    let ln_l = (lambda as f64).ln();
    let bounds = region_bounds(n, k).ok();
    let preconditions = vec![
        pre("0 < k < n/2", bounds.is_some()),
        pre(
            "r >= 2(1+gamma) c2(k) ln(lambda)",
            bounds.is_some_and(|b| r >= 2.0 * (1.0 + gamma) * b.c2 * ln_l),
        ),
        pre("2r <= n", 2.0 * r <= n as f64),
    ];
    let hits = count_events(samples, seed, 2, |rng| {
        Ok(sample_generation(k, n, &subs, rng)?.best_distance > k)
    })?;
    Ok(AllWorse {
        estimate: wilson_interval(hits, samples, DEFAULT_LEVEL),
        preconditions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateHalving {
    pub estimate: MonteCarloEstimate,
    pub preconditions: Vec<Precondition>,
}

/// Probability that one generation plus the rate update moves the rate from
/// `r` to `clamp(r/2)`, for the two-rate controller with `F = 2`.
pub fn mc_rate_halving(n: u64, k: u64, r: f64, lambda: u64, samples: u64, seed: u64) -> Result<RateHalving> {
    let state = ControllerState::new(n as usize, 2.0, true, 2, Some(r))?;
    let subs = state.propose_rates(n as usize, lambda as usize)?;
    let estimate = mc_rate_halving_with(n, k, &state, &subs, samples, seed)?;
    let ln_l = (lambda as f64).ln();
    let preconditions = vec![
        pre("k <= n/lambda", k as f64 <= n as f64 / lambda as f64),
        pre("lambda >= 45", lambda >= 45),
        pre("4 <= r <= ln(lambda)/4", 4.0 <= r && r <= ln_l / 4.0),
    ];
    Ok(RateHalving {
        estimate,
        preconditions,
    })
}

/// [`mc_rate_halving`] with explicit controller state and subpopulations.
pub fn mc_rate_halving_with(
    n: u64,
    k: u64,
    state: &ControllerState,
    subs: &[Subpopulation],
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return config_err("need at least one sample");
    }
    let target = state.clamp(state.rate / state.update_factor);
    let hits = count_events(samples, seed, 3, |rng| {
        let g = sample_generation(k, n, subs, rng)?;
        let outcome = GenerationOutcome {
            winner_subpopulation: g.winner_subpopulation,
            best_fitness_distance: g.best_distance,
            improved: g.best_distance < k,
        };
        Ok(state.update_rate(&outcome, rng).rate == target)
    })?;
    Ok(wilson_interval(hits, samples, DEFAULT_LEVEL))
}

/// Exact law of the next rate given the winner, by enumerating the two coins.
pub fn rate_step_law(state: &ControllerState, winner: usize) -> Vec<(f64, f64)> {
    let mut law: Vec<(f64, f64)> = Vec::new();
    let mut add = |rate: f64, prob: f64| match law.iter_mut().find(|(r, _)| *r == rate) {
        Some(entry) => entry.1 += prob,
        None => law.push((rate, prob)),
    };
    let follow = state.clamp(state.rate * state.winner_factor(winner));
    let up = state.clamp(state.rate * state.update_factor);
    let down = state.clamp(state.rate / state.update_factor);
    if state.random_steps {
        add(follow, 0.5);
        add(up, 0.25);
        add(down, 0.25);
    } else {
        add(follow, 1.0);
    }
    law
}

/// Claims the `verify` command knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    /// Far region, small rate: the `2r` subpopulation usually wins.
    FarIncrease,
    /// Far region, large rate: all best offspring usually come from `r/2`.
    FarDecrease,
    /// Far region, very large rate: all offspring are usually worse.
    FarWorse,
    /// Near region: the rate usually halves.
    NearRegion,
    /// Middle region drift lower bound `min{1/8, √λ k/(32n)}`.
    MiddleDrift,
    /// Far region drift lower bound `10⁻³ ln λ / ln(en/k)`.
    FarDrift,
}

impl Claim {
    pub const ALL: [Claim; 6] = [
        Claim::FarIncrease,
        Claim::FarDecrease,
        Claim::FarWorse,
        Claim::NearRegion,
        Claim::MiddleDrift,
        Claim::FarDrift,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Claim::FarIncrease => "far-increase",
            Claim::FarDecrease => "far-decrease",
            Claim::FarWorse => "far-worse",
            Claim::NearRegion => "near-region",
            Claim::MiddleDrift => "middle-drift",
            Claim::FarDrift => "far-drift",
        }
    }

    pub fn parse(s: &str) -> Option<Claim> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Whether the claim is Monte Carlo (sample count applies) or exact.
    pub fn is_sampled(&self) -> bool {
        !matches!(self, Claim::MiddleDrift | Claim::FarDrift)
    }
}

/// One row of the verifier report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub claim: String,
    pub params: String,
    pub preconditions_ok: bool,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub threshold: f64,
    /// Sampled claims pass when `ci_high ≥ threshold` (the threshold is not
    /// rejected at the 99% level); drift claims report the smallest ratio of
    /// exact drift to bound over their grid and pass when it is at least 1.
    pub pass: bool,
}

fn sampled_report(claim: Claim, params: String, pres: &[Precondition], est: MonteCarloEstimate, threshold: f64) -> VerifierReport {
    VerifierReport {
        claim: claim.name().to_string(),
        params,
        preconditions_ok: all_hold(pres),
        estimate: est.point_estimate,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        threshold,
        pass: est.ci_high >= threshold,
    }
}

/// Grid of the middle-region drift check: 5 distances log-spaced in
/// `[n/λ, n/ln λ]` times 4 rates evenly spaced in `[2, ln λ]`.
pub fn middle_drift_grid(n: u64, lambda: u64) -> Vec<(u64, f64)> {
    let ln_l = (lambda as f64).ln();
    let k_lo = (n as f64 / lambda as f64).ceil();
    let k_hi = (n as f64 / ln_l).floor();
    let mut grid = Vec::new();
    for a in 0..5 {
        let k = (k_lo * (k_hi / k_lo).powf(a as f64 / 4.0)).round().clamp(k_lo, k_hi) as u64;
        for b in 0..4 {
            grid.push((k, 2.0 + (ln_l - 2.0) * b as f64 / 3.0));
        }
    }
    grid
}

/// `min{1/8, √λ k/(32n)}`
pub fn middle_drift_bound(n: u64, k: u64, lambda: u64) -> f64 {
    (0.125f64).min((lambda as f64).sqrt() * k as f64 / (32.0 * n as f64))
}

/// Grid of the far-region drift check: 10 distances evenly spaced in
/// `[n/ln λ, 0.49 n]`, each at rate `c1(k) ln λ`.
pub fn far_drift_grid(n: u64, lambda: u64) -> Result<Vec<(u64, f64)>> {
    let ln_l = (lambda as f64).ln();
    let k_lo = (n as f64 / ln_l).ceil();
    let k_hi = (0.49 * n as f64).floor();
    (0..10)
        .map(|a| {
            let k = (k_lo + (k_hi - k_lo) * a as f64 / 9.0).round() as u64;
            Ok((k, region_bounds(n, k)?.c1 * ln_l))
        })
        .collect()
}

/// `10⁻³ ln λ / ln(en/k)`
pub fn far_drift_bound(n: u64, k: u64, lambda: u64) -> f64 {
    1e-3 * (lambda as f64).ln() / (std::f64::consts::E * n as f64 / k as f64).ln()
}

/// Smallest `exact_drift / bound` over a grid, with the point attaining it.
pub fn min_drift_ratio(
    n: u64,
    lambda: u64,
    grid: &[(u64, f64)],
    bound: impl Fn(u64) -> f64 + Sync,
) -> Result<(f64, u64, f64)> {
    grid.par_iter()
        .map(|&(k, r)| Ok((exact_drift(n, k, r, lambda)?.value / bound(k), k, r)))
        .collect::<Result<Vec<_>>>()
        .map(|v| {
            v.into_iter()
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("non-empty grid")
        })
}

/// Runs one claim at its default desk-scale parameters.
pub fn run_claim(claim: Claim, samples: Option<u64>, seed: u64) -> Result<VerifierReport> {
    let samples = samples.unwrap_or(10_000);
    match claim {
        Claim::FarIncrease => {
            let (n, lambda, r) = (100_000u64, 10_000u64, 2.0);
            let k = 49 * n / 100;
            let o = mc_winner_origin(n, k, r, lambda, samples, seed)?;
            Ok(sampled_report(
                claim,
                format!("n={n};k={k};lambda={lambda};r={r};samples={samples}"),
                &o.increase_preconditions,
                o.high_wins,
                0.64,
            ))
        }
        Claim::FarDecrease => {
            let (n, k, lambda, r) = (10_000u64, 1_000u64, 100u64, 64.0);
            let o = mc_winner_origin(n, k, r, lambda, samples, seed)?;
            Ok(sampled_report(
                claim,
                format!("n={n};k={k};lambda={lambda};r={r};samples={samples}"),
                &o.decrease_preconditions,
                o.low_strict,
                0.51,
            ))
        }
        Claim::FarWorse => {
            let (n, k, lambda, gamma) = (10_000u64, 1_000u64, 100u64, 1.0);
            let r = 2.0 * (1.0 + gamma) * region_bounds(n, k)?.c2 * (lambda as f64).ln();
            let w = mc_all_worse(n, k, r, lambda, gamma, samples, seed)?;
            Ok(sampled_report(
                claim,
                format!("n={n};k={k};lambda={lambda};gamma={gamma};r={r:.4};samples={samples}"),
                &w.preconditions,
                w.estimate,
                1.0 - (lambda as f64).powf(-gamma),
            ))
        }
        Claim::NearRegion => {
            let (n, k, lambda, r) = (1_000_000u64, 1u64, 1_000u64, 4.0);
            let h = mc_rate_halving(n, k, r, lambda, samples, seed)?;
            Ok(sampled_report(
                claim,
                format!("n={n};k={k};lambda={lambda};r={r};samples={samples}"),
                &h.preconditions,
                h.estimate,
                0.5099,
            ))
        }
        Claim::MiddleDrift => {
            let (n, lambda) = (10_000u64, 100u64);
            let grid = middle_drift_grid(n, lambda);
            let (ratio, k, r) = min_drift_ratio(n, lambda, &grid, |k| middle_drift_bound(n, k, lambda))?;
            Ok(drift_report(claim, n, lambda, grid.len(), ratio, k, r))
        }
        Claim::FarDrift => {
            let (n, lambda) = (100_000u64, 10_000u64);
            let grid = far_drift_grid(n, lambda)?;
            let (ratio, k, r) = min_drift_ratio(n, lambda, &grid, |k| far_drift_bound(n, k, lambda))?;
            Ok(drift_report(claim, n, lambda, grid.len(), ratio, k, r))
        }
    }
}

fn drift_report(claim: Claim, n: u64, lambda: u64, points: usize, ratio: f64, k: u64, r: f64) -> VerifierReport {
    VerifierReport {
        claim: claim.name().to_string(),
        params: format!("n={n};lambda={lambda};grid={points};argmin_k={k};argmin_r={r:.4}"),
        preconditions_ok: true,
        estimate: ratio,
        ci_low: ratio,
        ci_high: ratio,
        threshold: 1.0,
        pass: ratio >= 1.0,
    }
}
