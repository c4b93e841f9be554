//! The (1+λ) EA generation loop on OneMax.
//!
//! The default [`Kernel::Delta`] never builds offspring: each one is a
//! [`MutationDelta`] drawn from two binomials, and only the selected
//! offspring is materialized by flipping uniformly chosen one- and zero-bits
//! of the parent. [`Kernel::BitLevel`] mutates full bit strings and serves as
//! the reference implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Controller, ControllerSpec, GenerationOutcome, Subpopulation};
use crate::error::{config_err, domain_err, Result};
use crate::mutation::{mutate, DeltaSampler, MutationDelta};
use crate::point::{onemax, random_search_point, SearchPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Delta,
    BitLevel,
}

/// Run parameters shared by every controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EAConfig {
    pub n: usize,
    pub lambda: usize,
    /// Generation budget; `None` uses [`default_budget`].
    pub budget: Option<u64>,
    pub kernel: Kernel,
    pub trajectory: bool,
}

impl EAConfig {
    pub fn new(n: usize, lambda: usize) -> Result<Self> {
        if n == 0 {
            return config_err("problem size n must be at least 1");
        }
        if lambda < 2 {
            return config_err(format!("lambda = {lambda} must be at least 2"));
        }
        Ok(Self {
            n,
            lambda,
            budget: None,
            kernel: Kernel::Delta,
            trajectory: false,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_trajectory(mut self, on: bool) -> Self {
        self.trajectory = on;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or_else(|| default_budget(self.n, self.lambda))
    }
}

/// `⌈100 · (n ln n / λ + n)⌉` generations.
pub fn default_budget(n: usize, lambda: usize) -> u64 {
    let n_f = n as f64;
    (100.0 * (n_f * n_f.ln() / lambda as f64 + n_f)).ceil() as u64
}

/// A search point with its one- and zero-positions indexed, so that flipping
/// `a` random one-bits and `b` random zero-bits costs O(a + b).
#[derive(Debug, Clone)]
pub struct TrackedPoint {
    point: SearchPoint,
    ones: Vec<u32>,
    zeros: Vec<u32>,
}

impl TrackedPoint {
    pub fn new(point: SearchPoint) -> Self {
        let mut ones = Vec::new();
        let mut zeros = Vec::new();
        for (i, bit) in point.bits().enumerate() {
            if bit {
                ones.push(i as u32);
            } else {
                zeros.push(i as u32);
            }
        }
        Self { point, ones, zeros }
    }

    pub fn point(&self) -> &SearchPoint {
        &self.point
    }

    pub fn distance(&self) -> u64 {
        self.ones.len() as u64
    }

    /// Applies `delta` with uniformly random positions, conditional on the
    /// flip counts.
    pub fn apply<R: Rng + ?Sized>(&mut self, delta: MutationDelta, rng: &mut R) {
        let to_zero = take_random(&mut self.ones, delta.ones_flipped as usize, rng);
        let to_one = take_random(&mut self.zeros, delta.zeros_flipped as usize, rng);
        for &i in to_zero.iter().chain(&to_one) {
            self.point.flip(i as usize);
        }
        self.zeros.extend(to_zero);
        self.ones.extend(to_one);
    }
}

/// Removes `count` uniformly chosen elements (partial Fisher-Yates from the back).
fn take_random<R: Rng + ?Sized>(items: &mut Vec<u32>, count: usize, rng: &mut R) -> Vec<u32> {
    let len = items.len();
    assert!(count <= len, "cannot take {count} of {len}");
    for t in 0..count {
        let last = len - 1 - t;
        let j = rng.random_range(0..=last);
        items.swap(j, last);
    }
    items.split_off(len - count)
}

/// Result of creating and selecting among one generation of offspring in
/// delta space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationSample {
    pub best_distance: u64,
    pub winner_subpopulation: usize,
    pub winner_delta: MutationDelta,
    /// Number of offspring attaining `best_distance`, per subpopulation.
    pub best_counts: Vec<u64>,
}

/// Creates every offspring of one generation from a parent at distance `k`
/// and picks a best one uniformly at random among ties.
///
/// Ties are resolved by reservoir sampling in creation order: the `m`-th
/// offspring attaining the current minimum replaces the incumbent with
/// probability `1/m`.
pub fn sample_generation<R: Rng + ?Sized>(
    k: u64,
    n: u64,
    subpopulations: &[Subpopulation],
    rng: &mut R,
) -> Result<GenerationSample> {
    if subpopulations.iter().all(|s| s.size == 0) {
        return config_err("generation without offspring");
    }
    let mut best_distance = u64::MAX;
    let mut winner_subpopulation = 0;
    let mut winner_delta = MutationDelta::default();
    let mut ties = 0u64;
    let mut best_counts = vec![0u64; subpopulations.len()];
    for (index, sub) in subpopulations.iter().enumerate() {
        let sampler = DeltaSampler::new(k, n, sub.probability)?;
        for _ in 0..sub.size {
            let delta = sampler.sample(rng);
            let distance = delta.child_distance(k);
            if distance < best_distance {
                best_distance = distance;
                best_counts.iter_mut().for_each(|c| *c = 0);
                ties = 0;
            }
            if distance == best_distance {
                ties += 1;
                best_counts[index] += 1;
                if ties == 1 || rng.random_range(0..ties) == 0 {
                    winner_subpopulation = index;
                    winner_delta = delta;
                }
            }
        }
    }
    Ok(GenerationSample {
        best_distance,
        winner_subpopulation,
        winner_delta,
        best_counts,
    })
}

/// State of one run between generations.
#[derive(Debug, Clone)]
pub struct EAState {
    parent: TrackedPoint,
    pub controller: Controller,
    pub generation: u64,
    pub evaluations: u64,
}

impl EAState {
    pub fn new(parent: SearchPoint, controller: Controller) -> Self {
        Self {
            parent: TrackedPoint::new(parent),
            controller,
            generation: 0,
            evaluations: 0,
        }
    }

    pub fn parent(&self) -> &SearchPoint {
        self.parent.point()
    }

    pub fn parent_distance(&self) -> u64 {
        self.parent.distance()
    }

    /// Runs one generation: create offspring, select, update the rate.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        config: &EAConfig,
        rng: &mut R,
    ) -> Result<GenerationOutcome> {
        let k = self.parent_distance();
        if k == 0 {
            return domain_err("parent is already optimal");
        }
        let n = config.n;
        if self.parent.point().len() != n {
            return config_err("parent length does not match n");
        }
        let subs = self.controller.propose_rates(n, config.lambda, k)?;
        let (best_distance, winner_subpopulation) = match config.kernel {
            Kernel::Delta => {
                let sample = sample_generation(k, n as u64, &subs, rng)?;
                if sample.best_distance <= k {
                    self.parent.apply(sample.winner_delta, rng);
                }
                (sample.best_distance, sample.winner_subpopulation)
            }
            Kernel::BitLevel => {
                let (child, distance, winner) = best_offspring_bit_level(self.parent(), &subs, rng)?;
                if distance <= k {
                    self.parent = TrackedPoint::new(child);
                }
                (distance, winner)
            }
        };
        let outcome = GenerationOutcome {
            winner_subpopulation,
            best_fitness_distance: best_distance,
            improved: best_distance < k,
        };
        self.controller = self.controller.update_rate(&outcome, rng);
        self.generation += 1;
        self.evaluations += config.lambda as u64;
        Ok(outcome)
    }
}

fn best_offspring_bit_level<R: Rng + ?Sized>(
    parent: &SearchPoint,
    subs: &[Subpopulation],
    rng: &mut R,
) -> Result<(SearchPoint, u64, usize)> {
    let mut best: Option<(SearchPoint, u64, usize)> = None;
    let mut ties = 0u64;
    for (index, sub) in subs.iter().enumerate() {
        for _ in 0..sub.size {
            let child = mutate(parent, sub.probability, rng)?;
            let distance = onemax(&child) as u64;
            match &best {
                Some((_, d, _)) if distance > *d => continue,
                Some((_, d, _)) if distance == *d => {
                    ties += 1;
                    if rng.random_range(0..ties) != 0 {
                        continue;
                    }
                }
                _ => ties = 1,
            }
            best = Some((child, distance, index));
        }
    }
    best.ok_or_else(|| crate::error::Error::Config("generation without offspring".into()))
}

/// One row of a trajectory: the state after `t` generations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: u64,
    pub k: u64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub generations: u64,
    pub evaluations: u64,
    pub hit_optimum: bool,
    pub final_distance: u64,
    /// Rate in effect during the last strictly improving generation.
    pub last_improving_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

/// Runs the EA from a uniformly random start until the optimum is found or
/// the budget is spent. Deterministic in `(config, spec, seed)`.
pub fn run_ea(config: &EAConfig, spec: &ControllerSpec, seed: u64) -> Result<RunRecord> {
    let controller = spec.build(config.n, config.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_search_point(config.n, &mut rng)?;
    let mut state = EAState::new(start, controller);
    let budget = config.budget();
    let rate_of = |s: &EAState| s.controller.current_rate(config.n, config.lambda, s.parent_distance());

    let mut trajectory = config.trajectory.then(|| {
        vec![TrajectoryPoint {
            t: 0,
            k: state.parent_distance(),
            r: rate_of(&state),
        }]
    });
    let mut last_improving_rate = None;
    while state.parent_distance() > 0 && state.generation < budget {
        let rate = rate_of(&state);
        let outcome = state.step(config, &mut rng)?;
        if outcome.improved {
            last_improving_rate = Some(rate);
        }
        if let Some(traj) = trajectory.as_mut() {
            traj.push(TrajectoryPoint {
                t: state.generation,
                k: state.parent_distance(),
                r: rate_of(&state),
            });
        }
    }
    Ok(RunRecord {
        seed,
        generations: state.generation,
        evaluations: state.evaluations,
        hit_optimum: state.parent_distance() == 0,
        final_distance: state.parent_distance(),
        last_improving_rate,
        trajectory,
    })
}
