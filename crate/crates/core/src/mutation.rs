//! Standard bit mutation.
//!
//! Two bit-level kernels are provided: [`mutate_per_bit`] draws one Bernoulli
//! per position, [`mutate`] draws the flip count from `Bin(n, p)` and then
//! picks that many distinct positions. For OneMax only the pair
//! (ones flipped, zeros flipped) matters, which [`sample_delta`] draws
//! directly in O(1) expected time per offspring.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{config_err, Result};
use crate::point::SearchPoint;

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return config_err(format!("mutation probability {p} outside [0, 1]"));
    }
    Ok(())
}

/// Reference kernel: each bit flips independently with probability `p`.
pub fn mutate_per_bit<R: Rng + ?Sized>(x: &SearchPoint, p: f64, rng: &mut R) -> Result<SearchPoint> {
    check_probability(p)?;
    let mut child = x.clone();
    for i in 0..x.len() {
        if rng.random_bool(p) {
            child.flip(i);
        }
    }
    Ok(child)
}

/// Two-stage kernel: flip count from `Bin(n, p)`, positions uniformly without
/// replacement.
pub fn mutate<R: Rng + ?Sized>(x: &SearchPoint, p: f64, rng: &mut R) -> Result<SearchPoint> {
    check_probability(p)?;
    let n = x.len();
    let flips = binomial(n as u64, p, rng) as usize;
    let mut child = x.clone();
    for i in index::sample(rng, n, flips) {
        child.flip(i);
    }
    Ok(child)
}

/// Change in fitness distance caused by one mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MutationDelta {
    /// One-bits turned into zero-bits (improving flips).
    pub ones_flipped: u64,
    /// Zero-bits turned into one-bits (worsening flips).
    pub zeros_flipped: u64,
}

impl MutationDelta {
    /// Fitness distance of the child of a parent at distance `k`.
    #[inline]
    pub fn child_distance(&self, k: u64) -> u64 {
        k - self.ones_flipped + self.zeros_flipped
    }

    /// Net improvement `X⁺ − X⁻` (negative when the child is worse).
    #[inline]
    pub fn improvement(&self) -> i64 {
        self.ones_flipped as i64 - self.zeros_flipped as i64
    }

    /// The delta that turns `parent` into `child`.
    pub fn between(parent: &SearchPoint, child: &SearchPoint) -> Self {
        let mut delta = Self::default();
        for (a, b) in parent.bits().zip(child.bits()) {
            match (a, b) {
                (true, false) => delta.ones_flipped += 1,
                (false, true) => delta.zeros_flipped += 1,
                _ => {}
            }
        }
        delta
    }
}

#[inline]
fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("validated binomial parameters")
        .sample(rng)
}

/// Draws [`MutationDelta`]s for a fixed parent distance and probability.
///
/// Building the two binomial samplers once per subpopulation keeps the
/// per-offspring cost to two draws.
#[derive(Debug, Clone)]
pub struct DeltaSampler {
    ones: Option<Binomial>,
    zeros: Option<Binomial>,
    ones_all: u64,
    zeros_all: u64,
}

impl DeltaSampler {
    pub fn new(k: u64, n: u64, p: f64) -> Result<Self> {
        check_probability(p)?;
        if k > n {
            return config_err(format!("fitness distance {k} exceeds n = {n}"));
        }
        let build = |trials: u64| -> (Option<Binomial>, u64) {
            if trials == 0 || p <= 0.0 {
                (None, 0)
            } else if p >= 1.0 {
                (None, trials)
            } else {
                (Some(Binomial::new(trials, p).expect("validated")), 0)
            }
        };
        let (ones, ones_all) = build(k);
        let (zeros, zeros_all) = build(n - k);
        Ok(Self {
            ones,
            zeros,
            ones_all,
            zeros_all,
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MutationDelta {
        // Draw order is fixed: ones first, then zeros.
        let ones_flipped = match &self.ones {
            Some(b) => b.sample(rng),
            None => self.ones_all,
        };
        let zeros_flipped = match &self.zeros {
            Some(b) => b.sample(rng),
            None => self.zeros_all,
        };
        MutationDelta {
            ones_flipped,
            zeros_flipped,
        }
    }
}

/// One mutation of a parent at distance `k` in delta space:
/// `X⁺ ~ Bin(k, p)` and `X⁻ ~ Bin(n − k, p)`, independent.
pub fn sample_delta<R: Rng + ?Sized>(k: u64, n: u64, p: f64, rng: &mut R) -> Result<MutationDelta> {
    Ok(DeltaSampler::new(k, n, p)?.sample(rng))
}
