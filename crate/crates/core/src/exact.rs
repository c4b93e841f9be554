//! Exact transition law of one standard bit mutation on OneMax.
//!
//! A parent at fitness distance `k` produces a child at distance
//! `k − X⁺ + X⁻` with `X⁺ ~ Bin(k, p)` and `X⁻ ~ Bin(n − k, p)`, `p = r/n`.
//! [`exact_point_prob`] evaluates the closed-form sum over `X⁻` directly;
//! [`ExactDistribution`] convolves the two binomial laws to get every
//! point at once. The two routes are independent and are cross-checked in
//! tests.

use crate::error::{config_err, Result};
use crate::numeric::{ln_choose, mul_log, CompensatedSum};

/// `ln(1e300)`: terms smaller than the running maximum by this much are dropped.
const LN_TRUNCATION: f64 = 690.775_527_898_213_7;

fn validate(n: u64, k: u64, r: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return config_err("problem size n must be at least 1");
    }
    if k > n {
        return config_err(format!("fitness distance {k} exceeds n = {n}"));
    }
    if !(r > 0.0 && r <= n as f64) {
        return config_err(format!("rate {r} outside (0, n = {n}]"));
    }
    let p = r / n as f64;
    Ok((p.ln(), (-p).ln_1p()))
}

/// Probability and truncation bound of a point of the transition law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedProb {
    pub value: f64,
    /// Upper bound on the total mass of dropped terms.
    pub truncation_bound: f64,
}

/// Sums `exp(terms)` after dropping terms more than `1e-300` below the maximum.
fn sum_log_terms(terms: &[f64]) -> BoundedProb {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return BoundedProb {
            value: 0.0,
            truncation_bound: 0.0,
        };
    }
    let mut acc = CompensatedSum::default();
    let mut dropped = 0usize;
    for &t in terms {
        if t - max >= -LN_TRUNCATION {
            acc.add((t - max).exp());
        } else if t > f64::NEG_INFINITY {
            dropped += 1;
        }
    }
    let scale = max.exp();
    BoundedProb {
        value: acc.value() * scale,
        truncation_bound: dropped as f64 * scale * (-LN_TRUNCATION).exp(),
    }
}

/// `q(k, i, r)`: probability that the child has fitness distance exactly `k − i`.
///
/// Returns 0 for improvements outside `[−(n − k), k]`.
pub fn exact_point_prob_bounded(n: u64, k: u64, i: i64, r: f64) -> Result<BoundedProb> {
    let (ln_p, ln_q) = validate(n, k, r)?;
    let zeros = n - k;
    if i > k as i64 || i < -(zeros as i64) {
        return Ok(BoundedProb {
            value: 0.0,
            truncation_bound: 0.0,
        });
    }
    // j zero-bits and i + j one-bits flip.
    let j_min = (-i).max(0) as u64;
    let j_max = ((k as i64 - i) as u64).min(zeros);
    let terms: Vec<f64> = (j_min..=j_max)
        .map(|j| {
            let ones = (i + j as i64) as u64;
            let flips = ones + j;
            ln_choose(k, ones) + ln_choose(zeros, j) + mul_log(flips, ln_p) + mul_log(n - flips, ln_q)
        })
        .collect();
    Ok(sum_log_terms(&terms))
}

pub fn exact_point_prob(n: u64, k: u64, i: i64, r: f64) -> Result<f64> {
    exact_point_prob_bounded(n, k, i, r).map(|b| b.value)
}

/// `Q(k, i, r)`: probability that the child has fitness distance at most `k − i`.
pub fn exact_tail_prob(n: u64, k: u64, i: i64, r: f64) -> Result<f64> {
    Ok(ExactDistribution::new(n, k, r)?.tail(i))
}

/// Full law of the child's fitness distance for one mutation.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub n: u64,
    pub k: u64,
    pub rate: f64,
    /// `point_probs[d]` is the probability of child distance `d`, `0 ≤ d ≤ n`.
    pub point_probs: Vec<f64>,
    cdf: Vec<f64>,
    /// Upper bound on probability mass lost to truncation.
    pub truncation_bound: f64,
}

/// Linear-space binomial pmf restricted to the non-negligible support.
struct TruncatedPmf {
    offset: u64,
    probs: Vec<f64>,
    truncation_bound: f64,
}

fn binomial_pmf(trials: u64, ln_p: f64, ln_q: f64) -> TruncatedPmf {
    let logs: Vec<f64> = (0..=trials)
        .map(|a| ln_choose(trials, a) + mul_log(a, ln_p) + mul_log(trials - a, ln_q))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let keep = |t: f64| t > f64::NEG_INFINITY && t - max >= -LN_TRUNCATION;
    let lo = logs.iter().position(|&t| keep(t)).unwrap_or(0);
    let hi = logs.iter().rposition(|&t| keep(t)).unwrap_or(0);
    let dropped = logs.len() - (hi - lo + 1);
    TruncatedPmf {
        offset: lo as u64,
        probs: logs[lo..=hi].iter().map(|t| t.exp()).collect(),
        truncation_bound: dropped as f64 * (max - LN_TRUNCATION).exp(),
    }
}

impl ExactDistribution {
    pub fn new(n: u64, k: u64, r: f64) -> Result<Self> {
        let (ln_p, ln_q) = validate(n, k, r)?;
        let improving = binomial_pmf(k, ln_p, ln_q);
        let worsening = binomial_pmf(n - k, ln_p, ln_q);

        let mut acc = vec![CompensatedSum::default(); n as usize + 1];
        for (ai, &pa) in improving.probs.iter().enumerate() {
            let a = improving.offset + ai as u64;
            let base = (k - a) as usize + worsening.offset as usize;
            for (bi, &pb) in worsening.probs.iter().enumerate() {
                acc[base + bi].add(pa * pb);
            }
        }
        let point_probs: Vec<f64> = acc.iter().map(CompensatedSum::value).collect();
        let mut running = CompensatedSum::default();
        let cdf = point_probs
            .iter()
            .map(|&p| {
                running.add(p);
                running.value()
            })
            .collect();
        Ok(Self {
            n,
            k,
            rate: r,
            point_probs,
            cdf,
            truncation_bound: improving.truncation_bound + worsening.truncation_bound,
        })
    }

    /// `q(k, i, r)` read from the distribution.
    pub fn point(&self, i: i64) -> f64 {
        let d = self.k as i64 - i;
        if d < 0 || d > self.n as i64 {
            0.0
        } else {
            self.point_probs[d as usize]
        }
    }

    /// `Q(k, i, r)`: probability of child distance at most `k − i`.
    pub fn tail(&self, i: i64) -> f64 {
        let d = self.k as i64 - i;
        if d < 0 {
            0.0
        } else {
            self.cdf[(d as usize).min(self.n as usize)]
        }
    }

    pub fn total(&self) -> f64 {
        self.cdf[self.n as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Weighted enumeration of every flip mask over a parent `1^k 0^(n−k)`.
    fn enumerate(n: u64, k: u64, r: f64) -> Vec<f64> {
        let p = r / n as f64;
        let mut out = vec![0.0; n as usize + 1];
        for mask in 0u64..(1 << n) {
            let flips = mask.count_ones();
            let weight = p.powi(flips as i32) * (1.0 - p).powi(n as i32 - flips as i32);
            let ones_flipped = (mask & ((1 << k) - 1)).count_ones() as u64;
            let zeros_flipped = flips as u64 - ones_flipped;
            out[(k - ones_flipped + zeros_flipped) as usize] += weight;
        }
        out
    }

    #[test]
    fn two_bit_example() {
        let q = |i| exact_point_prob(2, 1, i, 1.0).unwrap();
        assert!((q(1) - 0.25).abs() < 1e-15);
        assert!((q(0) - 0.5).abs() < 1e-15);
        assert!((q(-1) - 0.25).abs() < 1e-15);
        assert_eq!(q(2), 0.0);
        assert_eq!(q(-2), 0.0);
    }

    #[test]
    fn matches_enumeration_n10() {
        let expected = enumerate(10, 4, 2.0);
        let dist = ExactDistribution::new(10, 4, 2.0).unwrap();
        for (d, &e) in expected.iter().enumerate() {
            let i = 4 - d as i64;
            assert!((exact_point_prob(10, 4, i, 2.0).unwrap() - e).abs() < 1e-10);
            assert!((dist.point(i) - e).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_is_sum_of_points() {
        let dist = ExactDistribution::new(10, 4, 2.0).unwrap();
        for i in -6..=5i64 {
            let direct: f64 = (i..=4).map(|j| exact_point_prob(10, 4, j, 2.0).unwrap()).sum();
            assert!((exact_tail_prob(10, 4, i, 2.0).unwrap() - direct).abs() < 1e-12);
            assert!((dist.tail(i) - direct).abs() < 1e-12);
        }
        assert_eq!(dist.tail(5), 0.0);
        assert!((dist.tail(-6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_rate_limit() {
        let r = 1e-9;
        assert!((exact_point_prob(50, 20, 0, r).unwrap() - 1.0).abs() < 1e-6);
        assert!(exact_point_prob(50, 20, 1, r).unwrap() < 1e-6);
        assert!(exact_point_prob(50, 20, -1, r).unwrap() < 1e-6);
    }

    #[test]
    fn full_rate_is_complement() {
        // p = 1 flips everything: distance k becomes n − k.
        let dist = ExactDistribution::new(9, 2, 9.0).unwrap();
        assert!((dist.point_probs[7] - 1.0).abs() < 1e-15);
        assert!((exact_point_prob(9, 2, -5, 9.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_arguments() {
        assert!(exact_point_prob(10, 11, 0, 1.0).is_err());
        assert!(exact_point_prob(10, 3, 0, 0.0).is_err());
        assert!(exact_point_prob(10, 3, 0, 11.0).is_err());
        assert!(ExactDistribution::new(0, 0, 1.0).is_err());
    }

    #[test]
    fn large_instance_is_normalized() {
        let dist = ExactDistribution::new(100_000, 49_000, 2.7).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-8);
        assert!(dist.truncation_bound < 1e-290);
    }
}
