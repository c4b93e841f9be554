use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Result};
use crate::exact::ExactDistribution;
use crate::numeric::CompensatedSum;

/// Rate multipliers bracketing the good rate range `[c1 ln λ, c2 ln λ]` in
/// the far region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    pub n: u64,
    pub k: u64,
    /// `(2 ln(en/k))⁻¹`
    pub c1: f64,
    /// `4n² / (n − 2k)²`
    pub c2: f64,
}

pub fn region_bounds(n: u64, k: u64) -> Result<RegionBounds> {
    if k == 0 || 2 * k >= n {
        return domain_err(format!("region bounds need 0 < k < n/2, got k = {k}, n = {n}"));
    }
    let n_f = n as f64;
    let k_f = k as f64;
    let c1 = 1.0 / (2.0 * (std::f64::consts::E * n_f / k_f).ln());
    let gap = n_f - 2.0 * k_f;
    Ok(RegionBounds {
        n,
        k,
        c1,
        c2: 4.0 * n_f * n_f / (gap * gap),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftValue {
    /// Expected one-generation decrease of the fitness distance.
    pub value: f64,
    /// Bound on the error caused by truncating negligible probability terms.
    pub truncation_bound: f64,
    /// Set when `truncation_bound` exceeds `1e-9 · value`.
    pub flagged: bool,
}

/// Expected progress `E(Δ | k)` of one generation of the two-rate scheme:
/// `λ/2` offspring at rate `r/2` and `λ/2` at `2r`, elitist selection.
///
/// Computed as `Σ_{i=1..k} [1 − (1 − Q(k,i,r/2))^{λ/2} (1 − Q(k,i,2r))^{λ/2}]`.
pub fn exact_drift(n: u64, k: u64, r: f64, lambda: u64) -> Result<DriftValue> {
    if lambda < 2 || !lambda.is_multiple_of(2) {
        return config_err(format!("lambda = {lambda} must be even and at least 2"));
    }
    if !(r > 0.0 && 2.0 * r <= n as f64) {
        return config_err(format!("rate {r} must satisfy 0 < 2r <= n = {n}"));
    }
    exact_drift_subpopulations(n, k, &[(lambda / 2, r / 2.0), (lambda / 2, 2.0 * r)])
}

/// `E(Δ | k)` for arbitrary `(size, rate)` subpopulations.
pub fn exact_drift_subpopulations(n: u64, k: u64, subpopulations: &[(u64, f64)]) -> Result<DriftValue> {
    if k > n {
        return config_err(format!("fitness distance {k} exceeds n = {n}"));
    }
    if k == 0 {
        return Ok(DriftValue {
            value: 0.0,
            truncation_bound: 0.0,
            flagged: false,
        });
    }
    let laws = subpopulations
        .iter()
        .map(|&(size, rate)| ExactDistribution::new(n, k, rate).map(|d| (size as f64, d)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = CompensatedSum::default();
    for i in 1..=k as i64 {
        // ln P(no offspring reaches distance ≤ k − i)
        let ln_none: f64 = laws
            .iter()
            .map(|(size, law)| size * (-law.tail(i).min(1.0)).ln_1p())
            .sum();
        let term = -ln_none.exp_m1();
        if term == 0.0 {
            break;
        }
        acc.add(term);
    }
    let value = acc.value();
    let truncation_bound = k as f64
        * laws
            .iter()
            .map(|(size, law)| size * law.truncation_bound)
            .sum::<f64>();
    Ok(DriftValue {
        value,
        truncation_bound,
        flagged: truncation_bound > 1e-9 * value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_tail_prob;

    #[test]
    fn bound_examples() {
        let b = region_bounds(1000, 400).unwrap();
        assert!((b.c2 - 100.0).abs() < 1e-9);
        let b = region_bounds(10_000, 1000).unwrap();
        assert!((b.c2 - 6.25).abs() < 1e-12);
        let b = region_bounds(100, 49).unwrap();
        assert!((b.c2 - 100.0 * 100.0).abs() < 1e-6);
        assert!(b.c1 > 0.0);
        assert!(region_bounds(100, 50).is_err());
        assert!(region_bounds(100, 0).is_err());
    }

    #[test]
    fn zero_at_optimum() {
        assert_eq!(exact_drift(100, 0, 2.0, 10).unwrap().value, 0.0);
    }

    #[test]
    fn lambda_two_by_direct_evaluation() {
        let (n, k) = (10, 3);
        let direct: f64 = (1..=3)
            .map(|i| {
                let lo = exact_tail_prob(n, k, i, 1.0).unwrap();
                let hi = exact_tail_prob(n, k, i, 4.0).unwrap();
                1.0 - (1.0 - lo) * (1.0 - hi)
            })
            .sum();
        let d = exact_drift(n, k, 2.0, 2).unwrap();
        assert!((d.value - direct).abs() < 1e-14);
        assert!(!d.flagged);
    }

    #[test]
    fn drift_within_zero_and_k() {
        for k in [1, 5, 20, 49] {
            for r in [2.0, 5.0, 25.0] {
                let d = exact_drift(100, k, r, 16).unwrap().value;
                assert!((0.0..=k as f64).contains(&d), "k={k} r={r} d={d}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(exact_drift(100, 10, 2.0, 3).is_err());
        assert!(exact_drift(100, 10, 60.0, 4).is_err());
        assert!(exact_drift(100, 101, 2.0, 4).is_err());
    }
}
