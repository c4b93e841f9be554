use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{domain_err, Result};
use crate::numeric::compensated_sum;

/// Descriptive statistics of a sample.
///
/// Quartiles interpolate linearly between order statistics: quantile `q` of
/// `m` sorted values sits at position `q · (m − 1)`. `stddev` is the sample
/// standard deviation (divisor `m − 1`), 0 for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub stddev: f64,
}

impl Summary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    if samples.is_empty() {
        return domain_err("cannot summarize an empty sample");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = sorted.len();
    let mean = compensated_sum(sorted.iter().copied()) / count as f64;
    let stddev = if count > 1 {
        let ss = compensated_sum(sorted.iter().map(|x| (x - mean) * (x - mean)));
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        count,
        mean,
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        stddev,
    })
}

/// A probability estimate with a confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub point_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: u64,
    pub samples: u64,
    pub level: f64,
}

impl MonteCarloEstimate {
    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Wilson score interval for `successes` out of `samples` at two-sided
/// confidence `level`.
pub fn wilson_interval(successes: u64, samples: u64, level: f64) -> MonteCarloEstimate {
    assert!(samples > 0 && successes <= samples);
    assert!(level > 0.0 && level < 1.0);
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let m = samples as f64;
    let p = successes as f64 / m;
    let z2 = z * z;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = z * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt() / denom;
    MonteCarloEstimate {
        point_estimate: p,
        ci_low: (center - half).max(0.0).min(p),
        ci_high: (center + half).min(1.0).max(p),
        successes,
        samples,
        level,
    }
}

/// One-sided Welch t-test p-value for `H1: mean(a) < mean(b)`.
pub fn welch_less(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return domain_err("Welch test needs at least two samples per group");
    }
    let sa = summarize(a)?;
    let sb = summarize(b)?;
    let va = sa.stddev * sa.stddev / a.len() as f64;
    let vb = sb.stddev * sb.stddev / b.len() as f64;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if sa.mean < sb.mean { 0.0 } else { 1.0 });
    }
    let t = (sa.mean - sb.mean) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok(dist.cdf(t))
}

/// Upper tail of the chi-square distribution.
fn chi_square_p(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(statistic)
}

/// Merges adjacent cells until each pooled cell reaches `min_weight`
/// according to `weight`; a light tail joins the last cell.
fn pool_cells(len: usize, weight: impl Fn(usize) -> f64, min_weight: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    let mut acc = 0.0;
    for i in 0..len {
        current.push(i);
        acc += weight(i);
        if acc >= min_weight {
            groups.push(std::mem::take(&mut current));
            acc = 0.0;
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(current),
            None => groups.push(current),
        }
    }
    groups
}

/// Chi-square goodness-of-fit p-value of `observed` counts against
/// `probs`. Cells are pooled so every expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let m = total as f64;
    let groups = pool_cells(observed.len(), |i| probs[i] * m, 5.0);
    let statistic: f64 = groups
        .iter()
        .map(|g| {
            let o: u64 = g.iter().map(|&i| observed[i]).sum();
            let e: f64 = g.iter().map(|&i| probs[i]).sum::<f64>() * m;
            if e > 0.0 {
                (o as f64 - e).powi(2) / e
            } else {
                0.0
            }
        })
        .sum();
    chi_square_p(statistic, groups.len().saturating_sub(1))
}

/// Two-sample chi-square homogeneity p-value for histograms `a` and `b`
/// over the same cells. Cells are pooled to at least 10 combined counts.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    assert!(na > 0 && nb > 0);
    let groups = pool_cells(a.len(), |i| (a[i] + b[i]) as f64, 10.0);
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let mut statistic = 0.0;
    let mut used = 0usize;
    for g in &groups {
        let ga: u64 = g.iter().map(|&i| a[i]).sum();
        let gb: u64 = g.iter().map(|&i| b[i]).sum();
        if ga + gb == 0 {
            continue;
        }
        used += 1;
        statistic += (ka * ga as f64 - kb * gb as f64).powi(2) / (ga + gb) as f64;
    }
    chi_square_p(statistic, used.saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn five_point_summary() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.mean, s.median, s.q1, s.q3), (3.0, 3.0, 2.0, 4.0));
        assert!((s.stddev - 2.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_point_summary_interpolates() {
        let s = summarize(&[10.0, 20.0]).unwrap();
        assert_eq!((s.mean, s.q1, s.median, s.q3), (15.0, 12.5, 15.0, 17.5));
    }

    #[test]
    fn single_and_empty() {
        let s = summarize(&[7.0]).unwrap();
        assert_eq!((s.mean, s.q1, s.median, s.q3, s.stddev), (7.0, 7.0, 7.0, 7.0, 0.0));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn wilson_known_values() {
        // 50/100 at 95%: center 0.5, half-width 1.96·sqrt(.25/100 + 1.96²/40000)/(1 + 1.96²/100).
        let e = wilson_interval(50, 100, 0.95);
        assert!((e.ci_low - 0.403_831).abs() < 1e-4, "{e:?}");
        assert!((e.ci_high - 0.596_169).abs() < 1e-4);
        let edge = wilson_interval(0, 10, 0.99);
        assert_eq!(edge.ci_low, 0.0);
        assert!(edge.ci_high > 0.0);
        let full = wilson_interval(10, 10, 0.99);
        assert_eq!(full.ci_high, 1.0);
    }

    #[test]
    fn wilson_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reps = 1000;
        let covered = (0..reps)
            .filter(|_| {
                let hits = (0..500).filter(|_| rng.random_bool(0.3)).count() as u64;
                let e = wilson_interval(hits, 500, 0.99);
                e.ci_low <= 0.3 && 0.3 <= e.ci_high
            })
            .count();
        assert!(covered as f64 / reps as f64 >= 0.98, "coverage {covered}/{reps}");
    }

    #[test]
    fn welch_detects_shift() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| i as f64 + 20.0).collect();
        assert!(welch_less(&a, &b).unwrap() < 1e-6);
        assert!(welch_less(&b, &a).unwrap() > 0.999);
        assert!((welch_less(&a, &a).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_square_sanity() {
        assert!(chi_square_gof(&[250, 250, 250, 250], &[0.25; 4]) > 0.99);
        assert!(chi_square_gof(&[400, 200, 200, 200], &[0.25; 4]) < 1e-6);
        assert!(chi_square_two_sample(&[100, 200, 300], &[200, 400, 600]) > 0.99);
        assert!(chi_square_two_sample(&[300, 200, 100], &[100, 200, 300]) < 1e-6);
    }
}
