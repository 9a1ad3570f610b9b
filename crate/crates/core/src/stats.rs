//! Estimation helpers: streaming moments, confidence intervals and the two
//! goodness-of-fit tests used to check the point-process properties.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{invalid, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Welford accumulator. Merging is order-sensitive only through floating
/// point rounding, so callers reduce in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        *self = Moments { n, mean, m2 };
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (zero for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    /// Half-width of the normal-approximation 95% interval for the mean.
    pub fn ci95(&self) -> f64 {
        Z95 * self.std_error()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// A point estimate with its 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_halfwidth: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_moments(m: &Moments) -> Self {
        Estimate {
            value: m.mean(),
            ci_halfwidth: m.ci95(),
            samples: m.count(),
        }
    }

    /// Bernoulli proportion with the normal-approximation interval.
    pub fn proportion(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Estimate {
                value: 0.0,
                ci_halfwidth: 0.0,
                samples: 0,
            };
        }
        let p = successes as f64 / trials as f64;
        Estimate {
            value: p,
            ci_halfwidth: Z95 * (p * (1.0 - p) / trials as f64).sqrt(),
            samples: trials,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.ci_halfwidth
    }
}

/// Result of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: Option<usize>,
}

impl TestOutcome {
    /// `true` when the null hypothesis is not rejected at `significance`.
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson chi-square test of observed counts against `Poisson(mean)`.
///
/// Adjacent bins are pooled until every expected frequency is at least 5;
/// the last bin collects the upper tail.
pub fn poisson_chi_square(counts: &[u64], mean: f64) -> Result<TestOutcome> {
    if counts.is_empty() {
        return Err(invalid("chi-square test needs at least one count"));
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(invalid(format!("Poisson mean must be positive, got {mean}")));
    }
    let n = counts.len() as f64;
    let dist = Poisson::new(mean).map_err(|e| invalid(e.to_string()))?;
    let max_count = *counts.iter().max().unwrap_or(&0);

    // (upper edge inclusive, expected) for pooled bins covering 0..=k
    let mut edges: Vec<(u64, f64)> = Vec::new();
    let mut acc = 0.0;
    let mut k = 0u64;
    loop {
        acc += n * dist.pmf(k);
        let remaining = n * (1.0 - dist.cdf(k));
        if acc >= 5.0 {
            edges.push((k, acc));
            acc = 0.0;
        }
        if remaining < 5.0 || k > max_count.max(mean as u64) + 1000 {
            break;
        }
        k += 1;
    }
    // tail bin holds k+1.. plus any leftover mass
    let tail_expected = acc + n * (1.0 - dist.cdf(k));
    match edges.last_mut() {
        Some(last) if tail_expected < 5.0 => {
            last.0 = u64::MAX;
            last.1 += tail_expected;
        }
        _ => edges.push((u64::MAX, tail_expected)),
    }
    if edges.len() < 2 {
        return Err(invalid("too few pooled bins for a chi-square test"));
    }

    let mut observed = vec![0u64; edges.len()];
    for &c in counts {
        let idx = edges.partition_point(|&(edge, _)| edge < c);
        observed[idx.min(edges.len() - 1)] += 1;
    }
    let statistic: f64 = observed
        .iter()
        .zip(&edges)
        .map(|(&o, &(_, e))| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = edges.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(TestOutcome {
        statistic,
        p_value: 1.0 - chi.cdf(statistic),
        degrees_of_freedom: Some(dof),
    })
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS test needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(invalid("KS test samples contain NaN"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(TestOutcome {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        degrees_of_freedom: None,
    })
}

/// `P[K > lambda]` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments_match_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, -3.0, 0.5];
        let m: Moments = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_relative_eq!(m.mean(), mean, epsilon = 1e-14);
        assert_relative_eq!(m.variance(), var, epsilon = 1e-12);

        let mut left: Moments = xs[..2].iter().copied().collect();
        let right: Moments = xs[2..].iter().copied().collect();
        left.merge(&right);
        assert_relative_eq!(left.mean(), mean, epsilon = 1e-14);
        assert_relative_eq!(left.variance(), var, epsilon = 1e-12);
    }

    #[test]
    fn proportion_interval() {
        let e = Estimate::proportion(25, 100);
        assert_relative_eq!(e.value, 0.25);
        assert_relative_eq!(e.ci_halfwidth, Z95 * (0.25f64 * 0.75 / 100.0).sqrt());
        assert!(e.contains(0.3));
        assert!(!e.contains(0.4));
    }

    #[test]
    fn kolmogorov_known_points() {
        // K(1.36) ~ 0.95, K(1.63) ~ 0.99
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn ks_identical_samples_pass() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let out = ks_two_sample(&a, &a).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert!(out.passes(0.01));
    }

    #[test]
    fn ks_shifted_samples_fail() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        assert!(!ks_two_sample(&a, &b).unwrap().passes(0.01));
    }

    #[test]
    fn chi_square_rejects_wrong_mean() {
        // deterministic counts that look like Poisson(4) quantiles
        let dist = Poisson::new(4.0).unwrap();
        let counts: Vec<u64> = (0..2000)
            .map(|i| dist.inverse_cdf((i as f64 + 0.5) / 2000.0))
            .collect();
        assert!(poisson_chi_square(&counts, 4.0).unwrap().passes(0.01));
        assert!(!poisson_chi_square(&counts, 5.0).unwrap().passes(0.01));
    }
}
