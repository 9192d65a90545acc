//! Streaming statistics, histograms, and distribution-fit utilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Welford-style running mean/variance with deterministic merging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        Self::new()
    }
}

impl RunningStats {
    pub fn new() -> Self {
        RunningStats { count: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        let delta2 = value - self.mean;
        self.m2 += delta * delta2;
        self.min = self.min.min(value);
        self.max = self.max.max(value);
    }

    /// Chan et al. parallel combination; exact up to rounding, so merge
    /// order only matters at the 1e-16 level.
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let na = self.count as f64;
        let nb = other.count as f64;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / (na + nb);
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / (na + nb);
        RunningStats { count, mean, m2, min: self.min.min(other.min), max: self.max.max(other.max) }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn se_mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev() / (self.count as f64).sqrt()
        }
    }

    /// Normal-theory standard error of the standard deviation,
    /// SE(s) ≈ s/√(2(R−1)); adequate for R ≥ 1e4.
    pub fn se_std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.std_dev() / (2.0 * (self.count - 1) as f64).sqrt()
        }
    }
}

/// Bin spacing for histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinScale {
    Linear,
    Log,
}

/// Fixed-edge histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Build from samples with edges derived from the observed range.
    ///
    /// In log scale the low edge is the smallest positive sample and any
    /// non-positive samples land in the first bin, so ∑counts = len(samples)
    /// always holds.
    pub fn from_samples(samples: &[f64], bins: usize, scale: BinScale) -> Result<Histogram> {
        if bins < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("cannot histogram an empty sample".into()));
        }
        let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = match scale {
            BinScale::Linear => samples.iter().cloned().fold(f64::INFINITY, f64::min),
            BinScale::Log => {
                let mp = samples.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
                if !mp.is_finite() || max <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "log-scale histogram needs positive samples".into(),
                    ));
                }
                mp
            }
        };
        let (lo, hi) = if min == max {
            // Degenerate range: widen symmetrically so edges stay strictly increasing.
            let pad = if min == 0.0 { 0.5 } else { min.abs() * 1e-9 };
            (min - pad, max + pad)
        } else {
            (min, max)
        };
        let edges: Vec<f64> = match scale {
            BinScale::Linear => {
                (0..=bins).map(|b| lo + (hi - lo) * b as f64 / bins as f64).collect()
            }
            BinScale::Log => {
                let (llo, lhi) = (lo.max(f64::MIN_POSITIVE).ln(), hi.ln());
                (0..=bins).map(|b| (llo + (lhi - llo) * b as f64 / bins as f64).exp()).collect()
            }
        };
        let mut counts = vec![0u64; bins];
        for &v in samples {
            let pos = match scale {
                BinScale::Linear => (v - lo) / (hi - lo),
                BinScale::Log => {
                    if v <= lo {
                        0.0
                    } else {
                        (v.ln() - lo.ln()) / (hi.ln() - lo.ln())
                    }
                }
            };
            let bin = ((pos * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        Ok(Histogram { edges, counts, total: samples.len() as u64 })
    }

    /// Probability density of bin `b` (count / (total · width)).
    pub fn density(&self, b: usize) -> f64 {
        let width = self.edges[b + 1] - self.edges[b];
        self.counts[b] as f64 / (self.total as f64 * width)
    }
}

/// Maximum-likelihood log-normal fit of positive samples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogNormalFit {
    /// Mean of ln I.
    pub mu: f64,
    /// Population standard deviation of ln I.
    pub sigma: f64,
    /// Two-sided KS distance of the sample against the fitted CDF.
    pub ks_distance: f64,
    /// Number of samples used.
    pub used: usize,
    /// Non-positive samples dropped before fitting.
    pub excluded: usize,
}

/// MLE fit of a log-normal; the density carries exp(−(ln I − μ)²/(2σ²))
/// (normalizable sign convention).
pub fn fit_lognormal(samples: &[f64]) -> Result<LogNormalFit> {
    let logs: Vec<f64> = samples.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).collect();
    let excluded = samples.len() - logs.len();
    if logs.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "log-normal fit needs at least 10 positive samples, got {}",
            logs.len()
        )));
    }
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::InvalidArgument(
            "log-normal fit degenerate: all samples equal (sigma = 0)".into(),
        ));
    }
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
    let sigma = var.sqrt();
    let mut sorted: Vec<f64> = samples.iter().filter(|&&v| v > 0.0).cloned().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = ks_statistic_sorted(&sorted, |v| normal_cdf((v.ln() - mu) / sigma));
    Ok(LogNormalFit { mu, sigma, ks_distance: ks, used: logs.len(), excluded })
}

/// Two-sided Kolmogorov-Smirnov statistic of an ascending sample against
/// a reference CDF.
pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Kahan-compensated sum.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let y = v - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    total
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // Series representation.
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - libm::lgamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - libm::lgamma(a)).exp() * h
}

/// Chi-square survival function (p-value), P[X ≥ x] with `df` degrees
/// of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    1.0 - gamma_p(df / 2.0, x / 2.0)
}
