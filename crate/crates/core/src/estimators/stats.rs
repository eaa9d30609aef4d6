//! Interval estimates and the log-linear rate fit.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0).min(phat) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0).max(phat) };
    (lo, hi)
}

/// Monte Carlo estimate of a connection probability.
///
/// `samples_per_trial` is 1 for a single event. For sphere-averaged
/// estimates each trial contributes one indicator per sphere vertex, the
/// interval then comes from the spread of the per-trial totals rather than
/// from the binomial law, since the indicators of one trial are dependent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub trials: u64,
    pub hits: u64,
    pub samples_per_trial: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn binomial(hits: u64, trials: u64, z: f64) -> Self {
        let mean = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let (ci_low, ci_high) = wilson(hits, trials, z);
        let std_error = if trials == 0 { 0.0 } else { (mean * (1.0 - mean) / trials as f64).sqrt() };
        Estimate { mean, trials, hits, samples_per_trial: 1, ci_low, ci_high, std_error }
    }

    /// From per-trial totals with the given sum and sample variance of the
    /// trial mean (already divided by `trials`).
    pub fn pooled(hits: u64, trials: u64, samples_per_trial: u64, var_of_mean: f64, z: f64) -> Self {
        if samples_per_trial == 1 {
            return Self::binomial(hits, trials, z);
        }
        let scale = samples_per_trial as f64;
        let mean = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 / scale };
        let std_error = var_of_mean.max(0.0).sqrt() / scale;
        let (ci_low, ci_high) = if hits == 0 {
            // The fraction of hit sphere vertices never exceeds the
            // probability that any is hit, whose Wilson bound applies.
            (0.0, wilson(0, trials, z).1)
        } else {
            ((mean - z * std_error).max(0.0), (mean + z * std_error).min(1.0))
        };
        Estimate { mean, trials, hits, samples_per_trial, ci_low, ci_high, std_error }
    }

    /// Standard deviation of the estimate for 3σ comparisons.
    pub fn sigma(&self) -> f64 {
        self.std_error
    }
}

/// Estimate of an expectation with a normal interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MeanEstimate {
    pub fn new(mean: f64, var_of_mean: f64, trials: u64, z: f64) -> Self {
        let std_error = var_of_mean.max(0.0).sqrt();
        MeanEstimate { mean, std_error, trials, ci_low: mean - z * std_error, ci_high: mean + z * std_error }
    }
}

/// Least-squares slope of `ln y_i` against `x_i` with a delta-method
/// variance from the covariance of the `y_i`.
pub(crate) struct LogFit {
    pub slope: f64,
    pub std_error: f64,
}

pub(crate) fn log_slope(x: &[f64], y: &[f64], cov: &[Vec<f64>]) -> Option<LogFit> {
    let k = x.len();
    if k < 2 || y.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let xbar = x.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|v| (v - xbar) * (v - xbar)).sum();
    let c: Vec<f64> = x.iter().map(|v| (v - xbar) / sxx).collect();
    let slope = c.iter().zip(y).map(|(ci, yi)| ci * yi.ln()).sum();
    let mut var = 0.0;
    for i in 0..k {
        for j in 0..k {
            var += c[i] * c[j] * cov[i][j] / (y[i] * y[j]);
        }
    }
    Some(LogFit { slope, std_error: var.max(0.0).sqrt() })
}
