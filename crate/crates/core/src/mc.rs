//! Generic Monte Carlo estimation with deterministic parallel reduction.
//!
//! Samples are evaluated on disjoint counter substreams (sample `i` uses
//! counter `i`), collected in counter order, and reduced by a fixed pairwise
//! tree. The result is bit-identical for any number of workers.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub confidence: f64,
}

impl MCEstimate {
    pub fn exact(value: f64) -> Self {
        MCEstimate {
            mean: value,
            std_error: 0.0,
            samples: 0,
            confidence: 1.0,
        }
    }

    /// `mean ± z(confidence) * std_error`.
    pub fn interval(&self) -> (f64, f64) {
        let z = z_value(self.confidence);
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }

    /// The estimate of `c * self + shift`.
    pub fn affine(&self, c: f64, shift: f64) -> Self {
        MCEstimate {
            mean: c * self.mean + shift,
            std_error: c.abs() * self.std_error,
            ..*self
        }
    }

    /// The estimate of `self + other` for independent estimates.
    pub fn add_independent(&self, other: &MCEstimate) -> Self {
        MCEstimate {
            mean: self.mean + other.mean,
            std_error: (self.std_error * self.std_error
                + other.std_error * other.std_error)
                .sqrt(),
            samples: self.samples.max(other.samples),
            confidence: self.confidence.min(other.confidence),
        }
    }

    /// The estimate of `self - other` for independent estimates.
    pub fn sub_independent(&self, other: &MCEstimate) -> Self {
        self.add_independent(&other.affine(-1.0, 0.0))
    }
}

/// Two-sided standard normal quantile for the given confidence level,
/// e.g. `z(0.95) = 1.96`.
pub fn z_value(confidence: f64) -> f64 {
    if confidence >= 1.0 {
        return f64::INFINITY;
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    normal.inverse_cdf(0.5 + confidence / 2.0)
}

/// Strict pairwise tree sum in slice order; independent of thread count.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { index: i, value: v });
        }
    }
    Ok(())
}

/// Mean and standard error of a fixed-order sample vector.
pub fn summarize(values: &[f64], confidence: f64) -> MCEstimate {
    let n = values.len();
    let mean = tree_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if n > 1 {
        tree_sum(&sq) / (n - 1) as f64
    } else {
        0.0
    };
    MCEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        samples: n,
        confidence,
    }
}

/// Runs `per_sample` on substream counters `0..samples` and summarizes.
pub fn mc_run<F>(
    samples: usize,
    confidence: f64,
    stream: &SeedStream,
    per_sample: F,
) -> Result<MCEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidValue {
            field: "samples",
            message: format!("need at least 2 samples, got {samples}"),
        });
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.with_counter(i as u64).rng();
            per_sample(&mut rng)
        })
        .collect();
    check_finite(&values)?;
    Ok(summarize(&values, confidence))
}

/// Vector-valued variant: `per_sample` returns `width` values per draw
/// (common random numbers across the components). Returns one estimate per
/// component plus one per adjacent-component increment, both computed from
/// the same underlying draws.
pub struct VecRun {
    pub components: Vec<MCEstimate>,
    pub increments: Vec<MCEstimate>,
}

pub fn mc_run_vec<F>(
    samples: usize,
    width: usize,
    confidence: f64,
    stream: &SeedStream,
    per_sample: F,
) -> Result<VecRun>
where
    F: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidValue {
            field: "samples",
            message: format!("need at least 2 samples, got {samples}"),
        });
    }
    let rows: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.with_counter(i as u64).rng();
            per_sample(&mut rng)
        })
        .collect();
    let mut column = vec![0.0; samples];
    let mut components = Vec::with_capacity(width);
    for k in 0..width {
        for (r, row) in rows.iter().enumerate() {
            column[r] = row[k];
        }
        check_finite(&column)?;
        components.push(summarize(&column, confidence));
    }
    let mut increments = Vec::with_capacity(width.saturating_sub(1));
    for k in 0..width.saturating_sub(1) {
        for (r, row) in rows.iter().enumerate() {
            column[r] = row[k + 1] - row[k];
        }
        increments.push(summarize(&column, confidence));
    }
    Ok(VecRun {
        components,
        increments,
    })
}

/// Variance estimate (the mean of squared deviations) with the asymptotic
/// standard error of the variance estimator itself.
pub fn mc_run_variance<F>(
    samples: usize,
    confidence: f64,
    stream: &SeedStream,
    per_sample: F,
) -> Result<MCEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidValue {
            field: "samples",
            message: format!("need at least 2 samples, got {samples}"),
        });
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.with_counter(i as u64).rng();
            per_sample(&mut rng)
        })
        .collect();
    check_finite(&values)?;
    let n = samples as f64;
    let mean = tree_sum(&values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let m2 = tree_sum(&sq) / n;
    let quads: Vec<f64> = sq.iter().map(|s| s * s).collect();
    let m4 = tree_sum(&quads) / n;
    let var_of_var = (m4 - m2 * m2).max(0.0) / n;
    Ok(MCEstimate {
        mean: m2 * n / (n - 1.0),
        std_error: var_of_var.sqrt(),
        samples,
        confidence,
    })
}
