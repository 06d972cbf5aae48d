//! Gaussian kernel density estimation on uniform grids.

use serde::Serialize;
use thiserror::Error;

/// Kernel contributions beyond this many bandwidths are below 1e-21 and
/// are skipped.
const KERNEL_REACH: f64 = 10.0;

/// Smallest bandwidth Silverman's rule may return.
pub const BANDWIDTH_FLOOR: f64 = 0.001;

/// Bandwidth used when the rule is undefined (fewer than two samples or no
/// spread).
pub const FALLBACK_BANDWIDTH: f64 = 0.010;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("bandwidth needs at least two samples with nonzero spread (got {count})")]
    DegenerateSamples { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// `len` points from `start` to `end` inclusive.
    pub fn spanning(start: f64, end: f64, len: usize) -> Self {
        let len = len.max(2);
        UniformGrid {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        }
    }

    pub fn position(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.position(i))
    }
}

/// Density sampled on a uniform grid, in 1/seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub grid_start: f64,
    pub grid_step: f64,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub sample_count: usize,
}

impl DensityCurve {
    pub fn zero(grid: UniformGrid, bandwidth: f64) -> Self {
        DensityCurve {
            grid_start: grid.start,
            grid_step: grid.step,
            values: vec![0.0; grid.len],
            bandwidth,
            sample_count: 0,
        }
    }

    pub fn grid(&self) -> UniformGrid {
        UniformGrid {
            start: self.grid_start,
            step: self.grid_step,
            len: self.values.len(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Grid position of the largest value (first one on ties).
    pub fn argmax(&self) -> Option<f64> {
        if self.is_zero() {
            return None;
        }
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        Some(self.grid().position(best))
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * self.grid_step)
            .sum()
    }
}

fn standard_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `f(x) = 1/(n h) * sum_i phi((x - s_i) / h)` at every grid point.
pub fn kde(samples: &[f64], bandwidth: f64, grid: UniformGrid) -> DensityCurve {
    let mut curve = DensityCurve::zero(grid, bandwidth);
    if samples.is_empty() || grid.len == 0 {
        return curve;
    }
    curve.sample_count = samples.len();
    let norm = 1.0 / (samples.len() as f64 * bandwidth);
    let reach = KERNEL_REACH * bandwidth;
    let last = grid.len as f64 - 1.0;
    for &s in samples {
        let (lo, hi) = if grid.step > 0.0 {
            (
                ((s - reach - grid.start) / grid.step).ceil().max(0.0),
                ((s + reach - grid.start) / grid.step).floor().min(last),
            )
        } else {
            (0.0, last)
        };
        if hi < lo {
            continue;
        }
        for i in lo as usize..=hi as usize {
            let z = (grid.position(i) - s) / bandwidth;
            curve.values[i] += norm * standard_normal_pdf(z);
        }
    }
    curve
}

/// `0.9 * min(sd, iqr / 1.34) * n^(-1/5)` with the 1 ms floor.
pub fn silverman_rule(sd: f64, iqr: f64, n: usize) -> f64 {
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * (n as f64).powf(-0.2)).max(BANDWIDTH_FLOOR)
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb with the sample standard deviation. When the
/// interquartile range is zero but the data still spread, the standard
/// deviation alone is used.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64, StatsError> {
    let n = samples.len();
    if n < 2 {
        return Err(StatsError::DegenerateSamples { count: n });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(StatsError::DegenerateSamples { count: n });
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    Ok(silverman_rule(sd, iqr, n))
}

/// Silverman bandwidth, or [`FALLBACK_BANDWIDTH`] when it is undefined.
pub fn bandwidth_or_fallback(samples: &[f64]) -> f64 {
    silverman_bandwidth(samples).unwrap_or(FALLBACK_BANDWIDTH)
}
