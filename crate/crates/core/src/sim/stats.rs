//! Batch-means output analysis.

use alloc::vec::Vec;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{domain, Result};

/// Two-sided confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.90;

/// Point estimate with a 90% confidence half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub ci_half_width: f64,
    pub batches: usize,
    pub events_per_batch: usize,
    pub warmup: usize,
    pub batch_means: Vec<f64>,
}

impl SimEstimate {
    pub fn contains(&self, value: f64) -> bool {
        libm::fabs(value - self.mean) <= self.ci_half_width
    }

    /// The two intervals share at least one point.
    pub fn overlaps(&self, other: &SimEstimate) -> bool {
        libm::fabs(self.mean - other.mean) <= self.ci_half_width + other.ci_half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_half_width
    }
}

/// Student-t quantile for a two-sided interval on `batches - 1` degrees of freedom.
pub fn t_quantile(batches: usize) -> Result<f64> {
    if batches < 2 {
        return Err(domain!(
            "batch means need at least two batches, got {batches}"
        ));
    }
    let t =
        StudentsT::new(0.0, 1.0, (batches - 1) as f64).map_err(|e| domain!("Student-t: {e}"))?;
    Ok(t.inverse_cdf(0.5 + CONFIDENCE / 2.0))
}

/// Mean of the batch means with its Student-t half-width.
pub fn batch_means(
    batch_means: Vec<f64>,
    events_per_batch: usize,
    warmup: usize,
) -> Result<SimEstimate> {
    let b = batch_means.len();
    let t = t_quantile(b)?;
    let n = b as f64;
    let mean = batch_means.iter().sum::<f64>() / n;
    let var = batch_means
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0);
    Ok(SimEstimate {
        mean,
        ci_half_width: t * libm::sqrt(var / n),
        batches: b,
        events_per_batch,
        warmup,
        batch_means,
    })
}
