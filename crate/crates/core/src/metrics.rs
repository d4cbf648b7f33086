//! Rate and fairness metrics of an allocation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Allocation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no values")]
    Empty,
    #[error("all values are zero; the Jain index is undefined")]
    AllZero,
    #[error("value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("baseline minimum rate is zero; cannot normalize")]
    ZeroBaseline,
    #[error("allocation covers {got} pairs but the baseline covers {expected}")]
    Mismatch { got: usize, expected: usize },
}

/// Jain fairness index `(sum x)^2 / (r sum x^2)`, in `[1/r, 1]`.
pub fn jain_index(values: &[f64]) -> Result<f64, MetricsError> {
    check(values)?;
    // scale by the maximum so tiny or huge rates do not under/overflow
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(MetricsError::AllZero);
    }
    let (sum, sq) = values.iter().fold((0.0, 0.0), |(s, q), &v| {
        let x = v / max;
        (s + x, q + x * x)
    });
    Ok((sum * sum / (values.len() as f64 * sq)).min(1.0))
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Result<f64, MetricsError> {
    check(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn check(values: &[f64]) -> Result<(), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MetricsError::InvalidValue(bad));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub min_rate: f64,
    pub median_rate: f64,
    /// Minimum rate relative to the baseline's minimum.
    pub normalized_min: f64,
    pub jain: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "min_rate,median_rate,normalized_min,jain";

    pub fn csv_fields(&self) -> String {
        format!("{},{},{},{}", self.min_rate, self.median_rate, self.normalized_min, self.jain)
    }
}

/// Metrics of `allocation`, normalized against `baseline` (normally the
/// round-robin allocation of the same instance).
pub fn report(allocation: &Allocation, baseline: &Allocation) -> Result<MetricsReport, MetricsError> {
    report_received(allocation.received(), baseline.received())
}

pub fn report_received(received: &[f64], baseline: &[f64]) -> Result<MetricsReport, MetricsError> {
    if received.len() != baseline.len() {
        return Err(MetricsError::Mismatch { got: received.len(), expected: baseline.len() });
    }
    check(baseline)?;
    let min_rate = received.iter().copied().fold(f64::INFINITY, f64::min);
    let base_min = baseline.iter().copied().fold(f64::INFINITY, f64::min);
    let median_rate = median(received)?;
    let jain = jain_index(received)?;
    if base_min == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(MetricsReport { min_rate, median_rate, normalized_min: min_rate / base_min, jain })
}

/// Jain index over the max-min rate obtained at each candidate source
/// location. Lower values mean the choice of source matters more.
pub fn source_importance(maxmin_by_source: &[f64]) -> Result<f64, MetricsError> {
    jain_index(maxmin_by_source)
}
