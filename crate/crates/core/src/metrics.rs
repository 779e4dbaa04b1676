//! Reconstruction quality and summary statistics.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Whisker factor for boxplot summaries.
pub const WHISKER: f64 = 1.5;

/// Relative reconstruction error `‖x - x̂‖₂ / ‖x‖₂` (a ratio, not percent).
pub fn prd<T: Scalar>(x: &DenseMatrix<T>, x_hat: &DenseMatrix<T>) -> Result<T> {
    prd_slices(x.as_slice(), x_hat.as_slice())
}

pub fn prd_slices<T: Scalar>(x: &[T], x_hat: &[T]) -> Result<T> {
    if x.len() != x_hat.len() {
        return Err(Error::shape(
            "prd",
            format!("{} vs {} samples", x.len(), x_hat.len()),
        ));
    }
    let reference = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    if reference.is_zero() {
        return Err(Error::UndefinedMetric("PRD of a zero reference signal"));
    }
    let err = x
        .iter()
        .zip(x_hat)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt();
    Ok(err / reference)
}

/// `n / N`.
pub fn compression_ratio(n: usize, n_signal: usize) -> Result<f64> {
    if n == 0 || n > n_signal {
        return Err(Error::Config(format!(
            "compression ratio needs 0 < n <= N, got n = {n}, N = {n_signal}"
        )));
    }
    Ok(n as f64 / n_signal as f64)
}

/// Measurement count for a compression ratio, rounded to the nearest
/// integer.
pub fn measurements_for_ratio(cr: f64, n_signal: usize) -> Result<usize> {
    if !(cr > 0.0 && cr <= 1.0) {
        return Err(Error::Config(format!("compression ratio {cr} outside (0, 1]")));
    }
    Ok(((cr * n_signal as f64).round() as usize).clamp(1, n_signal))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxplotSummary<T> {
    pub low: T,
    pub p25: T,
    pub median: T,
    pub p75: T,
    pub high: T,
    pub outliers: Vec<T>,
    pub w: T,
    pub count: usize,
}

/// Percentile `q` in `[0, 1]` of ascending `sorted`, linearly interpolated
/// between closest ranks at position `q (n - 1)`.
pub fn percentile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    assert!(n > 0);
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Five-number boxplot summary with whiskers at `P25 - 1.5 IQR` and
/// `P75 + 1.5 IQR`; values outside the whiskers are outliers.
pub fn boxplot_stats<T: Scalar>(values: &[T]) -> Result<BoxplotSummary<T>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("boxplot of non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let p25 = percentile_sorted(&sorted, 0.25);
    let median = percentile_sorted(&sorted, 0.5);
    let p75 = percentile_sorted(&sorted, 0.75);
    let w = T::lit(WHISKER);
    let iqr = p75 - p25;
    let low = p25 - w * iqr;
    let high = p75 + w * iqr;
    let outliers = values
        .iter()
        .copied()
        .filter(|&v| v < low || v > high)
        .collect();
    Ok(BoxplotSummary {
        low,
        p25,
        median,
        p75,
        high,
        outliers,
        w,
        count: values.len(),
    })
}
