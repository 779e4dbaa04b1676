//! Compressive-sensing reconstruction with the cosparse analysis model.
//!
//! The crate provides greedy analysis pursuit for single-channel signals
//! ([`gap`]) and its simultaneous multi-channel form ([`sgap`]), together
//! with synthesis-sparse matching pursuit baselines ([`ommp`], [`sommp`]),
//! the operators they need (difference analysis operators, seeded sensing
//! matrices, periodic Daubechies wavelet bases), quality metrics and data
//! ingestion for multi-channel ECG segments.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root pin the double-precision types used by the benchmark
//! harness.

pub mod dataio;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod operators;
pub mod reconstruction;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use reconstruction::{
    gap, ommp, residual_ratio, sgap, solve_estimate, sommp, GapConfig, PursuitConfig, RatioTest,
    ReconstructionResult, RowAggregation, SensingDictionary, StopReason,
};
pub use scalar::Scalar;

/// Double-precision dense matrix.
pub type Matrix = DenseMatrix<f64>;
/// Single-precision dense matrix.
pub type Matrix32 = DenseMatrix<f32>;
/// Double-precision analysis operator.
pub type AnalysisOperator = operators::AnalysisOperator<f64>;
/// Double-precision sensing matrix.
pub type MeasurementMatrix = operators::MeasurementMatrix<f64>;
/// Double-precision wavelet synthesis dictionary.
pub type SynthesisDictionary = operators::SynthesisDictionary<f64>;
/// Double-precision reconstruction output.
pub type Reconstruction = ReconstructionResult<f64>;
/// Double-precision GAP configuration.
pub type GapParams = GapConfig<f64>;
/// Double-precision ECG recording.
pub type EcgRecording = dataio::EcgRecording<f64>;
/// Double-precision signal segment.
pub type Segment = dataio::Segment<f64>;
/// Double-precision boxplot summary.
pub type BoxplotSummary = metrics::BoxplotSummary<f64>;
