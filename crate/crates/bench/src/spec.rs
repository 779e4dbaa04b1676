use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Window length used to cut CSV recordings into segments.
pub const SEGMENT_SECONDS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gap,
    Sgap,
    Ommp,
    Sommp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Gap, Algorithm::Sgap, Algorithm::Ommp, Algorithm::Sommp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gap => "gap",
            Algorithm::Sgap => "sgap",
            Algorithm::Ommp => "ommp",
            Algorithm::Sommp => "sommp",
        }
    }

    /// Whether the algorithm reconstructs all channels in one call.
    pub fn is_joint(self) -> bool {
        matches!(self, Algorithm::Sgap | Algorithm::Sommp)
    }

    pub fn is_cosparse(self) -> bool {
        matches!(self, Algorithm::Gap | Algorithm::Sgap)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| BenchError::Config(format!("unknown algorithm '{s}' (gap, sgap, ommp, sommp)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputSpec {
    Csv(PathBuf),
    /// Piecewise-linear segments sharing one co-support across channels.
    Synthetic {
        n_signal: usize,
        segments: usize,
        channels: usize,
        cosupport: usize,
    },
}

impl FromStr for InputSpec {
    type Err = BenchError;

    /// `synth:<N>,<segments>,<channels>,<cosupport>` or a CSV path.
    fn from_str(s: &str) -> Result<Self> {
        let Some(body) = s.strip_prefix("synth:") else {
            return Ok(InputSpec::Csv(PathBuf::from(s)));
        };
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        let bad = || BenchError::Config(format!("synthetic input '{s}' is not synth:<N>,<segments>,<channels>,<cosupport>"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut v = [0usize; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| bad())?;
        }
        Ok(InputSpec::Synthetic {
            n_signal: v[0],
            segments: v[1],
            channels: v[2],
            cosupport: v[3],
        })
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::Csv(p) => write!(f, "{}", p.display()),
            InputSpec::Synthetic { n_signal, segments, channels, cosupport } => {
                write!(f, "synth:{n_signal},{segments},{channels},{cosupport}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub cr_grid: Vec<f64>,
    pub input: InputSpec,
    pub seed: u64,
    /// Co-support elements removed per GAP/SGAP iteration.
    pub t: usize,
    pub lambda: f64,
    pub atoms_per_iter: usize,
    /// Relative residual at which OMMP/SOMMP stop.
    pub residual_tol: f64,
    /// Daubechies filter length for the OMMP/SOMMP basis.
    pub wavelet_order: usize,
    pub output_path: PathBuf,
    /// Report PRD in percent instead of as a ratio.
    pub percent_prd: bool,
    /// Draw a fresh φ for every segment instead of one per ratio.
    pub per_segment_phi: bool,
}

impl ExperimentSpec {
    pub fn new(algorithm: Algorithm, input: InputSpec, cr_grid: Vec<f64>) -> Self {
        ExperimentSpec {
            algorithm,
            cr_grid,
            input,
            seed: 0,
            t: 10,
            lambda: 0.05,
            atoms_per_iter: 4,
            residual_tol: 1e-4,
            wavelet_order: 4,
            output_path: PathBuf::from("results"),
            percent_prd: false,
            per_segment_phi: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.cr_grid.is_empty() {
            return fail("empty compression-ratio grid".into());
        }
        if let Some(cr) = self.cr_grid.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
            return fail(format!("compression ratio {cr} outside (0, 1]"));
        }
        if self.t == 0 || self.atoms_per_iter == 0 {
            return fail("t and atoms-per-iter must be positive".into());
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return fail(format!("residual tolerance must be positive, got {}", self.residual_tol));
        }
        match &self.input {
            InputSpec::Csv(p) if !p.is_file() => fail(format!("input file {} does not exist", p.display())),
            InputSpec::Synthetic { n_signal, channels, cosupport, .. } => {
                if *channels == 0 || *n_signal < 3 || *cosupport + 2 > *n_signal {
                    return fail(format!("infeasible synthetic input {}", self.input));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
