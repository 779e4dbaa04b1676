use std::collections::BTreeMap;

use cosparse::dataio::{load_csv, segment, synth_cosparse};
use cosparse::metrics::{measurements_for_ratio, prd};
use cosparse::operators::{
    daubechies_dictionary, default_levels, gaussian_measurement, orthogonal_measurement, second_order_diff,
};
use cosparse::{
    gap, ommp, sgap, sommp, AnalysisOperator, GapConfig, Matrix, MeasurementMatrix, PursuitConfig,
    Reconstruction, Segment, SensingDictionary, SynthesisDictionary,
};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::spec::{Algorithm, ExperimentSpec, InputSpec, SEGMENT_SECONDS};

/// One reconstructed channel of one segment at one compression ratio.
///
/// For joint algorithms every channel of a segment carries the wall time and
/// solve count of the single joint call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub segment: String,
    pub channel: usize,
    pub cr: f64,
    pub algorithm: Algorithm,
    pub prd: f64,
    pub iterations: usize,
    pub solve_count: usize,
    /// Seconds spent inside the reconstruction call.
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentFailure {
    pub segment: String,
    pub cr: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    /// Sorted by segment (input order), channel, then ratio.
    pub records: Vec<RunRecord>,
    pub failures: Vec<SegmentFailure>,
}

impl RunOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// SplitMix64 over the parts; used for every seed the runner derives.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x243f_6a88_85a3_08d3u64;
    for &p in parts {
        state = state.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        state = z ^ (z >> 31);
    }
    state
}

const PHI_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;

fn load_segments(spec: &ExperimentSpec) -> Result<Vec<Segment>> {
    match &spec.input {
        InputSpec::Csv(path) => Ok(segment(&load_csv::<f64>(path)?, SEGMENT_SECONDS)?),
        &InputSpec::Synthetic { n_signal, segments, channels, cosupport } => (0..segments)
            .map(|i| {
                let seed = derive_seed(&[spec.seed, SIGNAL_STREAM, i as u64]);
                let (mut seg, _) = synth_cosparse::<f64>(n_signal, cosupport, channels, true, seed)?;
                seg.subject_id = "synth".into();
                seg.index = i;
                Ok(seg)
            })
            .collect(),
    }
}

/// Gaussian when compressive, orthonormal rows at `n = N`.
fn sensing(n: usize, n_signal: usize, seed: u64) -> Result<MeasurementMatrix> {
    Ok(if n < n_signal {
        gaussian_measurement(n, n_signal, seed)?
    } else {
        orthogonal_measurement(n, n_signal, seed)?
    })
}

struct Operators {
    omega: AnalysisOperator,
    psi: Option<SynthesisDictionary>,
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    gap_cfg: GapConfig<f64>,
    pursuit_cfg: PursuitConfig<f64>,
    ops: BTreeMap<usize, Operators>,
    phis: BTreeMap<usize, (MeasurementMatrix, Option<SensingDictionary<f64>>)>,
}

impl Context<'_> {
    fn operators(&mut self, n_signal: usize) -> Result<&Operators> {
        if !self.ops.contains_key(&n_signal) {
            let omega = second_order_diff(n_signal)?;
            let psi = if self.spec.algorithm.is_cosparse() {
                None
            } else {
                Some(daubechies_dictionary(n_signal, self.spec.wavelet_order, default_levels(n_signal))?)
            };
            self.ops.insert(n_signal, Operators { omega, psi });
        }
        Ok(&self.ops[&n_signal])
    }

    fn build_phi(&self, n: usize, n_signal: usize, segment: usize) -> Result<(MeasurementMatrix, Option<SensingDictionary<f64>>)> {
        let seed = if self.spec.per_segment_phi {
            derive_seed(&[self.spec.seed, PHI_STREAM, n as u64, n_signal as u64, segment as u64 + 1])
        } else {
            derive_seed(&[self.spec.seed, PHI_STREAM, n as u64, n_signal as u64])
        };
        let phi = sensing(n, n_signal, seed)?;
        let dict = match &self.ops[&n_signal].psi {
            Some(psi) => Some(SensingDictionary::new(&phi, psi)?),
            None => None,
        };
        Ok((phi, dict))
    }

    fn reconstruct(&mut self, seg: &Segment, position: usize, cr: f64) -> Result<Vec<RunRecord>> {
        let n_signal = seg.n_signal;
        self.operators(n_signal)?;
        let n = measurements_for_ratio(cr, n_signal)?;
        let fresh;
        let (phi, dict) = if self.spec.per_segment_phi {
            fresh = self.build_phi(n, n_signal, position)?;
            (&fresh.0, fresh.1.as_ref())
        } else {
            if !self.phis.contains_key(&n) {
                let built = self.build_phi(n, n_signal, 0)?;
                self.phis.insert(n, built);
            }
            let (p, d) = &self.phis[&n];
            (p, d.as_ref())
        };
        let omega = &self.ops[&n_signal].omega;
        let y = phi.measure(&seg.data)?;
        let alg = self.spec.algorithm;

        let call = |y: &Matrix| -> Result<Reconstruction> {
            let dict = || dict.ok_or_else(|| BenchError::Config("missing synthesis dictionary".into()));
            Ok(match alg {
                Algorithm::Gap => gap(y, phi, omega, &self.gap_cfg)?,
                Algorithm::Sgap => sgap(y, phi, omega, &self.gap_cfg)?,
                Algorithm::Ommp => ommp(y, dict()?, &self.pursuit_cfg)?,
                Algorithm::Sommp => sommp(y, dict()?, &self.pursuit_cfg)?,
            })
        };
        let scale = if self.spec.percent_prd { 100.0 } else { 1.0 };
        let record = |channel: usize, est: &Matrix, r: &Reconstruction| -> Result<RunRecord> {
            Ok(RunRecord {
                segment: seg.id(),
                channel,
                cr,
                algorithm: alg,
                prd: scale * prd(&seg.data.column_matrix(channel), est)?,
                iterations: r.iterations,
                solve_count: r.solve_count,
                wall_time: r.wall_time.as_secs_f64(),
            })
        };

        let channels = seg.channels();
        let mut out = Vec::with_capacity(channels);
        if alg.is_joint() {
            let r = call(&y)?;
            for c in 0..channels {
                out.push(record(c, &r.estimate.column_matrix(c), &r)?);
            }
        } else {
            for c in 0..channels {
                let r = call(&y.column_matrix(c))?;
                out.push(record(c, &r.estimate, &r)?);
            }
        }
        Ok(out)
    }
}

/// Runs the experiment. Invalid specs and unreadable inputs are errors;
/// failures of individual segments are logged, collected in
/// [`RunOutcome::failures`] and do not stop the run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let segments = load_segments(spec)?;
    let mut ctx = Context {
        spec,
        gap_cfg: GapConfig {
            t: spec.t,
            lambda: spec.lambda,
            ..GapConfig::default()
        },
        pursuit_cfg: PursuitConfig {
            atoms_per_iter: spec.atoms_per_iter,
            residual_tol: spec.residual_tol,
            ..PursuitConfig::default()
        },
        ops: BTreeMap::new(),
        phis: BTreeMap::new(),
    };
    ctx.gap_cfg.validate()?;
    ctx.pursuit_cfg.validate()?;

    let mut outcome = RunOutcome::default();
    for (position, seg) in segments.iter().enumerate() {
        let mut batch = Vec::new();
        for &cr in &spec.cr_grid {
            match ctx.reconstruct(seg, position, cr) {
                Ok(recs) => batch.extend(recs),
                Err(e) => {
                    log::warn!("segment {} at cr {cr}: {e}", seg.id());
                    outcome.failures.push(SegmentFailure {
                        segment: seg.id(),
                        cr,
                        message: e.to_string(),
                    });
                }
            }
        }
        batch.sort_by(|a, b| a.channel.cmp(&b.channel).then(a.cr.total_cmp(&b.cr)));
        outcome.records.extend(batch);
    }
    Ok(outcome)
}
