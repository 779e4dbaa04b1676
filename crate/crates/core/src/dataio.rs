//! ECG recording I/O, fixed-length windowing and synthetic ground truth.
//!
//! Recordings are exchanged as plain CSV:
//!
//! ```text
//! # sample_rate=360
//! # subject=100
//! -0.145,-0.065
//! -0.145,-0.065
//! ```
//!
//! one row per sample and one column per channel, `\n` line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{matmul, DenseMatrix};
use crate::operators::SynthesisDictionary;
use crate::scalar::Scalar;

/// Multi-channel recording, samples stored row-major (sample x channel).
#[derive(Clone, Debug, PartialEq)]
pub struct EcgRecording<T> {
    pub sample_rate: f64,
    pub channels: usize,
    pub subject_id: String,
    data: Vec<T>,
}

impl<T: Scalar> EcgRecording<T> {
    pub fn new(sample_rate: f64, channels: usize, subject_id: impl Into<String>, data: Vec<T>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Config(format!("sample rate must be positive, got {sample_rate}")));
        }
        if channels == 0 {
            return Err(Error::Config("recording needs at least one channel".into()));
        }
        if !data.len().is_multiple_of(channels) {
            return Err(Error::shape(
                "recording",
                format!("{} values do not split into {channels} channels", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / channels,
                col: pos % channels,
            });
        }
        let subject_id = subject_id.into();
        if subject_id.contains(['\n', '\r']) {
            return Err(Error::Config("subject id must be a single line".into()));
        }
        Ok(Self {
            sample_rate,
            channels,
            subject_id,
            data,
        })
    }

    pub fn from_matrix(sample_rate: f64, subject_id: impl Into<String>, samples: &DenseMatrix<T>) -> Result<Self> {
        Self::new(sample_rate, samples.cols(), subject_id, samples.as_slice().to_vec())
    }

    pub fn total_samples(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn sample(&self, i: usize) -> &[T] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    /// Samples as a `total_samples x channels` matrix; `None` when empty.
    pub fn samples(&self) -> Option<DenseMatrix<T>> {
        DenseMatrix::new(self.total_samples(), self.channels, self.data.clone()).ok()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.total_samples() as f64 / self.sample_rate
    }
}

/// Fixed-length window of a recording.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<T> {
    /// N x c.
    pub data: DenseMatrix<T>,
    pub subject_id: String,
    pub index: usize,
    pub n_signal: usize,
}

impl<T: Scalar> Segment<T> {
    pub fn channels(&self) -> usize {
        self.data.cols()
    }

    /// `subject:index`, used as the record key.
    pub fn id(&self) -> String {
        format!("{}:{}", self.subject_id, self.index)
    }
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<EcgRecording<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, path)
}

/// Parses CSV text; `origin` is only used in error messages.
pub fn parse_csv<T: Scalar>(text: &str, origin: &Path) -> Result<EcgRecording<T>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));

    let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<String> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(1, format!("missing `# {key}=` header")))?;
        line.strip_prefix('#')
            .map(str::trim_start)
            .and_then(|l| l.strip_prefix(key))
            .and_then(|l| l.strip_prefix('='))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| err(no, format!("expected `# {key}=<value>` header, found {line:?}")))
    };

    let rate_text = header(&mut lines, "sample_rate")?;
    let sample_rate: f64 = rate_text
        .parse()
        .map_err(|_| err(1, format!("invalid sample rate {rate_text:?}")))?;
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(err(1, format!("sample rate must be positive, got {rate_text}")));
    }
    let subject = header(&mut lines, "subject")?;

    let mut channels = None;
    let mut data = Vec::new();
    let mut pending_blank = None;
    for (no, line) in lines {
        if line.is_empty() {
            pending_blank.get_or_insert(no);
            continue;
        }
        if let Some(blank) = pending_blank {
            return Err(err(blank, "blank line inside data".into()));
        }
        let before = data.len();
        for cell in line.split(',') {
            let v: T = cell
                .trim()
                .parse()
                .map_err(|_| err(no, format!("non-numeric cell {cell:?}")))?;
            if !v.is_finite() {
                return Err(err(no, format!("non-finite cell {cell:?}")));
            }
            data.push(v);
        }
        let width = data.len() - before;
        match channels {
            None => channels = Some(width),
            Some(c) if c != width => {
                return Err(err(no, format!("expected {c} columns, found {width}")));
            }
            _ => {}
        }
    }
    let channels = channels.ok_or_else(|| err(3, "no data rows".into()))?;
    EcgRecording::new(sample_rate, channels, subject, data)
}

/// Serializes in the CSV layout [`parse_csv`] reads. Values use Rust's
/// shortest round-trip formatting, so a save/load cycle is lossless.
pub fn to_csv_string<T: Scalar>(rec: &EcgRecording<T>) -> String {
    let mut out = String::with_capacity(16 * rec.data.len() + 64);
    let _ = writeln!(out, "# sample_rate={}", rec.sample_rate);
    let _ = writeln!(out, "# subject={}", rec.subject_id);
    for i in 0..rec.total_samples() {
        for (j, v) in rec.sample(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_csv<T: Scalar>(rec: &EcgRecording<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(rec)).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })
}

/// Splits a recording into consecutive, non-overlapping windows of
/// `seconds`, starting at sample 0. A trailing partial window is dropped.
pub fn segment<T: Scalar>(rec: &EcgRecording<T>, seconds: f64) -> Result<Vec<Segment<T>>> {
    let len = seconds * rec.sample_rate;
    let rounded = len.round();
    if rounded.is_nan() || rounded < 1.0 || (len - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Config(format!(
            "window of {seconds} s at {} Hz is not a whole number of samples",
            rec.sample_rate
        )));
    }
    let n = rounded as usize;
    let c = rec.channels;
    let count = rec.total_samples() / n;
    (0..count)
        .map(|w| {
            let data = rec.data[w * n * c..(w + 1) * n * c].to_vec();
            Ok(Segment {
                data: DenseMatrix::new(n, c, data)?,
                subject_id: rec.subject_id.clone(),
                index: w,
                n_signal: n,
            })
        })
        .collect()
}

/// Joins segments back into one recording, in the given order.
pub fn concatenate<T: Scalar>(segments: &[Segment<T>], sample_rate: f64, subject_id: &str) -> Result<EcgRecording<T>> {
    let channels = segments.first().map_or(1, |s| s.channels());
    let mut data = Vec::new();
    for s in segments {
        if s.channels() != channels {
            return Err(Error::shape("concatenate", "segments disagree on channel count"));
        }
        data.extend_from_slice(s.data.as_slice());
    }
    EcgRecording::new(sample_rate, channels, subject_id, data)
}

/// Piecewise-linear signals whose second difference (interior rows of the
/// second-order operator) vanishes exactly on the returned co-support.
///
/// `cosupport_size` counts interior rows only (at most `N - 2`); the two
/// boundary rows are never part of it. With `shared`, every channel gets the
/// same co-support but its own intercept, slope and kink amplitudes.
pub fn synth_cosparse<T: Scalar>(
    n_signal: usize,
    cosupport_size: usize,
    channels: usize,
    shared: bool,
    seed: u64,
) -> Result<(Segment<T>, Vec<Vec<usize>>)> {
    if n_signal < 3 {
        return Err(Error::Config(format!("signal length {n_signal} below 3")));
    }
    if channels == 0 {
        return Err(Error::Config("at least one channel required".into()));
    }
    let interior = n_signal - 2;
    if cosupport_size > interior {
        return Err(Error::Config(format!(
            "co-support size {cosupport_size} exceeds the {interior} interior rows"
        )));
    }
    let kinks = interior - cosupport_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / n_signal as f64;

    let draw_breaks = |rng: &mut ChaCha8Rng| {
        let mut b = sample(rng, interior, kinks).into_vec();
        b.sort_unstable();
        b
    };
    let common = shared.then(|| draw_breaks(&mut rng));

    let mut data = DenseMatrix::zeros(n_signal, channels);
    let mut cosupports = Vec::with_capacity(channels);
    for ch in 0..channels {
        let breaks = match &common {
            Some(b) => b.clone(),
            None => draw_breaks(&mut rng),
        };
        let intercept: f64 = rng.sample(StandardNormal);
        let slope: f64 = rng.sample::<f64, _>(StandardNormal) * 4.0 * scale;
        let amps: Vec<f64> = breaks
            .iter()
            .map(|_| {
                let mag = rng.random_range(0.5..1.5) * 8.0 * scale;
                if rng.random::<bool>() { mag } else { -mag }
            })
            .collect();
        for j in 0..n_signal {
            // A kink at interior row i is a ramp starting at sample i + 1.
            let mut v = intercept + slope * j as f64;
            for (&i, &a) in breaks.iter().zip(&amps) {
                if j > i + 1 {
                    v += a * (j - i - 1) as f64;
                }
            }
            data.set(j, ch, T::lit(v));
        }
        let mut is_break = vec![false; interior];
        for &i in &breaks {
            is_break[i] = true;
        }
        cosupports.push((0..interior).filter(|&i| !is_break[i]).collect());
    }
    Ok((
        Segment {
            data,
            subject_id: "synthetic".into(),
            index: 0,
            n_signal,
        },
        cosupports,
    ))
}

/// Signals `x = Ψ s` with exactly `sparsity` nonzero Gaussian coefficients
/// per channel. Returns the segment and each channel's support.
pub fn synth_sparse<T: Scalar>(
    dictionary: &SynthesisDictionary<T>,
    sparsity: usize,
    channels: usize,
    shared: bool,
    seed: u64,
) -> Result<(Segment<T>, Vec<Vec<usize>>)> {
    let n_signal = dictionary.matrix.rows();
    let atoms = dictionary.matrix.cols();
    if sparsity > atoms {
        return Err(Error::Config(format!("sparsity {sparsity} exceeds {atoms} atoms")));
    }
    if channels == 0 {
        return Err(Error::Config("at least one channel required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut s = sample(rng, atoms, sparsity).into_vec();
        s.sort_unstable();
        s
    };
    let common = shared.then(|| draw(&mut rng));
    let mut coeffs = DenseMatrix::zeros(atoms, channels);
    let mut supports = Vec::with_capacity(channels);
    for ch in 0..channels {
        let support = match &common {
            Some(s) => s.clone(),
            None => draw(&mut rng),
        };
        for &j in &support {
            let z = loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() > 1e-3 {
                    break z;
                }
            };
            coeffs.set(j, ch, T::lit(z));
        }
        supports.push(support);
    }
    let data = matmul(&dictionary.matrix, &coeffs)?;
    Ok((
        Segment {
            data,
            subject_id: "synthetic".into(),
            index: 0,
            n_signal,
        },
        supports,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tr_matmul;
    use crate::operators::{daubechies_dictionary, second_order_diff};

    fn rec(rows: usize, channels: usize) -> EcgRecording<f64> {
        let data = (0..rows * channels).map(|k| (k as f64 * 0.37).sin() * 1.25e-3 + k as f64).collect();
        EcgRecording::new(360.0, channels, "100", data).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let r = rec(4, 2);
        let text = to_csv_string(&r);
        assert!(text.starts_with("# sample_rate=360\n# subject=100\n"));
        assert_eq!(text.lines().count(), 6);
        let back: EcgRecording<f64> = parse_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_csv_string(&back), text);
    }

    #[test]
    fn csv_file_round_trip() {
        let dir = std::env::temp_dir().join(format!("cosparse-csv-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rec.csv");
        let r = rec(10, 3);
        save_csv(&r, &path).unwrap();
        assert_eq!(load_csv::<f64>(&path).unwrap(), r);
        fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(load_csv::<f64>(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let p = Path::new("x.csv");
        let missing_rate = "# subject=1\n1,2\n";
        assert!(matches!(parse_csv::<f64>(missing_rate, p), Err(Error::Parse { line: 1, .. })));

        let missing_subject = "# sample_rate=360\n1,2\n";
        assert!(matches!(parse_csv::<f64>(missing_subject, p), Err(Error::Parse { line: 2, .. })));

        let bad_cell = "# sample_rate=360\n# subject=a\n1,2\n3,x\n";
        assert!(matches!(parse_csv::<f64>(bad_cell, p), Err(Error::Parse { line: 4, .. })));

        let ragged = "# sample_rate=360\n# subject=a\n1,2\n3\n";
        assert!(matches!(parse_csv::<f64>(ragged, p), Err(Error::Parse { line: 4, .. })));

        let bad_rate = "# sample_rate=fast\n# subject=a\n1\n";
        assert!(matches!(parse_csv::<f64>(bad_rate, p), Err(Error::Parse { line: 1, .. })));

        let no_rows = "# sample_rate=360\n# subject=a\n";
        assert!(parse_csv::<f64>(no_rows, p).is_err());

        let gap = "# sample_rate=360\n# subject=a\n1\n\n2\n";
        assert!(matches!(parse_csv::<f64>(gap, p), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn windowing_arithmetic() {
        let segs = segment(&rec(721, 2), 2.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].n_signal, 720);
        assert_eq!(segs[0].data.dims(), (720, 2));

        let long = rec(82 * 360, 2);
        let segs = segment(&long, 2.0).unwrap();
        assert_eq!(segs.len(), 41);
        for (w, s) in segs.iter().enumerate() {
            assert_eq!(s.index, w);
            assert_eq!(s.data.row(0), long.sample(w * 720));
            assert_eq!(s.data.row(719), long.sample(w * 720 + 719));
        }

        let empty = EcgRecording::<f64>::new(360.0, 2, "e", vec![]).unwrap();
        assert!(segment(&empty, 2.0).unwrap().is_empty());
        assert!(matches!(segment(&long, 1.0 / 7.0), Err(Error::Config(_))));
    }

    #[test]
    fn windows_cover_whole_seconds() {
        // 9.5 s recording: windows are disjoint and cover ⌊9.5 / 2⌋ * 2 = 8 s.
        let r = rec((9.5 * 360.0) as usize, 1);
        let segs = segment(&r, 2.0).unwrap();
        let mut covered = vec![0u8; r.total_samples()];
        for s in &segs {
            for k in 0..s.n_signal {
                covered[s.index * s.n_signal + k] += 1;
            }
        }
        assert!(covered[..8 * 360].iter().all(|&c| c == 1));
        assert!(covered[8 * 360..].iter().all(|&c| c == 0));

        let back = concatenate(&segs, 360.0, "100").unwrap();
        assert_eq!(back.total_samples(), 8 * 360);
    }

    #[test]
    fn recording_validation() {
        assert!(EcgRecording::<f64>::new(0.0, 1, "a", vec![]).is_err());
        assert!(EcgRecording::<f64>::new(360.0, 0, "a", vec![]).is_err());
        assert!(EcgRecording::<f64>::new(360.0, 2, "a", vec![1.0]).is_err());
        assert!(EcgRecording::<f64>::new(360.0, 1, "a", vec![f64::NAN]).is_err());
        assert!(EcgRecording::<f64>::new(360.0, 1, "a\nb", vec![1.0]).is_err());
    }

    #[test]
    fn cosparse_generator_affine_case() {
        let n = 40;
        let (seg, cos) = synth_cosparse::<f64>(n, n - 2, 1, false, 3).unwrap();
        assert_eq!(cos[0], (0..n - 2).collect::<Vec<_>>());
        let omega = second_order_diff::<f64>(n).unwrap();
        let a = omega.apply(&seg.data).unwrap();
        for i in 0..n - 2 {
            assert!(a.get(i, 0).abs() < 1e-10);
        }
    }

    #[test]
    fn cosparse_generator_declared_zeros() {
        let n = 120;
        let omega = second_order_diff::<f64>(n).unwrap();
        for seed in 0..10 {
            let (seg, cos) = synth_cosparse::<f64>(n, 110, 1, false, seed).unwrap();
            let a = omega.apply(&seg.data).unwrap();
            let near_zero = (0..n).filter(|&i| a.get(i, 0).abs() < 1e-10).count();
            assert!(near_zero >= 110);
            for &i in &cos[0] {
                assert!(a.get(i, 0).abs() < 1e-10);
            }
            let kinks: Vec<usize> = (0..n - 2).filter(|i| !cos[0].contains(i)).collect();
            assert_eq!(kinks.len(), 8);
            for i in kinks {
                assert!(a.get(i, 0).abs() > 1e-3);
            }
        }
    }

    #[test]
    fn cosparse_generator_shared_pattern() {
        let n = 60;
        let omega = second_order_diff::<f64>(n).unwrap();
        let (seg, cos) = synth_cosparse::<f64>(n, 50, 2, true, 11).unwrap();
        assert_eq!(cos[0], cos[1]);
        assert_ne!(seg.data.column(0), seg.data.column(1));
        let a = omega.apply(&seg.data).unwrap();
        for i in 0..n - 2 {
            assert_eq!(a.get(i, 0).abs() < 1e-10, a.get(i, 1).abs() < 1e-10, "row {i}");
        }
        let (_, cos) = synth_cosparse::<f64>(n, 50, 2, false, 11).unwrap();
        assert_ne!(cos[0], cos[1]);
    }

    #[test]
    fn cosparse_generator_is_deterministic_and_checked() {
        let a = synth_cosparse::<f64>(50, 40, 2, true, 5).unwrap();
        let b = synth_cosparse::<f64>(50, 40, 2, true, 5).unwrap();
        assert_eq!(a, b);
        assert!(synth_cosparse::<f64>(50, 49, 1, true, 5).is_err());
        assert!(synth_cosparse::<f64>(2, 0, 1, true, 5).is_err());
    }

    #[test]
    fn sparse_generator() {
        let psi = daubechies_dictionary::<f64>(64, 4, 3).unwrap();
        let (zero, sup) = synth_sparse(&psi, 0, 1, false, 1).unwrap();
        assert!(zero.data.is_zero());
        assert!(sup[0].is_empty());

        let (seg, sup) = synth_sparse(&psi, 6, 2, true, 2).unwrap();
        assert_eq!(sup[0], sup[1]);
        let coeffs = tr_matmul(&psi.matrix, &seg.data).unwrap();
        for (ch, support) in sup.iter().enumerate() {
            let nz: Vec<usize> = (0..64).filter(|&j| coeffs.get(j, ch).abs() > 1e-10).collect();
            assert_eq!(&nz, support);
        }
        assert!(synth_sparse(&psi, 65, 1, false, 0).is_err());
    }
}
