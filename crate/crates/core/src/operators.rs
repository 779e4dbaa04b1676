//! Analysis operators, sensing matrices and the wavelet synthesis basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{matmul, DenseMatrix};
use crate::scalar::Scalar;

/// Finite-difference analysis operator `Ω` (p x N).
#[derive(Clone, Debug)]
pub struct AnalysisOperator<T> {
    pub matrix: DenseMatrix<T>,
    /// Difference order, 1 or 2.
    pub order: usize,
    pub p: usize,
    pub n_signal: usize,
    rows_nz: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> AnalysisOperator<T> {
    fn new(matrix: DenseMatrix<T>, order: usize) -> Self {
        let rows_nz = (0..matrix.rows())
            .map(|i| {
                matrix
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self {
            p: matrix.rows(),
            n_signal: matrix.cols(),
            matrix,
            order,
            rows_nz,
        }
    }

    /// Nonzero `(column, value)` pairs of row `i`.
    #[inline]
    pub fn row_entries(&self, i: usize) -> &[(usize, T)] {
        &self.rows_nz[i]
    }

    /// `Ω x` for every column of `x`, using the operator's row sparsity.
    pub fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.rows() != self.n_signal {
            return Err(Error::shape(
                "analysis_apply",
                format!("operator has {} columns, signal has {} rows", self.n_signal, x.rows()),
            ));
        }
        let c = x.cols();
        let mut out = DenseMatrix::zeros(self.p, c);
        for (i, entries) in self.rows_nz.iter().enumerate() {
            let out_row = out.row_mut(i);
            for &(j, w) in entries {
                for (o, &v) in out_row.iter_mut().zip(x.row(j)) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    /// `Ω_Λᵀ Ω_Λ`, where `Ω_Λ` keeps only the rows flagged in `mask`.
    pub fn masked_gram(&self, mask: &[bool]) -> DenseMatrix<T> {
        assert_eq!(mask.len(), self.p);
        let n = self.n_signal;
        let mut out = DenseMatrix::zeros(n, n);
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let entries = &self.rows_nz[i];
            for &(a, va) in entries {
                let row = out.row_mut(a);
                for &(b, vb) in entries {
                    row[b] += va * vb;
                }
            }
        }
        out
    }
}

/// Upper-bidiagonal first-difference operator: `1` on the diagonal, `-1` on
/// the superdiagonal, last row the unit vector `e_{N-1}`.
pub fn first_order_diff<T: Scalar>(n_signal: usize) -> Result<AnalysisOperator<T>> {
    if n_signal < 2 {
        return Err(Error::Size(format!(
            "first-order difference needs N >= 2, got {n_signal}"
        )));
    }
    let m = DenseMatrix::from_fn(n_signal, n_signal, |i, j| {
        if i == j {
            T::one()
        } else if j == i + 1 {
            -T::one()
        } else {
            T::zero()
        }
    });
    Ok(AnalysisOperator::new(m, 1))
}

/// Second-difference operator, the square of [`first_order_diff`]. Interior
/// rows carry the `(1, -2, 1)` stencil; the last two rows are boundary rows.
pub fn second_order_diff<T: Scalar>(n_signal: usize) -> Result<AnalysisOperator<T>> {
    if n_signal < 3 {
        return Err(Error::Size(format!(
            "second-order difference needs N >= 3, got {n_signal}"
        )));
    }
    let d1 = first_order_diff::<T>(n_signal)?;
    let m = matmul(&d1.matrix, &d1.matrix)?;
    Ok(AnalysisOperator::new(m, 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensingKind {
    /// i.i.d. `N(0, 1/n)` entries.
    Gaussian,
    /// i.i.d. `±1/√n` entries.
    Bernoulli,
    /// Gaussian rows orthonormalized; square and orthogonal when n = N.
    Orthogonal,
}

impl SensingKind {
    pub fn name(self) -> &'static str {
        match self {
            SensingKind::Gaussian => "gaussian",
            SensingKind::Bernoulli => "bernoulli",
            SensingKind::Orthogonal => "orthogonal",
        }
    }
}

/// Sensing matrix `φ` (n x N) and the recipe that produced it.
#[derive(Clone, Debug)]
pub struct MeasurementMatrix<T> {
    pub matrix: DenseMatrix<T>,
    pub seed: u64,
    pub kind: SensingKind,
}

impl<T: Scalar> MeasurementMatrix<T> {
    pub fn generate(kind: SensingKind, n: usize, n_signal: usize, seed: u64) -> Result<Self> {
        match kind {
            SensingKind::Gaussian => gaussian_measurement(n, n_signal, seed),
            SensingKind::Bernoulli => bernoulli_measurement(n, n_signal, seed),
            SensingKind::Orthogonal => orthogonal_measurement(n, n_signal, seed),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_signal(&self) -> usize {
        self.matrix.cols()
    }

    /// Measurements `φ x` of every column of `x`.
    pub fn measure(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        matmul(&self.matrix, x)
    }
}

fn check_compressive(n: usize, n_signal: usize) -> Result<()> {
    if n == 0 || n >= n_signal {
        return Err(Error::NotCompressive { n, n_signal });
    }
    Ok(())
}

pub fn gaussian_measurement<T: Scalar>(
    n: usize,
    n_signal: usize,
    seed: u64,
) -> Result<MeasurementMatrix<T>> {
    check_compressive(n, n_signal)?;
    Ok(MeasurementMatrix {
        matrix: gaussian_entries(n, n_signal, seed, (1.0 / n as f64).sqrt()),
        seed,
        kind: SensingKind::Gaussian,
    })
}

pub fn bernoulli_measurement<T: Scalar>(
    n: usize,
    n_signal: usize,
    seed: u64,
) -> Result<MeasurementMatrix<T>> {
    check_compressive(n, n_signal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = T::lit((1.0 / n as f64).sqrt());
    let matrix = DenseMatrix::from_fn(n, n_signal, |_, _| if rng.random::<bool>() { a } else { -a });
    Ok(MeasurementMatrix {
        matrix,
        seed,
        kind: SensingKind::Bernoulli,
    })
}

/// Seeded matrix with orthonormal rows. Unlike the random ensembles this
/// accepts `n == N`, giving a square orthogonal `φ`.
pub fn orthogonal_measurement<T: Scalar>(
    n: usize,
    n_signal: usize,
    seed: u64,
) -> Result<MeasurementMatrix<T>> {
    if n == 0 || n > n_signal {
        return Err(Error::NotCompressive { n, n_signal });
    }
    let mut rows: Vec<Vec<f64>> = {
        let g = gaussian_entries::<f64>(n, n_signal, seed, 1.0);
        (0..n).map(|i| g.row(i).to_vec()).collect()
    };
    // Modified Gram-Schmidt, two passes.
    for i in 0..n {
        for _ in 0..2 {
            for k in 0..i {
                let proj: f64 = rows[i].iter().zip(&rows[k]).map(|(a, b)| a * b).sum();
                let (done, cur) = rows.split_at_mut(i);
                for (v, q) in cur[0].iter_mut().zip(&done[k]) {
                    *v -= proj * q;
                }
            }
        }
        let norm = rows[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        rows[i].iter_mut().for_each(|v| *v /= norm);
    }
    let matrix = DenseMatrix::from_fn(n, n_signal, |i, j| T::lit(rows[i][j]));
    Ok(MeasurementMatrix {
        matrix,
        seed,
        kind: SensingKind::Orthogonal,
    })
}

fn gaussian_entries<T: Scalar>(rows: usize, cols: usize, seed: u64, scale: f64) -> DenseMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        T::lit(z * scale)
    })
}

/// Orthonormal Daubechies scaling filters indexed by length.
#[allow(clippy::excessive_precision)]
fn daubechies_filter(len: usize) -> Option<&'static [f64]> {
    const D2: [f64; 2] = [
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ];
    const D4: [f64; 4] = [
        0.48296291314453414337,
        0.83651630373780790558,
        0.22414386804201338103,
        -0.12940952255126038117,
    ];
    const D6: [f64; 6] = [
        0.332670552950082616,
        0.80689150931109257649,
        0.4598775021184915701,
        -0.1350110200102545887,
        -0.085441273882026661693,
        0.035226291885709536603,
    ];
    const D8: [f64; 8] = [
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ];
    const D10: [f64; 10] = [
        0.16010239797419291448,
        0.60382926979718967054,
        0.72430852843777292773,
        0.13842814590132073151,
        -0.24229488706638203186,
        -0.032244869584638374648,
        0.077571493840045713523,
        -0.0062414902127982742742,
        -0.012580751999081999469,
        0.003335725285473771278,
    ];
    match len {
        2 => Some(&D2),
        4 => Some(&D4),
        6 => Some(&D6),
        8 => Some(&D8),
        10 => Some(&D10),
        _ => None,
    }
}

/// Multi-level periodic Daubechies transform.
///
/// Coefficients are laid out as `[a_L | d_L | d_{L-1} | ... | d_1]`.
#[derive(Clone, Debug)]
pub struct PeriodicDwt {
    lo: Vec<f64>,
    hi: Vec<f64>,
    levels: usize,
}

impl PeriodicDwt {
    /// `order` is the filter length: 2 is Haar, 4 is the four-tap filter.
    pub fn new(order: usize, levels: usize) -> Result<Self> {
        let lo = daubechies_filter(order)
            .ok_or(Error::UnsupportedWavelet(order))?
            .to_vec();
        let len = lo.len();
        let hi = (0..len)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * lo[len - 1 - j]
            })
            .collect();
        Ok(Self { lo, hi, levels })
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.levels == 0 || !n.is_multiple_of(1usize << self.levels) {
            return Err(Error::Decomposition {
                n_signal: n,
                levels: self.levels,
            });
        }
        Ok(())
    }

    pub fn forward<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x.len())?;
        let mut w: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        let mut scratch = vec![0.0; w.len()];
        let mut m = w.len();
        for _ in 0..self.levels {
            let half = m / 2;
            for k in 0..half {
                let (mut a, mut d) = (0.0, 0.0);
                for (j, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                    let v = w[(2 * k + j) % m];
                    a += h * v;
                    d += g * v;
                }
                scratch[k] = a;
                scratch[half + k] = d;
            }
            w[..m].copy_from_slice(&scratch[..m]);
            m = half;
        }
        Ok(w.into_iter().map(T::lit).collect())
    }

    pub fn inverse<T: Scalar>(&self, coeffs: &[T]) -> Result<Vec<T>> {
        self.check_len(coeffs.len())?;
        let mut w: Vec<f64> = coeffs.iter().map(|v| v.as_f64()).collect();
        let mut scratch = vec![0.0; w.len()];
        let mut m = w.len() >> self.levels;
        for _ in 0..self.levels {
            let len = 2 * m;
            scratch[..len].iter_mut().for_each(|v| *v = 0.0);
            for k in 0..m {
                let (a, d) = (w[k], w[m + k]);
                for (j, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                    scratch[(2 * k + j) % len] += h * a + g * d;
                }
            }
            w[..len].copy_from_slice(&scratch[..len]);
            m = len;
        }
        Ok(w.into_iter().map(T::lit).collect())
    }
}

/// Orthogonal wavelet synthesis basis `Ψ` (N x N).
#[derive(Clone, Debug)]
pub struct SynthesisDictionary<T> {
    pub matrix: DenseMatrix<T>,
    pub wavelet_order: usize,
    pub levels: usize,
}

/// Decomposition depth used when none is given: `⌊log2 N⌋ - 2`, reduced
/// until `2^levels` divides `N`.
pub fn default_levels(n_signal: usize) -> usize {
    let cap = (usize::BITS - 1 - n_signal.max(1).leading_zeros()) as usize;
    let cap = cap.saturating_sub(2).max(1);
    cap.min(n_signal.trailing_zeros() as usize).max(1)
}

/// Columns are the inverse periodic DWT of unit impulses.
pub fn daubechies_dictionary<T: Scalar>(
    n_signal: usize,
    wavelet_order: usize,
    levels: usize,
) -> Result<SynthesisDictionary<T>> {
    let dwt = PeriodicDwt::new(wavelet_order, levels)?;
    dwt.check_len(n_signal)?;
    let mut matrix = DenseMatrix::zeros(n_signal, n_signal);
    let mut impulse = vec![0.0f64; n_signal];
    for k in 0..n_signal {
        impulse[k] = 1.0;
        let atom: Vec<f64> = dwt.inverse(&impulse)?;
        for (i, v) in atom.into_iter().enumerate() {
            matrix.set(i, k, T::lit(v));
        }
        impulse[k] = 0.0;
    }
    Ok(SynthesisDictionary {
        matrix,
        wavelet_order,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram, tr_matmul};

    fn col(v: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::column_vector(v.to_vec()).unwrap()
    }

    #[test]
    fn first_difference_pattern() {
        let d = first_order_diff::<f64>(3).unwrap();
        let expected =
            DenseMatrix::from_rows(&[[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(d.matrix, expected);
        assert_eq!((d.p, d.n_signal, d.order), (3, 3, 1));

        let y = d.apply(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 5.0]);

        let d4 = first_order_diff::<f64>(4).unwrap();
        let y = d4.apply(&col(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(y.as_slice(), &[-1.0, -1.0, -1.0, 4.0]);

        assert!(matches!(first_order_diff::<f64>(1), Err(Error::Size(_))));
    }

    #[test]
    fn second_difference_is_square_of_first() {
        for n in [3, 4, 7, 20] {
            let d1 = first_order_diff::<f64>(n).unwrap();
            let d2 = second_order_diff::<f64>(n).unwrap();
            assert_eq!(d2.matrix, matmul(&d1.matrix, &d1.matrix).unwrap());
            assert_eq!(d2.p, n);
        }
        let d2 = second_order_diff::<f64>(4).unwrap();
        assert_eq!(d2.matrix.row(0), &[1.0, -2.0, 1.0, 0.0]);
        assert!(matches!(second_order_diff::<f64>(2), Err(Error::Size(_))));
    }

    #[test]
    fn second_difference_annihilates_ramp_interior() {
        let n = 12;
        let d2 = second_order_diff::<f64>(n).unwrap();
        let ramp: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let y = d2.apply(&col(&ramp)).unwrap();
        for i in 0..n - 2 {
            assert_eq!(y.get(i, 0), 0.0);
        }
        assert_ne!(y.get(n - 2, 0), 0.0);
        assert_ne!(y.get(n - 1, 0), 0.0);
    }

    #[test]
    fn apply_matches_dense_product() {
        let d2 = second_order_diff::<f64>(9).unwrap();
        let x = DenseMatrix::from_fn(9, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let dense = matmul(&d2.matrix, &x).unwrap();
        assert_eq!(d2.apply(&x).unwrap(), dense);
    }

    #[test]
    fn masked_gram_matches_zeroed_rows() {
        let d2 = second_order_diff::<f64>(8).unwrap();
        let mask: Vec<bool> = (0..8).map(|i| i % 3 != 1).collect();
        let mut zeroed = d2.matrix.clone();
        for (i, &m) in mask.iter().enumerate() {
            if !m {
                zeroed.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
            }
        }
        assert_eq!(d2.masked_gram(&mask), gram(&zeroed));
    }

    #[test]
    fn gaussian_is_deterministic_and_centered() {
        let a = gaussian_measurement::<f64>(100, 720, 42).unwrap();
        let b = gaussian_measurement::<f64>(100, 720, 42).unwrap();
        let c = gaussian_measurement::<f64>(100, 720, 43).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_ne!(a.matrix, c.matrix);

        // Column means of N(0, 1/n) over n rows have std 1/n; 4/√(nN) is a
        // loose sanity bound on their average magnitude.
        let (n, big_n) = (100.0f64, 720.0f64);
        let mean_abs: f64 = (0..720)
            .map(|j| (a.matrix.column(j).iter().sum::<f64>() / n).abs())
            .sum::<f64>()
            / big_n;
        assert!(mean_abs <= 4.0 / (n * big_n).sqrt(), "{mean_abs}");

        let var: f64 = a.matrix.as_slice().iter().map(|v| v * v).sum::<f64>() / (n * big_n);
        assert!((var - 1.0 / n).abs() < 0.05 / n);

        let half = gaussian_measurement::<f64>(360, 720, 0).unwrap();
        assert_eq!(half.n() as f64 / half.n_signal() as f64, 0.5);
    }

    #[test]
    fn measurement_requires_compression() {
        assert!(matches!(
            gaussian_measurement::<f64>(720, 720, 0),
            Err(Error::NotCompressive { .. })
        ));
        assert!(bernoulli_measurement::<f64>(0, 10, 0).is_err());
        assert!(orthogonal_measurement::<f64>(11, 10, 0).is_err());
    }

    #[test]
    fn bernoulli_entries() {
        let b = bernoulli_measurement::<f64>(16, 32, 9).unwrap();
        let a = 0.25;
        assert!(b.matrix.as_slice().iter().all(|&v| v == a || v == -a));
        assert_eq!(b.matrix, bernoulli_measurement::<f64>(16, 32, 9).unwrap().matrix);
    }

    #[test]
    fn orthogonal_rows() {
        let q = orthogonal_measurement::<f64>(24, 24, 3).unwrap();
        let g = gram(&q.matrix);
        assert!(g.max_abs_diff(&DenseMatrix::identity(24)).unwrap() < 1e-12);
        let r = orthogonal_measurement::<f64>(10, 24, 3).unwrap();
        let rrt = tr_matmul(&r.matrix.transpose(), &r.matrix.transpose()).unwrap();
        assert!(rrt.max_abs_diff(&DenseMatrix::identity(10)).unwrap() < 1e-12);
    }

    #[test]
    fn filters_are_orthonormal() {
        for len in [2, 4, 6, 8, 10] {
            let h = daubechies_filter(len).unwrap();
            let sum: f64 = h.iter().sum();
            assert!((sum - 2f64.sqrt()).abs() < 1e-12, "len {len}");
            for shift in (0..len).step_by(2) {
                let s: f64 = (0..len - shift).map(|k| h[k] * h[k + shift]).sum();
                let expected = if shift == 0 { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-12, "len {len} shift {shift}: {s}");
            }
        }
        assert!(daubechies_filter(3).is_none());
    }

    #[test]
    fn dictionary_is_orthogonal() {
        for (order, levels) in [(2, 1), (2, 4), (4, 3), (6, 2), (8, 3), (10, 2)] {
            let psi = daubechies_dictionary::<f64>(64, order, levels).unwrap();
            let g = gram(&psi.matrix);
            let err = g.max_abs_diff(&DenseMatrix::identity(64)).unwrap();
            assert!(err < 1e-8, "order {order} levels {levels}: {err}");
            for norm in crate::linalg::l2_norm_columns(&psi.matrix) {
                assert!((norm - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dictionary_round_trip() {
        let psi = daubechies_dictionary::<f64>(64, 4, 3).unwrap();
        let x = DenseMatrix::from_fn(64, 1, |i, _| ((i * 37) % 11) as f64 * 0.3 - 1.0);
        let coeffs = tr_matmul(&psi.matrix, &x).unwrap();
        let back = matmul(&psi.matrix, &coeffs).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-8);

        // Ψᵀ is the forward transform.
        let dwt = PeriodicDwt::new(4, 3).unwrap();
        let fwd: Vec<f64> = dwt.forward(x.as_slice()).unwrap();
        let diff = fwd
            .iter()
            .zip(coeffs.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn haar_atoms_by_hand() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // One level on N = 4: a0 synthesizes to (1, 1, 0, 0)/√2, d0 to (1, -1, 0, 0)/√2.
        let one = daubechies_dictionary::<f64>(4, 2, 1).unwrap();
        assert!(one.matrix.column(0).iter().zip([s, s, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(one.matrix.column(2).iter().zip([s, -s, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        // Two levels on N = 4: the coarsest scaling atom is flat at 1/2.
        let two = daubechies_dictionary::<f64>(4, 2, 2).unwrap();
        assert!(two.matrix.column(0).iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(two.matrix.column(1).iter().zip([0.5, 0.5, -0.5, -0.5]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn dictionary_errors() {
        assert!(matches!(
            daubechies_dictionary::<f64>(60, 4, 3),
            Err(Error::Decomposition { .. })
        ));
        assert!(matches!(
            daubechies_dictionary::<f64>(64, 5, 3),
            Err(Error::UnsupportedWavelet(5))
        ));
    }

    #[test]
    fn default_levels_divide_length() {
        assert_eq!(default_levels(64), 4);
        assert_eq!(default_levels(240), 4);
        assert_eq!(default_levels(720), 4);
        assert_eq!(default_levels(1024), 8);
        for n in [8, 24, 96, 120, 240, 360, 720] {
            assert_eq!(n % (1 << default_levels(n)), 0);
        }
    }
}
