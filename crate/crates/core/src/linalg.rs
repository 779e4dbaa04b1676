//! Dense row-major matrices and the handful of kernels the pursuit
//! algorithms need: products, Gram matrices, Cholesky solves and norms.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance for the symmetry precondition of [`solve_spd`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A Cholesky pivot at or below `PIVOT_TOL * n * max(diag)` is treated as
/// non-positive.
pub const PIVOT_TOL: f64 = f64::EPSILON;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from row-major data, rejecting empty shapes, length
    /// mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("new", format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                "new",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::shape(
                    "from_rows",
                    format!("row {i} has {} entries, expected {n_cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::new(n_rows, n_cols, data)
    }

    /// Single-column matrix.
    pub fn column_vector(values: Vec<T>) -> Result<Self> {
        let n = values.len();
        Self::new(n, 1, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty shape {rows}x{cols}");
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "empty shape {rows}x{cols}");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Column `j` as an `rows x 1` matrix.
    pub fn column_matrix(&self, j: usize) -> Self {
        Self {
            rows: self.rows,
            cols: 1,
            data: self.column(j),
        }
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    /// New matrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        assert!(!cols.is_empty());
        Self::from_fn(self.rows, cols.len(), |i, k| self.get(i, cols[k]))
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::shape("hstack", "no blocks"))?;
        let rows = first.rows;
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::shape(
                "hstack",
                format!("row counts {rows} and {}", b.rows),
            ));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    fn zip_with(&self, op: &'static str, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.dims(), other.dims()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Largest entrywise absolute difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        (self.dims() == other.dims()).then(|| {
            self.data
                .iter()
                .zip(&other.data)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = &self.data[i * self.cols..i * self.cols + self.cols.min(8)];
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Matrix product `a * b`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Transposed product `aᵀ * b` without materializing the transpose.
pub fn tr_matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows != b.rows {
        return Err(Error::shape(
            "tr_matmul",
            format!("({}x{})ᵀ * {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.cols, b.cols);
    for k in 0..a.rows {
        let b_row = b.row(k);
        for (i, &aki) in a.row(k).iter().enumerate() {
            if aki.is_zero() {
                continue;
            }
            let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aki * bkj;
            }
        }
    }
    Ok(out)
}

/// Gram matrix `aᵀa`. Only the upper triangle is accumulated; the result is
/// exactly symmetric.
pub fn gram<T: Scalar>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = a.cols;
    let mut out = DenseMatrix::zeros(n, n);
    for k in 0..a.rows {
        let r = a.row(k);
        for i in 0..n {
            let ri = r[i];
            if ri.is_zero() {
                continue;
            }
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for j in i..n {
                out_row[j] += ri * r[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            out.data[i * n + j] = out.data[j * n + i];
        }
    }
    out
}

/// Euclidean norm of every column.
pub fn l2_norm_columns<T: Scalar>(m: &DenseMatrix<T>) -> Vec<T> {
    let mut acc = vec![T::zero(); m.cols];
    for i in 0..m.rows {
        for (a, &v) in acc.iter_mut().zip(m.row(i)) {
            *a += v * v;
        }
    }
    acc.into_iter().map(|s| s.sqrt()).collect()
}

/// Lower-triangular Cholesky factor `L` with `a = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows;
        if a.cols != n {
            return Err(Error::shape(
                "cholesky",
                format!("{}x{} is not square", a.rows, a.cols),
            ));
        }
        check_symmetric(a)?;

        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a.get(i, i).abs()));
        let floor = T::lit(PIVOT_TOL) * T::from_count(n) * max_diag;

        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let d = a.get(j, j) - dot(lj, lj);
            if d.is_nan() || d <= floor {
                return Err(Error::Singular {
                    pivot: j,
                    value: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l.data[j * n + j] = djj;
            for i in j + 1..n {
                let (upper, lower) = l.data.split_at_mut(i * n);
                let lj = &upper[j * n..j * n + j];
                let li = &mut lower[..n];
                li[j] = (a.get(i, j) - dot(&li[..j], lj)) / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor_matrix(&self) -> &DenseMatrix<T> {
        &self.l
    }

    /// Solves `a X = b` for every column of `b`.
    pub fn solve(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let n = self.l.rows;
        if b.rows != n {
            return Err(Error::shape(
                "cholesky_solve",
                format!("system is {n}x{n}, right-hand side has {} rows", b.rows),
            ));
        }
        let c = b.cols;
        let mut x = b.clone();

        // L z = b
        for i in 0..n {
            let li = self.l.row(i);
            let (done, rest) = x.data.split_at_mut(i * c);
            let xi = &mut rest[..c];
            for (k, &lik) in li[..i].iter().enumerate() {
                if lik.is_zero() {
                    continue;
                }
                for (v, &z) in xi.iter_mut().zip(&done[k * c..(k + 1) * c]) {
                    *v -= lik * z;
                }
            }
            let d = li[i];
            for v in xi.iter_mut() {
                *v /= d;
            }
        }

        // Lᵀ x = z
        for i in (0..n).rev() {
            let (head, solved) = x.data.split_at_mut((i + 1) * c);
            let xi = &mut head[i * c..];
            for k in i + 1..n {
                let lki = self.l.get(k, i);
                if lki.is_zero() {
                    continue;
                }
                let off = (k - i - 1) * c;
                for (v, &z) in xi.iter_mut().zip(&solved[off..off + c]) {
                    *v -= lki * z;
                }
            }
            let d = self.l.get(i, i);
            for v in xi.iter_mut() {
                *v /= d;
            }
        }
        Ok(x)
    }
}

/// Solves `a X = b` for symmetric positive-definite `a` via Cholesky.
///
/// `b` may carry several right-hand sides. A non-positive pivot is reported
/// as [`Error::Singular`] with its index.
pub fn solve_spd<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if b.rows != a.rows {
        return Err(Error::shape(
            "solve_spd",
            format!("{}x{} system, {}x{} right-hand side", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    Cholesky::factor(a)?.solve(b)
}

fn check_symmetric<T: Scalar>(a: &DenseMatrix<T>) -> Result<()> {
    let tol = T::lit(SYMMETRY_TOL) * a.max_abs();
    let n = a.rows;
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > tol {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{first_order_diff, second_order_diff};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
        let b = random(n + 3, n, rng);
        let mut a = gram(&b);
        for i in 0..n {
            let v = a.get(i, i) + 0.1;
            a.set(i, i, v);
        }
        a
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(DenseMatrix::<f64>::new(0, 3, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0, f64::NAN, 3.0, 4.0]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn matmul_identity_and_hand_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(3, 3, &mut rng);
        assert_eq!(matmul(&DenseMatrix::identity(3), &m).unwrap(), m);

        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let p = matmul(&a, &b).unwrap();
        assert_eq!(p.as_slice(), &[3.0, 7.0]);

        assert!(matches!(matmul(&b, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn matmul_squares_first_difference() {
        let d1 = first_order_diff::<f64>(4).unwrap();
        let sq = matmul(&d1.matrix, &d1.matrix).unwrap();
        // Explicit (1, -1) stencil applied twice, boundary row kept as e_3.
        let expected = DenseMatrix::from_rows(&[
            [1.0, -2.0, 1.0, 0.0],
            [0.0, 1.0, -2.0, 1.0],
            [0.0, 0.0, 1.0, -2.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(sq, expected);
        assert_eq!(second_order_diff::<f64>(4).unwrap().matrix, expected);
    }

    #[test]
    fn tr_matmul_matches_transpose_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(7, 4, &mut rng);
        let b = random(7, 3, &mut rng);
        let direct = tr_matmul(&a, &b).unwrap();
        let via = matmul(&a.transpose(), &b).unwrap();
        assert!(direct.max_abs_diff(&via).unwrap() < 1e-14);
    }

    #[test]
    fn gram_cases() {
        assert_eq!(gram(&DenseMatrix::<f64>::identity(3)), DenseMatrix::identity(3));
        let g = gram(&DenseMatrix::from_rows(&[[1.0], [2.0]]).unwrap());
        assert_eq!(g.as_slice(), &[5.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random(10, 20, &mut rng);
        let g = gram(&phi);
        for i in 0..20 {
            for j in 0..20 {
                assert!((g.get(i, j) - g.get(j, i)).abs() <= 1e-12);
            }
        }
        let via = matmul(&phi.transpose(), &phi).unwrap();
        assert!(g.max_abs_diff(&via).unwrap() <= 1e-12);
    }

    #[test]
    fn solve_spd_hand_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random(4, 2, &mut rng);
        let x = solve_spd(&DenseMatrix::identity(4), &b).unwrap();
        assert!(x.max_abs_diff(&b).unwrap() < 1e-15);

        let a = DenseMatrix::<f64>::from_rows(&[[4.0, 0.0], [0.0, 9.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[8.0], [27.0]]).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        assert!((x.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((x.get(1, 0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn solve_spd_residual_on_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_spd(20, &mut rng);
        let b = random(20, 3, &mut rng);
        let x = solve_spd(&a, &b).unwrap();
        let r = matmul(&a, &x).unwrap().sub(&b).unwrap().frobenius_norm();
        let bound = 1e-8 * (a.frobenius_norm() * x.frobenius_norm() + b.frobenius_norm());
        assert!(r <= bound, "residual {r} > {bound}");
    }

    #[test]
    fn solve_spd_reports_failing_pivot() {
        // Leading 2x2 block is PD, third pivot is 1 - 1 - 1 = -1.
        let a = DenseMatrix::from_rows(&[
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
        ])
        .unwrap();
        let b = DenseMatrix::zeros(3, 1);
        match solve_spd(&a, &b) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("expected singular pivot, got {other:?}"),
        }
        let semi = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_spd(&semi, &DenseMatrix::zeros(2, 1)),
            Err(Error::Singular { pivot: 1, .. })
        ));
    }

    #[test]
    fn solve_spd_rejects_asymmetric_and_mismatched() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]).unwrap();
        assert!(matches!(
            solve_spd(&a, &DenseMatrix::zeros(2, 1)),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            solve_spd(&DenseMatrix::<f64>::identity(2), &DenseMatrix::zeros(3, 1)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn column_norms() {
        assert_eq!(l2_norm_columns(&DenseMatrix::<f64>::zeros(4, 3)), vec![0.0; 3]);
        let m = DenseMatrix::from_rows(&[[3.0], [4.0]]).unwrap();
        assert_eq!(l2_norm_columns(&m), vec![5.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random(50, 3, &mut rng);
        let norms = l2_norm_columns(&m);
        for (j, n) in norms.iter().enumerate() {
            let oracle = m.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - oracle).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_precision_solve() {
        let a = DenseMatrix::<f32>::from_rows(&[[4.0, 1.0], [1.0, 3.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        let r = matmul(&a, &x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(r < 1e-5);
    }
}
