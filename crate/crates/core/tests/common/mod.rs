//! Reference routines that share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

/// Least-squares solution of `min ‖B x − b‖₂` by Householder QR.
/// `b_rows` is row-major, `m x n` with `m >= n` and full column rank.
pub fn lstsq_qr(b_rows: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let m = b_rows.len();
    let n = b_rows[0].len();
    let mut a: Vec<Vec<f64>> = b_rows.to_vec();
    let mut r = rhs.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vv;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * r[i]).sum();
        let f = 2.0 * dot / vv;
        for i in k..m {
            r[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (r[k] - s) / a[k][k];
    }
    x
}

/// Stacked form of the regularized analysis problem:
/// `min ‖φx − y‖² + λ ‖Ω_Λ x‖²` as least squares on `[φ; √λ Ω_Λ]`.
pub fn stacked_estimate(
    phi: &[Vec<f64>],
    omega: &[Vec<f64>],
    cosupport: &[usize],
    lambda: f64,
    y: &[f64],
) -> Vec<f64> {
    let s = lambda.sqrt();
    let mut rows: Vec<Vec<f64>> = phi.to_vec();
    let mut rhs = y.to_vec();
    for &i in cosupport {
        rows.push(omega[i].iter().map(|v| v * s).collect());
        rhs.push(0.0);
    }
    lstsq_qr(&rows, &rhs)
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}
