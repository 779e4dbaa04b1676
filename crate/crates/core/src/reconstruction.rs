//! Greedy reconstruction algorithms.
//!
//! * [`gap`] / [`sgap`]: greedy analysis pursuit. Start from the full
//!   co-support of `Ω`, repeatedly drop the `t` rows where `|Ω x̂|` is
//!   largest and re-solve the regularized system
//!   `(φᵀφ + λ Ω_Λᵀ Ω_Λ) X̂ = φᵀY`. The multi-channel form aggregates
//!   `Ω X̂` across channels with a row sum, so all channels share one
//!   co-support and one multi-right-hand-side solve per iteration.
//! * [`ommp`] / [`sommp`]: orthogonal matching pursuit in a synthesis
//!   dictionary, adding several atoms per iteration.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{gram, l2_norm_columns, matmul, tr_matmul, Cholesky, DenseMatrix};
use crate::operators::{AnalysisOperator, MeasurementMatrix, SynthesisDictionary};
use crate::scalar::Scalar;

/// Ridge added to a rank-deficient least-squares system in matching
/// pursuit, relative to the mean diagonal of the normal matrix.
pub const RIDGE_FALLBACK: f64 = 1e-10;

/// How `Ω X̂` is collapsed to one score per row across channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RowAggregation {
    /// `|Σ_c α_ic|`, the plain row sum.
    #[default]
    Signed,
    /// `Σ_c |α_ic|`; immune to cancellation between opposite-polarity leads.
    Absolute,
}

/// Comparison between consecutive residual ratios `r_k(i)`, `r_{k-1}(i)`
/// that ends the pruning loop when it holds for at least one channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RatioTest {
    /// `|r_k| > |r_{k-1}|`: the relative change in norm grew.
    #[default]
    Magnitude,
    /// `r_k > r_{k-1}` on the signed values.
    Signed,
    /// Never fires; only the iteration cap, exhaustion or a singular
    /// system end the loop.
    Off,
}

impl RatioTest {
    #[inline]
    fn fires<T: Scalar>(self, current: T, previous: T) -> bool {
        match self {
            RatioTest::Magnitude => current.abs() > previous.abs(),
            RatioTest::Signed => current > previous,
            RatioTest::Off => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GapConfig<T> {
    /// Co-support rows removed per iteration.
    pub t: usize,
    /// Weight of the analysis penalty.
    pub lambda: T,
    /// Replaces the default cap `⌊(p - t) / t⌋`.
    pub k_max_override: Option<usize>,
    /// Return the previous iterate when the residual-ratio test fires.
    pub keep_previous_on_stop: bool,
    pub aggregation: RowAggregation,
    /// Compute `φᵀφ` and `φᵀY` once instead of before every solve.
    pub precalculate: bool,
    pub ratio_test: RatioTest,
}

impl<T: Scalar> Default for GapConfig<T> {
    fn default() -> Self {
        Self {
            t: 10,
            lambda: T::lit(0.05),
            k_max_override: None,
            keep_previous_on_stop: false,
            aggregation: RowAggregation::Signed,
            precalculate: true,
            ratio_test: RatioTest::Magnitude,
        }
    }
}

impl<T: Scalar> GapConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Config("t must be at least 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda <= T::zero() {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn k_max(&self, p: usize) -> usize {
        self.k_max_override.unwrap_or_else(|| k_max(p, self.t))
    }
}

/// Iteration cap `⌊(p - t) / t⌋`.
pub fn k_max(p: usize, t: usize) -> usize {
    p.saturating_sub(t) / t.max(1)
}

#[derive(Clone, Debug)]
pub struct PursuitConfig<T> {
    pub atoms_per_iter: usize,
    /// Stop once `‖y - A s‖₂ / ‖y‖₂` is at or below this for every channel.
    pub residual_tol: T,
    /// Defaults to `⌈M / atoms_per_iter⌉` for a dictionary with M atoms.
    pub max_iter: Option<usize>,
}

impl<T: Scalar> Default for PursuitConfig<T> {
    fn default() -> Self {
        Self {
            atoms_per_iter: 4,
            residual_tol: T::lit(1e-4),
            max_iter: None,
        }
    }
}

impl<T: Scalar> PursuitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.atoms_per_iter == 0 {
            return Err(Error::Config("atoms_per_iter must be at least 1".into()));
        }
        if self.residual_tol.is_nan() || self.residual_tol <= T::zero() {
            return Err(Error::Config("residual_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn max_iter(&self, atoms: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| atoms.div_ceil(self.atoms_per_iter))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Iteration cap reached.
    MaxIterations,
    /// The residual-ratio test fired for some channel.
    ResidualRatioIncrease,
    /// Every co-support row was removed.
    CoSupportExhausted,
    /// The estimate is identically zero; there is nothing to prune.
    ZeroEstimate,
    /// A pruned system lost positive definiteness; the last good estimate
    /// is returned.
    SingularSystem,
    /// Every channel's relative residual reached the tolerance.
    ResidualTolerance,
    /// The support holds as many atoms as there are measurements.
    SupportFull,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<T> {
    /// Signal estimate, N x c.
    pub estimate: DenseMatrix<T>,
    pub iterations: usize,
    /// Co-support (analysis) or support (synthesis) behind `estimate`,
    /// ascending.
    pub index_set: Vec<usize>,
    /// Index-set size after each iteration; entry 0 is the initial size.
    pub index_set_sizes: Vec<usize>,
    /// Analysis pursuit: `r_k` per channel for every completed solve after
    /// the first.
    pub residual_ratio_history: Vec<Vec<T>>,
    /// Matching pursuit: relative residual per channel after each
    /// iteration.
    pub residual_history: Vec<Vec<T>>,
    pub solve_count: usize,
    /// Matrix products evaluated (`φᵀφ`, `φᵀY`, `Ω_ΛᵀΩ_Λ`, `Ω X̂`, `AᵀR`).
    pub matrix_products: usize,
    pub stop_reason: StopReason,
    /// Matching pursuit only: a ridge was needed for a rank-deficient fit.
    pub ridge_fallback: bool,
    /// Matching pursuit only: dictionary coefficients, M x c.
    pub coefficients: Option<DenseMatrix<T>>,
    pub wall_time: Duration,
}

/// Per-channel `1 - ‖current_i‖ / ‖previous_i‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRatios<T> {
    pub values: Vec<T>,
    /// Channels whose previous column was zero; their ratio is 0.
    pub converged: Vec<bool>,
}

pub fn residual_ratio<T: Scalar>(
    current: &DenseMatrix<T>,
    previous: &DenseMatrix<T>,
) -> Result<ResidualRatios<T>> {
    if current.dims() != previous.dims() {
        return Err(Error::shape(
            "residual_ratio",
            format!("{:?} vs {:?}", current.dims(), previous.dims()),
        ));
    }
    let cur = l2_norm_columns(current);
    let prev = l2_norm_columns(previous);
    let mut values = Vec::with_capacity(cur.len());
    let mut converged = Vec::with_capacity(cur.len());
    for (c, p) in cur.into_iter().zip(prev) {
        if p.is_zero() {
            values.push(T::zero());
            converged.push(true);
        } else {
            values.push(T::one() - c / p);
            converged.push(false);
        }
    }
    Ok(ResidualRatios { values, converged })
}

/// Solves `(φᵀφ + λ Ω_Λᵀ Ω_Λ) X̂ = φᵀY` by Cholesky, where `Ω_Λ` is `Ω`
/// with the rows outside `cosupport` zeroed.
pub fn solve_estimate<T: Scalar>(
    phi_gram: &DenseMatrix<T>,
    phi_y: &DenseMatrix<T>,
    omega: &AnalysisOperator<T>,
    cosupport: &[usize],
    lambda: T,
) -> Result<DenseMatrix<T>> {
    let mut mask = vec![false; omega.p];
    for &i in cosupport {
        if i >= omega.p {
            return Err(Error::shape(
                "solve_estimate",
                format!("co-support index {i} out of range for p = {}", omega.p),
            ));
        }
        mask[i] = true;
    }
    solve_masked(phi_gram, phi_y, omega, &mask, lambda)
}

fn solve_masked<T: Scalar>(
    phi_gram: &DenseMatrix<T>,
    phi_y: &DenseMatrix<T>,
    omega: &AnalysisOperator<T>,
    mask: &[bool],
    lambda: T,
) -> Result<DenseMatrix<T>> {
    let n = omega.n_signal;
    if phi_gram.dims() != (n, n) || phi_y.rows() != n {
        return Err(Error::shape(
            "solve_estimate",
            format!(
                "φᵀφ is {:?}, φᵀY is {:?}, Ω has {n} columns",
                phi_gram.dims(),
                phi_y.dims()
            ),
        ));
    }
    let penalty = omega.masked_gram(mask).scale(lambda);
    let system = phi_gram.add(&penalty)?;
    Cholesky::factor(&system)?.solve(phi_y)
}

/// Single-channel greedy analysis pursuit. `y` must be an `n x 1` column.
pub fn gap<T: Scalar>(
    y: &DenseMatrix<T>,
    phi: &MeasurementMatrix<T>,
    omega: &AnalysisOperator<T>,
    cfg: &GapConfig<T>,
) -> Result<ReconstructionResult<T>> {
    if y.cols() != 1 {
        return Err(Error::shape(
            "gap",
            format!("expected a single measurement column, got {}", y.cols()),
        ));
    }
    analysis_pursuit(y, phi, omega, cfg)
}

/// Simultaneous greedy analysis pursuit over the columns of `y` (n x c).
pub fn sgap<T: Scalar>(
    y: &DenseMatrix<T>,
    phi: &MeasurementMatrix<T>,
    omega: &AnalysisOperator<T>,
    cfg: &GapConfig<T>,
) -> Result<ReconstructionResult<T>> {
    analysis_pursuit(y, phi, omega, cfg)
}

fn analysis_pursuit<T: Scalar>(
    y: &DenseMatrix<T>,
    phi: &MeasurementMatrix<T>,
    omega: &AnalysisOperator<T>,
    cfg: &GapConfig<T>,
) -> Result<ReconstructionResult<T>> {
    cfg.validate()?;
    let phi_m = &phi.matrix;
    if y.rows() != phi_m.rows() {
        return Err(Error::shape(
            "gap",
            format!("{} measurements for a {}-row φ", y.rows(), phi_m.rows()),
        ));
    }
    if omega.n_signal != phi_m.cols() {
        return Err(Error::shape(
            "gap",
            format!("Ω has {} columns, φ has {}", omega.n_signal, phi_m.cols()),
        ));
    }

    let start = Instant::now();
    let p = omega.p;
    let k_max = cfg.k_max(p);
    let mut products = 0usize;

    let cached = if cfg.precalculate {
        products += 2;
        Some((gram(phi_m), tr_matmul(phi_m, y)?))
    } else {
        None
    };
    let solve = |mask: &[bool], products: &mut usize| -> Result<DenseMatrix<T>> {
        *products += 1; // Ω_ΛᵀΩ_Λ
        match &cached {
            Some((g, py)) => solve_masked(g, py, omega, mask, cfg.lambda),
            None => {
                *products += 2;
                let g = gram(phi_m);
                let py = tr_matmul(phi_m, y)?;
                solve_masked(&g, &py, omega, mask, cfg.lambda)
            }
        }
    };

    let mut mask = vec![true; p];
    let mut cosupport_len = p;
    let mut estimate = solve(&mask, &mut products)?;
    let mut estimate_mask = mask.clone();
    let mut solves = 1usize;
    let mut sizes = vec![p];
    let mut ratios: Vec<Vec<T>> = Vec::new();
    let mut iterations = 0usize;
    let stop;

    let mut scores = vec![T::zero(); p];
    let mut candidates: Vec<usize> = Vec::with_capacity(p);

    loop {
        if iterations >= k_max {
            stop = StopReason::MaxIterations;
            break;
        }
        if estimate.is_zero() {
            stop = StopReason::ZeroEstimate;
            break;
        }
        iterations += 1;

        let alpha = omega.apply(&estimate)?;
        products += 1;
        for (i, s) in scores.iter_mut().enumerate() {
            let row = alpha.row(i);
            *s = match cfg.aggregation {
                RowAggregation::Signed => row.iter().copied().sum::<T>().abs(),
                RowAggregation::Absolute => row.iter().map(|v| v.abs()).sum(),
            };
        }

        candidates.clear();
        candidates.extend((0..p).filter(|&i| mask[i]));
        let remove = cfg.t.min(cosupport_len);
        select_largest(&mut candidates, &scores, remove);
        for &i in &candidates[..remove] {
            mask[i] = false;
        }
        cosupport_len -= remove;
        sizes.push(cosupport_len);

        let next = solve(&mask, &mut products);
        solves += 1;
        let next = match next {
            Ok(x) => x,
            Err(Error::Singular { .. }) => {
                stop = StopReason::SingularSystem;
                break;
            }
            Err(e) => return Err(e),
        };

        let r = residual_ratio(&next, &estimate)?.values;
        let increased = ratios
            .last()
            .is_some_and(|prev| r.iter().zip(prev).any(|(&a, &b)| cfg.ratio_test.fires(a, b)));
        ratios.push(r);
        if increased {
            stop = StopReason::ResidualRatioIncrease;
            if !cfg.keep_previous_on_stop {
                estimate = next;
                estimate_mask.clone_from(&mask);
            }
            break;
        }
        estimate = next;
        estimate_mask.clone_from(&mask);
        if cosupport_len == 0 {
            stop = StopReason::CoSupportExhausted;
            break;
        }
    }

    Ok(ReconstructionResult {
        estimate,
        iterations,
        index_set: (0..p).filter(|&i| estimate_mask[i]).collect(),
        index_set_sizes: sizes,
        residual_ratio_history: ratios,
        residual_history: Vec::new(),
        solve_count: solves,
        matrix_products: products,
        stop_reason: stop,
        ridge_fallback: false,
        coefficients: None,
        wall_time: start.elapsed(),
    })
}

/// Moves the `k` best-scoring indices to the front of `idx`, ordered by
/// score descending, lowest index first among ties.
fn select_largest<T: Scalar>(idx: &mut [usize], scores: &[T], k: usize) {
    let cmp = |a: &usize, b: &usize| {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k == 0 {
        return;
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx[..k].sort_unstable_by(cmp);
}

/// Effective matching-pursuit dictionary `A = φΨ`, optionally remembering
/// `Ψ` so estimates come back in the signal domain.
#[derive(Clone, Debug)]
pub struct SensingDictionary<T> {
    pub matrix: DenseMatrix<T>,
    pub synthesis: Option<DenseMatrix<T>>,
    column_norms: Vec<T>,
}

impl<T: Scalar> SensingDictionary<T> {
    pub fn new(phi: &MeasurementMatrix<T>, psi: &SynthesisDictionary<T>) -> Result<Self> {
        let a = matmul(&phi.matrix, &psi.matrix)?;
        let mut d = Self::from_matrix(a)?;
        d.synthesis = Some(psi.matrix.clone());
        Ok(d)
    }

    /// Uses `a` directly; estimates are the coefficients themselves.
    pub fn from_matrix(a: DenseMatrix<T>) -> Result<Self> {
        let column_norms = l2_norm_columns(&a);
        if let Some(j) = column_norms.iter().position(|n| n.is_zero()) {
            return Err(Error::Config(format!("dictionary column {j} is zero")));
        }
        Ok(Self {
            matrix: a,
            synthesis: None,
            column_norms,
        })
    }

    pub fn atoms(&self) -> usize {
        self.matrix.cols()
    }
}

/// Orthogonal multiple matching pursuit on a single measurement column.
pub fn ommp<T: Scalar>(
    y: &DenseMatrix<T>,
    dict: &SensingDictionary<T>,
    cfg: &PursuitConfig<T>,
) -> Result<ReconstructionResult<T>> {
    if y.cols() != 1 {
        return Err(Error::shape(
            "ommp",
            format!("expected a single measurement column, got {}", y.cols()),
        ));
    }
    matching_pursuit(y, dict, cfg)
}

/// Simultaneous orthogonal multiple matching pursuit: one support shared by
/// every column of `y`, atoms scored by `Σ_c |⟨a_j, r_c⟩| / ‖a_j‖`.
pub fn sommp<T: Scalar>(
    y: &DenseMatrix<T>,
    dict: &SensingDictionary<T>,
    cfg: &PursuitConfig<T>,
) -> Result<ReconstructionResult<T>> {
    matching_pursuit(y, dict, cfg)
}

fn matching_pursuit<T: Scalar>(
    y: &DenseMatrix<T>,
    dict: &SensingDictionary<T>,
    cfg: &PursuitConfig<T>,
) -> Result<ReconstructionResult<T>> {
    cfg.validate()?;
    let a = &dict.matrix;
    let (n, m) = a.dims();
    let c = y.cols();
    if y.rows() != n {
        return Err(Error::shape(
            "ommp",
            format!("{} measurements for a {n}-row dictionary", y.rows()),
        ));
    }

    let start = Instant::now();
    let max_iter = cfg.max_iter(m);
    let capacity = n.min(m);
    let y_norms = l2_norm_columns(y);
    let relative = |res: &DenseMatrix<T>| -> Vec<T> {
        l2_norm_columns(res)
            .into_iter()
            .zip(&y_norms)
            .map(|(r, &yn)| if yn.is_zero() { T::zero() } else { r / yn })
            .collect()
    };

    let mut selected = vec![false; m];
    let mut support: Vec<usize> = Vec::new();
    let mut residual = y.clone();
    let mut support_coeffs: Option<DenseMatrix<T>> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut solves = 0;
    let mut products = 0;
    let mut ridge_used = false;
    let mut scores = vec![T::zero(); m];
    let mut candidates = Vec::with_capacity(m);
    let mut rel = relative(&residual);

    let stop = loop {
        if rel.iter().all(|&r| r <= cfg.residual_tol) {
            break StopReason::ResidualTolerance;
        }
        if iterations >= max_iter {
            break StopReason::MaxIterations;
        }
        if support.len() >= capacity {
            break StopReason::SupportFull;
        }
        iterations += 1;

        let corr = tr_matmul(a, &residual)?;
        products += 1;
        for (j, s) in scores.iter_mut().enumerate() {
            *s = corr.row(j).iter().map(|v| v.abs()).sum::<T>() / dict.column_norms[j];
        }
        candidates.clear();
        candidates.extend((0..m).filter(|&j| !selected[j]));
        let take = cfg.atoms_per_iter.min(capacity - support.len());
        select_largest(&mut candidates, &scores, take);
        for &j in &candidates[..take] {
            selected[j] = true;
            support.push(j);
        }

        let a_s = a.select_columns(&support);
        let normal = gram(&a_s);
        let rhs = tr_matmul(&a_s, y)?;
        products += 2;
        solves += 1;
        let coeffs = match Cholesky::factor(&normal) {
            Ok(ch) => ch.solve(&rhs)?,
            Err(Error::Singular { .. }) => {
                ridge_used = true;
                let k = normal.rows();
                let mean_diag =
                    (0..k).map(|i| normal.get(i, i)).sum::<T>() / T::from_count(k);
                let ridge = T::lit(RIDGE_FALLBACK) * mean_diag.max(T::min_positive_value());
                let mut reg = normal.clone();
                for i in 0..k {
                    reg.set(i, i, reg.get(i, i) + ridge);
                }
                Cholesky::factor(&reg)?.solve(&rhs)?
            }
            Err(e) => return Err(e),
        };
        residual = y.sub(&matmul(&a_s, &coeffs)?)?;
        rel = relative(&residual);
        history.push(rel.clone());
        support_coeffs = Some(coeffs);
    };

    let mut coefficients = DenseMatrix::zeros(m, c);
    if let Some(sc) = &support_coeffs {
        for (k, &j) in support.iter().enumerate() {
            coefficients.row_mut(j).copy_from_slice(sc.row(k));
        }
    }
    let estimate = match &dict.synthesis {
        Some(psi) => matmul(psi, &coefficients)?,
        None => coefficients.clone(),
    };
    let mut sizes = vec![0];
    let mut acc = 0;
    for _ in 0..iterations {
        acc = (acc + cfg.atoms_per_iter).min(capacity);
        sizes.push(acc);
    }
    let mut index_set = support;
    index_set.sort_unstable();

    Ok(ReconstructionResult {
        estimate,
        iterations,
        index_set,
        index_set_sizes: sizes,
        residual_ratio_history: Vec::new(),
        residual_history: history,
        solve_count: solves,
        matrix_products: products,
        stop_reason: stop,
        ridge_fallback: ridge_used,
        coefficients: Some(coefficients),
        wall_time: start.elapsed(),
    })
}
