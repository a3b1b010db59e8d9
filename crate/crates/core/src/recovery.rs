//! Sparse recovery for neighbour detection: one step thresholding (OST) and
//! normalised iterative hard thresholding (NIHT).
//!
//! Thresholding is by complex modulus and ties go to the lowest column
//! index. Columns an operator reports as non-candidates (the query itself
//! and columns blind to the query) are never selected.

use log::warn;

use crate::channel::GroundTruth;
use crate::codebook::{CollapsedCodebook, DenseMatrix};
use crate::{Complex64, Error, Result};

/// Linear measurement operator seen by the recovery algorithms.
pub trait SensingOperator {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// Whether column `j` may appear in a detected support.
    fn is_candidate(&self, j: usize) -> bool;
    /// `A x` for sparse `x`.
    fn apply_sparse(&self, entries: &[(usize, Complex64)]) -> Vec<Complex64>;
    /// `A^* y`.
    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>>;
}

impl SensingOperator for CollapsedCodebook<'_> {
    fn n_rows(&self) -> usize {
        CollapsedCodebook::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        CollapsedCodebook::n_cols(self)
    }

    fn is_candidate(&self, j: usize) -> bool {
        !self.is_blind(j)
    }

    fn apply_sparse(&self, entries: &[(usize, Complex64)]) -> Vec<Complex64> {
        self.forward_sparse(entries)
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.adjoint(y)
    }
}

/// An explicit real matrix as a sensing operator; all-zero columns are
/// not candidates.
#[derive(Clone, Debug)]
pub struct ExplicitOperator {
    matrix: DenseMatrix,
    candidate: Vec<bool>,
}

impl ExplicitOperator {
    pub fn new(matrix: DenseMatrix) -> Self {
        let candidate = matrix.as_array().columns().into_iter().map(|c| c.iter().any(|v| *v != 0.0)).collect();
        ExplicitOperator { matrix, candidate }
    }

    /// Additionally removes `j` from the candidate set.
    pub fn exclude(mut self, j: usize) -> Self {
        self.candidate[j] = false;
        self
    }
}

impl SensingOperator for ExplicitOperator {
    fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    fn is_candidate(&self, j: usize) -> bool {
        self.candidate[j]
    }

    fn apply_sparse(&self, entries: &[(usize, Complex64)]) -> Vec<Complex64> {
        let a = self.matrix.as_array();
        let mut y = vec![Complex64::new(0.0, 0.0); a.nrows()];
        for &(j, v) in entries {
            for (yi, &aij) in y.iter_mut().zip(a.column(j)) {
                *yi += v * aij;
            }
        }
        y
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.n_rows() {
            return Err(Error::DimensionMismatch { expected: self.n_rows(), actual: y.len() });
        }
        Ok(self.matrix.as_array().columns().into_iter().map(|c| c.iter().zip(y).map(|(&a, &v)| v * a).sum()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryParams {
    /// Sparsity target `s`.
    pub s: usize,
    pub max_iters: usize,
    /// Stop once the residual norm changes by less than this fraction.
    pub tol_residual_rel: f64,
    /// Step safety factor `c` in `(0, 1)`.
    pub step_safety: f64,
    /// Step shrink factor `kappa > 1 / (1 - c)`.
    pub step_shrink: f64,
}

impl RecoveryParams {
    pub fn new(s: usize) -> Self {
        let c = 0.01;
        RecoveryParams { s, max_iters: 100, tol_residual_rel: 1e-6, step_safety: c, step_shrink: 2.0 / (1.0 - c) }
    }

    // Negated comparisons so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.s == 0 {
            return bad("sparsity target s must be at least 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.step_safety > 0.0 && self.step_safety < 1.0) {
            return bad(format!("step safety c = {} outside (0, 1)", self.step_safety));
        }
        if !(self.step_shrink > 1.0 / (1.0 - self.step_safety)) {
            return bad(format!("step shrink kappa = {} must exceed 1/(1-c)", self.step_shrink));
        }
        if !(self.tol_residual_rel >= 0.0) {
            return bad("tolerance must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    /// Detected columns, ascending.
    pub support: Vec<usize>,
    /// Signal estimate on `support` (NIHT only).
    pub estimate: Option<Vec<(usize, Complex64)>>,
    pub iterations: usize,
    pub converged: bool,
    /// Step-size reductions made by NIHT.
    pub backtracks: usize,
}

/// Indices of the `s` largest `scores` among candidates, ties to the lowest
/// index, returned ascending.
pub fn top_s(scores: &[f64], s: usize, is_candidate: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&j| is_candidate(j)).collect();
    if s < idx.len() {
        let order = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
        if s > 0 {
            idx.select_nth_unstable_by(s - 1, order);
        }
        idx.truncate(s);
    }
    idx.sort_unstable();
    idx
}

fn check_inputs(op: &(impl SensingOperator + ?Sized), y: &[Complex64], s: usize) -> Result<()> {
    if s == 0 || s > op.n_cols() {
        return Err(Error::InvalidParameter(format!("sparsity target {s} outside 1..={}", op.n_cols())));
    }
    if y.len() != op.n_rows() {
        return Err(Error::DimensionMismatch { expected: op.n_rows(), actual: y.len() });
    }
    Ok(())
}

/// One step thresholding: the `s` columns with the largest `|(A^q)^* y|`.
pub fn ost(op: &(impl SensingOperator + ?Sized), y_bar: &[Complex64], s: usize) -> Result<RecoveryResult> {
    check_inputs(op, y_bar, s)?;
    let g = op.apply_adjoint(y_bar)?;
    let scores: Vec<f64> = g.iter().map(|v| v.norm()).collect();
    let support = top_s(&scores, s, |j| op.is_candidate(j));
    Ok(RecoveryResult { support, estimate: None, iterations: 1, converged: true, backtracks: 0 })
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Shrinks before accepting a support change are capped at this count.
const MAX_BACKTRACKS: usize = 60;

/// Normalised iterative hard thresholding.
///
/// Starting from `x = 0`, each iteration takes the gradient
/// `g = A^*(y - A x)`, the step `mu = |g_T|^2 / |A g_T|^2` on the current
/// support `T` (initially the top `s` of `|A^* y|`), and proposes
/// `x' = H_s(x + mu g)`. A proposal that changes the support is accepted
/// only once `mu <= (1 - c) |x' - x|^2 / |A (x' - x)|^2`, shrinking
/// `mu <- mu / (kappa (1 - c))` in between. Iteration stops at
/// `max_iters` or when the residual norm changes by less than
/// `tol_residual_rel` relative to its previous value.
pub fn niht(
    op: &(impl SensingOperator + ?Sized),
    y_bar: &[Complex64],
    params: &RecoveryParams,
) -> Result<RecoveryResult> {
    params.validate()?;
    let s = params.s;
    check_inputs(op, y_bar, s)?;
    let n = op.n_cols();
    let zero = Complex64::new(0.0, 0.0);
    let candidate: Vec<bool> = (0..n).map(|j| op.is_candidate(j)).collect();
    let shrink = params.step_shrink * (1.0 - params.step_safety);

    let mut x: Vec<(usize, Complex64)> = Vec::new();
    let mut residual = y_bar.to_vec();
    let mut res_norm = norm_sqr(&residual).sqrt();
    let mut support: Vec<usize> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut backtracks = 0;
    let mut xs_dense = vec![zero; n];
    let mut scores = vec![0.0f64; n];

    if res_norm == 0.0 {
        converged = true;
    }
    while !converged && iterations < params.max_iters {
        iterations += 1;
        let g = op.apply_adjoint(&residual)?;
        if g.iter().zip(&candidate).all(|(v, &c)| !c || *v == zero) {
            converged = true;
            break;
        }
        if support.is_empty() {
            for (sc, v) in scores.iter_mut().zip(&g) {
                *sc = v.norm();
            }
            support = top_s(&scores, s, |j| candidate[j]);
        }
        let g_support: Vec<(usize, Complex64)> = support.iter().map(|&j| (j, g[j])).collect();
        let g_norm2: f64 = g_support.iter().map(|(_, v)| v.norm_sqr()).sum();
        let ag_norm2 = norm_sqr(&op.apply_sparse(&g_support));
        let mut mu = if g_norm2 > 0.0 && ag_norm2 > 0.0 {
            g_norm2 / ag_norm2
        } else {
            warn!("NIHT: degenerate step size (|g_T|^2 = {g_norm2}, |A g_T|^2 = {ag_norm2}); using mu = 1");
            1.0
        };

        for &(j, v) in &x {
            xs_dense[j] = v;
        }
        let (new_support, new_x) = loop {
            for j in 0..n {
                scores[j] = (xs_dense[j] + g[j] * mu).norm();
            }
            let proposal_support = top_s(&scores, s, |j| candidate[j]);
            let proposal: Vec<(usize, Complex64)> =
                proposal_support.iter().map(|&j| (j, xs_dense[j] + g[j] * mu)).collect();
            if proposal_support == support {
                break (proposal_support, proposal);
            }
            let mut diff: Vec<(usize, Complex64)> = proposal.clone();
            for &(j, v) in &x {
                match diff.binary_search_by_key(&j, |e| e.0) {
                    Ok(k) => diff[k].1 -= v,
                    Err(k) => diff.insert(k, (j, -v)),
                }
            }
            let d_norm2: f64 = diff.iter().map(|(_, v)| v.norm_sqr()).sum();
            let ad_norm2 = norm_sqr(&op.apply_sparse(&diff));
            let omega = if ad_norm2 > 0.0 { (1.0 - params.step_safety) * d_norm2 / ad_norm2 } else { f64::INFINITY };
            if mu <= omega || backtracks_exhausted(backtracks, iterations) {
                break (proposal_support, proposal);
            }
            mu /= shrink;
            backtracks += 1;
        };
        for &(j, _) in &x {
            xs_dense[j] = zero;
        }

        support = new_support;
        x = new_x;
        let ax = op.apply_sparse(&x);
        for ((r, y), a) in residual.iter_mut().zip(y_bar).zip(&ax) {
            *r = y - a;
        }
        let new_norm = norm_sqr(&residual).sqrt();
        let change = (res_norm - new_norm).abs();
        let prev = res_norm;
        res_norm = new_norm;
        if new_norm == 0.0 || change <= params.tol_residual_rel * prev {
            converged = true;
        }
    }

    Ok(RecoveryResult {
        support: if x.is_empty() { support } else { x.iter().map(|e| e.0).collect() },
        estimate: Some(x),
        iterations,
        converged,
        backtracks,
    })
}

fn backtracks_exhausted(total: usize, iterations: usize) -> bool {
    total >= MAX_BACKTRACKS * iterations
}

/// `(|support hit|, |truth|)` for one trial.
pub fn detection_counts(result: &RecoveryResult, truth: &GroundTruth) -> (usize, usize) {
    let hit = truth.support.iter().filter(|j| result.support.binary_search(j).is_ok()).count();
    (hit, truth.len())
}

/// Pooled detection rate `sum |Gamma_t n S_t| / sum |S_t|`.
pub fn detection_rate(results: &[RecoveryResult], truths: &[GroundTruth]) -> Result<f64> {
    if results.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), actual: results.len() });
    }
    let (hit, total) =
        results.iter().zip(truths).map(|(r, t)| detection_counts(r, t)).fold((0, 0), |(a, b), (h, t)| (a + h, b + t));
    if total == 0 {
        return Err(Error::UndefinedRate);
    }
    Ok(hit as f64 / total as f64)
}
