//! Coherence studies of collapsed codebooks.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{CodebookKind, ExperimentConfig, ExperimentId};
use super::detection::mask_seed;
use super::streams;
use crate::codebook::{
    apply_bernoulli_mask, build_dense_counterpart, build_sparse_kerdock, coherence, collapse_for_query,
    gram_large_entries, Codebook, CollapsedCodebook, GramReport, MatrixView, SparseKerdock,
};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Above this fill fraction the dense Gram is cheaper than the sparse scan.
const DENSE_FILL: f64 = 0.2;

/// Coherence of one collapsed matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRow {
    pub codebook: CodebookKind,
    pub r: Option<u32>,
    pub trial: usize,
    pub query: usize,
    pub mask_seed: Option<u64>,
    pub rows: usize,
    pub columns: usize,
    pub coherence: f64,
}

/// Mean over trials of the collapsed coherence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSummary {
    pub codebook: CodebookKind,
    pub r: Option<u32>,
    pub trials: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoherenceTable {
    pub trials: Vec<CoherenceRow>,
    pub summary: Vec<CoherenceSummary>,
}

impl CoherenceTable {
    pub fn mean(&self, codebook: CodebookKind, r: Option<u32>) -> Option<f64> {
        self.summary.iter().find(|s| s.codebook == codebook && s.r == r).map(|s| s.mean)
    }
}

/// Query node for trial `t`, shared by every codebook in that trial.
pub(crate) fn draw_query(cfg: &ExperimentConfig, t: usize) -> usize {
    use rand::{Rng, SeedableRng};
    let seed = derive_seed(cfg.seed, &[streams::NETWORK, t as u64]);
    rand_chacha::ChaCha8Rng::seed_from_u64(seed).random_range(0..cfg.nodes)
}

fn with_explicit<T>(c: &CollapsedCodebook<'_>, f: impl FnOnce(MatrixView<'_>) -> Result<T>) -> Result<T> {
    let sp = c.to_sparse();
    let fill = sp.nnz() as f64 / (sp.nrows().max(1) * sp.ncols().max(1)) as f64;
    if fill > DENSE_FILL {
        let dense = sp.to_dense()?;
        f(MatrixView::Dense(&dense))
    } else {
        f(MatrixView::Sparse(&sp))
    }
}

/// Coherence of the collapsed matrix with blind columns dropped. Columns of
/// an erased codebook that vanish on the retained rows are skipped too.
pub fn collapsed_coherence(c: &CollapsedCodebook<'_>) -> Result<f64> {
    with_explicit(c, |view| coherence(view, true))
}

/// Large normalised Gram entries of the collapsed matrix (blind columns
/// dropped), with indices mapped back to parent columns.
pub fn collapsed_gram_report(c: &CollapsedCodebook<'_>, threshold: f64) -> Result<GramReport> {
    let cols = c.analysis_columns();
    let mut report = with_explicit(c, |view| gram_large_entries(view, threshold))?;
    for e in &mut report.entries {
        e.i = cols[e.i];
        e.j = cols[e.j];
    }
    Ok(report)
}

fn summarise(rows: &[CoherenceRow], codebook: CodebookKind, r: Option<u32>) -> Option<CoherenceSummary> {
    let vals: Vec<f64> =
        rows.iter().filter(|row| row.codebook == codebook && row.r == r).map(|row| row.coherence).collect();
    if vals.is_empty() {
        return None;
    }
    Some(CoherenceSummary {
        codebook,
        r,
        trials: vals.len(),
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Collapsed coherence of the sparse Kerdock codebook and of erased dense
/// codebooks for each `r`, over `cfg.trials` random queries.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<CoherenceTable> {
    cfg.validate()?;
    let sparse = build_sparse_kerdock(cfg.m)?;
    let dense = build_dense_counterpart(&sparse)?;
    let mut trials = Vec::new();
    for t in 0..cfg.trials {
        let query = draw_query(cfg, t);
        if cfg.codebooks.contains(&CodebookKind::Kerdock) {
            let c = collapse_for_query(&sparse, query, true)?;
            trials.push(CoherenceRow {
                codebook: CodebookKind::Kerdock,
                r: None,
                trial: t,
                query,
                mask_seed: None,
                rows: c.n_rows(),
                columns: c.n_cols() - c.blind_count(),
                coherence: collapsed_coherence(&c)?,
            });
        }
        if cfg.uses_erasures() {
            for &r in &cfg.r_values {
                let seed = mask_seed(cfg, t, r);
                let book = apply_bernoulli_mask(&dense, r, seed)?;
                let c = match collapse_for_query(&book, query, true) {
                    Ok(c) => c,
                    Err(Error::DegenerateSignature(_)) => {
                        warn!("trial {t}: query {query} all-zero under r={r}; skipped");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                trials.push(CoherenceRow {
                    codebook: CodebookKind::DgErased,
                    r: Some(r),
                    trial: t,
                    query,
                    mask_seed: Some(seed),
                    rows: c.n_rows(),
                    columns: c.n_cols() - c.blind_count(),
                    coherence: collapsed_coherence(&c)?,
                });
            }
        }
        info!("table1: trial {} of {} done", t + 1, cfg.trials);
    }
    let mut keys: Vec<(CodebookKind, Option<u32>)> = trials.iter().map(|r| (r.codebook, r.r)).collect();
    keys.sort();
    keys.dedup();
    let summary = keys.into_iter().filter_map(|(c, r)| summarise(&trials, c, r)).collect();
    Ok(CoherenceTable { trials, summary })
}

/// Large Gram entries of the collapsed erased and Kerdock codebooks for one
/// query.
#[derive(Clone, Debug, PartialEq)]
pub struct GramStudy {
    pub query: usize,
    pub r: u32,
    pub mask_seed: u64,
    /// Number of columns in each collapsed matrix, for plotting.
    pub columns: usize,
    pub erased: GramReport,
    pub kerdock: GramReport,
}

/// One row of the large-entry scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramEntryRow {
    pub codebook: CodebookKind,
    pub r: Option<u32>,
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
}

impl GramStudy {
    pub fn entry_rows(&self) -> Vec<GramEntryRow> {
        let tag = |codebook, r, rep: &GramReport| {
            rep.entries
                .iter()
                .map(move |e| GramEntryRow { codebook, r, i: e.i, j: e.j, magnitude: e.magnitude })
                .collect::<Vec<_>>()
        };
        let mut out = tag(CodebookKind::Kerdock, None, &self.kerdock);
        out.extend(tag(CodebookKind::DgErased, Some(self.r), &self.erased));
        out
    }
}

/// Gram scatter for the first `r` in `cfg.r_values` and trial 0's query.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<GramStudy> {
    cfg.validate()?;
    let r = *cfg.r_values.first().ok_or_else(|| Error::Config("r_values is empty".into()))?;
    let sparse = build_sparse_kerdock(cfg.m)?;
    let dense = build_dense_counterpart(&sparse)?;
    let query = draw_query(cfg, 0);
    let seed = mask_seed(cfg, 0, r);
    let book = apply_bernoulli_mask(&dense, r, seed)?;
    let c = collapse_for_query(&book, query, true)?;
    let erased = collapsed_gram_report(&c, cfg.gram_threshold)?;
    let k = collapse_for_query(&sparse, query, true)?;
    let kerdock = collapsed_gram_report(&k, cfg.gram_threshold)?;
    Ok(GramStudy { query, r, mask_seed: seed, columns: sparse.cols(), erased, kerdock })
}

/// Closed-form coherence checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    /// `full` for the whole codebook, `collapsed` for one query.
    pub check: String,
    pub m: u32,
    pub query: Option<usize>,
    pub value: f64,
    pub expected: f64,
    pub abs_error: f64,
}

/// `mu(S^m)` against `2^{-m}` and, for `cfg.trials` random queries, the
/// collapsed coherence against `2 / (sqrt(4p + 1) - 1)` with
/// `p = 2^{2m} - 2^m`.
pub fn run_coherence_check(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    cfg.validate()?;
    let s = build_sparse_kerdock(cfg.m)?;
    let mut rows = vec![full_check(&s)?];
    let expected = collapsed_coherence_formula(cfg.m);
    for t in 0..cfg.trials {
        let query = draw_query(cfg, t);
        let c = collapse_for_query(&s, query, true)?;
        let value = collapsed_coherence(&c)?;
        rows.push(CheckRow {
            check: "collapsed".into(),
            m: cfg.m,
            query: Some(query),
            value,
            expected,
            abs_error: (value - expected).abs(),
        });
    }
    Ok(rows)
}

fn full_check(s: &SparseKerdock) -> Result<CheckRow> {
    let value = coherence(&crate::codebook::materialize_sparse(s), false)?;
    let expected = (-(s.m() as f64)).exp2();
    Ok(CheckRow { check: "full".into(), m: s.m(), query: None, value, expected, abs_error: (value - expected).abs() })
}

/// `2 / (sqrt(4p + 1) - 1)`, `p = 2^{2m} - 2^m`.
pub fn collapsed_coherence_formula(m: u32) -> f64 {
    let n = (1u64 << m) as f64;
    let p = n * n - n;
    2.0 / ((4.0 * p + 1.0).sqrt() - 1.0)
}

pub(crate) fn is_coherence_study(id: ExperimentId) -> bool {
    matches!(id, ExperimentId::Table1 | ExperimentId::Fig4 | ExperimentId::CoherenceCheck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::ConfigOverrides;

    fn cfg(id: ExperimentId, m: u32, trials: usize) -> ExperimentConfig {
        ExperimentConfig::resolve(ConfigOverrides {
            experiment: Some(id),
            m: Some(m),
            trials: Some(trials),
            seed: Some(11),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn formula_matches_one_over_n_minus_one() {
        for m in 1..=6 {
            let n = (1u64 << m) as f64;
            assert!((collapsed_coherence_formula(m) - 1.0 / (n - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn coherence_check_small() {
        let rows = run_coherence_check(&cfg(ExperimentId::CoherenceCheck, 3, 3)).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert!(row.abs_error < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn table1_small_orders_codebooks() {
        let table = run_table1(&cfg(ExperimentId::Table1, 3, 3)).unwrap();
        let k = table.mean(CodebookKind::Kerdock, None).unwrap();
        assert!((k - 1.0 / 7.0).abs() < 1e-12);
        for r in 1..=4 {
            let e = table.mean(CodebookKind::DgErased, Some(r)).unwrap();
            assert!(e > k, "r={r}: {e} vs {k}");
        }
        assert_eq!(table.trials.len(), 3 * 5);
    }

    #[test]
    fn fig4_small() {
        let mut c = cfg(ExperimentId::Fig4, 3, 1);
        c.gram_threshold = 0.15;
        let study = run_fig4(&c).unwrap();
        assert!(!study.erased.entries.is_empty());
        // 1/7 < 0.15
        assert!(study.kerdock.entries.is_empty());
        c.gram_threshold = 1.01;
        let none = run_fig4(&c).unwrap();
        assert!(none.erased.entries.is_empty() && none.kerdock.entries.is_empty());
    }
}
