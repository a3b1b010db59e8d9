//! Monte-Carlo neighbour detection against SNR.

use std::time::{Duration, Instant};

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, CodebookKind, ExperimentConfig};
use super::streams;
use crate::channel::{sample_ground_truth, snr_db_to_gamma, synthesize_measurement, GroundTruth, NetworkConfig};
use crate::codebook::{
    apply_bernoulli_mask, build_dense_counterpart, build_sparse_kerdock, collapse_for_query, Codebook,
    CollapsedCodebook, DenseCounterpart, ErasedDenseCodebook, SparseKerdock,
};
use crate::recovery::{detection_counts, niht, ost, SensingOperator};
use crate::seed::derive_seed;
use crate::{Complex64, Error, Result};

/// Rate at which the SNR threshold is read off.
pub const THRESHOLD_RATE: f64 = 0.99;

/// Normal quantile used for the Monte-Carlo half-width.
const Z95: f64 = 1.96;

/// One curve of a detection plot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Series {
    Kerdock,
    DgErased,
    /// The erased baseline with the best `r` at each SNR.
    DgErasedBest,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::Kerdock => "kerdock",
            Series::DgErased => "dg-erased",
            Series::DgErasedBest => "dg-erased-best",
        }
    }
}

/// Outcome of one (trial, codebook, SNR) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub codebook: CodebookKind,
    pub r: Option<u32>,
    pub snr_db: f64,
    pub query: usize,
    pub network_seed: u64,
    pub mask_seed: Option<u64>,
    pub noise_seed: u64,
    pub neighbours: usize,
    pub detected: usize,
    pub blind_neighbours: usize,
    pub iterations: usize,
    pub converged: bool,
    /// The query's signature vanished under the mask; nothing was scored.
    pub degenerate: bool,
    /// Wall time of recovery; kept out of the CSV outputs.
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub codebook: Series,
    pub r: Option<u32>,
    pub master_seed: u64,
    /// Trials that were scored (degenerate ones excluded).
    pub trials: usize,
    pub neighbours: usize,
    pub detected: usize,
    pub blind_neighbours: usize,
    /// Pooled detection rate; empty when no trial had a neighbour.
    pub rate: Option<f64>,
    /// 95% normal-approximation half-width of `rate`.
    pub half_width: Option<f64>,
    /// `1 - blind / neighbours`, the best rate any decoder can reach.
    pub ceiling: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub codebook: Series,
    pub r: Option<u32>,
    pub target_rate: f64,
    /// Smallest grid SNR with `rate >= target_rate`, empty if none.
    pub snr_db: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub trials: Vec<TrialRecord>,
}

impl TrialRecord {
    /// The record with `runtime` zeroed, i.e. exactly what the CSV holds.
    pub fn without_runtime(&self) -> TrialRecord {
        TrialRecord { runtime: Duration::ZERO, ..self.clone() }
    }
}

impl ResultTable {
    /// The table with all runtimes zeroed.
    pub fn without_runtimes(&self) -> ResultTable {
        ResultTable { trials: self.trials.iter().map(TrialRecord::without_runtime).collect(), ..self.clone() }
    }

    pub fn series(&self, codebook: Series, r: Option<u32>) -> Vec<&ResultRow> {
        let mut out: Vec<&ResultRow> = self
            .rows
            .iter()
            .filter(|row| row.codebook == codebook && (codebook == Series::DgErasedBest || row.r == r))
            .collect();
        out.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        out
    }

    pub fn threshold(&self, codebook: Series, r: Option<u32>) -> Option<f64> {
        self.thresholds.iter().find(|t| t.codebook == codebook && t.r == r).and_then(|t| t.snr_db)
    }

    pub fn total_runtime(&self) -> Duration {
        self.trials.iter().map(|t| t.runtime).sum()
    }
}

/// Restricts candidates to node columns `0..nodes`.
struct NodeOperator<'a, 'b> {
    collapsed: &'a CollapsedCodebook<'b>,
    nodes: usize,
}

impl SensingOperator for NodeOperator<'_, '_> {
    fn n_rows(&self) -> usize {
        self.collapsed.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.collapsed.n_cols()
    }

    fn is_candidate(&self, j: usize) -> bool {
        j < self.nodes && !self.collapsed.is_blind(j)
    }

    fn apply_sparse(&self, entries: &[(usize, Complex64)]) -> Vec<Complex64> {
        self.collapsed.forward_sparse(entries)
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.collapsed.adjoint(y)
    }
}

/// Query node and neighbour draw for trial `t`.
pub(crate) fn draw_network(cfg: &ExperimentConfig, t: usize) -> Result<(u64, usize, GroundTruth)> {
    let seed = derive_seed(cfg.seed, &[streams::NETWORK, t as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let query = rng.random_range(0..cfg.nodes);
    let net = NetworkConfig { nodes: cfg.nodes, mean_neighbours: cfg.k, eta: cfg.eta, alpha: cfg.alpha, snr_db: 0.0 };
    let truth = sample_ground_truth(&net, query, &mut rng, cfg.phase)?;
    Ok((seed, query, truth))
}

pub(crate) fn mask_seed(cfg: &ExperimentConfig, t: usize, r: u32) -> u64 {
    if cfg.fixed_mask {
        derive_seed(cfg.seed, &[streams::FIXED_MASK, r as u64])
    } else {
        derive_seed(cfg.seed, &[streams::MASK, t as u64, r as u64])
    }
}

struct Codebooks {
    sparse: SparseKerdock,
    dense: Option<DenseCounterpart>,
    fixed: Vec<ErasedDenseCodebook>,
}

/// Codebook variants in output order: Kerdock first, then erased by `r`.
fn variants(cfg: &ExperimentConfig) -> Vec<(CodebookKind, Option<u32>)> {
    let mut out = Vec::new();
    for &kind in &cfg.codebooks {
        match kind {
            CodebookKind::Kerdock => out.push((kind, None)),
            CodebookKind::DgErased => out.extend(cfg.r_values.iter().map(|&r| (kind, Some(r)))),
        }
    }
    out.sort();
    out
}

fn run_trial(cfg: &ExperimentConfig, books: &Codebooks, t: usize) -> Result<Vec<TrialRecord>> {
    let (network_seed, query, truth) = draw_network(cfg, t)?;
    let noise_seed = derive_seed(cfg.seed, &[streams::NOISE, t as u64]);
    let params = cfg.recovery_params();
    let mut records = Vec::new();
    for (kind, r) in variants(cfg) {
        let fresh;
        let (codebook, mask): (&dyn Codebook, Option<u64>) = match (kind, r) {
            (CodebookKind::Kerdock, _) => (&books.sparse, None),
            (CodebookKind::DgErased, Some(r)) => {
                let seed = mask_seed(cfg, t, r);
                if cfg.fixed_mask {
                    let book = books.fixed.iter().find(|b| b.erasure_exponent() == r).expect("mask built");
                    (book, Some(seed))
                } else {
                    let dense = books.dense.as_ref().expect("dense counterpart built");
                    fresh = apply_bernoulli_mask(dense, r, seed)?;
                    (&fresh, Some(seed))
                }
            }
            (CodebookKind::DgErased, None) => unreachable!("erased variants carry r"),
        };
        let base = TrialRecord {
            trial: t,
            codebook: kind,
            r,
            snr_db: 0.0,
            query,
            network_seed,
            mask_seed: mask,
            noise_seed,
            neighbours: truth.len(),
            detected: 0,
            blind_neighbours: 0,
            iterations: 0,
            converged: false,
            degenerate: false,
            runtime: Duration::ZERO,
        };
        let collapsed = match collapse_for_query(codebook, query, false) {
            Ok(c) => c,
            Err(Error::DegenerateSignature(_)) => {
                warn!("trial {t}: query {query} has an all-zero signature under {kind} r={r:?}; skipped");
                for &snr_db in &cfg.snr_db {
                    records.push(TrialRecord { snr_db, degenerate: true, ..base.clone() });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let blind_neighbours = truth.support.iter().filter(|&&j| collapsed.is_blind(j)).count();
        let op = NodeOperator { collapsed: &collapsed, nodes: cfg.nodes };
        for &snr_db in &cfg.snr_db {
            let started = Instant::now();
            let meas = synthesize_measurement(&collapsed, &truth, snr_db_to_gamma(snr_db), noise_seed)?;
            let result = match cfg.algorithm {
                Algorithm::Ost => ost(&op, &meas.y_bar, cfg.s)?,
                Algorithm::Niht => niht(&op, &meas.y_bar, &params)?,
            };
            let (detected, _) = detection_counts(&result, &truth);
            records.push(TrialRecord {
                snr_db,
                detected,
                blind_neighbours,
                iterations: result.iterations,
                converged: result.converged,
                runtime: started.elapsed(),
                ..base.clone()
            });
        }
    }
    Ok(records)
}

/// Runs a detection experiment (`fig2`, `fig3` or a custom variant). Trials
/// run on the current rayon pool; results do not depend on the pool size.
pub fn run_detection(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    if !cfg.experiment.is_detection() {
        return Err(Error::Config(format!("{} is not a detection experiment", cfg.experiment)));
    }
    let sparse = build_sparse_kerdock(cfg.m)?;
    let dense = if cfg.uses_erasures() { Some(build_dense_counterpart(&sparse)?) } else { None };
    let fixed = match (&dense, cfg.fixed_mask) {
        (Some(d), true) => {
            cfg.r_values.iter().map(|&r| apply_bernoulli_mask(d, r, mask_seed(cfg, 0, r))).collect::<Result<_>>()?
        }
        _ => Vec::new(),
    };
    let books = Codebooks { sparse, dense, fixed };
    info!(
        "{}: m={} N={} k={} s={} {} trials x {} SNR points",
        cfg.experiment,
        cfg.m,
        cfg.nodes,
        cfg.k,
        cfg.s,
        cfg.trials,
        cfg.snr_db.len()
    );
    let per_trial: Vec<Vec<TrialRecord>> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &books, t)).collect::<Result<_>>()?;
    let trials: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let rows = aggregate(cfg, &trials);
    let thresholds = thresholds(&rows);
    Ok(ResultTable { rows, thresholds, trials })
}

fn pooled_row(snr_db: f64, codebook: Series, r: Option<u32>, seed: u64, cells: &[&TrialRecord]) -> ResultRow {
    let scored: Vec<&&TrialRecord> = cells.iter().filter(|c| !c.degenerate).collect();
    let neighbours: usize = scored.iter().map(|c| c.neighbours).sum();
    let detected: usize = scored.iter().map(|c| c.detected).sum();
    let blind: usize = scored.iter().map(|c| c.blind_neighbours).sum();
    let (rate, half_width, ceiling) = if neighbours > 0 {
        let p = detected as f64 / neighbours as f64;
        let hw = Z95 * (p * (1.0 - p) / neighbours as f64).sqrt();
        (Some(p), Some(hw), Some(1.0 - blind as f64 / neighbours as f64))
    } else {
        (None, None, None)
    };
    ResultRow {
        snr_db,
        codebook,
        r,
        master_seed: seed,
        trials: scored.len(),
        neighbours,
        detected,
        blind_neighbours: blind,
        rate,
        half_width,
        ceiling,
    }
}

/// One row per (SNR, variant) in grid order, followed at each SNR by the
/// best erased row (highest rate, smallest `r` on ties).
fn aggregate(cfg: &ExperimentConfig, trials: &[TrialRecord]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_db {
        let mut erased = Vec::new();
        for (kind, r) in variants(cfg) {
            let cells: Vec<&TrialRecord> = trials
                .iter()
                .filter(|c| c.snr_db.to_bits() == snr_db.to_bits() && c.codebook == kind && c.r == r)
                .collect();
            let series = match kind {
                CodebookKind::Kerdock => Series::Kerdock,
                CodebookKind::DgErased => Series::DgErased,
            };
            let row = pooled_row(snr_db, series, r, cfg.seed, &cells);
            if series == Series::DgErased {
                erased.push(row.clone());
            }
            rows.push(row);
        }
        let best = erased.iter().filter(|r| r.rate.is_some()).fold(None::<&ResultRow>, |best, row| match best {
            Some(b) if b.rate >= row.rate => Some(b),
            _ => Some(row),
        });
        if let Some(b) = best {
            rows.push(ResultRow { codebook: Series::DgErasedBest, ..b.clone() });
        }
    }
    rows
}

fn thresholds(rows: &[ResultRow]) -> Vec<ThresholdRow> {
    let mut keys: Vec<(Series, Option<u32>)> =
        rows.iter().map(|r| (r.codebook, if r.codebook == Series::DgErasedBest { None } else { r.r })).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(codebook, r)| {
            let mut series: Vec<&ResultRow> = rows
                .iter()
                .filter(|row| row.codebook == codebook && (codebook == Series::DgErasedBest || row.r == r))
                .collect();
            series.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
            let snr_db = series.iter().find(|row| row.rate.is_some_and(|p| p >= THRESHOLD_RATE)).map(|row| row.snr_db);
            ThresholdRow { codebook, r, target_rate: THRESHOLD_RATE, snr_db }
        })
        .collect()
}
