//! Seeded Monte-Carlo experiments and coherence studies.
//!
//! Every random draw comes from a ChaCha8 stream whose seed is derived from
//! the master seed, a stream tag and the trial index (plus `r` for masks),
//! so a trial's outcome depends neither on the worker count nor on the
//! order of the SNR grid. The same noise stream is shared by all codebooks
//! and SNR points of a trial (common random numbers).

mod coherence;
mod config;
mod detection;
pub mod output;
mod svg;

use std::time::Instant;

pub use coherence::{
    collapsed_coherence, collapsed_coherence_formula, collapsed_gram_report, run_coherence_check, run_fig4, run_table1,
    CheckRow, CoherenceRow, CoherenceSummary, CoherenceTable, GramEntryRow, GramStudy,
};
pub use config::{Algorithm, CodebookKind, ConfigOverrides, ExperimentConfig, ExperimentId};
pub use detection::{run_detection, ResultRow, ResultTable, Series, ThresholdRow, TrialRecord, THRESHOLD_RATE};
pub use output::emit_outputs;

use crate::Result;

/// Stream tags for seed derivation.
pub(crate) mod streams {
    pub const NETWORK: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const MASK: u64 = 3;
    pub const FIXED_MASK: u64 = 4;
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentOutput {
    Detection(ResultTable),
    Table1(CoherenceTable),
    Fig4(GramStudy),
    CoherenceCheck(Vec<CheckRow>),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    debug_assert!(cfg.experiment.is_detection() || coherence::is_coherence_study(cfg.experiment));
    Ok(match cfg.experiment {
        ExperimentId::Fig2 | ExperimentId::Fig3 => ExperimentOutput::Detection(run_detection(cfg)?),
        ExperimentId::Table1 => ExperimentOutput::Table1(run_table1(cfg)?),
        ExperimentId::Fig4 => ExperimentOutput::Fig4(run_fig4(cfg)?),
        ExperimentId::CoherenceCheck => ExperimentOutput::CoherenceCheck(run_coherence_check(cfg)?),
    })
}

/// Runs `cfg` and, when it names an output directory, writes the results there.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, Vec<std::path::PathBuf>)> {
    let started = Instant::now();
    let output = run_experiment(cfg)?;
    let files = match &cfg.out_dir {
        Some(dir) => emit_outputs(&output, cfg, dir, started.elapsed().as_secs_f64())?,
        None => Vec::new(),
    };
    Ok((output, files))
}
