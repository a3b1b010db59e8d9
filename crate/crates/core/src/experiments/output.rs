//! Files written for each experiment.
//!
//! | experiment      | files                                                          |
//! |-----------------|----------------------------------------------------------------|
//! | fig2, fig3      | `results.csv`, `thresholds.csv`, `trials.csv`, `detection.svg` |
//! | table1          | `coherence_summary.csv`, `coherence_trials.csv`                |
//! | fig4            | `gram_entries.csv`, `gram.svg`                                 |
//! | coherence-check | `coherence_check.csv`                                          |
//!
//! Every run also writes `meta.json`. CSV columns follow the field order of
//! the row types; optional values are written as empty cells and floats in
//! shortest round-trip form. Wall-clock figures appear only in `meta.json`,
//! so CSVs are byte-identical across replays.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::coherence::{CheckRow, CoherenceRow, CoherenceSummary, CoherenceTable, GramEntryRow, GramStudy};
use super::config::ExperimentConfig;
use super::detection::{ResultRow, ResultTable, Series, ThresholdRow, TrialRecord};
use super::svg::{line_chart, pair_density, Line};
use super::ExperimentOutput;
use crate::{Error, Result};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

pub const RESULT_HEADER: &[&str] = &[
    "snr_db",
    "codebook",
    "r",
    "master_seed",
    "trials",
    "neighbours",
    "detected",
    "blind_neighbours",
    "rate",
    "half_width",
    "ceiling",
];
pub const THRESHOLD_HEADER: &[&str] = &["codebook", "r", "target_rate", "snr_db"];
pub const TRIAL_HEADER: &[&str] = &[
    "trial",
    "codebook",
    "r",
    "snr_db",
    "query",
    "network_seed",
    "mask_seed",
    "noise_seed",
    "neighbours",
    "detected",
    "blind_neighbours",
    "iterations",
    "converged",
    "degenerate",
];
pub const COHERENCE_TRIAL_HEADER: &[&str] =
    &["codebook", "r", "trial", "query", "mask_seed", "rows", "columns", "coherence"];
pub const COHERENCE_SUMMARY_HEADER: &[&str] = &["codebook", "r", "trials", "mean", "min", "max"];
pub const GRAM_HEADER: &[&str] = &["codebook", "r", "i", "j", "magnitude"];
pub const CHECK_HEADER: &[&str] = &["check", "m", "query", "value", "expected", "abs_error"];

/// Writes `rows` under an explicit header, so an empty table still gets one.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::csv(path, e))).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes the outputs of one run into `dir` (created if needed) and returns
/// the paths written.
pub fn emit_outputs(
    output: &ExperimentOutput,
    cfg: &ExperimentConfig,
    dir: &Path,
    elapsed_seconds: f64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put_csv = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = dir.join(name);
        f(&p)?;
        written.push(p);
        Ok(())
    };
    match output {
        ExperimentOutput::Detection(t) => {
            put_csv("results.csv", &|p| write_csv(p, RESULT_HEADER, &t.rows))?;
            put_csv("thresholds.csv", &|p| write_csv(p, THRESHOLD_HEADER, &t.thresholds))?;
            put_csv("trials.csv", &|p| write_csv(p, TRIAL_HEADER, &t.trials))?;
            if !t.rows.is_empty() {
                put_csv("detection.svg", &|p| write_text(p, &detection_svg(cfg, t)))?;
            }
        }
        ExperimentOutput::Table1(t) => {
            put_csv("coherence_summary.csv", &|p| write_csv(p, COHERENCE_SUMMARY_HEADER, &t.summary))?;
            put_csv("coherence_trials.csv", &|p| write_csv(p, COHERENCE_TRIAL_HEADER, &t.trials))?;
        }
        ExperimentOutput::Fig4(g) => {
            let rows = g.entry_rows();
            put_csv("gram_entries.csv", &|p| write_csv(p, GRAM_HEADER, &rows))?;
            put_csv("gram.svg", &|p| write_text(p, &gram_svg(g)))?;
        }
        ExperimentOutput::CoherenceCheck(rows) => {
            put_csv("coherence_check.csv", &|p| write_csv(p, CHECK_HEADER, rows))?;
        }
    }
    let meta_path = dir.join("meta.json");
    let meta = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "generator": concat!("nd-core ", env!("CARGO_PKG_VERSION")),
        "experiment": cfg.experiment,
        "config": cfg,
        "phase_mode": cfg.phase,
        "query_policy": "uniform over node columns, one query per trial",
        "mask_policy": if cfg.fixed_mask { "one mask per r shared by all trials" } else { "fresh mask per trial and r" },
        "seed_derivation": "splitmix64 over (master seed, stream, trial[, r]); streams: network=1, noise=2, mask=3, fixed mask=4",
        "summary": summary_json(output),
        "elapsed_seconds": elapsed_seconds,
        "files": written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&meta_path, &(text + "\n"))?;
    written.push(meta_path);
    Ok(written)
}

fn summary_json(output: &ExperimentOutput) -> serde_json::Value {
    match output {
        ExperimentOutput::Detection(t) => serde_json::json!({
            "thresholds": t.thresholds,
            "recovery_seconds": t.total_runtime().as_secs_f64(),
        }),
        ExperimentOutput::Table1(t) => serde_json::json!({ "coherence": t.summary }),
        ExperimentOutput::Fig4(g) => serde_json::json!({
            "query": g.query,
            "r": g.r,
            "mask_seed": g.mask_seed,
            "threshold": g.erased.threshold,
            "erased_entries": g.erased.entries.len(),
            "erased_coherence": g.erased.coherence,
            "kerdock_entries": g.kerdock.entries.len(),
            "kerdock_coherence": g.kerdock.coherence,
        }),
        ExperimentOutput::CoherenceCheck(rows) => serde_json::json!({
            "max_abs_error": rows.iter().map(|r| r.abs_error).fold(0.0, f64::max),
        }),
    }
}

fn detection_svg(cfg: &ExperimentConfig, t: &ResultTable) -> String {
    let points = |rows: Vec<&ResultRow>| rows.iter().filter_map(|r| r.rate.map(|p| (r.snr_db, p))).collect();
    let mut lines = Vec::new();
    if cfg.codebooks.contains(&super::config::CodebookKind::Kerdock) {
        lines.push(Line {
            label: "sparse Kerdock".into(),
            points: points(t.series(Series::Kerdock, None)),
            dashed: false,
        });
    }
    if cfg.uses_erasures() {
        lines.push(Line {
            label: "erased DG, best r".into(),
            points: points(t.series(Series::DgErasedBest, None)),
            dashed: false,
        });
        for &r in &cfg.r_values {
            lines.push(Line {
                label: format!("erased DG, r={r}"),
                points: points(t.series(Series::DgErased, Some(r))),
                dashed: true,
            });
        }
    }
    let title = format!(
        "{}: m={}, N={}, k={}, s={}, {} trials, {}",
        cfg.experiment,
        cfg.m,
        cfg.nodes,
        cfg.k,
        cfg.s,
        cfg.trials,
        cfg.algorithm.as_str().to_uppercase()
    );
    line_chart(&title, "SNR (dB)", "proportion of neighbours discovered", &lines)
}

fn gram_svg(g: &GramStudy) -> String {
    let pairs: Vec<(usize, usize)> = g.erased.entries.iter().map(|e| (e.i, e.j)).collect();
    let title = format!("collapsed erased DG (r={}): normalised Gram entries above {}", g.r, g.erased.threshold);
    pair_density(&title, g.columns, &pairs)
}

/// Reads back the tables written for a detection run.
pub fn read_detection(dir: &Path) -> Result<ResultTable> {
    let rows: Vec<ResultRow> = read_csv(&dir.join("results.csv"))?;
    let thresholds: Vec<ThresholdRow> = read_csv(&dir.join("thresholds.csv"))?;
    let trials: Vec<TrialRecord> = read_csv(&dir.join("trials.csv"))?;
    Ok(ResultTable { rows, thresholds, trials })
}

pub fn read_table1(dir: &Path) -> Result<CoherenceTable> {
    let summary: Vec<CoherenceSummary> = read_csv(&dir.join("coherence_summary.csv"))?;
    let trials: Vec<CoherenceRow> = read_csv(&dir.join("coherence_trials.csv"))?;
    Ok(CoherenceTable { trials, summary })
}

pub fn read_gram_entries(dir: &Path) -> Result<Vec<GramEntryRow>> {
    read_csv(&dir.join("gram_entries.csv"))
}

pub fn read_coherence_check(dir: &Path) -> Result<Vec<CheckRow>> {
    read_csv(&dir.join("coherence_check.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{CodebookKind, ConfigOverrides, ExperimentId};
    use crate::experiments::run_experiment;

    fn cfg(id: ExperimentId) -> ExperimentConfig {
        ExperimentConfig::resolve(ConfigOverrides {
            experiment: Some(id),
            m: Some(3),
            k: Some(2.0),
            trials: Some(3),
            snr_db: Some(vec![0.0, 10.0, 20.0]),
            r_values: Some(vec![1, 2]),
            seed: Some(5),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn detection_csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(ExperimentId::Fig2);
        let out = run_experiment(&c).unwrap();
        emit_outputs(&out, &c, dir.path(), 0.0).unwrap();
        let back = read_detection(dir.path()).unwrap();
        let ExperimentOutput::Detection(t) = out else { panic!() };
        assert_eq!(back, t.without_runtimes());
        let header = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(header.lines().next().unwrap(), RESULT_HEADER.join(","));
        assert!(dir.path().join("detection.svg").exists());
    }

    #[test]
    fn coherence_outputs_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        for id in [ExperimentId::Table1, ExperimentId::Fig4, ExperimentId::CoherenceCheck] {
            let c = cfg(id);
            let out = run_experiment(&c).unwrap();
            emit_outputs(&out, &c, dir.path(), 0.0).unwrap();
            match out {
                ExperimentOutput::Table1(t) => assert_eq!(read_table1(dir.path()).unwrap(), t),
                ExperimentOutput::Fig4(g) => assert_eq!(read_gram_entries(dir.path()).unwrap(), g.entry_rows()),
                ExperimentOutput::CoherenceCheck(rows) => {
                    assert_eq!(read_coherence_check(dir.path()).unwrap(), rows)
                }
                ExperimentOutput::Detection(_) => unreachable!(),
            }
        }
    }

    #[test]
    fn empty_table_gives_header_only_and_no_plot() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(ExperimentId::Fig2);
        let out = ExperimentOutput::Detection(ResultTable::default());
        emit_outputs(&out, &c, dir.path(), 0.0).unwrap();
        let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(text, RESULT_HEADER.join(",") + "\n");
        assert!(!dir.path().join("detection.svg").exists());
        assert!(read_detection(dir.path()).unwrap().rows.is_empty());
    }

    #[test]
    fn replays_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut c = cfg(ExperimentId::Fig2);
        c.codebooks = vec![CodebookKind::Kerdock, CodebookKind::DgErased];
        for dir in [a.path(), b.path()] {
            let out = run_experiment(&c).unwrap();
            emit_outputs(&out, &c, dir, 1.0).unwrap();
        }
        for f in ["results.csv", "thresholds.csv", "trials.csv", "detection.svg"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn unwritable_dir_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let c = cfg(ExperimentId::CoherenceCheck);
        let out = run_experiment(&c).unwrap();
        let err = emit_outputs(&out, &c, &blocker.join("sub"), 0.0).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
