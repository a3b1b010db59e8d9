//! `nd`: run experiments, inspect coherence and export codebook matrices.
//!
//! Diagnostics go to stderr as JSON lines (`{"level":..,"target":..,"message":..}`);
//! a failing command ends with one `{"level":"error","kind":..,"message":..}` line
//! and a nonzero exit status. `ND_WORKERS` sets the worker thread count.

use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use nd_core::codebook::{
    apply_bernoulli_mask, build_dense_counterpart, build_sparse_kerdock, coherence, collapse_for_query, export,
    materialize_dense, materialize_sparse, Codebook,
};
use nd_core::experiments::{
    collapsed_coherence, collapsed_coherence_formula, run_and_emit, Algorithm, CodebookKind, ConfigOverrides,
    ExperimentConfig, ExperimentId, ExperimentOutput, Series,
};
use nd_core::PhaseMode;

const WORKERS_ENV: &str = "ND_WORKERS";

/// Largest m for which dense codebooks are materialised by `coherence`.
const MAX_DENSE_COHERENCE_M: u32 = 4;

#[derive(Parser, Debug)]
#[command(name = "nd", version, about = "Neighbour discovery from on-off signatures")]
struct Cli {
    /// Log filter (error, warn, info, debug, trace); overrides RUST_LOG.
    #[arg(long, global = true)]
    log: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its CSV, plot and metadata files.
    Run(Box<RunArgs>),
    /// Print the coherence of a codebook, or of its collapse for one query.
    Coherence(CoherenceArgs),
    /// Write a codebook matrix as triplet text or binary.
    ExportMatrix(ExportArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long, value_parser = parse_experiment)]
    experiment: Option<ExperimentId>,
    /// TOML file with any subset of the configuration keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_codebook)]
    codebooks: Option<Vec<CodebookKind>>,
    #[arg(long, value_delimiter = ',')]
    r_values: Option<Vec<u32>>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
    #[arg(long, value_enum)]
    phase: Option<PhaseArg>,
    #[arg(long)]
    fixed_mask: bool,
    #[arg(long)]
    gram_threshold: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PhaseArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BookArg {
    Kerdock,
    Dense,
    DgErased,
}

#[derive(clap::Args, Debug)]
struct CoherenceArgs {
    #[arg(long)]
    m: u32,
    #[arg(long, value_enum, default_value = "kerdock")]
    codebook: BookArg,
    /// Erasure exponent for dg-erased.
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Mask seed for dg-erased.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Collapse for this query column first (blind columns dropped).
    #[arg(long)]
    query: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Triplet,
    Binary,
}

#[derive(clap::Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    m: u32,
    #[arg(long, value_enum, default_value = "triplet")]
    format: Format,
    #[arg(long, value_enum, default_value = "kerdock")]
    codebook: BookArg,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    s.parse().map_err(|e: nd_core::Error| e.to_string())
}

fn parse_codebook(s: &str) -> Result<CodebookKind, String> {
    s.parse().map_err(|e: nd_core::Error| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: nd_core::Error| e.to_string())
}

fn init_logging(filter: Option<&str>) {
    let mut b = env_logger::Builder::new();
    b.filter_level(log::LevelFilter::Info);
    if let Ok(env) = std::env::var("RUST_LOG") {
        b.parse_filters(&env);
    }
    if let Some(f) = filter {
        b.parse_filters(f);
    }
    b.format(|buf, record| {
        let line = json!({
            "level": record.level().as_str().to_lowercase(),
            "target": record.target(),
            "message": record.args().to_string(),
        });
        writeln!(buf, "{line}")
    });
    b.target(env_logger::Target::Stderr);
    let _ = b.try_init();
}

fn init_workers() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{WORKERS_ENV}={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    info!("using {n} worker thread(s)");
    Ok(())
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use nd_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Config(_)) => "config",
        Some(E::Io { .. }) | Some(E::Csv { .. }) => "io",
        Some(E::InvalidParameter(_)) | Some(E::TooLarge { .. }) | Some(E::UnsupportedDegree(_)) => "invalid-argument",
        Some(E::DegenerateSignature(_)) => "degenerate-signature",
        Some(_) => "computation",
        None if err.downcast_ref::<io::Error>().is_some() => "io",
        None => "invalid-argument",
    }
}

fn emit_error(kind: &str, message: &str) {
    let line = json!({ "level": "error", "kind": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit_error("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    init_logging(cli.log.as_deref());
    let result = init_workers().and_then(|_| match cli.command {
        Command::Run(a) => cmd_run(*a),
        Command::Coherence(a) => cmd_coherence(a),
        Command::ExportMatrix(a) => cmd_export(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let file = match &a.config {
        Some(p) => ConfigOverrides::from_file(p)?,
        None => ConfigOverrides::default(),
    };
    let cli = ConfigOverrides {
        experiment: a.experiment,
        m: a.m,
        nodes: a.nodes,
        k: a.k,
        eta: a.eta,
        alpha: a.alpha,
        snr_db: a.snr_db,
        trials: a.trials,
        codebooks: a.codebooks,
        r_values: a.r_values,
        s: a.s,
        algorithm: a.algorithm,
        seed: a.seed,
        phase: a.phase.map(|p| match p {
            PhaseArg::Real => PhaseMode::Real,
            PhaseArg::Complex => PhaseMode::Complex,
        }),
        fixed_mask: a.fixed_mask.then_some(true),
        gram_threshold: a.gram_threshold,
        out_dir: a.out,
        ..Default::default()
    };
    let cfg = ExperimentConfig::resolve(file.merge(cli))?;
    if cfg.out_dir.is_none() {
        bail!("no output directory: pass --out or set out_dir in the config file");
    }
    let (output, files) = run_and_emit(&cfg)?;
    let summary = match &output {
        ExperimentOutput::Detection(t) => json!({
            "thresholds": t.thresholds.iter().map(|th| json!({
                "codebook": th.codebook,
                "r": th.r,
                "snr_db": th.snr_db,
            })).collect::<Vec<_>>(),
            "kerdock_rates": t.series(Series::Kerdock, None).iter().map(|r| json!([r.snr_db, r.rate])).collect::<Vec<_>>(),
        }),
        ExperimentOutput::Table1(t) => json!(t.summary),
        ExperimentOutput::Fig4(g) => json!({
            "erased_entries": g.erased.entries.len(),
            "kerdock_entries": g.kerdock.entries.len(),
        }),
        ExperimentOutput::CoherenceCheck(rows) => json!(rows),
    };
    let line = json!({
        "status": "ok",
        "experiment": cfg.experiment,
        "files": files,
        "summary": summary,
    });
    println!("{line}");
    Ok(())
}

fn cmd_coherence(a: CoherenceArgs) -> anyhow::Result<()> {
    let sparse = build_sparse_kerdock(a.m)?;
    if a.codebook != BookArg::Kerdock && a.m > MAX_DENSE_COHERENCE_M {
        bail!(nd_core::Error::TooLarge { what: "dense coherence", m: a.m, limit: MAX_DENSE_COHERENCE_M });
    }
    let dense = match a.codebook {
        BookArg::Kerdock => None,
        _ => Some(build_dense_counterpart(&sparse)?),
    };
    let erased = match (a.codebook, &dense) {
        (BookArg::DgErased, Some(d)) => Some(apply_bernoulli_mask(d, a.r, a.seed)?),
        _ => None,
    };
    let book: &dyn Codebook = match (a.codebook, &dense, &erased) {
        (BookArg::Kerdock, _, _) => &sparse,
        (BookArg::Dense, Some(d), _) => d,
        (BookArg::DgErased, _, Some(e)) => e,
        _ => unreachable!(),
    };
    let n = (1u64 << a.m) as f64;
    let (value, expected) = match a.query {
        Some(q) => {
            let c = collapse_for_query(book, q, true)?;
            let expected = (a.codebook == BookArg::Kerdock).then(|| collapsed_coherence_formula(a.m));
            (collapsed_coherence(&c)?, expected)
        }
        None => {
            let v = match a.codebook {
                BookArg::Kerdock => coherence(&materialize_sparse(book), false)?,
                BookArg::Dense => coherence(&materialize_dense(book)?, false)?,
                BookArg::DgErased => coherence(&materialize_dense(book)?, true)?,
            };
            let expected = (a.codebook != BookArg::DgErased).then(|| 1.0 / n);
            (v, expected)
        }
    };
    let line = json!({
        "m": a.m,
        "codebook": book.label(),
        "r": (a.codebook == BookArg::DgErased).then_some(a.r),
        "seed": (a.codebook == BookArg::DgErased).then_some(a.seed),
        "query": a.query,
        "coherence": value,
        "expected": expected,
    });
    println!("{line}");
    Ok(())
}

fn cmd_export(a: ExportArgs) -> anyhow::Result<()> {
    let sparse = build_sparse_kerdock(a.m)?;
    let dense = match a.codebook {
        BookArg::Kerdock => None,
        _ => Some(build_dense_counterpart(&sparse)?),
    };
    let erased = match (a.codebook, &dense) {
        (BookArg::DgErased, Some(d)) => Some(apply_bernoulli_mask(d, a.r, a.seed)?),
        _ => None,
    };
    let book: &dyn Codebook = match (a.codebook, &dense, &erased) {
        (BookArg::Kerdock, _, _) => &sparse,
        (BookArg::Dense, Some(d), _) => d,
        (BookArg::DgErased, _, Some(e)) => e,
        _ => unreachable!(),
    };
    let write = |out: &mut dyn Write| -> nd_core::Result<()> {
        match a.format {
            Format::Triplet => export::write_triplets(out, book),
            Format::Binary => export::write_codebook_binary(out, book),
        }
    };
    match &a.out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write(&mut BufWriter::new(f)).with_context(|| format!("writing {}", path.display()))?;
            info!("wrote {} ({}x{})", path.display(), book.rows(), book.cols());
        }
        None => {
            let stdout = io::stdout();
            write(&mut BufWriter::new(stdout.lock()))?;
        }
    }
    Ok(())
}
