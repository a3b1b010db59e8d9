use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::PhaseMode;
use crate::codebook::{MAX_DENSE_M, MAX_ERASURE_EXPONENT, MAX_KERDOCK_M};
use crate::recovery::RecoveryParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Fig2,
    Fig3,
    Table1,
    Fig4,
    CoherenceCheck,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Fig2,
        ExperimentId::Fig3,
        ExperimentId::Table1,
        ExperimentId::Fig4,
        ExperimentId::CoherenceCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Table1 => "table1",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::CoherenceCheck => "coherence-check",
        }
    }

    /// Monte-Carlo detection experiments (as opposed to coherence studies).
    pub fn is_detection(self) -> bool {
        matches!(self, ExperimentId::Fig2 | ExperimentId::Fig3)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookKind {
    Kerdock,
    DgErased,
}

impl CodebookKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CodebookKind::Kerdock => "kerdock",
            CodebookKind::DgErased => "dg-erased",
        }
    }
}

impl fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodebookKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kerdock" => Ok(CodebookKind::Kerdock),
            "dg-erased" => Ok(CodebookKind::DgErased),
            _ => Err(Error::Config(format!("unknown codebook `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ost,
    Niht,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ost => "ost",
            Algorithm::Niht => "niht",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ost" => Ok(Algorithm::Ost),
            "niht" => Ok(Algorithm::Niht),
            _ => Err(Error::Config(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub m: u32,
    pub nodes: usize,
    pub k: f64,
    pub eta: f64,
    pub alpha: f64,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub codebooks: Vec<CodebookKind>,
    pub r_values: Vec<u32>,
    pub s: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub phase: PhaseMode,
    /// One mask per `r` shared by all trials instead of a fresh mask per trial.
    pub fixed_mask: bool,
    pub niht_max_iters: usize,
    pub niht_tol: f64,
    pub niht_step_safety: f64,
    pub niht_step_shrink: f64,
    /// Gram-entry threshold for the large-entry scatter.
    pub gram_threshold: f64,
    pub out_dir: Option<PathBuf>,
}

/// Partial configuration as read from a file or the command line. Every
/// field is optional and overrides the experiment defaults when present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentId>,
    pub m: Option<u32>,
    pub nodes: Option<usize>,
    pub k: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub snr_db: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub codebooks: Option<Vec<CodebookKind>>,
    pub r_values: Option<Vec<u32>>,
    pub s: Option<usize>,
    pub algorithm: Option<Algorithm>,
    pub seed: Option<u64>,
    pub phase: Option<PhaseMode>,
    pub fixed_mask: Option<bool>,
    pub niht_max_iters: Option<usize>,
    pub niht_tol: Option<f64>,
    pub niht_step_safety: Option<f64>,
    pub niht_step_shrink: Option<f64>,
    pub gram_threshold: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: ConfigOverrides) -> ConfigOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigOverrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment,
            m,
            nodes,
            k,
            eta,
            alpha,
            snr_db,
            trials,
            codebooks,
            r_values,
            s,
            algorithm,
            seed,
            phase,
            fixed_mask,
            niht_max_iters,
            niht_tol,
            niht_step_safety,
            niht_step_shrink,
            gram_threshold,
            out_dir
        )
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentId) -> Self {
        let niht = RecoveryParams::new(1);
        let mut cfg = ExperimentConfig {
            experiment,
            m: 5,
            nodes: 1 << 15,
            k: 5.0,
            eta: 0.05,
            alpha: 3.0,
            snr_db: grid(0.0, 30.0, 3.0),
            trials: 200,
            codebooks: vec![CodebookKind::Kerdock, CodebookKind::DgErased],
            r_values: vec![1, 2, 3, 4],
            s: 15,
            algorithm: Algorithm::Ost,
            seed: 0,
            phase: PhaseMode::Real,
            fixed_mask: false,
            niht_max_iters: niht.max_iters,
            niht_tol: niht.tol_residual_rel,
            niht_step_safety: niht.step_safety,
            niht_step_shrink: niht.step_shrink,
            gram_threshold: 0.15,
            out_dir: None,
        };
        match experiment {
            ExperimentId::Fig2 => {}
            ExperimentId::Fig3 => {
                cfg.k = 60.0;
                cfg.s = 180;
                cfg.trials = 50;
                cfg.algorithm = Algorithm::Niht;
                cfg.snr_db = grid(9.0, 24.0, 1.0);
            }
            ExperimentId::Table1 => {
                cfg.m = 4;
                cfg.nodes = 1 << 12;
                cfg.trials = 10;
            }
            ExperimentId::Fig4 => {
                cfg.m = 4;
                cfg.nodes = 1 << 12;
                cfg.trials = 1;
                cfg.r_values = vec![2];
            }
            ExperimentId::CoherenceCheck => {
                cfg.m = 4;
                cfg.nodes = 1 << 12;
                cfg.trials = 5;
                cfg.codebooks = vec![CodebookKind::Kerdock];
            }
        }
        cfg
    }

    /// Defaults for the chosen experiment with `overrides` applied. When `k`
    /// is overridden but `s` is not, `s` follows as `3k`; when `m` is
    /// overridden but `nodes` is not, `nodes` becomes `2^{3m}`.
    pub fn resolve(overrides: ConfigOverrides) -> Result<Self> {
        let experiment = overrides.experiment.ok_or_else(|| Error::Config("no experiment selected".into()))?;
        let mut cfg = Self::defaults(experiment);
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = overrides.$f.clone() { cfg.$f = v; })* };
        }
        set!(
            m,
            nodes,
            k,
            eta,
            alpha,
            snr_db,
            trials,
            codebooks,
            r_values,
            s,
            algorithm,
            seed,
            phase,
            fixed_mask,
            niht_max_iters,
            niht_tol,
            niht_step_safety,
            niht_step_shrink,
            gram_threshold
        );
        if overrides.out_dir.is_some() {
            cfg.out_dir = overrides.out_dir.clone();
        }
        if overrides.m.is_some() && overrides.nodes.is_none() {
            cfg.nodes = 1usize << (3 * cfg.m.min(MAX_KERDOCK_M));
        }
        if overrides.k.is_some() && overrides.s.is_none() {
            cfg.s = ((3.0 * cfg.k).round() as usize).max(1);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn recovery_params(&self) -> RecoveryParams {
        RecoveryParams {
            s: self.s,
            max_iters: self.niht_max_iters,
            tol_residual_rel: self.niht_tol,
            step_safety: self.niht_step_safety,
            step_shrink: self.niht_step_shrink,
        }
    }

    pub fn uses_erasures(&self) -> bool {
        self.codebooks.contains(&CodebookKind::DgErased)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let max_m = if self.uses_erasures() || !self.experiment.is_detection() { MAX_DENSE_M } else { MAX_KERDOCK_M };
        if self.m == 0 || self.m > max_m {
            return bad(format!("m = {} outside 1..={max_m}", self.m));
        }
        let cols = 1usize << (3 * self.m);
        if self.nodes == 0 || self.nodes > cols {
            return bad(format!("nodes = {} outside 1..={cols} (one column per node)", self.nodes));
        }
        if !(self.k > 0.0 && self.k <= self.nodes as f64) {
            return bad(format!("k = {} outside (0, nodes]", self.k));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) || !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("eta and alpha must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.codebooks.is_empty() {
            return bad("no codebook selected".into());
        }
        let mut codebooks = self.codebooks.clone();
        codebooks.sort();
        codebooks.dedup();
        if codebooks.len() != self.codebooks.len() {
            return bad("codebook list has duplicates".into());
        }
        if self.uses_erasures() || matches!(self.experiment, ExperimentId::Table1 | ExperimentId::Fig4) {
            if self.r_values.is_empty() {
                return bad("r_values must be non-empty".into());
            }
            if let Some(r) = self.r_values.iter().find(|&&r| r > MAX_ERASURE_EXPONENT) {
                return bad(format!("r = {r} outside 0..={MAX_ERASURE_EXPONENT}"));
            }
            let mut rs = self.r_values.clone();
            rs.sort_unstable();
            rs.dedup();
            if rs.len() != self.r_values.len() {
                return bad("r_values has duplicates".into());
            }
        }
        if self.experiment.is_detection() {
            if self.snr_db.is_empty() {
                return bad("SNR grid must be non-empty".into());
            }
            if self.snr_db.iter().any(|v| !v.is_finite()) {
                return bad("SNR grid values must be finite".into());
            }
            if self.s == 0 || self.s > cols {
                return bad(format!("s = {} outside 1..={cols}", self.s));
            }
            if self.algorithm == Algorithm::Niht {
                self.recovery_params().validate().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        if !(self.gram_threshold > 0.0 && self.gram_threshold.is_finite()) {
            return bad("gram_threshold must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for id in ExperimentId::ALL {
            ExperimentConfig::defaults(id).validate().unwrap();
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
        let f2 = ExperimentConfig::defaults(ExperimentId::Fig2);
        assert_eq!((f2.m, f2.nodes, f2.k, f2.s, f2.trials), (5, 32768, 5.0, 15, 200));
        assert_eq!(f2.snr_db.len(), 11);
        assert_eq!(*f2.snr_db.last().unwrap(), 30.0);
        let f3 = ExperimentConfig::defaults(ExperimentId::Fig3);
        assert_eq!((f3.k, f3.s, f3.trials, f3.algorithm), (60.0, 180, 50, Algorithm::Niht));
        assert_eq!(f3.snr_db.first(), Some(&9.0));
        assert_eq!(f3.snr_db.len(), 16);
    }

    #[test]
    fn toml_overrides() {
        let file = ConfigOverrides::from_toml_str(
            r#"
            experiment = "fig2"
            m = 3
            k = 2.0
            snr_db = [0.0, 10.0]
            codebooks = ["kerdock"]
            phase = "complex"
            "#,
        )
        .unwrap();
        let cli = ConfigOverrides { seed: Some(42), trials: Some(3), ..Default::default() };
        let cfg = ExperimentConfig::resolve(file.merge(cli)).unwrap();
        assert_eq!((cfg.m, cfg.nodes, cfg.s, cfg.seed, cfg.trials), (3, 512, 6, 42, 3));
        assert_eq!(cfg.codebooks, vec![CodebookKind::Kerdock]);
        assert_eq!(cfg.phase, PhaseMode::Complex);
    }

    #[test]
    fn later_overrides_win() {
        let a = ConfigOverrides { trials: Some(1), m: Some(2), ..Default::default() };
        let b = ConfigOverrides { trials: Some(7), ..Default::default() };
        let c = a.merge(b);
        assert_eq!((c.trials, c.m), (Some(7), Some(2)));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ConfigOverrides::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::resolve(ConfigOverrides::default()).is_err());
        let base = || ConfigOverrides { experiment: Some(ExperimentId::Fig2), ..Default::default() };
        for o in [
            ConfigOverrides { m: Some(6), ..base() },
            ConfigOverrides { nodes: Some(1 << 16), ..base() },
            ConfigOverrides { snr_db: Some(vec![]), ..base() },
            ConfigOverrides { trials: Some(0), ..base() },
            ConfigOverrides { r_values: Some(vec![5]), ..base() },
            ConfigOverrides { k: Some(0.0), ..base() },
            ConfigOverrides { codebooks: Some(vec![]), ..base() },
        ] {
            assert!(ExperimentConfig::resolve(o).is_err());
        }
        let kerdock_only = ConfigOverrides { m: Some(6), codebooks: Some(vec![CodebookKind::Kerdock]), ..base() };
        assert!(ExperimentConfig::resolve(kerdock_only).is_ok());
    }
}
