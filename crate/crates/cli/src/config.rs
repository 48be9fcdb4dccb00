//! Run configuration: defaults, TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lexnet::binet::{PValueConfig, SolverConfig};
use lexnet::complexity::DEFAULT_COMPRESSION_LEVEL;
use lexnet::synth::SynthConfig;
use serde::{Deserialize, Serialize};

pub const QUANTILE_RULE_TYPE7: &str = "type7";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tweets: Option<PathBuf>,
    pub user_labels: Option<PathBuf>,
    pub tweet_labels: Option<PathBuf>,
    /// Replaces the bundled Snowball English list.
    pub stopwords: Option<PathBuf>,
    /// External `user_id,political_leaning,reliability` ratings for the
    /// agreement check.
    pub kappa_labels: Option<PathBuf>,
    /// `field,raw,collapsed` table applied to `kappa_labels`; the bundled
    /// MBFC table when absent.
    pub label_mapping: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub compression_level: u32,
    pub fdr_alpha: f64,
    pub bicm_tol: f64,
    pub bicm_max_iter: usize,
    pub exact_dp_cutoff: usize,
    pub louvain_runs: usize,
    pub louvain_first_seed: u64,
    pub louvain_resolution: f64,
    pub quantile_rule: String,
    /// Worker threads; all processors when absent.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        RunConfig {
            tweets: None,
            user_labels: None,
            tweet_labels: None,
            stopwords: None,
            kappa_labels: None,
            label_mapping: None,
            output_dir: PathBuf::from("out"),
            compression_level: DEFAULT_COMPRESSION_LEVEL,
            fdr_alpha: 0.05,
            bicm_tol: solver.tol,
            bicm_max_iter: solver.max_iter,
            exact_dp_cutoff: PValueConfig::default().exact_cutoff,
            louvain_runs: lexnet::community::DEFAULT_RUNS,
            louvain_first_seed: 0,
            louvain_resolution: lexnet::community::DEFAULT_RESOLUTION,
            quantile_rule: QUANTILE_RULE_TYPE7.to_string(),
            threads: None,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative input paths are taken relative to the config file
        if let Some(base) = path.parent() {
            for p in [
                &mut cfg.tweets,
                &mut cfg.user_labels,
                &mut cfg.tweet_labels,
                &mut cfg.stopwords,
                &mut cfg.kappa_labels,
                &mut cfg.label_mapping,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.compression_level > 9 {
            bail!("compression_level must be 0..=9");
        }
        if !(self.fdr_alpha > 0.0 && self.fdr_alpha < 1.0) {
            bail!("fdr_alpha must lie in (0, 1)");
        }
        if !(self.bicm_tol > 0.0) || self.bicm_max_iter == 0 {
            bail!("bicm_tol and bicm_max_iter must be positive");
        }
        if self.louvain_runs < 2 {
            bail!("louvain_runs must be at least 2");
        }
        if !(self.louvain_resolution > 0.0) {
            bail!("louvain_resolution must be positive");
        }
        if self.quantile_rule != QUANTILE_RULE_TYPE7 {
            bail!("unsupported quantile_rule {:?} (only {QUANTILE_RULE_TYPE7:?})", self.quantile_rule);
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.bicm_tol,
            max_iter: self.bicm_max_iter,
        }
    }

    pub fn pvalues(&self) -> PValueConfig {
        PValueConfig {
            exact_cutoff: self.exact_dp_cutoff,
        }
    }
}
