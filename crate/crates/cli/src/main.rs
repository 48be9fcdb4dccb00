use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lexnet_cli::{exit_code, RunConfig};

#[derive(Parser)]
#[command(name = "lexnet", version, about = "Lexical complexity and validated influencer networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted blocks
    Gen(GenArgs),
    /// Per-user complexity metrics and profiles
    Metrics,
    /// RCA, BiCM and FDR-validated projection
    Network,
    /// Louvain communities and label profiles
    Communities,
    /// Kruskal-Wallis grid, vocabulary fits and label agreement
    Report,
    /// Every stage in order
    All,
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    tweets: Option<PathBuf>,
    #[arg(long, global = true)]
    user_labels: Option<PathBuf>,
    #[arg(long, global = true)]
    tweet_labels: Option<PathBuf>,
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    #[arg(long, global = true)]
    kappa_labels: Option<PathBuf>,
    #[arg(long, global = true)]
    label_mapping: Option<PathBuf>,
    #[arg(long = "out", short = 'o', global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    compression_level: Option<u32>,
    #[arg(long = "alpha", global = true)]
    fdr_alpha: Option<f64>,
    #[arg(long, global = true)]
    bicm_tol: Option<f64>,
    #[arg(long, global = true)]
    bicm_max_iter: Option<usize>,
    #[arg(long, global = true)]
    exact_dp_cutoff: Option<usize>,
    #[arg(long, global = true)]
    louvain_runs: Option<usize>,
    #[arg(long = "louvain-seed", global = true)]
    louvain_first_seed: Option<u64>,
    #[arg(long = "resolution", global = true)]
    louvain_resolution: Option<f64>,
    /// Worker threads (default: all processors)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    users_per_block: Option<usize>,
    #[arg(long)]
    block_mixing: Option<f64>,
    #[arg(long)]
    shuffle_labels: bool,
}

macro_rules! override_with {
    ($cfg:expr, $src:expr, $($field:ident),*) => {
        $(if let Some(v) = $src.$field.clone() { $cfg.$field = v.into(); })*
    };
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    override_with!(cfg, c, output_dir, compression_level, fdr_alpha, bicm_tol, bicm_max_iter,
        exact_dp_cutoff, louvain_runs, louvain_first_seed, louvain_resolution);
    for (slot, flag) in [
        (&mut cfg.tweets, &c.tweets),
        (&mut cfg.user_labels, &c.user_labels),
        (&mut cfg.tweet_labels, &c.tweet_labels),
        (&mut cfg.stopwords, &c.stopwords),
        (&mut cfg.kappa_labels, &c.kappa_labels),
        (&mut cfg.label_mapping, &c.label_mapping),
    ] {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    if let Command::Gen(g) = &cli.command {
        override_with!(cfg.synth, g, seed, users_per_block, block_mixing);
        if let Some(b) = g.blocks {
            cfg.synth.n_blocks = b;
        }
        if g.shuffle_labels {
            cfg.synth.shuffle_labels = true;
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = build_config(cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Gen(_) => lexnet_cli::cmd_gen(&cfg)?,
        Command::Metrics => drop(lexnet_cli::cmd_metrics(&cfg)?),
        Command::Network => drop(lexnet_cli::cmd_network(&cfg)?),
        Command::Communities => drop(lexnet_cli::cmd_communities(&cfg)?),
        Command::Report => drop(lexnet_cli::cmd_report(&cfg)?),
        Command::All => drop(lexnet_cli::cmd_all(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
