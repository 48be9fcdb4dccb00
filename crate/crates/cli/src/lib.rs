//! Pipeline orchestration behind the `lexnet` command.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::RunConfig;
pub use pipeline::{cmd_all, cmd_communities, cmd_gen, cmd_metrics, cmd_network, cmd_report, Manifest};

/// Process exit code for an error: 2 for numerical failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<lexnet::Error>() {
        Some(lexnet::Error::NonConvergence { .. } | lexnet::Error::Infeasible(_)) => 2,
        _ => 1,
    }
}
