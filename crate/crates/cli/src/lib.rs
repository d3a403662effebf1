//! Command-line orchestration for `lawson-core`: configuration, artifact writing and the
//! acceptance report.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use run::{run, Subcommand};

/// Caps the global thread pool from `LAWSON_LAB_THREADS`.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LAWSON_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t >= 1)
        .ok_or_else(|| CliError::Validation(format!("LAWSON_LAB_THREADS={raw} is not a positive integer")))?;
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
