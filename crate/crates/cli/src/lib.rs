//! Command-line front end: TOML run configurations in, CSV tables and JSON
//! sidecars out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use commands::{Mutation, Report};
use config::RunConfig;
use error::{CliError, CliResult};
use output::Sidecar;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    Steady,
    Greens,
    Fcs,
    Loschmidt,
    Kdist,
    OracleCompare,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Steady => "steady",
            Task::Greens => "greens",
            Task::Fcs => "fcs",
            Task::Loschmidt => "loschmidt",
            Task::Kdist => "kdist",
            Task::OracleCompare => "oracle-compare",
        }
    }
}

/// Runs `task` without writing anything.
pub fn compute(task: Task, cfg: &RunConfig, oracle_compare: bool, mutation: Mutation) -> CliResult<Report> {
    match task {
        Task::Spectrum => commands::spectrum(cfg, oracle_compare),
        Task::Steady => commands::steady(cfg, oracle_compare),
        Task::Greens => commands::greens_with(cfg, oracle_compare, mutation),
        Task::Fcs => commands::fcs(cfg, oracle_compare),
        Task::Loschmidt => commands::loschmidt(cfg, oracle_compare),
        Task::Kdist => commands::kdist(cfg, oracle_compare),
        Task::OracleCompare => commands::oracle_compare_with(cfg, mutation),
    }
}

/// Output directory: `--out`, else the config's `output`, else `./out`.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Computes, writes tables and sidecar, and maps oracle breaches to an error.
/// Files are written even when the comparison fails.
pub fn run(
    task: Task,
    cfg: &RunConfig,
    out: Option<&Path>,
    threads: Option<usize>,
    oracle_compare: bool,
    mutation: Mutation,
) -> CliResult<Vec<PathBuf>> {
    let threads = threads.or(cfg.threads);
    let report = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?
            .install(|| compute(task, cfg, oracle_compare, mutation))?,
        None => compute(task, cfg, oracle_compare, mutation)?,
    };
    let dir = output_dir(cfg, out);
    let mut paths = vec![];
    for table in &report.tables {
        paths.push(table.write(&dir)?);
    }
    let mut diagnostics = report.diagnostics.clone();
    diagnostics.insert("oracle_mismatches".into(), serde_json::json!(report.mismatches));
    let sidecar = Sidecar {
        task: task.name(),
        version: VERSION,
        config: cfg,
        files: report.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        diagnostics: serde_json::Value::Object(diagnostics),
    };
    paths.push(sidecar.write(&dir)?);
    if !report.mismatches.is_empty() {
        return Err(CliError::OracleMismatch(report.mismatches.join("; ")));
    }
    Ok(paths)
}
