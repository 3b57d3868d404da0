use clap::{Parser, Subcommand};
use lindblad_cf_cli::commands::Mutation;
use lindblad_cf_cli::config::RunConfig;
use lindblad_cf_cli::{run, Task};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lindblad-cf", version, about = "Quadratic open-fermion dynamics and nonlocal correlators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML, or a JSON sidecar from a previous run).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid points.
    #[arg(long)]
    threads: Option<usize>,
    /// Compare each value with the Fock-space oracle (N <= 5).
    #[arg(long)]
    oracle_compare: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Rapidities and spectral gap over a mu grid.
    Spectrum(Common),
    /// Steady-state covariance matrix.
    Steady(Common),
    /// Anyon Green's functions over (phi, t, l).
    Greens(Common),
    /// Subsystem charge distribution P_n.
    Fcs(Common),
    /// Loschmidt echo and rate function.
    Loschmidt(Common),
    /// Steady-state anyon momentum distribution.
    Kdist(Common),
    /// Closed form against the Fock-space oracle for every observable.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        /// Flip the anyon phase on the closed-form side.
        #[arg(long, hide = true)]
        mutate_anyon_phase: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common, mutation) = match cli.command {
        Command::Spectrum(c) => (Task::Spectrum, c, Mutation::default()),
        Command::Steady(c) => (Task::Steady, c, Mutation::default()),
        Command::Greens(c) => (Task::Greens, c, Mutation::default()),
        Command::Fcs(c) => (Task::Fcs, c, Mutation::default()),
        Command::Loschmidt(c) => (Task::Loschmidt, c, Mutation::default()),
        Command::Kdist(c) => (Task::Kdist, c, Mutation::default()),
        Command::OracleCompare { common, mutate_anyon_phase } => (
            Task::OracleCompare,
            common,
            Mutation {
                flip_anyon_phase: mutate_anyon_phase,
            },
        ),
    };
    let result = RunConfig::load(&common.config).and_then(|cfg| {
        run(
            task,
            &cfg,
            common.out.as_deref(),
            common.threads,
            common.oracle_compare,
            mutation,
        )
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
