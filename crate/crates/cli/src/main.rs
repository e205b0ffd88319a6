use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use deficiency_cli::commands::{run, Command, Overrides};
use deficiency_cli::config::RunConfig;
use deficiency_cli::CliError;

/// Deficiency indices, self-adjoint extensions and bipartite certificates
/// for finite operator models.
#[derive(Parser, Debug)]
#[command(name = "deficiency", version)]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the JSON report here (matrix files go next to it)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    tol_rank: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    tol_zero: Option<f64>,

    /// Print the JSON report instead of the summary
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Deficiency indices and bases
    Indices,
    /// Build and verify one self-adjoint extension
    Extend {
        /// `phase:<θ>` or a unitary matrix file
        #[arg(long)]
        unitary: Option<String>,
    },
    /// Direct and fiberwise deficiency spaces of the block operator
    Bipartite,
    /// σ frames and unitaries at spectral parameters
    Frames {
        /// Spectral parameter `a+bi`; repeatable
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
    },
    /// Deficiency dimensions of S_A ⊗ I + I ⊗ S_B (exploratory)
    Probe,
    /// Extensions for equally spaced phases e^{iθ}·I
    Sweep {
        #[arg(long)]
        phases: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    let mut ov = Overrides {
        out: cli.out.clone(),
        tol_rank: cli.tol_rank,
        tol_zero: cli.tol_zero,
        ..Overrides::default()
    };
    let cmd = match cli.command {
        Cmd::Indices => Command::Indices,
        Cmd::Extend { unitary } => {
            ov.unitary = unitary;
            Command::Extend
        }
        Cmd::Bipartite => Command::Bipartite,
        Cmd::Frames { z } => {
            ov.z = z;
            Command::Frames
        }
        Cmd::Probe => Command::Probe,
        Cmd::Sweep { phases } => {
            ov.phases = phases;
            Command::Sweep
        }
    };
    ov.apply(&mut cfg)?;
    let out = ov.out.clone().or_else(|| cfg.output_path());

    let mut report = run(cmd, &cfg, out.as_deref())?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    let json = report.to_json();
    if let Some(out) = &out {
        std::fs::write(out, &json).map_err(|e| CliError::Io {
            path: out.display().to_string(),
            message: e.to_string(),
        })?;
    }
    if cli.json {
        print!("{json}");
    } else {
        print!("{}", report.summary());
    }
    let failed = report.failed_checks();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) is taken by model rejection.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
