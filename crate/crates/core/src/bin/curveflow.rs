use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use curveflow::experiments::{self, Command, ExperimentError};

/// Curve metrics, the free-boundary minimizer, and curve diffusion flow runs.
#[derive(Debug, Parser)]
#[command(name = "curveflow", version)]
struct Cli {
    /// metrics | flow | minimize | verify-iso | sweep
    command: String,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a dotted config path, e.g. `--set flow.stop.t_end=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<String, ExperimentError> {
    let command: Command = cli.command.parse()?;
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| ExperimentError::Input(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut cfg = experiments::load_config(text.as_deref(), &cli.set)?;
    cfg.command = Some(command);
    let out = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| ExperimentError::Input("no output directory (use --out)".into()))?;
    let outcome = experiments::run_experiment(&cfg, &out)?;
    Ok(experiments::summary_line(&outcome))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("curveflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
