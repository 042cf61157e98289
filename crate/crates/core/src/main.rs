use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transform_ident::config::RunConfig;
use transform_ident::run::run;
use transform_ident::{Error, Result};

/// Identification and plug-in estimation for heteroscedastic
/// transformation models.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct h from the exact lambda of a registered model.
    Oracle(Common),
    /// Draw a sample CSV from a registered model.
    Simulate(Common),
    /// Estimate lambda and h from a sample CSV.
    Estimate(Common),
    /// Check the closed form against the ODE, uniqueness and Gronwall.
    Verify(Common),
    /// Monte Carlo convergence study.
    Mc(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set grid.points=201`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample size for `simulate`.
    #[arg(short, long)]
    n: Option<usize>,
}

fn config(mode: &str, c: &Common) -> Result<RunConfig> {
    let mut overrides = vec![("mode".to_string(), format!("{mode:?}"))];
    for s in &c.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let quoted = |p: &PathBuf| format!("{:?}", p.display().to_string());
    if let Some(m) = &c.model {
        overrides.push(("model".into(), format!("{m:?}")));
    }
    if let Some(p) = &c.input {
        overrides.push(("input".into(), quoted(p)));
    }
    if let Some(p) = &c.output {
        overrides.push(("output".into(), quoted(p)));
    }
    if let Some(s) = c.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(n) = c.n {
        overrides.push(("n".into(), n.to_string()));
    }
    RunConfig::load(c.config.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.command {
        Command::Oracle(c) => ("oracle", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Estimate(c) => ("estimate", c),
        Command::Verify(c) => ("verify", c),
        Command::Mc(c) => ("mc", c),
    };
    match config(mode, common).and_then(|cfg| run(&cfg)) {
        Ok(report) => {
            println!(
                "{}: wrote {} to {}",
                mode,
                report.files.join(", "),
                report.dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
