//! `pwdg run <config> [flags]`: adaptive PWDG runs from a config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pwdg_core::driver::{run_adaptive, DirectoryExporter, RunConfig};
use pwdg_core::Error;

#[derive(Parser)]
#[command(name = "pwdg", version, about = "Adaptive plane wave DG solver for the 2D Helmholtz equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop described by a config file.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Dörfler bulk parameter.
        #[arg(long)]
        theta: Option<f64>,
        /// Exponent of the weighted indicator.
        #[arg(long)]
        s: Option<f64>,
        /// Plane waves per element.
        #[arg(long)]
        p: Option<usize>,
        /// `dg` or `weighted`.
        #[arg(long)]
        indicator: Option<String>,
    },
}

enum Failure {
    Config(Error),
    Run(Error),
}

fn load(cmd: &Command) -> Result<RunConfig, Error> {
    let Command::Run { config, out, max_iter, theta, s, p, indicator } = cmd;
    let mut cfg = RunConfig::from_file(config)?;
    let overrides = [
        ("max_iter", max_iter.map(|v| v.to_string())),
        ("theta", theta.map(|v| v.to_string())),
        ("s", s.map(|v| v.to_string())),
        ("p", p.map(|v| v.to_string())),
        ("indicator", indicator.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(out) = out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: &Command) -> Result<(), Failure> {
    let cfg = load(cmd).map_err(Failure::Config)?;
    let mut exporter = DirectoryExporter::create(&cfg.output).map_err(Failure::Run)?;
    println!("{:>4} {:>8} {:>8} {:>12} {:>12} {:>12} {:>10} {:>10}", "iter", "dofs", "elements", "error", "eta_scaled", "efficiency", "rcond", "seconds");
    let mut observer = |s: &pwdg_core::driver::Snapshot<'_>| {
        let r = s.row;
        println!(
            "{:>4} {:>8} {:>8} {:>12.4e} {:>12.4e} {:>12.4} {:>10.2e} {:>10.3}",
            r.iter, r.dofs, r.elements, r.rel_l2_error, r.eta_scaled, r.efficiency, r.rcond, r.seconds
        );
        pwdg_core::driver::Observer::iteration(&mut exporter, s)
    };
    run_adaptive(&cfg, &mut observer).map_err(Failure::Run)?;
    println!("wrote {}", cfg.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("pwdg: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("pwdg: {e}");
            ExitCode::from(2)
        }
    }
}
