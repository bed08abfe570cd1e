use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use thermohom::cli::{dispatch, Command};
use thermohom::parse_config;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    /// Corrector solve at one sample, with VTK output.
    Cell,
    /// Effective coefficients over a grid of times and macro points.
    Effective,
    /// Homogenized two-scale simulation.
    Macro,
    /// ε-resolved reference runs.
    Micro,
    /// Distance between ε-resolved and homogenized solutions.
    Compare,
    /// Mesh, transformation and operator structure checks.
    Checks,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Cell => Command::Cell,
            Sub::Effective => Command::Effective,
            Sub::Macro => Command::Macro,
            Sub::Micro => Command::Micro,
            Sub::Compare => Command::Compare,
            Sub::Checks => Command::Checks,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "thermohom", version, about = "Two-scale thermoelasticity with moving inclusions")]
struct Args {
    #[arg(value_enum)]
    subcommand: Sub,
    /// Run configuration (TOML); see docs/config.md.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let out = args.out.unwrap_or_else(|| cfg.output.directory.clone());
    match dispatch(args.subcommand.into(), &cfg, &out) {
        Ok(o) => {
            println!("{}", o.summary);
            for a in &o.artifacts {
                println!("wrote {}", out.join(a).display());
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
