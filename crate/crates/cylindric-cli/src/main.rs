mod commands;
mod config;
mod output;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use suites::Suite;

#[derive(Parser)]
#[command(name = "cylindric", about = "Cylindric partitions: exact formulas, kernel, limit shape and sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite; exit 0 iff every check passes.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        flags: Flags,
    },
    /// Heat-bath sampling with statistics and the height profile.
    Sample(Flags),
    /// Limit shape grid and plot.
    Limitshape(Flags),
    /// Contour-integral moments.
    Moments(Flags),
    /// Green's function grid and heatmap.
    Greens(Flags),
    /// Correlation kernel on a window of sites.
    Kernel(Flags),
    /// Exact box-truncated expectations next to the contour formula.
    Exact(Flags),
}

#[derive(Args, Clone, Debug, Default)]
struct Flags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    /// Slice parameter; one value for all slices or one per `--tau`.
    #[arg(long)]
    k: Vec<u32>,
    /// Slice position in (0,1]; repeatable.
    #[arg(long)]
    tau: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sweeps: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel quadratures.
    #[arg(long)]
    threads: Option<usize>,
    /// `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            t: self.t,
            u: self.u,
            k: self.k.clone(),
            tau: self.tau.clone(),
            seed: self.seed,
            sweeps: self.sweeps,
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match &cli.command {
        Command::Verify { flags, .. } => ("verify", flags),
        Command::Sample(f) => ("sample", f),
        Command::Limitshape(f) => ("limitshape", f),
        Command::Moments(f) => ("moments", f),
        Command::Greens(f) => ("greens", f),
        Command::Kernel(f) => ("kernel", f),
        Command::Exact(f) => ("exact", f),
    };
    let cfg = match RunConfig::load(name, flags.config.as_deref(), &flags.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Verify { suite, .. } => suites::run(*suite, &cfg).map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }),
        Command::Sample(_) => commands::sample(&cfg).map(|_| ExitCode::SUCCESS),
        Command::Limitshape(_) => commands::limitshape(&cfg).map(|_| ExitCode::SUCCESS),
        Command::Moments(_) => commands::moments(&cfg).map(|_| ExitCode::SUCCESS),
        Command::Greens(_) => commands::greens(&cfg).map(|_| ExitCode::SUCCESS),
        Command::Kernel(_) => commands::kernel(&cfg).map(|_| ExitCode::SUCCESS),
        Command::Exact(_) => commands::exact(&cfg).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let config_error = e.chain().any(|c| matches!(c.downcast_ref::<cylindric::Error>(), Some(cylindric::Error::Config(_))));
            eprintln!("error: {e:#}");
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
