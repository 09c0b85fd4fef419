use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fcl::{compute, write, Command, RunError, Scenario};

/// Distance fields, cut loci and structure checks for closed sets on Finsler surfaces.
#[derive(Parser, Debug)]
#[command(name = "fcl", version)]
struct Args {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    config: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    command: Command,
    /// Overrides `grid.h`.
    #[arg(long)]
    grid_h: Option<f64>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
    /// Worker threads.
    #[arg(long, env = "FCL_THREADS", hide = true)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().expect("thread pool");
    }
    let mut scenario = match Scenario::load(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(h) = args.grid_h {
        scenario.grid.h = h;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let result = compute(&scenario, args.command).and_then(|mut p| {
        write(&scenario, &mut p, args.command, &args.out)?;
        Ok(p)
    });
    match result {
        Ok(p) => {
            if !args.quiet {
                print!("{}", p.report.to_text());
                println!("wrote {}", args.out.display());
            }
            if p.report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
