use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ap_manifold::harness::{replot, run_sweep, spectrum_sweep, Overrides, SpectrumConfig, SweepConfig};
use ap_manifold::Error;

#[derive(Parser)]
#[command(name = "ap-manifold", version, about = "SPD Riemannian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment config.
    Run(RunArgs),
    /// Run every experiment of a config.
    Sweep(RunArgs),
    /// Hessian spectrum diagnostics over a kappa sweep.
    Spectrum(SpectrumArgs),
    /// Re-emit plot scripts from a finished output directory.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "AP_MANIFOLD_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "AP_MANIFOLD_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, env = "AP_MANIFOLD_OUT")]
    out: PathBuf,
}

fn sweep(args: RunArgs, single: bool) -> Result<ExitCode, Error> {
    let mut cfg = SweepConfig::load(&args.config)?;
    if single && cfg.experiment.len() != 1 {
        return Err(Error::InvalidConfig(format!(
            "`run` takes one experiment, {} found; use `sweep`",
            cfg.experiment.len()
        )));
    }
    cfg.apply(&Overrides {
        out: args.out,
        seed: args.seed,
        workers: args.workers,
        grad_tol: args.grad_tol,
        max_iters: args.max_iters,
    })?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let report = run_sweep(&cfg, &out)?;
    print!("{}", report.table_text);
    let failed: Vec<_> = report.failures().collect();
    for f in &failed {
        eprintln!("failed: {} ({})", f.cell.trace_file(), f.failure.as_deref().unwrap_or(""));
    }
    println!("results in {}", out.display());
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn spectrum(args: SpectrumArgs) -> Result<ExitCode, Error> {
    let mut cfg = SpectrumConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let table = spectrum_sweep(&cfg)?;
    print!("{}", table.text());
    if let Some(out) = args.out.or(cfg.out) {
        std::fs::create_dir_all(&out)?;
        std::fs::write(out.join("spectrum.csv"), table.csv())?;
        std::fs::write(out.join("spectrum.txt"), table.text())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => sweep(a, true),
        Command::Sweep(a) => sweep(a, false),
        Command::Spectrum(a) => spectrum(a),
        Command::Plot(a) => replot(&a.out).map(|scripts| {
            for s in scripts {
                println!("{}", s.display());
            }
            ExitCode::SUCCESS
        }),
    };
    match result {
        Ok(code) => code,
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
