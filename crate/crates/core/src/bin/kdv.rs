use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kdv_core::error::{KdvError, Result};
use kdv_core::harness::config::ExperimentConfig;
use kdv_core::harness::experiment::{
    converge, dump_kernels, max_norm_ratio, simulate, write_convergence, write_reference, write_simulation, KernelCache,
    Vary,
};

#[derive(Parser)]
#[command(name = "kdv", version, about = "Linearized KdV solver with discrete transparent boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write snapshots, traces and a manifest.
    Simulate {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Sweep N or M and write a convergence table.
    Converge {
        config: PathBuf,
        #[arg(long)]
        vary: Vary,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<usize>,
        /// Defaults to `<output_dir>/convergence_<N|M>.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute the boundary kernels and write them to a file.
    Kernels {
        config: PathBuf,
        #[arg(long)]
        dump: PathBuf,
    },
    /// Evaluate the configured reference solution at the given times.
    Reference {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        times: Vec<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let cache = KernelCache::new();
    match cli.command {
        Command::Simulate { config, output_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let report = simulate(&cfg, &cache)?;
            let files = write_simulation(&report, &dir)?;
            println!(
                "N={} M={} stability_ratio={:.4e} max_norm_ratio={:.6} wall_clock={:.2}s",
                cfg.n,
                cfg.m,
                report.diagnostics.stability_ratio,
                max_norm_ratio(&report.diagnostics.norms),
                report.wall_clock_seconds
            );
            if let Some(e) = &report.errors {
                println!("aggregate_error={:.6e}", e.aggregate);
            }
            println!("wrote {} files to {}", files.len(), dir.display());
        }
        Command::Converge {
            config,
            vary,
            values,
            output,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = converge(&cfg, vary, &values, &cache)?;
            let (name, slope) = match vary {
                Vary::N => ("N", "alpha"),
                Vary::M => ("M", "beta"),
            };
            let path = output.unwrap_or_else(|| cfg.output_dir.join(format!("convergence_{name}.csv")));
            write_convergence(&table, &path)?;
            for (i, (p, e)) in table.params.iter().zip(&table.errors).enumerate() {
                match i.checked_sub(1).map(|j| table.slopes[j]) {
                    Some(s) => println!("{name}={p:<6} err={e:.4e} {slope}={s:.4e}"),
                    None => println!("{name}={p:<6} err={e:.4e}"),
                }
            }
            println!("wrote {}", path.display());
        }
        Command::Kernels { config, dump } => {
            let cfg = ExperimentConfig::load(&config)?;
            let k = dump_kernels(&cfg, &dump)?;
            println!(
                "steps={} tau={:e} radius={:.6} samples={} -> {}",
                k.steps,
                k.tau,
                k.contour_radius,
                k.sample_count,
                dump.display()
            );
        }
        Command::Reference {
            config,
            times,
            output_dir,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let files = write_reference(&cfg, &times, &dir, &cache)?;
            println!("wrote {} files to {}", files.len(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as configuration errors; help and version succeed.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let KdvError::AtStage { stage, .. } = &e {
                eprintln!("failed stage: {stage}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
