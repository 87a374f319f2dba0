use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use levy_dd::verify_harness::{self as harness, RunConfig, Variants};

#[derive(Parser)]
#[command(
    name = "levy-dd",
    version,
    about = "Drawdown laws of spectrally negative Lévy processes"
)]
struct Cli {
    /// INI run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `[sim] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for simulation.
    #[arg(long, global = true, env = "LEVY_DD_THREADS")]
    threads: Option<usize>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Use the expressions exactly as printed where they differ.
    #[arg(long, global = true, hide = true)]
    printed: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate W, W' and Z.
    Scale {
        /// Also write closed-form and inverted W side by side.
        #[arg(long)]
        compare: bool,
    },
    /// Evaluate the analytic law sweeps.
    Law,
    /// Evaluate the exit identity sweeps.
    Exit,
    /// Compare the law sweeps with the Monte Carlo oracle.
    Verify,
    /// Write per-path decomposition records.
    Simulate,
}

fn run(cli: Cli) -> levy_dd::Result<bool> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| levy_dd::Error::Config {
            line: 0,
            msg: "--config is required".into(),
        })?;
    let mut config = RunConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        config.sim.seed = seed;
    }
    if let Some(n) = cli.threads {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").to_path_buf());
    let variants = Variants {
        printed: cli.printed,
    };

    match cli.command {
        Command::Scale { compare } => {
            if let Some(worst) = harness::run_scale(&config, &out, compare)? {
                println!("max |W_closed_form - W_inverted| = {worst:.3e}");
            }
            println!("wrote {}", out.join("scale.csv").display());
        }
        Command::Law => {
            let rows = harness::run_law(&config, &out, variants)?;
            println!(
                "wrote {} rows to {}",
                rows.len(),
                out.join("laws.csv").display()
            );
        }
        Command::Exit => {
            let rows = harness::run_exit(&config, &out)?;
            println!(
                "wrote {} rows to {}",
                rows.len(),
                out.join("exit.csv").display()
            );
        }
        Command::Verify => {
            let report = harness::run_verify(&config, &out, variants)?;
            print!("{}", report.human());
            return Ok(report.pass);
        }
        Command::Simulate => {
            let path = harness::run_simulate(&config, &out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
