mod job;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tilediff::denoise::{GmmPrior, DEFAULT_TAU};
use tilediff::Shape;

use job::{parse_job, JobArgs, Purpose};

/// Tiled diffusion restoration with analytic priors.
#[derive(Debug, Parser)]
#[command(name = "tilediff", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Restore an image (sr, inpaint, colorize, denoise).
    Restore(JobArgs),
    /// Generate an image of arbitrary size.
    Generate(JobArgs),
    /// Print the tile plan of a job without running it.
    Plan(JobArgs),
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic stationary mixture prior to a directory.
    MakePrior {
        #[arg(long = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        patch: usize,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        #[arg(long, default_value_t = 8)]
        components: usize,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Spatial period of the components; defaults to half the patch.
        #[arg(long)]
        period: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn restore_or_generate(args: &JobArgs, purpose: Purpose) -> Result<()> {
    let job = parse_job(args, purpose)?;
    let report = run::run_job(&job)?;
    println!("wrote {} ({})", report.output.display(), report.hash);
    println!("metrics in {}", report.metrics.display());
    for (k, v) in &report.lines {
        if k == "consistency_error" || k == "steps" || k == "wall_clock_s" || k == "tiles" {
            println!("  {k}: {v}");
        }
    }
    Ok(())
}

fn selftest(seed: u64) -> Result<bool> {
    let mut all = true;
    for job in tilediff::selftest::jobs() {
        let outcome = job.run(seed)?;
        all &= outcome.passed;
        println!(
            "{:<14} {} {} [{}]",
            outcome.name,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            &outcome.hash[..16]
        );
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Restore(args) => restore_or_generate(&args, Purpose::Restore)?,
        Command::Generate(args) => restore_or_generate(&args, Purpose::Generate)?,
        Command::Plan(args) => {
            let job = parse_job(&args, Purpose::Plan)?;
            print!("{}", run::describe_plan(&job)?);
        }
        Command::Selftest { seed } => return selftest(seed),
        Command::MakePrior {
            out,
            patch,
            channels,
            components,
            tau,
            period,
            seed,
        } => {
            let shape = Shape::new(patch, patch, channels);
            let period = period.unwrap_or((patch / 2).max(1));
            let prior = GmmPrior::stationary(shape, components, tau, period, seed)?;
            prior
                .save(&out)
                .with_context(|| format!("writing prior to {}", out.display()))?;
            println!(
                "wrote {components}-component prior ({shape}, tau {tau}, period {period}) to {}",
                out.display()
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
