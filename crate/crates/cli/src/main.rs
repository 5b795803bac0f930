use anyhow::Context;
use charvar_cli::config::ExperimentConfig;
use charvar_cli::{plots, report, run, verify};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "charvar",
    about = "Monte Carlo laboratory for SU(n) character varieties of surface groups",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker thread count (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the acceptance tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the accepted-sample target.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_file(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        if let Some(epsilon) = self.epsilon {
            cfg.epsilon = Some(epsilon);
        }
        if let Some(samples) = self.samples {
            cfg.samples = samples;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw the configured sample batch and write it as JSON lines.
    Sample(ConfigArgs),
    /// Run one verification suite against the configured batch.
    Verify {
        /// twist | lemma | orthogonality | symplectic | mcg | free
        suite: String,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Render SVG plots from the CSV artifacts in the output directory.
    Plot {
        /// Output directory holding suite artifacts.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize all reports in the output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run_cli() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run_cli() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sample(args) => {
            let cfg = args.load()?;
            let resolved = cfg.resolve()?;
            let (batch, path) = run::run_sample(&resolved)?;
            println!(
                "wrote {} samples ({} proposals, acceptance rate {:.3e}) to {}",
                batch.len(),
                batch.proposals,
                batch.acceptance_rate(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, args } => {
            let cfg = args.load()?;
            let resolved = cfg.resolve()?;
            let suite = verify::Suite::parse(&suite)?;
            let outcome = verify::run_verify(&resolved, suite)?;
            for t in &outcome.report.tests {
                println!(
                    "[{}] {} measured={:.3e} threshold={:.3e}",
                    t.status.as_str().to_uppercase(),
                    t.name,
                    t.measured,
                    t.threshold
                );
            }
            println!(
                "suite {}: {} tests, acceptance rate {:.3e}, report {}",
                outcome.report.suite,
                outcome.report.tests.len(),
                outcome.report.acceptance_rate,
                outcome.report_path.display()
            );
            Ok(if outcome.failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Plot { out } => {
            let notes = plots::emit_plots(&out)?;
            for note in notes {
                println!("{note}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { out } => {
            let summary = report::summarize(&out)?;
            for line in &summary.lines {
                println!("{line}");
            }
            println!("failures: {}, flags: {}", summary.failures, summary.flags);
            Ok(if summary.failures > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}
