use clap::{Parser, Subcommand};
use kssim_core::model::{admissible_q_sup, classify_regime};
use kssim_harness::config::fmt_f64;
use kssim_harness::{parse_config, run_experiment, ExperimentKind, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kssim", about = "Flux-limited Keller-Segel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation.
    Run(RunArgs),
    /// Run a mass sweep, epsilon study, refinement study or variation-stability experiment.
    Sweep(RunArgs),
    /// Run a regime atlas over (p, theta).
    Atlas(RunArgs),
    /// Classify parameters and print the admissible gradient exponent range.
    CheckRegime {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        dim: usize,
    },
    /// Print the version.
    Version,
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn allowed(command: &Command) -> &'static [ExperimentKind] {
    use ExperimentKind as K;
    match command {
        Command::Run(_) => &[K::Single],
        Command::Sweep(_) => &[K::MassSweep, K::EpsilonStudy, K::RefinementStudy, K::VariationStability],
        Command::Atlas(_) => &[K::RegimeAtlas],
        _ => &[],
    }
}

fn experiment(command: &Command, args: &RunArgs) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| HarnessError::Config {
        key: args.config.display().to_string(),
        message: e.to_string(),
    })?;
    let cfg = parse_config(&text)?;
    let kinds = allowed(command);
    if !kinds.contains(&cfg.kind) {
        let names: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
        return Err(HarnessError::Config {
            key: "experiment.kind".into(),
            message: format!("{:?} is not handled by this subcommand (expected one of {names:?})", cfg.kind.as_str()),
        });
    }
    let dir = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let (report, _) = run_experiment(&cfg, &dir)?;
    for r in &report.runs {
        match &r.outcome {
            Ok(o) => println!(
                "run {:>3}  {:<28} {:<16} gap_sup={}  mass_drift={}",
                r.job.index,
                r.job.label,
                o.summary.status.as_str(),
                o.summary.gap_sup.map_or("n/a".to_string(), fmt_f64),
                fmt_f64(o.summary.mass_drift)
            ),
            Err(e) => println!("run {:>3}  {:<28} failed: {e}", r.job.index, r.job.label),
        }
    }
    println!("wrote {}", dir.display());
    match report.first_failure() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn check_regime(p: f64, theta: f64, dim: usize) -> Result<(), HarnessError> {
    let regime = classify_regime(p, theta, dim)?;
    let q_sup = admissible_q_sup(theta, dim)?;
    println!("regime: {}", regime.tag.as_str());
    println!("threshold: {}", fmt_f64(regime.threshold.unwrap_or(f64::INFINITY)));
    println!(
        "q_sup: {} ({})",
        fmt_f64(q_sup.value.unwrap_or(f64::INFINITY)),
        if q_sup.inclusive { "inclusive" } else { "exclusive" }
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) | Command::Sweep(args) | Command::Atlas(args) => experiment(&cli.command, args),
        Command::CheckRegime { p, theta, dim } => check_regime(*p, *theta, *dim).map_err(|e| match e {
            HarnessError::Analysis(e) => HarnessError::Config {
                key: "check-regime".into(),
                message: e.to_string(),
            },
            other => other,
        }),
        Command::Version => {
            println!("kssim {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
