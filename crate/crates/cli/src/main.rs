use std::path::PathBuf;
use std::process::ExitCode;

use aqc_vmc::experiment::{
    configure_workers, generate_instances, run_ensemble, run_oracle, run_sa_baseline, run_single, ExperimentConfig,
};
use clap::{Args, Parser, Subcommand};

/// Variational quantum annealing experiments.
///
/// Worker threads are taken from AQC_WORKERS (default: all cores).
#[derive(Parser)]
#[command(name = "aqc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set tvmc.n_samples=2000`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Pick {
    #[arg(long, default_value_t = 0)]
    realization: usize,
    /// Index into `anneal.times`
    #[arg(long, default_value_t = 0)]
    time_index: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write instance files only
    Generate(Common),
    /// Anneal a single instance
    Anneal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pick: Pick,
    },
    /// Anneal every (realization, T) pair
    Ensemble(Common),
    /// Simulated-annealing repetition counts
    SaBaseline(Common),
    /// Exact reference dynamics and ground state
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pick: Pick,
    },
}

fn load(common: &Common) -> aqc_vmc::Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(&common.config)?;
    Ok((ExperimentConfig::from_toml(&text, &common.overrides)?, text))
}

fn run(cli: Cli) -> aqc_vmc::Result<ExitCode> {
    let workers = configure_workers()?;
    eprintln!("workers: {workers}");
    match cli.command {
        Command::Generate(common) => {
            let (cfg, _) = load(&common)?;
            for path in generate_instances(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Anneal { common, pick } => {
            let (cfg, _) = load(&common)?;
            let rec = run_single(&cfg, pick.realization, pick.time_index)?;
            let r = &rec.result;
            println!("dir        {}", rec.dir.display());
            println!("e_final    {:.6} ± {:?}", r.e_final.mean, r.e_final.error);
            if let Some(p) = r.p_success {
                println!("p_success  {:.6} ± {:?}", p.mean, p.error);
            }
            if let Some(k) = r.kink_density_final {
                println!("kinks      {:.6} ± {:?}", k.mean, k.error);
            }
        }
        Command::Ensemble(common) => {
            let (cfg, text) = load(&common)?;
            let report = run_ensemble(&cfg, Some(&text))?;
            println!("{} runs, {} failed -> {}", report.n_runs(), report.failures.len(), cfg.output_dir.display());
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            if report.is_partial_failure() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::SaBaseline(common) => {
            let (cfg, text) = load(&common)?;
            let (rows, failures) = run_sa_baseline(&cfg, Some(&text))?;
            let finite = rows.iter().filter(|r| r.n_rep.is_some_and(f64::is_finite)).count();
            println!("{} instances, {finite} with finite n_rep, {} failed", rows.len(), failures.len());
            for f in &failures {
                eprintln!("failed: {f}");
            }
            if !failures.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Oracle { common, pick } => {
            let (cfg, _) = load(&common)?;
            println!("{}", run_oracle(&cfg, pick.realization, pick.time_index)?.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
