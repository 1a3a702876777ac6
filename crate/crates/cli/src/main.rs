use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dvqls::experiment::{self, comparison_table};
use dvqls::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "dvqls", version, about = "Distributed variational linear solver simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured trials and write per-trial CSVs plus a summary.
    Run(Common),
    /// Run all four optimizer variants on the same configuration.
    CompareVariants(Common),
    /// Check the auxiliary-variable reduction on random vectors.
    CheckLemma1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Compare analytic local gradients with finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Shots,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; defaults apply when omitted.
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    shots: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(t) = self.trials {
            cfg.num_trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        match self.mode {
            Some(Mode::Exact) => cfg.estimator.mode = "exact".into(),
            Some(Mode::Shots) => cfg.estimator.mode = "shots".into(),
            None => {}
        }
        if let Some(n) = self.shots {
            cfg.estimator.shots = n;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.load()?;
            let s = experiment::run_experiment(&cfg, &cfg.output)?;
            let last = s.residual.mean.len() - 1;
            println!("{} trials, {} iterations", s.seeds.len(), last);
            println!("residual mean {:.6e} -> {:.6e} (std {:.3e})", s.residual.mean[0], s.residual.mean[last], s.residual.std[last]);
            println!("results in {}", cfg.output.display());
        }
        Command::CompareVariants(common) => {
            let cfg = common.load()?;
            let results = experiment::compare_variants(&cfg, &cfg.output)?;
            print!("{}", comparison_table(&results));
            println!("results in {}", cfg.output.display());
        }
        Command::CheckLemma1 { common, samples } => {
            let cfg = common.load()?;
            let (problem, _) = cfg.build()?;
            let checks = experiment::check_lemma1(&problem, cfg.seed, samples)?;
            let worst = checks.iter().map(|c| c.max_gap()).fold(0.0, f64::max);
            for c in &checks {
                println!("projection {:.12e} direct {:.12e} residual²/m {:.12e}", c.projection, c.direct, c.scaled_residual);
            }
            println!("max gap {worst:.3e}");
        }
        Command::Gradcheck { common, step } => {
            let cfg = common.load()?;
            let (problem, setup) = cfg.build()?;
            let checks = experiment::gradcheck(&problem, &setup, cfg.seed, step)?;
            for c in &checks {
                println!("agent ({}, {}): {} components, max error {:.3e}", c.row, c.col, c.components, c.max_error);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
