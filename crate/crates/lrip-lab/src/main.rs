use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lrip_lab::{run_and_write, Experiment, ExperimentConfig, LabError};

#[derive(Parser, Debug)]
#[command(name = "lrip-lab", version, about = "Run LRIP / IOP experiments from a JSON config")]
struct Cli {
    /// Experiment to run; must agree with the config's `experiment` field.
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = ExperimentConfig::from_path(&cli.config)?;
    if cfg.experiment != cli.experiment {
        return Err(LabError::Config(format!(
            "config is for `{}` but `{}` was requested",
            cfg.experiment.name(),
            cli.experiment.name()
        )));
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| run_and_write(&cfg));
    match result {
        Ok((report, written)) => {
            if written.is_empty() {
                println!("{}", report.to_json());
            } else {
                for p in written {
                    eprintln!("wrote {}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lrip-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
