use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netcorrupt::experiment::{run_analytic, run_experiment, run_mrf, ExperimentConfig, ExperimentError, MrfSpec};
use netcorrupt::predict::{predict_from_moral, predict_spurious, EdgeClass};

#[derive(Parser)]
#[command(name = "netcorrupt", version, about = "Network structure recovery from corrupted data streams")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate, corrupt, estimate and grade (trial-averaged Welch spectra).
    Run(Common),
    /// Same pipeline on exact spectra, with the Woodbury cross-check.
    Analytic(Common),
    /// Markov random field marginalization check.
    Mrf(Common),
    /// Parse and validate a config without running it.
    ValidateConfig(Common),
    /// Write the predicted graph as DOT (stdout unless --out is given).
    ExportDot(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` from the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.simulation.trials = t;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn export_dot(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), ExperimentError> {
    cfg.validate()?;
    let labels = cfg.labels();
    let report = if cfg.system.is_some() {
        let b = cfg.build_system()?;
        predict_spurious(&b.system.generative_graph(), &b.assignment.perturbed_set())?
    } else {
        let (graph, z) = match cfg.mrf.as_ref().map(MrfSpec::build).transpose()? {
            Some(netcorrupt::experiment::BuiltMrf::Gaussian { model, perts, .. }) => (
                netcorrupt::graphs::moral_graph(&model.digraph()),
                perts.iter().map(|p| p.node).collect(),
            ),
            Some(netcorrupt::experiment::BuiltMrf::Discrete { mrf, perts, .. }) => {
                (mrf.graph().clone(), perts.iter().map(|p| p.node).collect())
            }
            None => unreachable!("validate requires a system or an mrf"),
        };
        predict_from_moral(&graph, &z)?
    };
    let dot = report.predicted_dot(&labels);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("predicted.dot"), dot)?;
        }
        None => print!("{dot}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, ExperimentError> {
    let (Cmd::Run(c) | Cmd::Analytic(c) | Cmd::Mrf(c) | Cmd::ValidateConfig(c) | Cmd::ExportDot(c)) = &cli.cmd;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
    }
    let cfg = c.load()?;
    let report = match &cli.cmd {
        Cmd::ValidateConfig(_) => {
            cfg.validate()?;
            println!("ok {}", cfg.hash());
            return Ok(0);
        }
        Cmd::ExportDot(_) => {
            export_dot(&cfg, c.out.as_deref())?;
            return Ok(0);
        }
        Cmd::Run(_) => run_experiment(&cfg)?,
        Cmd::Analytic(_) => run_analytic(&cfg)?,
        Cmd::Mrf(_) => run_mrf(&cfg)?,
    };
    let dir = c.out_dir(&cfg);
    report.write_outputs(&dir)?;
    let p = &report.prediction;
    let spurious = p.classified.iter().filter(|e| e.class != EdgeClass::TrueKin).count();
    println!(
        "recovered {} edges: {spurious} spurious, {} outside the prediction, {} missing; wrote {}",
        report.recovered.edge_count(),
        p.violations.len(),
        p.missing.len(),
        dir.display()
    );
    for n in &report.notes {
        eprintln!("note: {n}");
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
