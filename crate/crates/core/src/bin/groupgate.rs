use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groupgate::config::ExperimentConfig;
use groupgate::experiment::{cmd_analyze, cmd_eval, cmd_generate, cmd_reproduce_table1, cmd_train, Log};

#[derive(Parser)]
#[command(name = "groupgate", version, about = "Relational feature learning on image pairs")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the dataset and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap for data-parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress logging.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file (plus whitening for natural tasks).
    Generate,
    /// Train the configured model on a dataset file.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Classify transformations from a trained model's mapping units.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Filter spectra, histograms, phase tables and rendered maps.
    Analyze {
        #[arg(long)]
        model: PathBuf,
        /// Whitening file for models trained on whitened data.
        #[arg(long)]
        whitening: Option<PathBuf>,
    },
    /// Diagonal versus grouped models end to end, plus accuracy curves.
    ReproduceTable1,
}

fn load_config(cli: &Cli) -> groupgate::Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| groupgate::Error::Config("--config is required for this command".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn run(cli: &Cli, log: &Log) -> groupgate::Result<Vec<PathBuf>> {
    let out_dir = |cfg: Option<&ExperimentConfig>| -> PathBuf {
        cli.out
            .clone()
            .or_else(|| cfg.map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    };
    match &cli.command {
        Command::Generate => {
            let cfg = load_config(cli)?;
            cmd_generate(&cfg, &out_dir(Some(&cfg)), log)
        }
        Command::Train { dataset } => {
            let cfg = load_config(cli)?;
            cmd_train(&cfg, dataset, &out_dir(Some(&cfg)), log)
        }
        Command::Eval { model, dataset } => {
            let cfg = load_config(cli)?;
            cmd_eval(&cfg, model, dataset, &out_dir(Some(&cfg)), log)
        }
        Command::Analyze { model, whitening } => {
            let cfg = cli.config.as_ref().map(|_| load_config(cli)).transpose()?;
            cmd_analyze(model, whitening.as_deref(), &out_dir(cfg.as_ref()), log)
        }
        Command::ReproduceTable1 => {
            let cfg = load_config(cli)?;
            cmd_reproduce_table1(&cfg, &out_dir(Some(&cfg)), log)
        }
    }
}

fn verify(paths: &[PathBuf]) -> Result<(), String> {
    for p in paths {
        match Path::new(p).metadata() {
            Ok(m) if m.len() > 0 => {}
            _ => return Err(format!("artifact {} missing or empty", p.display())),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Log::new(cli.quiet);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log.event("warning", &[("message", e.to_string())]);
        }
    }
    match run(&cli, &log).map_err(|e| e.to_string()).and_then(|p| verify(&p).map(|_| p)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(message) => {
            // errors are reported even under --quiet
            Log::new(false).event("error", &[("message", message)]);
            ExitCode::FAILURE
        }
    }
}
