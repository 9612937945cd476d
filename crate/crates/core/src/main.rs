use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use feastap::dataset::{load_csv, CsvOptions};
use feastap::runner::{collect_runs, evaluate_exported, report_table, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "feastap", version, about = "Evolve spiking-network classifiers with feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repeat described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Target standard deviation of the ISI noise (ms).
        #[arg(long)]
        noise_sd: Option<f64>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an exported chromosome on a dataset.
    Eval {
        #[arg(long)]
        chromosome: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// CSV whose feature ranges are used for scaling (default: --dataset).
        #[arg(long)]
        ranges: Option<PathBuf>,
        #[arg(long)]
        header: bool,
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        /// Seed of the run the chromosome came from; selects the noise stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Print the table for a directory of finished runs.
    Report {
        #[arg(long)]
        runs: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> feastap::Result<()> {
    match command {
        Command::Train {
            config,
            seed,
            noise_sd,
            generations,
            repeats,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.evo.seed = s;
            }
            if let Some(sd) = noise_sd {
                cfg.noise.target_sd = sd;
            }
            if let Some(g) = generations {
                cfg.evo.generations = g;
            }
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let report = run_experiment(&cfg)?;
            print!("{}", report_table(&report));
            for r in &report.runs {
                eprintln!("seed {}: {:.1} s", r.seed, r.wall_clock_secs);
            }
            eprintln!("results written to {}", cfg.output_dir.display());
        }
        Command::Eval {
            chromosome,
            dataset,
            ranges,
            header,
            noise_sd,
            seed,
            dt,
        } => {
            let opts = CsvOptions { has_header: header };
            let data = load_csv(&dataset, opts)?;
            let range_data = match ranges {
                Some(path) => load_csv(&path, opts)?,
                None => data.clone(),
            };
            let mut cfg = ExperimentConfig { dataset, dt, ..ExperimentConfig::default() };
            cfg.noise.target_sd = noise_sd;
            let text = std::fs::read_to_string(&chromosome)?;
            let accuracy = evaluate_exported(&text, &data, &range_data, &cfg, seed)?;
            println!("accuracy\t{accuracy}");
        }
        Command::Report { runs } => {
            print!("{}", report_table(&collect_runs(&runs)?));
        }
    }
    Ok(())
}
