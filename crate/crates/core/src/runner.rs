//! Experiment harness: configuration files, seeded repeats, and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::EncodingConfig;
use crate::dataset::{load_csv, split, CsvOptions, Dataset};
use crate::error::{Error, Result};
use crate::evolution::{history_to_tsv, run, EvoConfig, NetworkEvaluator, Pairing};
use crate::fitness::{EncodedPatterns, EvalSettings, FitnessCoeffs, FitnessKind};
use crate::genome::{
    decode_genome, recurrent_input_skeleton, Chromosome, GenomeLayout, MaskInit, ParameterBounds,
    DEFAULT_GENE_BITS,
};
use crate::neuron::{Network, SimConfig, WaveformParams};
use crate::noise::NoiseModel;
use crate::rng::{derive_seed, stream, SPLIT, TEST_NOISE, TRAIN_NOISE};

/// PSP time constants used by every synapse (ms).
pub const PSP_T1: f64 = 5.0;
pub const PSP_T2: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub header: bool,
    pub evo: EvoConfig,
    pub isi_lo: f64,
    pub isi_hi: f64,
    pub horizon: f64,
    pub dt: f64,
    pub noise: NoiseModel,
    /// Apply the noise model to the held-out patterns as well.
    pub noisy_test: bool,
    pub repeats: usize,
    pub output_dir: PathBuf,
    pub train_fraction: f64,
    pub stratified: bool,
    pub warmup: f64,
    pub coeffs: FitnessCoeffs,
    pub fitness: FitnessKind,
    pub gene_bits: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/iris.csv"),
            header: false,
            evo: EvoConfig::default(),
            isi_lo: 5.0,
            isi_hi: 15.0,
            horizon: 300.0,
            dt: 0.1,
            noise: NoiseModel::default(),
            noisy_test: true,
            repeats: 5,
            output_dir: PathBuf::from("runs"),
            train_fraction: 0.8,
            stratified: true,
            warmup: 15.0,
            coeffs: FitnessCoeffs::default(),
            fitness: FitnessKind::ThreeTerm,
            gene_bits: DEFAULT_GENE_BITS,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("line {line}: `{key}` expects true/false, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines. Relative paths are resolved against
    /// `base_dir`. Unknown keys are errors.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut dataset_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| parse_value::<f64>(key, v, line);
            match key {
                "dataset" => {
                    cfg.dataset = base_dir.join(value);
                    dataset_set = true;
                }
                "header" => cfg.header = parse_bool(key, value, line)?,
                "skeleton" => {
                    if !matches!(value, "iris" | "recurrent-input") {
                        return Err(Error::Config(format!("line {line}: unknown skeleton `{value}`")));
                    }
                }
                "population_size" => cfg.evo.population_size = parse_value(key, value, line)?,
                "generations" => cfg.evo.generations = parse_value(key, value, line)?,
                "value_crossover_rate" => cfg.evo.value_crossover_rate = num(value)?,
                "value_mutation_rate" => cfg.evo.value_mutation_rate = num(value)?,
                "mask_mutation_rate" => cfg.evo.mask_mutation_rate = num(value)?,
                "trials" => cfg.evo.trials = parse_value(key, value, line)?,
                "seed" => cfg.evo.seed = parse_value(key, value, line)?,
                "parallel" => cfg.evo.parallel = parse_bool(key, value, line)?,
                "eval_subset" => cfg.evo.eval_subset = Some(parse_value(key, value, line)?),
                "mask_init" => {
                    cfg.evo.mask_init = match value {
                        "all-ones" => MaskInit::AllOnes,
                        "random" => MaskInit::Random,
                        _ => return Err(Error::Config(format!("line {line}: unknown mask_init `{value}`"))),
                    }
                }
                "pairing" => {
                    cfg.evo.pairing = match value {
                        "random" => Pairing::Random,
                        "fitness-proportionate" => Pairing::FitnessProportionate,
                        _ => return Err(Error::Config(format!("line {line}: unknown pairing `{value}`"))),
                    }
                }
                "isi_lo" => cfg.isi_lo = num(value)?,
                "isi_hi" => cfg.isi_hi = num(value)?,
                "horizon" => cfg.horizon = num(value)?,
                "dt" => cfg.dt = num(value)?,
                "noise_sd" => cfg.noise.target_sd = num(value)?,
                "noise_alpha" => cfg.noise.alpha = num(value)?,
                "noise_beta" => cfg.noise.beta = num(value)?,
                "noisy_test" => cfg.noisy_test = parse_bool(key, value, line)?,
                "repeats" => cfg.repeats = parse_value(key, value, line)?,
                "output_dir" => cfg.output_dir = base_dir.join(value),
                "train_fraction" => cfg.train_fraction = num(value)?,
                "stratified" => cfg.stratified = parse_bool(key, value, line)?,
                "warmup" => cfg.warmup = num(value)?,
                "c1" => cfg.coeffs.c1 = num(value)?,
                "c2" => cfg.coeffs.c2 = num(value)?,
                "c3" => cfg.coeffs.c3 = num(value)?,
                "epsilon" => cfg.coeffs.epsilon = num(value)?,
                "fitness" => {
                    cfg.fitness = match value {
                        "three-term" => FitnessKind::ThreeTerm,
                        "success-ratio" => FitnessKind::SuccessRatio,
                        _ => return Err(Error::Config(format!("line {line}: unknown fitness `{value}`"))),
                    }
                }
                "gene_bits" => cfg.gene_bits = parse_value(key, value, line)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        if !dataset_set {
            return Err(Error::Config("missing `dataset`".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        self.evo.validate()?;
        self.noise.validate()?;
        self.coeffs.validate()?;
        self.sim_config().steps()?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if !self.dataset.is_file() {
            return Err(Error::Config(format!("dataset {} not found", self.dataset.display())));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            record_potentials: false,
        }
    }

    /// Evaluation settings for a dataset; `noisy` selects the configured
    /// noise model or none.
    pub fn eval_settings(&self, data: &Dataset, noisy: bool) -> Result<EvalSettings> {
        let encoding = EncodingConfig {
            isi_lo: self.isi_lo,
            isi_hi: self.isi_hi,
            horizon: self.horizon,
            ranges: data.feature_ranges.clone(),
        };
        encoding.validate()?;
        Ok(EvalSettings {
            encoding,
            noise: if noisy { self.noise } else { NoiseModel { target_sd: 0.0, ..self.noise } },
            sim: self.sim_config(),
            warmup: self.warmup,
            coeffs: self.coeffs,
            kind: self.fitness,
        })
    }
}

/// Skeleton and layout for a dataset shape.
pub fn network_layout(features: usize, classes: usize, gene_bits: u32) -> Result<(Network, GenomeLayout)> {
    let skeleton = recurrent_input_skeleton(features, classes, WaveformParams::new(PSP_T1, PSP_T2)?)?;
    let layout = GenomeLayout::for_skeleton(&skeleton, gene_bits, &ParameterBounds::default())?;
    Ok((skeleton, layout))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub selected_features: usize,
    pub total_features: usize,
    pub generations: usize,
    /// Not written to report files, which must be reproducible.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunSummary>,
    pub failures: Vec<RunFailure>,
}

/// Everything one repeat produced, before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub history_tsv: String,
    pub chromosome_text: String,
    pub train: Dataset,
    pub test: Dataset,
}

/// Split, evolve, and score the winner on the held-out patterns.
pub fn run_single(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<RunArtifacts> {
    let started = Instant::now();
    let (train, test) = split(data, cfg.train_fraction, cfg.stratified, &mut stream(seed, &[SPLIT]))?;
    let (skeleton, layout) = network_layout(data.feature_count(), data.class_count(), cfg.gene_bits)?;

    let train_settings = cfg.eval_settings(data, true)?;
    let patterns = EncodedPatterns::build(
        &train.patterns,
        data.class_count(),
        &train_settings,
        derive_seed(seed, &[TRAIN_NOISE]),
    )?;
    let evaluator = NetworkEvaluator {
        layout: layout.clone(),
        skeleton,
        patterns,
        settings: train_settings,
    };
    let evo = EvoConfig { seed, ..cfg.evo.clone() };
    let outcome = run(&evo, &layout, &evaluator)?;
    let best = &outcome.best;
    let report = best.report.as_ref().expect("winner is evaluated");

    let net = evaluator.network(&best.chromosome)?;
    let test_settings = cfg.eval_settings(data, cfg.noisy_test)?;
    let test_accuracy = held_out_accuracy(&net, &best.chromosome.mask, &test, &test_settings, seed)?;

    Ok(RunArtifacts {
        summary: RunSummary {
            seed,
            train_accuracy: report.accuracy,
            test_accuracy,
            selected_features: best.chromosome.mask_size(),
            total_features: data.feature_count(),
            generations: evo.generations,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        },
        history_tsv: history_to_tsv(&outcome.history),
        chromosome_text: best.chromosome.to_text(&layout)?,
        train,
        test,
    })
}

/// Accuracy on `test`, with noise drawn from the run's test stream.
pub fn held_out_accuracy(
    net: &Network,
    mask: &[bool],
    test: &Dataset,
    settings: &EvalSettings,
    seed: u64,
) -> Result<f64> {
    let encoded = EncodedPatterns::build(&test.patterns, test.class_count(), settings, derive_seed(seed, &[TEST_NOISE]))?;
    encoded.accuracy(net, mask, settings)
}

/// Re-scores an exported chromosome. `ranges_from` supplies the scaling
/// ranges (the full dataset the run was trained on).
pub fn evaluate_exported(
    chromosome_text: &str,
    data: &Dataset,
    ranges_from: &Dataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<f64> {
    let (skeleton, layout) = network_layout(data.feature_count(), data.class_count(), cfg.gene_bits)?;
    let chromosome = Chromosome::from_text(chromosome_text, &layout)?;
    let net = decode_genome(&chromosome, &layout, &skeleton)?;
    let settings = cfg.eval_settings(ranges_from, cfg.noise.is_active())?;
    held_out_accuracy(&net, &chromosome.mask, data, &settings, seed)
}

pub fn run_dir_name(seed: u64) -> String {
    format!("run_seed{seed}")
}

fn write_run(dir: &Path, art: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("history.tsv"), &art.history_tsv)?;
    fs::write(dir.join("best_chromosome.txt"), &art.chromosome_text)?;
    fs::write(dir.join("train.csv"), art.train.to_csv())?;
    fs::write(dir.join("test.csv"), art.test.to_csv())?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&art.summary)? + "\n")?;
    Ok(())
}

/// Runs every repeat (seeds `seed, seed+1, ...`), writes per-run artifacts
/// and the aggregate report. A failing repeat is recorded and skipped.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = load_csv(&cfg.dataset, CsvOptions { has_header: cfg.header })?;
    fs::create_dir_all(&cfg.output_dir)?;
    let seeds: Vec<u64> = (0..cfg.repeats as u64).map(|r| cfg.evo.seed + r).collect();
    let one = |&seed: &u64| -> (u64, Result<RunSummary>) {
        let result = run_single(cfg, &data, seed).and_then(|art| {
            write_run(&cfg.output_dir.join(run_dir_name(seed)), &art)?;
            Ok(art.summary)
        });
        (seed, result)
    };
    let results: Vec<(u64, Result<RunSummary>)> = if cfg.evo.parallel {
        seeds.par_iter().map(one).collect()
    } else {
        seeds.iter().map(one).collect()
    };

    let mut out = ExperimentReport::default();
    for (seed, result) in results {
        match result {
            Ok(summary) => out.runs.push(summary),
            Err(e) => out.failures.push(RunFailure { seed, error: e.to_string() }),
        }
    }
    write_report(&cfg.output_dir, &out)?;
    Ok(out)
}

pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    fs::write(dir.join("report.txt"), report_table(report))?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

/// Rebuilds the report from the `run_seed*/summary.json` files under `dir`.
pub fn collect_runs(dir: &Path) -> Result<ExperimentReport> {
    let mut runs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path().join("summary.json");
        if path.is_file() {
            runs.push(serde_json::from_str::<RunSummary>(&fs::read_to_string(&path)?)?);
        }
    }
    runs.sort_by_key(|r| r.seed);
    Ok(ExperimentReport { runs, failures: Vec::new() })
}

/// Aligned text table: one row per run, then mean and max rows.
pub fn report_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8}  {:>6}  {:>9}  {:>9}  {:>11}",
        "seed", "inputs", "train_acc", "test_acc", "generations"
    );
    let runs = &report.runs;
    for r in runs {
        let _ = writeln!(
            out,
            "{:>8}  {:>6}  {:>9.4}  {:>9.4}  {:>11}",
            r.seed, r.selected_features, r.train_accuracy, r.test_accuracy, r.generations
        );
    }
    if !runs.is_empty() {
        let n = runs.len() as f64;
        let mean = |f: fn(&RunSummary) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let max = |f: fn(&RunSummary) -> f64| runs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            out,
            "{:>8}  {:>6.2}  {:>9.4}  {:>9.4}  {:>11.1}",
            "mean",
            mean(|r| r.selected_features as f64),
            mean(|r| r.train_accuracy),
            mean(|r| r.test_accuracy),
            mean(|r| r.generations as f64)
        );
        let _ = writeln!(
            out,
            "{:>8}  {:>6}  {:>9.4}  {:>9.4}  {:>11}",
            "max",
            max(|r| r.selected_features as f64),
            max(|r| r.train_accuracy),
            max(|r| r.test_accuracy),
            max(|r| r.generations as f64)
        );
        let _ = writeln!(out, "test_acc is measured on the held-out split, never on training patterns.");
    }
    for f in &report.failures {
        let _ = writeln!(out, "FAILED seed {}: {}", f.seed, f.error);
    }
    out
}
