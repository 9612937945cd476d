//! Elitist generational loop.
//!
//! Each generation pairs the parents at random, recombines and mutates every
//! pair, scores the offspring on the same patterns as their parents, and
//! keeps the best half of parents and offspring together.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fitness::{EncodedPatterns, EvalReport, EvalSettings};
use crate::genome::{decode_genome, random_chromosome, Chromosome, GenomeLayout, MaskInit};
use crate::neuron::Network;
use crate::rng::{derive_seed, stream, GENERATION, INIT, TRIAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Uniform random pairs, each parent used once.
    #[default]
    Random,
    /// Roulette-wheel draws with replacement.
    FitnessProportionate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvoConfig {
    pub population_size: usize,
    pub generations: usize,
    pub value_crossover_rate: f64,
    pub value_mutation_rate: f64,
    pub mask_mutation_rate: f64,
    /// Independent restarts; the best final individual over all trials wins.
    pub trials: usize,
    pub seed: u64,
    pub mask_init: MaskInit,
    pub pairing: Pairing,
    /// Score offspring on the rayon pool.
    pub parallel: bool,
    /// Score each generation on this many randomly drawn patterns instead of
    /// the full set. Parents are rescored on the same draw.
    pub eval_subset: Option<usize>,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 300,
            value_crossover_rate: 0.7,
            value_mutation_rate: 0.05,
            mask_mutation_rate: 0.05,
            trials: 1,
            seed: 0,
            mask_init: MaskInit::AllOnes,
            pairing: Pairing::Random,
            parallel: true,
            eval_subset: None,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.population_size % 2 != 0 {
            return Err(invalid(format!(
                "population size must be even and >= 2, got {}",
                self.population_size
            )));
        }
        for (name, rate) in [
            ("value_crossover_rate", self.value_crossover_rate),
            ("value_mutation_rate", self.value_mutation_rate),
            ("mask_mutation_rate", self.mask_mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(invalid(format!("{name} must be in [0, 1], got {rate}")));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.eval_subset == Some(0) {
            return Err(invalid("evaluation subset must be non-empty"));
        }
        Ok(())
    }
}

/// Anything that can score a chromosome. Implementations must be pure so
/// parallel and serial evaluation agree.
pub trait Evaluate: Sync {
    fn evaluate(&self, c: &Chromosome, subset: Option<&[usize]>) -> Result<EvalReport>;

    /// Number of patterns available for subset sampling.
    fn pattern_count(&self) -> usize;
}

/// Decodes chromosomes onto a skeleton and scores them on pre-encoded patterns.
#[derive(Debug, Clone)]
pub struct NetworkEvaluator {
    pub layout: GenomeLayout,
    pub skeleton: Network,
    pub patterns: EncodedPatterns,
    pub settings: EvalSettings,
}

impl NetworkEvaluator {
    pub fn network(&self, c: &Chromosome) -> Result<Network> {
        decode_genome(c, &self.layout, &self.skeleton)
    }
}

impl Evaluate for NetworkEvaluator {
    fn evaluate(&self, c: &Chromosome, subset: Option<&[usize]>) -> Result<EvalReport> {
        let net = self.network(c)?;
        self.patterns.evaluate(&net, &c.mask, subset, &self.settings)
    }

    fn pattern_count(&self) -> usize {
        self.patterns.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub report: Option<EvalReport>,
}

impl Individual {
    pub fn new(chromosome: Chromosome) -> Self {
        Self {
            chromosome,
            report: None,
        }
    }

    pub fn fitness(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.fitness)
    }
}

pub fn init_population(cfg: &EvoConfig, layout: &GenomeLayout, rng: &mut impl Rng) -> Result<Vec<Chromosome>> {
    cfg.validate()?;
    Ok((0..cfg.population_size)
        .map(|_| random_chromosome(layout, cfg.mask_init, rng))
        .collect())
}

/// Two distinct cut points in `0..=len`, ascending.
fn two_cuts(len: usize, rng: &mut impl Rng) -> (usize, usize) {
    let a = rng.random_range(0..=len);
    let mut b = rng.random_range(0..len);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

fn swap_segment(x: &mut [bool], y: &mut [bool], rng: &mut impl Rng) {
    let len = x.len();
    let (lo, hi) = match len {
        0 => return,
        1 => (rng.random_range(0..=1), 1),
        _ => two_cuts(len, rng),
    };
    x[lo..hi].swap_with_slice(&mut y[lo..hi]);
}

/// Two-point crossover of the value bits with probability `rate`, and,
/// with an independent draw at the same rate, of the mask.
pub fn crossover(a: &Chromosome, b: &Chromosome, rate: f64, rng: &mut impl Rng) -> Result<(Chromosome, Chromosome)> {
    if a.value_bits.len() != b.value_bits.len() || a.mask.len() != b.mask.len() {
        return Err(Error::ShapeMismatch("crossover parents have different layouts".into()));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(invalid(format!("crossover rate {rate} outside [0, 1]")));
    }
    let (mut x, mut y) = (a.clone(), b.clone());
    if rng.random_bool(rate) {
        swap_segment(&mut x.value_bits, &mut y.value_bits, rng);
    }
    if rng.random_bool(rate) {
        swap_segment(&mut x.mask, &mut y.mask, rng);
    }
    Ok((x, y))
}

/// Independent bit flips at the two rates.
pub fn mutate(c: &Chromosome, value_rate: f64, mask_rate: f64, rng: &mut impl Rng) -> Chromosome {
    let flip = |bits: &[bool], rate: f64, rng: &mut dyn rand::RngCore| -> Vec<bool> {
        bits.iter().map(|&b| b ^ rng.random_bool(rate)).collect()
    };
    Chromosome {
        value_bits: flip(&c.value_bits, value_rate, rng),
        mask: flip(&c.mask, mask_rate, rng),
    }
}

/// The best `n` of `pool` by fitness. Ties keep pool order, so parents (placed
/// first) win over equally fit offspring.
pub fn select_survivors(mut pool: Vec<Individual>, n: usize) -> Result<Vec<Individual>> {
    if let Some(i) = pool.iter().position(|ind| ind.report.is_none()) {
        return Err(Error::Unevaluated(i));
    }
    pool.sort_by(|a, b| b.fitness().unwrap().total_cmp(&a.fitness().unwrap()));
    pool.truncate(n);
    Ok(pool)
}

fn evaluate_all(
    chromosomes: Vec<Chromosome>,
    evaluator: &dyn Evaluate,
    subset: Option<&[usize]>,
    parallel: bool,
) -> Result<Vec<Individual>> {
    let score = |c: Chromosome| -> Result<Individual> {
        let report = evaluator.evaluate(&c, subset)?;
        Ok(Individual {
            chromosome: c,
            report: Some(report),
        })
    };
    if parallel {
        chromosomes.into_par_iter().map(score).collect()
    } else {
        chromosomes.into_iter().map(score).collect()
    }
}

fn pair_up(parents: &[Individual], pairing: Pairing, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let n = parents.len();
    match pairing {
        Pairing::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            order.chunks_exact(2).map(|p| (p[0], p[1])).collect()
        }
        Pairing::FitnessProportionate => {
            let weights: Vec<f64> = parents.iter().map(|p| p.fitness().unwrap_or(0.0).max(0.0)).collect();
            let total: f64 = weights.iter().sum();
            let spin = |rng: &mut dyn rand::RngCore| -> usize {
                if total <= 0.0 {
                    return rng.random_range(0..n);
                }
                let mut r = rng.random::<f64>() * total;
                for (i, w) in weights.iter().enumerate() {
                    if r < *w {
                        return i;
                    }
                    r -= w;
                }
                n - 1
            };
            (0..n / 2).map(|_| (spin(rng), spin(rng))).collect()
        }
    }
}

/// One generation. `parents` must be evaluated (on `subset`, when given).
pub fn step_generation(
    parents: Vec<Individual>,
    evaluator: &dyn Evaluate,
    subset: Option<&[usize]>,
    cfg: &EvoConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Individual>> {
    let n = parents.len();
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!("population size must be even and >= 2, got {n}")));
    }
    if let Some(i) = parents.iter().position(|ind| ind.report.is_none()) {
        return Err(Error::Unevaluated(i));
    }
    let mut children = Vec::with_capacity(n);
    for (i, j) in pair_up(&parents, cfg.pairing, rng) {
        let (x, y) = crossover(&parents[i].chromosome, &parents[j].chromosome, cfg.value_crossover_rate, rng)?;
        children.push(mutate(&x, cfg.value_mutation_rate, cfg.mask_mutation_rate, rng));
        children.push(mutate(&y, cfg.value_mutation_rate, cfg.mask_mutation_rate, rng));
    }
    let offspring = evaluate_all(children, evaluator, subset, cfg.parallel)?;
    let mut pool = parents;
    pool.extend(offspring);
    select_survivors(pool, n)
}

/// Per-generation statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub trial: usize,
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_accuracy: f64,
    pub mask_size: usize,
}

impl GenerationRecord {
    fn of(trial: usize, generation: usize, population: &[Individual]) -> Self {
        let best = &population[0];
        let report = best.report.as_ref().expect("population is evaluated");
        let mean = population.iter().filter_map(Individual::fitness).sum::<f64>() / population.len() as f64;
        Self {
            trial,
            generation,
            best_fitness: report.fitness,
            mean_fitness: mean,
            best_accuracy: report.accuracy,
            mask_size: best.chromosome.mask_size(),
        }
    }
}

pub const HISTORY_HEADER: &str = "trial\tgeneration\tbest_fitness\tmean_fitness\tbest_accuracy\tmask_size";

/// Tab-separated history with a header line.
pub fn history_to_tsv(history: &[GenerationRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.9}\t{:.9}\t{:.6}\t{}",
            r.trial, r.generation, r.best_fitness, r.mean_fitness, r.best_accuracy, r.mask_size
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub best: Individual,
    pub history: Vec<GenerationRecord>,
    pub final_population: Vec<Individual>,
}

fn draw_subset(k: usize, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, n, k.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

/// Runs `cfg.trials` independent evolutions of `cfg.generations` steps each.
pub fn run(cfg: &EvoConfig, layout: &GenomeLayout, evaluator: &dyn Evaluate) -> Result<EvolutionOutcome> {
    cfg.validate()?;
    let mut history = Vec::new();
    let mut winner: Option<(Individual, Vec<Individual>)> = None;
    for trial in 0..cfg.trials {
        let seed = derive_seed(cfg.seed, &[TRIAL, trial as u64]);
        let mut rng = stream(seed, &[INIT]);
        let initial = init_population(cfg, layout, &mut rng)?;
        let subset = cfg.eval_subset.map(|k| draw_subset(k, evaluator.pattern_count(), &mut rng));
        let mut population =
            select_survivors(evaluate_all(initial, evaluator, subset.as_deref(), cfg.parallel)?, cfg.population_size)?;
        history.push(GenerationRecord::of(trial, 0, &population));

        for generation in 1..=cfg.generations {
            let mut rng = stream(seed, &[GENERATION, generation as u64]);
            let subset = match cfg.eval_subset {
                Some(k) => {
                    let s = draw_subset(k, evaluator.pattern_count(), &mut rng);
                    let parents: Vec<Chromosome> = population.into_iter().map(|p| p.chromosome).collect();
                    population = evaluate_all(parents, evaluator, Some(&s), cfg.parallel)?;
                    Some(s)
                }
                None => None,
            };
            population = step_generation(population, evaluator, subset.as_deref(), cfg, &mut rng)?;
            history.push(GenerationRecord::of(trial, generation, &population));
        }

        let better = match &winner {
            None => true,
            Some((best, _)) => population[0].fitness() > best.fitness(),
        };
        if better {
            winner = Some((population[0].clone(), population));
        }
    }
    let (best, final_population) = winner.expect("at least one trial");
    Ok(EvolutionOutcome {
        best,
        history,
        final_population,
    })
}
