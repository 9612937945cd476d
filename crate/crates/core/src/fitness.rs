//! Scoring one network on a labelled pattern set.
//!
//! `correct_ratio[i]` counts the patterns of class `i` answered correctly,
//! divided by the size of the whole evaluation set, so the ratios sum to the
//! overall accuracy. The three-term fitness rewards overall accuracy, the
//! worst class, and every pair of classes answered at least partly.

use std::borrow::Borrow;

use rand::Rng;

use crate::codec::{decode, encode, Decision, EncodingConfig, SpikeTrain};
use crate::dataset::Pattern;
use crate::error::{invalid, Error, Result};
use crate::neuron::{Network, SimConfig, Simulator};
use crate::noise::NoiseModel;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub epsilon: f64,
}

impl Default for FitnessCoeffs {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 30.0,
            c3: 7.0,
            epsilon: 0.01,
        }
    }
}

impl FitnessCoeffs {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 0.0 && self.c2 >= 0.0 && self.c3 >= 0.0 && self.epsilon > 0.0) {
            return Err(invalid(format!("bad fitness coefficients {self:?}")));
        }
        Ok(())
    }
}

/// Which score drives selection. `SuccessRatio` (plain accuracy) exists only
/// as a comparison baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessKind {
    #[default]
    ThreeTerm,
    SuccessRatio,
}

pub fn three_term_fitness(ratios: &[f64], c: &FitnessCoeffs) -> f64 {
    let total: f64 = ratios.iter().sum();
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = if worst.is_finite() { worst } else { 0.0 };
    let mut pairs = 0.0;
    for i in 0..ratios.len() {
        for j in i + 1..ratios.len() {
            pairs += ratios[i].min(ratios[j]);
        }
    }
    c.c1 / (1.0 + c.epsilon - total) + c.c2 / (1.0 + c.epsilon - worst) + c.c3 * pairs
}

pub fn fitness_of(ratios: &[f64], coeffs: &FitnessCoeffs, kind: FitnessKind) -> f64 {
    match kind {
        FitnessKind::ThreeTerm => three_term_fitness(ratios, coeffs),
        FitnessKind::SuccessRatio => ratios.iter().sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub correct_ratio: Vec<f64>,
    pub correct: Vec<usize>,
    pub total: Vec<usize>,
    pub accuracy: f64,
    pub fitness: f64,
}

impl EvalReport {
    pub fn from_counts(
        correct: Vec<usize>,
        total: Vec<usize>,
        coeffs: &FitnessCoeffs,
        kind: FitnessKind,
    ) -> Result<Self> {
        let n: usize = total.iter().sum();
        if n == 0 {
            return Err(invalid("empty evaluation set"));
        }
        let correct_ratio: Vec<f64> = correct.iter().map(|&c| c as f64 / n as f64).collect();
        let accuracy = correct.iter().sum::<usize>() as f64 / n as f64;
        let fitness = fitness_of(&correct_ratio, coeffs, kind);
        Ok(Self {
            correct_ratio,
            correct,
            total,
            accuracy,
            fitness,
        })
    }
}

/// Everything besides the network that decides how patterns are presented
/// and scored.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub encoding: EncodingConfig,
    pub noise: NoiseModel,
    pub sim: SimConfig,
    /// Decisions earlier than this (ms) count as incorrect.
    pub warmup: f64,
    pub coeffs: FitnessCoeffs,
    pub kind: FitnessKind,
}

impl EvalSettings {
    pub fn new(encoding: EncodingConfig) -> Self {
        Self {
            encoding,
            noise: NoiseModel::default(),
            sim: SimConfig::default(),
            warmup: 15.0,
            coeffs: FitnessCoeffs::default(),
            kind: FitnessKind::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub decision: Decision,
    /// The decision came before the warm-up window closed.
    pub early: bool,
}

impl Classification {
    /// Predicted class, if the network answered after the warm-up window.
    pub fn predicted(&self) -> Option<usize> {
        if self.early {
            None
        } else {
            self.decision.class()
        }
    }

    pub fn is_correct(&self, label: usize) -> bool {
        self.predicted() == Some(label)
    }
}

fn classify_trains<T: Borrow<SpikeTrain>>(
    sim: &mut Simulator,
    net: &Network,
    inputs: &[T],
    warmup: f64,
) -> Result<Classification> {
    let trace = sim.run(inputs, true)?;
    let decision = decode(&trace, net);
    let early = decision.time().is_some_and(|t| t < warmup);
    Ok(Classification { decision, early })
}

/// Encode, simulate until the first output spike, decode.
pub fn classify_pattern(
    net: &Network,
    features: &[f64],
    mask: &[bool],
    settings: &EvalSettings,
    rng: &mut impl Rng,
) -> Result<Classification> {
    if features.len() != mask.len() || mask.len() != net.input_channels {
        return Err(Error::ShapeMismatch(format!(
            "pattern {} / mask {} / network inputs {}",
            features.len(),
            mask.len(),
            net.input_channels
        )));
    }
    let trains = encode(features, mask, &settings.encoding, Some(&settings.noise), rng)?;
    let mut sim = Simulator::new(net, &settings.sim)?;
    classify_trains(&mut sim, net, &trains, settings.warmup)
}

/// Patterns encoded once with every channel active. Noise for pattern `p`
/// comes from the stream `(noise_seed, p)`, so every network sees the same
/// realisation and the mask only decides which trains are delivered.
#[derive(Debug, Clone)]
pub struct EncodedPatterns {
    trains: Vec<Vec<SpikeTrain>>,
    labels: Vec<usize>,
    class_count: usize,
}

impl EncodedPatterns {
    pub fn build(
        patterns: &[Pattern],
        class_count: usize,
        settings: &EvalSettings,
        noise_seed: u64,
    ) -> Result<Self> {
        let mut trains = Vec::with_capacity(patterns.len());
        for (p, pattern) in patterns.iter().enumerate() {
            if pattern.label >= class_count {
                return Err(invalid(format!("label {} >= class count {class_count}", pattern.label)));
            }
            let all = vec![true; pattern.features.len()];
            let mut rng = stream(noise_seed, &[p as u64]);
            trains.push(encode(&pattern.features, &all, &settings.encoding, Some(&settings.noise), &mut rng)?);
        }
        Ok(Self {
            trains,
            labels: patterns.iter().map(|p| p.label).collect(),
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn trains(&self, p: usize) -> &[SpikeTrain] {
        &self.trains[p]
    }

    /// Classifies pattern `p` under `mask`.
    pub fn classify(
        &self,
        sim: &mut Simulator,
        net: &Network,
        mask: &[bool],
        p: usize,
        warmup: f64,
    ) -> Result<Classification> {
        let empty = SpikeTrain::empty();
        let trains = &self.trains[p];
        if mask.len() != trains.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask of length {} for {} features",
                mask.len(),
                trains.len()
            )));
        }
        let inputs: Vec<&SpikeTrain> = trains
            .iter()
            .zip(mask)
            .map(|(t, &on)| if on { t } else { &empty })
            .collect();
        classify_trains(sim, net, &inputs, warmup)
    }

    /// Scores `net` on the patterns in `subset` (all patterns when `None`).
    pub fn evaluate(
        &self,
        net: &Network,
        mask: &[bool],
        subset: Option<&[usize]>,
        settings: &EvalSettings,
    ) -> Result<EvalReport> {
        settings.coeffs.validate()?;
        let all: Vec<usize>;
        let indices = match subset {
            Some(s) => s,
            None => {
                all = (0..self.len()).collect();
                &all
            }
        };
        if indices.is_empty() {
            return Err(invalid("empty evaluation subset"));
        }
        let mut total = vec![0; self.class_count];
        for &p in indices {
            total[self.labels[p]] += 1;
        }
        if let Some(missing) = total.iter().position(|&n| n == 0) {
            return Err(invalid(format!("evaluation subset has no pattern of class {missing}")));
        }
        let mut sim = Simulator::new(net, &settings.sim)?;
        let mut correct = vec![0; self.class_count];
        for &p in indices {
            let label = self.labels[p];
            if self.classify(&mut sim, net, mask, p, settings.warmup)?.is_correct(label) {
                correct[label] += 1;
            }
        }
        EvalReport::from_counts(correct, total, &settings.coeffs, settings.kind)
    }

    /// Fraction of all patterns classified correctly. Unlike [`evaluate`]
    /// this does not require every class to be present.
    ///
    /// [`evaluate`]: EncodedPatterns::evaluate
    pub fn accuracy(&self, net: &Network, mask: &[bool], settings: &EvalSettings) -> Result<f64> {
        if self.is_empty() {
            return Err(invalid("no patterns to score"));
        }
        let mut sim = Simulator::new(net, &settings.sim)?;
        let mut correct = 0usize;
        for p in 0..self.len() {
            if self.classify(&mut sim, net, mask, p, settings.warmup)?.is_correct(self.labels[p]) {
                correct += 1;
            }
        }
        Ok(correct as f64 / self.len() as f64)
    }
}

/// Encodes `patterns` with the noise stream `noise_seed` and scores `net`.
pub fn evaluate(
    net: &Network,
    mask: &[bool],
    patterns: &[Pattern],
    class_count: usize,
    settings: &EvalSettings,
    noise_seed: u64,
) -> Result<EvalReport> {
    EncodedPatterns::build(patterns, class_count, settings, noise_seed)?.evaluate(net, mask, None, settings)
}
