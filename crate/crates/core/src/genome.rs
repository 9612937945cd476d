//! Genotype: Gray-coded parameter genes plus a binary feature mask, and its
//! decoding onto a fixed network skeleton.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::neuron::{Network, NeuronSpec, Source, SynapseSpec, WaveformParams};

pub fn gray_encode(n: u64) -> u64 {
    n ^ (n >> 1)
}

pub fn gray_decode(mut g: u64) -> u64 {
    let mut shift = 1;
    while shift < 64 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

/// Network slot written by a gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneTarget {
    Threshold { neuron: usize },
    Weight { neuron: usize, synapse: usize },
    Latency { neuron: usize, synapse: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneSpec {
    pub name: String,
    pub bits: u32,
    pub min: f64,
    pub max: f64,
    pub target: GeneTarget,
}

impl GeneSpec {
    fn levels(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// Affine map of a decoded integer onto `[min, max]`.
    pub fn value_of(&self, level: u64) -> f64 {
        self.min + (self.max - self.min) * level as f64 / self.levels() as f64
    }

    /// Nearest quantisation level for `value`.
    pub fn level_of(&self, value: f64) -> Result<u64> {
        if !(value >= self.min && value <= self.max) {
            return Err(invalid(format!(
                "{} = {value} outside [{}, {}]",
                self.name, self.min, self.max
            )));
        }
        Ok(((value - self.min) / (self.max - self.min) * self.levels() as f64).round() as u64)
    }
}

/// Evolvable ranges for the three kinds of gene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBounds {
    pub weight: (f64, f64),
    pub latency: (f64, f64),
    pub threshold: (f64, f64),
}

impl Default for ParameterBounds {
    fn default() -> Self {
        Self {
            weight: (-1.0, 1.0),
            latency: (0.0, 40.0),
            threshold: (0.0, 1.0),
        }
    }
}

pub const DEFAULT_GENE_BITS: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct GenomeLayout {
    pub genes: Vec<GeneSpec>,
    pub mask_len: usize,
}

impl GenomeLayout {
    /// One threshold gene per neuron followed by a weight and a latency gene
    /// per synapse, in neuron then synapse order.
    pub fn for_skeleton(skeleton: &Network, bits: u32, bounds: &ParameterBounds) -> Result<Self> {
        if !(1..=32).contains(&bits) {
            return Err(invalid(format!("gene width must be 1..=32 bits, got {bits}")));
        }
        let mut genes = Vec::new();
        for (i, neuron) in skeleton.neurons.iter().enumerate() {
            let gene = |name: String, (min, max): (f64, f64), target| GeneSpec {
                name,
                bits,
                min,
                max,
                target,
            };
            genes.push(gene(format!("n{i}.threshold"), bounds.threshold, GeneTarget::Threshold { neuron: i }));
            for j in 0..neuron.synapses.len() {
                genes.push(gene(
                    format!("n{i}.s{j}.weight"),
                    bounds.weight,
                    GeneTarget::Weight { neuron: i, synapse: j },
                ));
                genes.push(gene(
                    format!("n{i}.s{j}.latency"),
                    bounds.latency,
                    GeneTarget::Latency { neuron: i, synapse: j },
                ));
            }
        }
        Ok(Self {
            genes,
            mask_len: skeleton.input_channels,
        })
    }

    pub fn value_bits(&self) -> usize {
        self.genes.iter().map(|g| g.bits as usize).sum()
    }
}

/// Feature-per-input-neuron skeleton with no hidden layer: every input
/// neuron reads its own channel and the other input neurons; every output
/// neuron reads all input neurons. Evolvable slots hold placeholders.
pub fn recurrent_input_skeleton(features: usize, classes: usize, waveform: WaveformParams) -> Result<Network> {
    if features == 0 || classes == 0 {
        return Err(invalid("skeleton needs at least one feature and one class"));
    }
    let synapse = |source| SynapseSpec {
        source,
        weight: 0.0,
        latency: 0.0,
        waveform,
    };
    let mut neurons = Vec::with_capacity(features + classes);
    for i in 0..features {
        let mut synapses = vec![synapse(Source::Input(i))];
        synapses.extend((0..features).filter(|&j| j != i).map(|j| synapse(Source::Neuron(j))));
        neurons.push(NeuronSpec::new(0.5, synapses));
    }
    for _ in 0..classes {
        neurons.push(NeuronSpec::new(0.5, (0..features).map(|j| synapse(Source::Neuron(j))).collect()));
    }
    Network::new(neurons, features, (features..features + classes).collect())
}

/// The 4-input, 3-output network used for IRIS (63 genes).
pub fn iris_skeleton() -> Result<Network> {
    recurrent_input_skeleton(4, 3, WaveformParams::new(5.0, 15.0)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    /// Concatenated genes, most significant bit first.
    pub value_bits: Vec<bool>,
    pub mask: Vec<bool>,
}

impl Chromosome {
    pub fn check_shape(&self, layout: &GenomeLayout) -> Result<()> {
        if self.value_bits.len() != layout.value_bits() || self.mask.len() != layout.mask_len {
            return Err(Error::ShapeMismatch(format!(
                "chromosome has {}+{} bits, layout needs {}+{}",
                self.value_bits.len(),
                self.mask.len(),
                layout.value_bits(),
                layout.mask_len
            )));
        }
        Ok(())
    }

    pub fn mask_size(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Decoded value of every gene in layout order.
    pub fn gene_values(&self, layout: &GenomeLayout) -> Result<Vec<f64>> {
        self.check_shape(layout)?;
        let mut offset = 0;
        Ok(layout
            .genes
            .iter()
            .map(|gene| {
                let width = gene.bits as usize;
                let code = self.value_bits[offset..offset + width]
                    .iter()
                    .fold(0u64, |acc, &b| (acc << 1) | b as u64);
                offset += width;
                gene.value_of(gray_decode(code))
            })
            .collect())
    }

    /// Builds a chromosome whose genes decode to the nearest levels of `values`.
    pub fn from_values(values: &[f64], mask: Vec<bool>, layout: &GenomeLayout) -> Result<Self> {
        if values.len() != layout.genes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} gene values for {} genes",
                values.len(),
                layout.genes.len()
            )));
        }
        let mut value_bits = Vec::with_capacity(layout.value_bits());
        for (gene, &v) in layout.genes.iter().zip(values) {
            let code = gray_encode(gene.level_of(v)?);
            value_bits.extend((0..gene.bits).rev().map(|k| (code >> k) & 1 == 1));
        }
        let c = Self { value_bits, mask };
        c.check_shape(layout)?;
        Ok(c)
    }

    /// `gene_name=value` per gene, then `mask=0101`.
    pub fn to_text(&self, layout: &GenomeLayout) -> Result<String> {
        let values = self.gene_values(layout)?;
        let mut out = String::new();
        for (gene, v) in layout.genes.iter().zip(values) {
            let _ = writeln!(out, "{}={v}", gene.name);
        }
        let mask: String = self.mask.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let _ = writeln!(out, "mask={mask}");
        Ok(out)
    }

    /// Parses [`Chromosome::to_text`] output. Blank lines and `#` comments
    /// are ignored; every gene and the mask must appear exactly once.
    pub fn from_text(text: &str, layout: &GenomeLayout) -> Result<Self> {
        let index: HashMap<&str, usize> =
            layout.genes.iter().enumerate().map(|(i, g)| (g.name.as_str(), i)).collect();
        let mut values: Vec<Option<f64>> = vec![None; layout.genes.len()];
        let mut mask = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| invalid(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "mask" {
                if mask.is_some() {
                    return Err(bad("mask given twice".into()));
                }
                let bits = value
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(bad(format!("bad mask digit `{c}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                mask = Some(bits);
                continue;
            }
            let &i = index.get(key).ok_or_else(|| bad(format!("unknown gene `{key}`")))?;
            if values[i].is_some() {
                return Err(bad(format!("gene `{key}` given twice")));
            }
            values[i] = Some(value.parse().map_err(|_| bad(format!("bad number `{value}`")))?);
        }
        let mask = mask.ok_or_else(|| invalid("missing mask line"))?;
        let values = values
            .into_iter()
            .zip(&layout.genes)
            .map(|(v, g)| v.ok_or_else(|| invalid(format!("missing gene `{}`", g.name))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(&values, mask, layout)
    }
}

/// Writes every gene's value into a copy of `skeleton`. The mask is not
/// consulted; it is applied when patterns are encoded.
pub fn decode_genome(c: &Chromosome, layout: &GenomeLayout, skeleton: &Network) -> Result<Network> {
    let values = c.gene_values(layout)?;
    apply_values(&values, layout, skeleton)
}

pub(crate) fn apply_values(values: &[f64], layout: &GenomeLayout, skeleton: &Network) -> Result<Network> {
    let mut net = skeleton.clone();
    for (gene, &v) in layout.genes.iter().zip(values) {
        let missing = || Error::ShapeMismatch(format!("gene {} has no slot in the skeleton", gene.name));
        match gene.target {
            GeneTarget::Threshold { neuron } => {
                net.neurons.get_mut(neuron).ok_or_else(missing)?.threshold = v;
            }
            GeneTarget::Weight { neuron, synapse } => {
                net.neurons
                    .get_mut(neuron)
                    .and_then(|n| n.synapses.get_mut(synapse))
                    .ok_or_else(missing)?
                    .weight = v;
            }
            GeneTarget::Latency { neuron, synapse } => {
                net.neurons
                    .get_mut(neuron)
                    .and_then(|n| n.synapses.get_mut(synapse))
                    .ok_or_else(missing)?
                    .latency = v;
            }
        }
    }
    net.validate()?;
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskInit {
    #[default]
    AllOnes,
    Random,
}

/// Uniform random value bits; the mask starts all-ones unless `mask_init`
/// asks for random bits.
pub fn random_chromosome(layout: &GenomeLayout, mask_init: MaskInit, rng: &mut impl Rng) -> Chromosome {
    let value_bits = (0..layout.value_bits()).map(|_| rng.random::<bool>()).collect();
    let mask = match mask_init {
        MaskInit::AllOnes => vec![true; layout.mask_len],
        MaskInit::Random => (0..layout.mask_len).map(|_| rng.random::<bool>()).collect(),
    };
    Chromosome { value_bits, mask }
}
