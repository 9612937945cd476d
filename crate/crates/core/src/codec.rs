//! Feature vectors in, class decisions out.
//!
//! Each feature drives one input channel with a train whose inter-spike
//! interval grows linearly with the feature value. Masked features send an
//! empty train. The network's answer is the first output neuron to fire.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::neuron::{Network, SimTrace};
use crate::noise::{perturb_isi, NoiseModel};
pub use crate::train::SpikeTrain;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    /// Interval for the smallest feature value (ms).
    pub isi_lo: f64,
    /// Interval for the largest feature value (ms).
    pub isi_hi: f64,
    pub horizon: f64,
    /// Per-feature `(min, max)` used for linear scaling.
    pub ranges: Vec<(f64, f64)>,
}

impl EncodingConfig {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        let cfg = Self {
            isi_lo: 5.0,
            isi_hi: 15.0,
            horizon: 300.0,
            ranges,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.isi_lo > 0.0 && self.isi_lo < self.isi_hi && self.isi_hi <= self.horizon) {
            return Err(invalid(format!(
                "need 0 < isi_lo < isi_hi <= horizon, got {} / {} / {}",
                self.isi_lo, self.isi_hi, self.horizon
            )));
        }
        for (j, &r) in self.ranges.iter().enumerate() {
            check_range(r).map_err(|e| invalid(format!("feature {j}: {e}")))?;
        }
        Ok(())
    }
}

fn check_range((min, max): (f64, f64)) -> Result<()> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(invalid(format!("degenerate feature range ({min}, {max})")));
    }
    Ok(())
}

/// Maps `value` linearly from `range` onto `[isi_lo, isi_hi]`, clamping
/// values outside the range.
pub fn scale_feature(value: f64, range: (f64, f64), cfg: &EncodingConfig) -> Result<f64> {
    check_range(range)?;
    let (min, max) = range;
    let isi = cfg.isi_lo + (cfg.isi_hi - cfg.isi_lo) * (value - min) / (max - min);
    Ok(isi.clamp(cfg.isi_lo, cfg.isi_hi))
}

/// Floor applied to noisy intervals so trains stay strictly increasing.
pub const MIN_NOISY_ISI: f64 = 0.5;

/// Repeats the interval for `value` over the horizon. The first spike sits at
/// one interval; a spike landing exactly on the horizon is kept.
fn repeat_train(
    nominal: f64,
    horizon: f64,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<SpikeTrain> {
    let limit = horizon * (1.0 + 1e-12);
    let mut times = Vec::with_capacity((horizon / nominal) as usize + 1);
    match noise.filter(|m| m.is_active()) {
        None => {
            let mut k = 1.0;
            loop {
                let t = k * nominal;
                if t > limit {
                    break;
                }
                times.push(t.min(horizon));
                k += 1.0;
            }
        }
        Some(model) => {
            let mut t = 0.0;
            loop {
                t += perturb_isi(nominal, model, rng)?;
                if t > limit {
                    break;
                }
                times.push(t.min(horizon));
            }
        }
    }
    Ok(SpikeTrain::from_sorted_unchecked(times))
}

/// Encodes one pattern. Every feature's train is generated, in order, before
/// the mask is applied, so the noise realised on an active channel does not
/// depend on which other channels are masked.
pub fn encode(
    features: &[f64],
    mask: &[bool],
    cfg: &EncodingConfig,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<Vec<SpikeTrain>> {
    if features.len() != mask.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} features but mask of length {}",
            features.len(),
            mask.len()
        )));
    }
    if features.len() != cfg.ranges.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} features but {} scaling ranges",
            features.len(),
            cfg.ranges.len()
        )));
    }
    let mut trains = Vec::with_capacity(features.len());
    for ((&value, &range), &active) in features.iter().zip(&cfg.ranges).zip(mask) {
        let isi = scale_feature(value, range, cfg)?;
        let train = repeat_train(isi, cfg.horizon, noise, rng)?;
        trains.push(if active { train } else { SpikeTrain::empty() });
    }
    Ok(trains)
}

/// Outcome of one presentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    /// No output neuron fired within the horizon.
    Silent,
    /// Output neuron with ordinal `class` fired first, at `time` ms.
    Fired { class: usize, time: f64 },
}

impl Decision {
    pub fn class(&self) -> Option<usize> {
        match *self {
            Decision::Fired { class, .. } => Some(class),
            Decision::Silent => None,
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            Decision::Fired { time, .. } => Some(time),
            Decision::Silent => None,
        }
    }
}

/// First output spike wins; simultaneous spikes go to the lowest ordinal.
pub fn decode(trace: &SimTrace, net: &Network) -> Decision {
    let mut best: Option<(usize, f64)> = None;
    for (class, &neuron) in net.output_neurons.iter().enumerate() {
        if let Some(t) = trace.spikes.get(neuron).and_then(SpikeTrain::first) {
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((class, t));
            }
        }
    }
    match best {
        Some((class, time)) => Decision::Fired { class, time },
        None => Decision::Silent,
    }
}
