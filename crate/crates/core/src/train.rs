//! Spike trains shared by the simulator and the codec.

use crate::error::{invalid, Result};

/// Ordered spike times (ms) of one input channel or neuron.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpikeTrain {
    times: Vec<f64>,
}

impl SpikeTrain {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a train, rejecting non-finite, negative or non-increasing times.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(invalid(format!("spike time {t} at position {i}")));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(invalid(format!(
                    "spike times must be strictly increasing ({} then {t})",
                    times[i - 1]
                )));
            }
        }
        Ok(Self { times })
    }

    pub(crate) fn from_sorted_unchecked(times: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        Self { times }
    }

    pub(crate) fn push(&mut self, t: f64) {
        debug_assert!(self.times.last().is_none_or(|&last| last < t));
        self.times.push(t);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Successive inter-spike intervals.
    pub fn intervals(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }
}
