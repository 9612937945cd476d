//! Gamma-distributed interval noise.
//!
//! Raw draws come from Gamma(alpha, beta): Best's GS* rejection sampler for
//! `alpha < 1` and the Cheng-Feast GKM1 ratio-of-uniforms sampler for
//! `alpha > 1`; `alpha == 1` is the unit exponential by inversion. Interval
//! noise centres and rescales the draw so the perturbation has zero mean,
//! Gamma shape, and standard deviation `target_sd`.

use rand::Rng;

use crate::codec::MIN_NOISY_ISI;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the interval perturbation (ms); 0 disables it.
    pub target_sd: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            target_sd: 0.0,
            alpha: 25.0,
            beta: 0.8,
        }
    }
}

impl NoiseModel {
    /// Gamma(25, 0.8)-shaped noise with the given standard deviation.
    pub fn with_sd(target_sd: f64) -> Self {
        Self {
            target_sd,
            ..Self::default()
        }
    }

    pub fn is_active(&self) -> bool {
        self.target_sd > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(invalid(format!(
                "gamma parameters must be positive, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.target_sd >= 0.0 && self.target_sd.is_finite()) {
            return Err(invalid(format!("noise sd must be >= 0, got {}", self.target_sd)));
        }
        Ok(())
    }
}

/// Uniform on (0, 1].
fn open_unit(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// One draw from Gamma(shape `alpha`, scale `beta`).
pub fn sample_gamma(alpha: f64, beta: f64, rng: &mut impl Rng) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(invalid(format!(
            "gamma parameters must be positive, got alpha={alpha} beta={beta}"
        )));
    }
    let unit = if alpha < 1.0 {
        gs_star(alpha, rng)
    } else if alpha == 1.0 {
        -open_unit(rng).ln()
    } else {
        gkm1(alpha, rng)
    };
    Ok(beta * unit)
}

/// GS*: rejection from a mixture of a power-law head and an exponential tail.
fn gs_star(alpha: f64, rng: &mut impl Rng) -> f64 {
    let c1 = 0.07 + 0.75 * (1.0 - alpha).sqrt();
    let c2 = 1.0 + alpha * (-c1).exp() / c1;
    let c3 = 1.0 / alpha;
    loop {
        let u1 = rng.random::<f64>();
        let u2 = rng.random::<f64>();
        let w = c2 * u1;
        if w <= 1.0 {
            let z = c1 * w.powf(c3);
            if u2 <= (2.0 - z) / (2.0 + z) || u2 <= (-z).exp() {
                return z;
            }
        } else {
            let z = -(c1 * c3 * (c2 - w)).ln();
            let y = z / c1;
            if u2 * (alpha + y - alpha * y) <= 1.0 || u2 <= y.powf(alpha - 1.0) {
                return z;
            }
        }
    }
}

/// GKM1: ratio-of-uniforms with a quick pre-test before the log test.
fn gkm1(alpha: f64, rng: &mut impl Rng) -> f64 {
    let a = alpha - 1.0;
    let b = (alpha - 1.0 / (6.0 * alpha)) / a;
    let m = 2.0 / a;
    let d = m + 2.0;
    loop {
        let x = open_unit(rng);
        let y = open_unit(rng);
        let v = b * y / x;
        if m * x - d + v + 1.0 / v <= 0.0 || m * x.ln() - v.ln() + v - 1.0 <= 0.0 {
            return a * v;
        }
    }
}

// kept for reference against GS*: the original Ahrens-Dieter GS sampler
#[cfg(test)]
fn ahrens_dieter_gs(alpha: f64, rng: &mut impl Rng) -> f64 {
    let b = 1.0 + alpha / std::f64::consts::E;
    loop {
        let p = b * rng.random::<f64>();
        let u = rng.random::<f64>();
        if p <= 1.0 {
            let x = p.powf(1.0 / alpha);
            if u <= (-x).exp() {
                return x;
            }
        } else {
            let x = -((b - p) / alpha).ln();
            if u <= x.powf(alpha - 1.0) {
                return x;
            }
        }
    }
}

/// Perturbs a nominal interval with zero-mean Gamma-shaped noise, floored at
/// [`MIN_NOISY_ISI`]. Disabled models return `nominal` without drawing.
pub fn perturb_isi(nominal: f64, model: &NoiseModel, rng: &mut impl Rng) -> Result<f64> {
    if !(nominal > 0.0) {
        return Err(invalid(format!("nominal interval must be positive, got {nominal}")));
    }
    model.validate()?;
    if !model.is_active() {
        return Ok(nominal);
    }
    let x = sample_gamma(model.alpha, model.beta, rng)?;
    let standardized = (x - model.alpha * model.beta) / (model.beta * model.alpha.sqrt());
    Ok((nominal + standardized * model.target_sd).max(MIN_NOISY_ISI))
}
