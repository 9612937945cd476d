//! JASTAP neurons and discrete-time network simulation.
//!
//! A spike arriving at a synapse evokes the waveform
//! `k * (1 - exp(-t/t1))^2 * exp(-2t/t2)` scaled by the synaptic weight. A
//! neuron's membrane potential is `(2/pi) * atan` of the summed waveforms,
//! and it fires once the potential reaches its threshold and enough time has
//! passed since its previous spike. The admissible interval shrinks from
//! `i_max` towards `i_min` as the potential rises above threshold.
//!
//! The simulator expands the waveform into three decaying exponentials,
//! which lets every (neuron, waveform) pair carry its entire spike history in
//! three accumulators updated once per step. The result is exact up to
//! floating-point rounding; no history window is truncated.

use std::borrow::Borrow;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};

use crate::error::{invalid, Error, Result};
use crate::train::SpikeTrain;

/// Largest latency accepted for a synapse (ms).
pub const MAX_LATENCY: f64 = 40.0;

const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Shape of the postsynaptic waveform. `k` is always the unit-peak gain for
/// `(t1, t2)` unless set explicitly with [`WaveformParams::with_gain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformParams {
    t1: f64,
    t2: f64,
    k: f64,
}

impl WaveformParams {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        let k = normalize_gain(t1, t2)?;
        Ok(Self { t1, t2, k })
    }

    pub fn with_gain(t1: f64, t2: f64, k: f64) -> Result<Self> {
        check_time_constants(t1, t2)?;
        if !(k.is_finite() && k > 0.0) {
            return Err(invalid(format!("waveform gain must be positive, got {k}")));
        }
        Ok(Self { t1, t2, k })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn gain(&self) -> f64 {
        self.k
    }

    /// Time of the waveform maximum.
    pub fn peak_time(&self) -> f64 {
        peak_time(self.t1, self.t2)
    }

    /// Decay rates (1/ms) of the three exponentials whose signed sum
    /// `e^{-r0 t} - 2 e^{-r1 t} + e^{-r2 t}` equals the unscaled waveform.
    fn rates(&self) -> [f64; 3] {
        let slow = 2.0 / self.t2;
        [slow, 1.0 / self.t1 + slow, 2.0 / self.t1 + slow]
    }
}

fn check_time_constants(t1: f64, t2: f64) -> Result<()> {
    if !(t1.is_finite() && t1 > 0.0 && t2.is_finite() && t2 > 0.0) {
        return Err(invalid(format!(
            "waveform time constants must be positive, got t1={t1}, t2={t2}"
        )));
    }
    Ok(())
}

fn peak_time(t1: f64, t2: f64) -> f64 {
    // d/dt ln PSP = 0  <=>  e^{-t/t1} / (1 - e^{-t/t1}) = t1/t2
    t1 * (t2 / t1).ln_1p()
}

/// Waveform value `t` ms after arrival. Zero for `t <= 0`.
pub fn psp_value(w: &WaveformParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let rise = -(-t / w.t1).exp_m1();
    w.k * rise * rise * (-2.0 * t / w.t2).exp()
}

/// Gain that scales the waveform peak to exactly 1.
pub fn normalize_gain(t1: f64, t2: f64) -> Result<f64> {
    check_time_constants(t1, t2)?;
    let t_peak = peak_time(t1, t2);
    let rise = -(-t_peak / t1).exp_m1();
    let peak = rise * rise * (-2.0 * t_peak / t2).exp();
    Ok(1.0 / peak)
}

/// Membrane potential from the summed PSP contributions; strictly inside (-1, 1).
pub fn membrane_potential(psp_sum: f64) -> f64 {
    FRAC_2_PI * psp_sum.atan()
}

/// Admissible inter-spike interval for membrane potential `mp`, clamped to
/// `[i_min, i_max]`. At `mp >= 1` the limit `i_min` is returned.
pub fn actual_isi(mp: f64, theta: f64, i_min: f64, i_max: f64) -> f64 {
    if mp >= 1.0 {
        return i_min;
    }
    let drive = (mp - theta) / (1.0 - mp).max(DENOMINATOR_FLOOR);
    let isi = i_max - (i_max - i_min) * FRAC_2_PI * drive.atan();
    isi.clamp(i_min, i_max)
}

/// Origin of the spikes feeding a synapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// External input channel.
    Input(usize),
    /// Axon of another (or the same) neuron.
    Neuron(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynapseSpec {
    pub source: Source,
    /// Strength in [-1, 1]; negative values are inhibitory.
    pub weight: f64,
    /// Transmission delay in ms, [0, 40].
    pub latency: f64,
    pub waveform: WaveformParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronSpec {
    /// Firing threshold in [0, 1].
    pub threshold: f64,
    pub i_min: f64,
    pub i_max: f64,
    pub synapses: Vec<SynapseSpec>,
}

impl NeuronSpec {
    pub fn new(threshold: f64, synapses: Vec<SynapseSpec>) -> Self {
        Self {
            threshold,
            i_min: 1.0,
            i_max: 10.0,
            synapses,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub neurons: Vec<NeuronSpec>,
    pub input_channels: usize,
    /// Neuron ids read out as classes, in class order.
    pub output_neurons: Vec<usize>,
}

impl Network {
    pub fn new(
        neurons: Vec<NeuronSpec>,
        input_channels: usize,
        output_neurons: Vec<usize>,
    ) -> Result<Self> {
        let net = Self {
            neurons,
            input_channels,
            output_neurons,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        let n = self.neurons.len();
        if self.output_neurons.is_empty() {
            return bad("no output neurons".into());
        }
        for (k, &id) in self.output_neurons.iter().enumerate() {
            if id >= n {
                return bad(format!("output neuron {id} does not exist"));
            }
            if self.output_neurons[..k].contains(&id) {
                return bad(format!("output neuron {id} listed twice"));
            }
        }
        for (i, neuron) in self.neurons.iter().enumerate() {
            if !(0.0..=1.0).contains(&neuron.threshold) {
                return bad(format!("neuron {i}: threshold {} outside [0, 1]", neuron.threshold));
            }
            if !(neuron.i_min > 0.0 && neuron.i_min < neuron.i_max && neuron.i_max.is_finite()) {
                return bad(format!(
                    "neuron {i}: need 0 < i_min < i_max, got {} / {}",
                    neuron.i_min, neuron.i_max
                ));
            }
            for (j, syn) in neuron.synapses.iter().enumerate() {
                match syn.source {
                    Source::Input(c) if c >= self.input_channels => {
                        return bad(format!("neuron {i} synapse {j}: no input channel {c}"))
                    }
                    Source::Neuron(s) if s >= n => {
                        return bad(format!("neuron {i} synapse {j}: no neuron {s}"))
                    }
                    _ => {}
                }
                if !(-1.0..=1.0).contains(&syn.weight) {
                    return bad(format!("neuron {i} synapse {j}: weight {} outside [-1, 1]", syn.weight));
                }
                if !(0.0..=MAX_LATENCY).contains(&syn.latency) {
                    return bad(format!(
                        "neuron {i} synapse {j}: latency {} outside [0, {MAX_LATENCY}]",
                        syn.latency
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn output_ordinal(&self, neuron: usize) -> Option<usize> {
        self.output_neurons.iter().position(|&id| id == neuron)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Step length (ms).
    pub dt: f64,
    /// Simulated span (ms); steps run over `0, dt, ..., horizon`.
    pub horizon: f64,
    /// Keep per-step membrane potentials in the trace.
    pub record_potentials: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 300.0,
            record_potentials: false,
        }
    }
}

impl SimConfig {
    /// Number of steps after t = 0.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(invalid(format!("horizon {} shorter than dt", self.horizon)));
        }
        let ratio = self.horizon / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(format!(
                "horizon {} is not a whole number of {} ms steps",
                self.horizon, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// Spike times per neuron.
    pub spikes: Vec<SpikeTrain>,
    /// Membrane potential per neuron per executed step, when requested.
    pub potentials: Option<Vec<Vec<f64>>>,
    /// Time of the last executed step.
    pub end_time: f64,
}

impl SimTrace {
    /// `neuron_id<TAB>time_ms` per spike, sorted by time then neuron.
    pub fn dump(&self) -> String {
        let mut all: Vec<(f64, usize)> = self
            .spikes
            .iter()
            .enumerate()
            .flat_map(|(id, train)| train.times().iter().map(move |&t| (t, id)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = String::new();
        for (t, id) in all {
            out.push_str(&format!("{id}\t{t:.1}\n"));
        }
        out
    }
}

/// Runs `net` on `inputs` from t = 0 to the horizon.
pub fn simulate(
    net: &Network,
    inputs: &[SpikeTrain],
    cfg: &SimConfig,
    stop_on_output: bool,
) -> Result<SimTrace> {
    Simulator::new(net, cfg)?.run(inputs, stop_on_output)
}

#[derive(Debug, Clone, Copy)]
struct Arrival {
    step: usize,
    time: f64,
    kernel: usize,
    amplitude: f64,
}

#[derive(Debug, Clone, Copy)]
struct Projection {
    kernel: usize,
    amplitude: f64,
    latency: f64,
}

/// A neuron-to-neuron projection resolved to the grid: a spike at step `s`
/// adds `contribution` to `kernel` at step `s + offset`.
#[derive(Debug, Clone, Copy)]
struct Relay {
    kernel: usize,
    offset: usize,
    contribution: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Delivery {
    kernel: usize,
    contribution: [f64; 3],
}

/// Kernel state added by an arrival of `amplitude` that is `elapsed` ms old.
#[inline]
fn contribution(rates: &[f64; 3], amplitude: f64, elapsed: f64) -> [f64; 3] {
    let e = elapsed.max(0.0);
    [
        amplitude * (-rates[0] * e).exp(),
        -2.0 * amplitude * (-rates[1] * e).exp(),
        amplitude * (-rates[2] * e).exp(),
    ]
}

/// A network compiled for repeated simulation. Buffers are reused between
/// runs, so one simulator per thread avoids per-pattern allocation.
#[derive(Debug, Clone)]
pub struct Simulator {
    dt: f64,
    steps: usize,
    record: bool,
    n_inputs: usize,
    threshold: Vec<f64>,
    // precheck bound on the raw PSP sum, slightly below tan(pi*theta/2)
    sum_threshold: Vec<f64>,
    i_min: Vec<f64>,
    i_max: Vec<f64>,
    // smallest whole number of steps spanning i_min
    refractory_steps: Vec<usize>,
    is_output: Vec<bool>,
    // kernels of neuron i are kernel_start[i]..kernel_start[i+1]
    kernel_start: Vec<usize>,
    kernel_rates: Vec<[f64; 3]>,
    kernel_decay: Vec<[f64; 3]>,
    from_input: Vec<Vec<Projection>>,
    from_neuron: Vec<Vec<Relay>>,
    // run state
    state: Vec<[f64; 3]>,
    ring: Vec<Vec<Delivery>>,
    input_arrivals: Vec<Arrival>,
    // steps holding ring arrivals, possibly stale
    pending: BinaryHeap<Reverse<usize>>,
    fired: Vec<usize>,
}

impl Simulator {
    pub fn new(net: &Network, cfg: &SimConfig) -> Result<Self> {
        net.validate()?;
        let steps = cfg.steps()?;
        let dt = cfg.dt;
        let n = net.neurons.len();

        let mut kernel_start = Vec::with_capacity(n + 1);
        let mut kernel_shapes: Vec<WaveformParams> = Vec::new();
        let mut from_input = vec![Vec::new(); net.input_channels];
        let mut neuron_projections = vec![Vec::new(); n];
        let mut max_latency: f64 = 0.0;

        for neuron in &net.neurons {
            let start = kernel_shapes.len();
            kernel_start.push(start);
            for syn in &neuron.synapses {
                let w = syn.waveform;
                let kernel = match kernel_shapes[start..].iter().position(|&k| k == w) {
                    Some(p) => start + p,
                    None => {
                        kernel_shapes.push(w);
                        kernel_shapes.len() - 1
                    }
                };
                let proj = Projection {
                    kernel,
                    amplitude: syn.weight * w.k,
                    latency: syn.latency,
                };
                max_latency = max_latency.max(syn.latency);
                match syn.source {
                    Source::Input(c) => from_input[c].push(proj),
                    Source::Neuron(s) => neuron_projections[s].push(proj),
                }
            }
        }
        kernel_start.push(kernel_shapes.len());

        let kernel_rates: Vec<[f64; 3]> = kernel_shapes.iter().map(|w| w.rates()).collect();
        let kernel_decay = kernel_rates
            .iter()
            .map(|r| r.map(|rate| (-rate * dt).exp()))
            .collect();
        // a spike at step s arrives at s * dt + latency, visible from the
        // first later step on the grid
        let from_neuron = neuron_projections
            .iter()
            .map(|projs| {
                projs
                    .iter()
                    .map(|p: &Projection| {
                        let offset = ((p.latency / dt - 1e-9).ceil().max(0.0) as usize).max(1);
                        Relay {
                            kernel: p.kernel,
                            offset,
                            contribution: contribution(&kernel_rates[p.kernel], p.amplitude, offset as f64 * dt - p.latency),
                        }
                    })
                    .collect()
            })
            .collect();

        let sum_threshold = net
            .neurons
            .iter()
            .map(|nrn| {
                let exact = (FRAC_PI_2 * nrn.threshold).tan();
                exact - 1e-9 * (1.0 + exact.abs())
            })
            .collect();

        let mut is_output = vec![false; n];
        for &o in &net.output_neurons {
            is_output[o] = true;
        }

        let ring_len = (max_latency / dt).ceil() as usize + 3;
        Ok(Self {
            dt,
            steps,
            record: cfg.record_potentials,
            n_inputs: net.input_channels,
            threshold: net.neurons.iter().map(|x| x.threshold).collect(),
            sum_threshold,
            i_min: net.neurons.iter().map(|x| x.i_min).collect(),
            i_max: net.neurons.iter().map(|x| x.i_max).collect(),
            refractory_steps: net
                .neurons
                .iter()
                .map(|x| (1..).find(|&k| k as f64 * dt >= x.i_min).unwrap_or(usize::MAX))
                .collect(),
            is_output,
            kernel_start,
            state: vec![[0.0; 3]; kernel_rates.len()],
            kernel_rates,
            kernel_decay,
            from_input,
            from_neuron,
            ring: vec![Vec::new(); ring_len],
            input_arrivals: Vec::new(),
            pending: BinaryHeap::new(),
            fired: Vec::new(),
        })
    }

    fn arrival_step(&self, time: f64) -> usize {
        (time / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    #[inline]
    fn add(state: &mut [[f64; 3]], kernel: usize, c: &[f64; 3]) {
        let s = &mut state[kernel];
        s[0] += c[0];
        s[1] += c[1];
        s[2] += c[2];
    }

    /// Upper bound on neuron `i`'s PSP sum from now until the next arrival.
    ///
    /// With `u = exp(-tau / t1)` a kernel evolves as
    /// `exp(-r0 tau) * (c0 + c1 u + c2 u^2)`, `u` in `(0, 1]`, so the
    /// positive part of the quadratic's maximum bounds its future value.
    fn sum_bound(&self, i: usize) -> f64 {
        self.state[self.kernel_start[i]..self.kernel_start[i + 1]]
            .iter()
            .map(|&[c0, c1, c2]| {
                let mut g = c0.max(c0 + c1 + c2);
                if c2 < 0.0 {
                    let u = -c1 / (2.0 * c2);
                    if u > 0.0 && u < 1.0 {
                        g = g.max(c0 - c1 * c1 / (4.0 * c2));
                    }
                }
                g.max(0.0)
            })
            .sum()
    }

    /// Earliest step after `step` at which some neuron could fire, assuming
    /// no new arrivals: refractory neurons wait out `i_min`, and neurons
    /// whose bound stays below threshold are excluded.
    fn earliest_firing(&self, step: usize, last_spike: &[Option<usize>]) -> usize {
        let mut earliest = usize::MAX;
        for i in 0..self.threshold.len() {
            let candidate = match last_spike[i] {
                Some(prev) => (prev + self.refractory_steps[i]).max(step + 1),
                None => step + 1,
            };
            if candidate < earliest && self.sum_bound(i) >= self.sum_threshold[i] {
                earliest = candidate;
                if earliest == step + 1 {
                    break;
                }
            }
        }
        earliest
    }

    /// Simulates one presentation of `inputs`. When `stop_on_output` is set
    /// the run ends after the first step in which an output neuron fires.
    pub fn run<T: Borrow<SpikeTrain>>(&mut self, inputs: &[T], stop_on_output: bool) -> Result<SimTrace> {
        if inputs.len() != self.n_inputs {
            return Err(Error::InputMismatch(format!(
                "network expects {} input trains, got {}",
                self.n_inputs,
                inputs.len()
            )));
        }
        let horizon = self.steps as f64 * self.dt;
        let n = self.threshold.len();

        self.input_arrivals.clear();
        for (c, train) in inputs.iter().enumerate() {
            for &t in train.borrow().times() {
                if !(0.0..=horizon).contains(&t) {
                    return Err(Error::InputMismatch(format!(
                        "input spike at {t} ms on channel {c} outside [0, {horizon}]"
                    )));
                }
                for p in &self.from_input[c] {
                    let time = t + p.latency;
                    self.input_arrivals.push(Arrival {
                        step: self.arrival_step(time),
                        time,
                        kernel: p.kernel,
                        amplitude: p.amplitude,
                    });
                }
            }
        }
        // stable: equal steps keep channel order, so runs are reproducible
        self.input_arrivals.sort_by_key(|a| a.step);
        for slot in &mut self.ring {
            slot.clear();
        }
        for s in &mut self.state {
            *s = [0.0; 3];
        }

        let mut spikes = vec![SpikeTrain::empty(); n];
        let mut last_spike: Vec<Option<usize>> = vec![None; n];
        let mut potentials = self.record.then(|| vec![Vec::with_capacity(self.steps + 1); n]);
        let mut cursor = 0;
        let mut end_step = self.steps;
        let ring_len = self.ring.len();
        self.pending.clear();
        let mut step = 0;
        let mut gap = 0;

        while step <= self.steps {
            let now = step as f64 * self.dt;
            if gap == 1 {
                for (s, d) in self.state.iter_mut().zip(&self.kernel_decay) {
                    s[0] *= d[0];
                    s[1] *= d[1];
                    s[2] *= d[2];
                }
            } else if gap > 1 {
                let g = gap as i32;
                for (s, d) in self.state.iter_mut().zip(&self.kernel_decay) {
                    s[0] *= d[0].powi(g);
                    s[1] *= d[1].powi(g);
                    s[2] *= d[2].powi(g);
                }
            }
            while cursor < self.input_arrivals.len() && self.input_arrivals[cursor].step <= step {
                let a = self.input_arrivals[cursor];
                let c = contribution(&self.kernel_rates[a.kernel], a.amplitude, now - a.time);
                Self::add(&mut self.state, a.kernel, &c);
                cursor += 1;
            }
            let slot = step % ring_len;
            for d in self.ring[slot].drain(..) {
                Self::add(&mut self.state, d.kernel, &d.contribution);
            }

            self.fired.clear();
            for i in 0..n {
                let sum: f64 = self.state[self.kernel_start[i]..self.kernel_start[i + 1]]
                    .iter()
                    .map(|s| s[0] + s[1] + s[2])
                    .sum();
                if let Some(trace) = potentials.as_mut() {
                    trace[i].push(membrane_potential(sum));
                }
                if sum < self.sum_threshold[i] {
                    continue;
                }
                // actual_isi never drops below i_min
                if last_spike[i].is_some_and(|prev| ((step - prev) as f64 * self.dt) < self.i_min[i]) {
                    continue;
                }
                let mp = membrane_potential(sum);
                if mp < self.threshold[i] {
                    continue;
                }
                let ready = match last_spike[i] {
                    None => true,
                    Some(prev) => {
                        let since = (step - prev) as f64 * self.dt;
                        since >= actual_isi(mp, self.threshold[i], self.i_min[i], self.i_max[i])
                    }
                };
                if ready {
                    self.fired.push(i);
                }
            }

            let mut output_fired = false;
            for k in 0..self.fired.len() {
                let i = self.fired[k];
                last_spike[i] = Some(step);
                spikes[i].push(now);
                output_fired |= self.is_output[i];
                for r in &self.from_neuron[i] {
                    let target = step + r.offset;
                    if target <= self.steps {
                        self.ring[target % ring_len].push(Delivery {
                            kernel: r.kernel,
                            contribution: r.contribution,
                        });
                        self.pending.push(Reverse(target));
                    }
                }
            }
            if stop_on_output && output_fired {
                end_step = step;
                break;
            }

            let mut next = step + 1;
            if !self.record {
                next = self.earliest_firing(step, &last_spike);
                if next > step + 1 {
                    if let Some(a) = self.input_arrivals.get(cursor) {
                        next = next.min(a.step.max(step + 1));
                    }
                    while self.pending.peek().is_some_and(|&Reverse(t)| t <= step) {
                        self.pending.pop();
                    }
                    if let Some(&Reverse(t)) = self.pending.peek() {
                        next = next.min(t);
                    }
                    next = next.min(self.steps + 1);
                }
            }
            gap = next - step;
            step = next;
        }

        Ok(SimTrace {
            spikes,
            potentials,
            end_time: end_step as f64 * self.dt,
        })
    }
}
