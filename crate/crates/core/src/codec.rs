//! Input spike encoders and the Spike Select network transform.
//!
//! All encoders keep zero-valued pixels silent and emit events inside
//! `[0, window]`. Randomised encoders draw from an explicit RNG handle, so a
//! fixed seed gives identical trains.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{CodingParams, SpikeEvent, SpikeTrainSet, TrainedNetwork};

/// An input coding scheme, or Spike Select (Jittered Periodic input with a
/// raised first-hidden-layer threshold).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "jp")]
    JitteredPeriodic,
    #[serde(rename = "sb")]
    SingleBurst,
    #[serde(rename = "fs")]
    FirstSpike,
    #[serde(rename = "ss")]
    SpikeSelect,
}

impl Scheme {
    pub const ALL: [Scheme; 4] =
        [Scheme::JitteredPeriodic, Scheme::SpikeSelect, Scheme::SingleBurst, Scheme::FirstSpike];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::JitteredPeriodic => "jp",
            Scheme::SingleBurst => "sb",
            Scheme::FirstSpike => "fs",
            Scheme::SpikeSelect => "ss",
        }
    }

    /// The input encoder this scheme feeds the network with.
    pub fn input_coding(self) -> Scheme {
        match self {
            Scheme::SpikeSelect => Scheme::JitteredPeriodic,
            other => other,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jp" | "jittered-periodic" => Ok(Scheme::JitteredPeriodic),
            "sb" | "single-burst" => Ok(Scheme::SingleBurst),
            "fs" | "first-spike" => Ok(Scheme::FirstSpike),
            "ss" | "spike-select" => Ok(Scheme::SpikeSelect),
            other => Err(Error::parse("coding", format!("unknown coding scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeSelectConfig {
    /// Multiplier applied to `θ_1`; at least 1.
    pub threshold_factor: f64,
}

impl Default for SpikeSelectConfig {
    fn default() -> Self {
        Self { threshold_factor: 3.0 }
    }
}

/// Period for pixel value `v`: `1 / (f_max + (1 - |v|)(f_min - f_max))`.
pub fn period_of(v: f64, params: &CodingParams) -> f64 {
    1.0 / (params.f_max + (1.0 - v.abs()) * (params.f_min - params.f_max))
}

/// Jittered interval around period `p`.
///
/// Draws `n ~ Normal(p, s_dev·p)`, clamps it at zero, then returns
/// `Δt ~ Uniform(0, 2n)`, whose mean is `p` while the clamp is inactive.
pub fn deviation<R: Rng + ?Sized>(p: f64, params: &CodingParams, rng: &mut R) -> f64 {
    let n = if params.s_dev > 0.0 {
        Normal::new(p, params.s_dev * p).expect("finite, non-negative deviation").sample(rng).max(0.0)
    } else {
        p
    };
    if n > 0.0 {
        rng.random_range(0.0..2.0 * n)
    } else {
        0.0
    }
}

fn event(time: f64, neuron: usize) -> SpikeEvent {
    SpikeEvent { time, layer: 0, neuron }
}

fn finish(image: &[f64], params: &CodingParams, events: Vec<SpikeEvent>) -> SpikeTrainSet {
    SpikeTrainSet::new(image.len(), params.window, events).expect("encoder events are in range")
}

/// Rate coding with jittered inter-spike intervals.
pub fn encode_jittered_periodic<R: Rng + ?Sized>(image: &[f64], params: &CodingParams, rng: &mut R) -> SpikeTrainSet {
    let mut events = Vec::new();
    for (neuron, &v) in image.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let p = period_of(v, params);
        let mut t = deviation(p, params, rng);
        while t <= params.window {
            events.push(event(t, neuron));
            t += deviation(p, params, rng);
        }
    }
    finish(image, params, events)
}

/// One deterministic spike per non-zero pixel at `t = |1 - v| · window`.
pub fn encode_single_burst(image: &[f64], params: &CodingParams) -> SpikeTrainSet {
    let events = image
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(neuron, &v)| event((1.0 - v).abs() * params.window, neuron))
        .collect();
    finish(image, params, events)
}

/// One jittered spike per non-zero pixel, never earlier than `t_min`.
///
/// Emission times past the window are dropped.
pub fn encode_first_spike<R: Rng + ?Sized>(image: &[f64], params: &CodingParams, rng: &mut R) -> SpikeTrainSet {
    let mut events = Vec::new();
    for (neuron, &v) in image.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let dt = deviation(period_of(v, params), params, rng);
        let t = dt.max(params.t_min);
        if t <= params.window {
            events.push(event(t, neuron));
        }
    }
    finish(image, params, events)
}

/// Encodes `image` under `scheme` (Spike Select uses Jittered Periodic input).
pub fn encode<R: Rng + ?Sized>(scheme: Scheme, image: &[f64], params: &CodingParams, rng: &mut R) -> SpikeTrainSet {
    match scheme.input_coding() {
        Scheme::JitteredPeriodic => encode_jittered_periodic(image, params, rng),
        Scheme::SingleBurst => encode_single_burst(image, params),
        Scheme::FirstSpike => encode_first_spike(image, params, rng),
        Scheme::SpikeSelect => unreachable!(),
    }
}

/// RNG stream for sample `index` under `seed`; streams are independent so
/// samples can be encoded in any order or in parallel.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Raises the first hidden layer's threshold by `threshold_factor`.
pub fn apply_spike_select(net: &TrainedNetwork, cfg: &SpikeSelectConfig) -> Result<TrainedNetwork> {
    if net.topology().num_layers() < 2 {
        return Err(Error::Invalid("spike select needs at least one hidden layer".into()));
    }
    if !(cfg.threshold_factor >= 1.0 && cfg.threshold_factor.is_finite()) {
        return Err(Error::Invalid(format!("spike select factor must be >= 1, got {}", cfg.threshold_factor)));
    }
    net.with_threshold(1, net.threshold(1) * cfg.threshold_factor)
}

/// Network actually simulated for `scheme`.
pub fn network_for(scheme: Scheme, net: &TrainedNetwork, ss: &SpikeSelectConfig) -> Result<TrainedNetwork> {
    match scheme {
        Scheme::SpikeSelect => apply_spike_select(net, ss),
        _ => Ok(net.clone()),
    }
}
