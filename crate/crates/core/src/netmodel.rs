//! Shared data model: network topology and weights, coding parameters,
//! spike events and activity traces.
//!
//! Every other module consumes these types. They are plain values and are
//! never mutated after construction, so they can be shared freely across
//! worker threads.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Layer sizes `N_0..N_L` of a fully-connected feed-forward network.
///
/// `N_0` is the input dimension and `N_L` the class count. Layer 1 is the
/// first hidden layer, layer `L` the output layer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NetworkTopology {
    layer_sizes: Vec<usize>,
}

impl NetworkTopology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Invalid(format!(
                "a topology needs at least an input and an output layer, got {} layer(s)",
                layer_sizes.len()
            )));
        }
        if let Some(pos) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Invalid(format!("layer {pos} has zero neurons")));
        }
        Ok(Self { layer_sizes })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Number of weighted layers `L` (the input layer is not counted).
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Size of layer `l`, with `l` in `0..=L`.
    pub fn size(&self, l: usize) -> usize {
        self.layer_sizes[l]
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Neurons in layers `1..=L`.
    pub fn computing_neurons(&self) -> usize {
        self.layer_sizes[1..].iter().sum()
    }

    /// Total synapse count `Σ N_{l-1}·N_l`.
    pub fn synapses(&self) -> u64 {
        self.layer_sizes.windows(2).map(|w| w[0] as u64 * w[1] as u64).sum()
    }
}

impl fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layer_sizes.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

impl FromStr for NetworkTopology {
    type Err = Error;

    /// Parses the hyphen notation, e.g. `"784-300-10"`.
    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .trim()
            .split('-')
            .map(|part| {
                part.parse::<usize>()
                    .map_err(|_| Error::parse("topology", format!("`{part}` is not a layer size in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

impl TryFrom<Vec<usize>> for NetworkTopology {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NetworkTopology> for Vec<usize> {
    fn from(t: NetworkTopology) -> Self {
        t.layer_sizes
    }
}

/// Weight storage footprint in bits: `bits_per_weight · Σ N_{l-1}·N_l`.
pub fn memory_bits(topology: &NetworkTopology, bits_per_weight: u32) -> u64 {
    bits_per_weight as u64 * topology.synapses()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Rectifier,
    Linear,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Rectifier => "rectifier",
            Activation::Linear => "linear",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectifier" | "relu" => Ok(Activation::Rectifier),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::parse("activations", format!("unknown activation `{other}`"))),
        }
    }
}

/// Default firing threshold given to every layer after transcoding.
pub const DEFAULT_THRESHOLD: f64 = 1.5;

/// A trained fully-connected network, shared by the trainer, the spiking
/// engine and the hardware models.
///
/// `weights[l-1]` holds the `N_{l-1} × N_l` matrix of layer `l` in row-major
/// order: `w[i·N_l + j]` connects presynaptic neuron `i` to neuron `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNetwork {
    topology: NetworkTopology,
    weights: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    activations: Vec<Activation>,
}

impl TrainedNetwork {
    pub fn new(
        topology: NetworkTopology,
        weights: Vec<Vec<f64>>,
        thresholds: Vec<f64>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        let layers = topology.num_layers();
        if weights.len() != layers {
            return Err(Error::Shape(format!("expected {layers} weight matrices, got {}", weights.len())));
        }
        if thresholds.len() != layers {
            return Err(Error::Shape(format!("expected {layers} thresholds, got {}", thresholds.len())));
        }
        if activations.len() != layers {
            return Err(Error::Shape(format!("expected {layers} activations, got {}", activations.len())));
        }
        for (idx, w) in weights.iter().enumerate() {
            let l = idx + 1;
            let expected = topology.size(l - 1) * topology.size(l);
            if w.len() != expected {
                return Err(Error::Shape(format!(
                    "W_{l} has {} entries, expected {}×{} = {expected}",
                    w.len(),
                    topology.size(l - 1),
                    topology.size(l)
                )));
            }
            if let Some(pos) = w.iter().position(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("W_{l}[{pos}] is not finite")));
            }
        }
        if let Some(pos) = thresholds.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Invalid(format!(
                "threshold of layer {} must be positive and finite, got {}",
                pos + 1,
                thresholds[pos]
            )));
        }
        Ok(Self { topology, weights, thresholds, activations })
    }

    /// Rectifier hidden layers, linear output, default thresholds.
    pub fn with_default_head(topology: NetworkTopology, weights: Vec<Vec<f64>>) -> Result<Self> {
        let layers = topology.num_layers();
        let activations = default_activations(layers);
        Self::new(topology, weights, vec![DEFAULT_THRESHOLD; layers], activations)
    }

    /// A network of the given shape with every weight set to zero.
    pub fn zeros(topology: NetworkTopology) -> Self {
        let weights = topology.layer_sizes().windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        Self::with_default_head(topology, weights).expect("zero network is always valid")
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    /// Row-major weight matrix of layer `l` (`1..=L`).
    pub fn weights(&self, l: usize) -> &[f64] {
        &self.weights[l - 1]
    }

    pub fn all_weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    /// `w_ij` of layer `l`.
    pub fn weight(&self, l: usize, i: usize, j: usize) -> f64 {
        self.weights[l - 1][i * self.topology.size(l) + j]
    }

    /// Threshold `θ_l` of layer `l` (`1..=L`).
    pub fn threshold(&self, l: usize) -> f64 {
        self.thresholds[l - 1]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn activation(&self, l: usize) -> Activation {
        self.activations[l - 1]
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    /// Returns a copy with `θ_l` replaced.
    pub fn with_threshold(&self, l: usize, threshold: f64) -> Result<Self> {
        let mut thresholds = self.thresholds.clone();
        thresholds[l - 1] = threshold;
        Self::new(self.topology.clone(), self.weights.clone(), thresholds, self.activations.clone())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "layer_sizes": self.topology.layer_sizes(),
            "thresholds": self.thresholds,
            "activations": self.activations.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
            "weights": self.weights,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::parse("<root>", "network file must be a JSON object"))?;

        let sizes = usize_array(obj, "layer_sizes")?;
        let topology = NetworkTopology::new(sizes).map_err(|e| Error::parse("layer_sizes", e.to_string()))?;
        let thresholds = float_array(field(obj, "thresholds")?, "thresholds")?;
        let activations = field(obj, "activations")?
            .as_array()
            .ok_or_else(|| Error::parse("activations", "expected an array of strings"))?
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| Error::parse("activations", "expected a string"))
                    .and_then(Activation::from_str)
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = field(obj, "weights")?
            .as_array()
            .ok_or_else(|| Error::parse("weights", "expected an array of arrays"))?
            .iter()
            .enumerate()
            .map(|(idx, v)| float_array(v, &format!("weights[{idx}]")))
            .collect::<Result<Vec<_>>>()?;

        Self::new(topology, weights, thresholds, activations)
    }
}

pub(crate) fn default_activations(layers: usize) -> Vec<Activation> {
    let mut acts = vec![Activation::Rectifier; layers];
    acts[layers - 1] = Activation::Linear;
    acts
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| Error::parse(name, "missing field"))
}

fn usize_array(obj: &Map<String, Value>, name: &str) -> Result<Vec<usize>> {
    field(obj, name)?
        .as_array()
        .ok_or_else(|| Error::parse(name, "expected an array of integers"))?
        .iter()
        .map(|v| {
            v.as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| Error::parse(name, format!("`{v}` is not a non-negative integer")))
        })
        .collect()
}

fn float_array(value: &Value, name: &str) -> Result<Vec<f64>> {
    value
        .as_array()
        .ok_or_else(|| Error::parse(name, "expected an array of numbers"))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| Error::parse(name, format!("`{v}` is not a number"))))
        .collect()
}

pub fn save_network(net: &TrainedNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&net.to_json()).expect("network JSON is serializable");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<TrainedNetwork> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::parse("<root>", e.to_string()))?;
    TrainedNetwork::from_json(&value)
}

/// Parameters of the input spike encoders.
///
/// Frequencies are expressed per unit of simulated time, so a pixel at
/// `f_max` emits about `f_max · window` spikes over one presentation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodingParams {
    pub f_min: f64,
    pub f_max: f64,
    /// Relative standard deviation of the jitter (`sd = s_dev · period`).
    pub s_dev: f64,
    /// Earliest emission time for first-spike coding.
    pub t_min: f64,
    /// Presentation window `w_t`.
    pub window: f64,
    pub seed: u64,
}

impl Default for CodingParams {
    fn default() -> Self {
        Self { f_min: 10.0, f_max: 100.0, s_dev: 0.1, t_min: 0.01, window: 1.0, seed: 0 }
    }
}

impl CodingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min > 0.0 && self.f_min <= self.f_max && self.f_max.is_finite()) {
            return Err(Error::Invalid(format!(
                "need 0 < f_min <= f_max, got f_min={} f_max={}",
                self.f_min, self.f_max
            )));
        }
        if !(self.s_dev >= 0.0 && self.s_dev.is_finite()) {
            return Err(Error::Invalid(format!("s_dev must be >= 0, got {}", self.s_dev)));
        }
        if !(self.t_min >= 0.0 && self.t_min < self.window && self.window.is_finite()) {
            return Err(Error::Invalid(format!(
                "need 0 <= t_min < window, got t_min={} window={}",
                self.t_min, self.window
            )));
        }
        Ok(())
    }
}

/// One address-event: a spike emitted by `neuron` of `layer` at `time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub time: f64,
    pub layer: usize,
    pub neuron: usize,
}

/// Input spike trains for one pattern, sorted by time (ties by neuron).
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeTrainSet {
    inputs: usize,
    window: f64,
    events: Vec<SpikeEvent>,
}

impl SpikeTrainSet {
    /// Builds a train set from input-layer events; sorts them.
    pub fn new(inputs: usize, window: f64, mut events: Vec<SpikeEvent>) -> Result<Self> {
        for e in &events {
            if e.layer != 0 {
                return Err(Error::Invalid(format!("input trains only carry layer-0 events, got layer {}", e.layer)));
            }
            if e.neuron >= inputs {
                return Err(Error::Invalid(format!("event neuron {} out of range for {inputs} inputs", e.neuron)));
            }
            if !(e.time >= 0.0 && e.time <= window) {
                return Err(Error::Invalid(format!("event time {} outside [0, {window}]", e.time)));
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
        Ok(Self { inputs, window, events })
    }

    pub fn empty(inputs: usize, window: f64) -> Self {
        Self { inputs, window, events: Vec::new() }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Spike count per input neuron.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.inputs];
        for e in &self.events {
            counts[e.neuron] += 1;
        }
        counts
    }

    /// CSV export, one `time,neuron` row per event in time order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,neuron\n");
        for e in &self.events {
            out.push_str(&format!("{},{}\n", e.time, e.neuron));
        }
        out
    }
}

/// Why an inference run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Delta,
    Max,
    Window,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Delta => "delta",
            Termination::Max => "max",
            Termination::Window => "window",
        }
    }
}

/// Per-layer spike counts recorded during one inference run.
///
/// Index `l-1` refers to layer `l`: `spikes_in[0]` counts input spikes that
/// reached the first hidden layer, `spikes_out[L-1]` counts output spikes.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivityTrace {
    pub spikes_in: Vec<u64>,
    pub spikes_out: Vec<u64>,
    pub predicted_class: Option<usize>,
    /// Simulated time of the last processed input event.
    pub elapsed_window: f64,
    pub terminated_by: Termination,
    /// Set when the run received no input spikes at all.
    pub no_input: bool,
}

impl ActivityTrace {
    pub fn new(layers: usize) -> Self {
        Self {
            spikes_in: vec![0; layers],
            spikes_out: vec![0; layers],
            predicted_class: None,
            elapsed_window: 0.0,
            terminated_by: Termination::Window,
            no_input: false,
        }
    }

    /// Spikes processed by the whole network (sum of arrivals).
    pub fn total_spikes_in(&self) -> u64 {
        self.spikes_in.iter().sum()
    }

    /// `spikes_in[l+1] == spikes_out[l]` for every inner layer.
    pub fn is_consistent(&self) -> bool {
        self.spikes_in.len() == self.spikes_out.len()
            && self.spikes_out.iter().zip(self.spikes_in.iter().skip(1)).all(|(out, next_in)| out == next_in)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "spikes_in": self.spikes_in,
            "spikes_out": self.spikes_out,
            "class": self.predicted_class,
            "terminated_by": self.terminated_by.as_str(),
            "no_input": self.no_input,
        })
    }
}

/// Average spike arrivals per layer over a dataset (`l = 1..=L`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeProfile {
    pub mean_spikes_in: Vec<f64>,
}

impl SpikeProfile {
    pub fn new(mean_spikes_in: Vec<f64>) -> Result<Self> {
        if let Some(pos) = mean_spikes_in.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Invalid(format!("spike profile entry {pos} must be a non-negative finite number")));
        }
        Ok(Self { mean_spikes_in })
    }

    pub fn from_trace(trace: &ActivityTrace) -> Self {
        Self { mean_spikes_in: trace.spikes_in.iter().map(|&c| c as f64).collect() }
    }

    pub fn layers(&self) -> usize {
        self.mean_spikes_in.len()
    }

    pub fn total(&self) -> f64 {
        self.mean_spikes_in.iter().sum()
    }

    /// Spikes emitted by the first hidden layer and beyond.
    pub fn beyond_first_hidden(&self) -> f64 {
        self.mean_spikes_in.iter().skip(1).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { mean_spikes_in: self.mean_spikes_in.iter().map(|v| v * k).collect() }
    }
}

impl FromStr for SpikeProfile {
    type Err = Error;

    /// Parses a comma-separated list such as `"724,173,103.5,39"`.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::parse("profile", format!("`{p}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(s: &str) -> NetworkTopology {
        s.parse().unwrap()
    }

    #[test]
    fn topology_parsing() {
        assert_eq!(topo("784-300-10").layer_sizes(), &[784, 300, 10]);
        assert_eq!(topo("784-300-10").to_string(), "784-300-10");
        assert!("784--10".parse::<NetworkTopology>().is_err());
        assert!("784".parse::<NetworkTopology>().is_err());
        assert!("784-0-10".parse::<NetworkTopology>().is_err());
        assert!("a-b".parse::<NetworkTopology>().is_err());
    }

    #[test]
    fn memory_footprint_examples() {
        assert_eq!(memory_bits(&topo("784-300-10"), 8), 1_905_600);
        assert_eq!(memory_bits(&topo("784-300-10"), 1), 238_200);
        assert_eq!(memory_bits(&topo("2-1"), 8), 16);
    }

    #[test]
    fn round_trip_zero_network() {
        let net = TrainedNetwork::zeros(topo("2-2-2"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_network(&net, &path).unwrap();
        assert_eq!(load_network(&path).unwrap(), net);
    }

    #[test]
    fn wrong_row_count_is_a_shape_error() {
        let text = r#"{"layer_sizes":[2,2],"thresholds":[1.0],"activations":["linear"],
                       "weights":[[1.0,2.0]]}"#;
        let err = TrainedNetwork::from_json(&serde_json::from_str(text).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err}");
    }

    #[test]
    fn malformed_field_is_named() {
        let text = r#"{"layer_sizes":[2,2],"thresholds":["x"],"activations":["linear"],
                       "weights":[[1.0,2.0,3.0,4.0]]}"#;
        let err = TrainedNetwork::from_json(&serde_json::from_str(text).unwrap()).unwrap_err();
        match err {
            Error::Parse { field, .. } => assert_eq!(field, "thresholds"),
            other => panic!("unexpected {other}"),
        }
        let text = r#"{"layer_sizes":[2,2],"thresholds":[1.0],"activations":["linear"]}"#;
        let err = TrainedNetwork::from_json(&serde_json::from_str(text).unwrap()).unwrap_err();
        assert!(err.to_string().contains("weights"));
    }

    #[test]
    fn thresholds_must_be_positive() {
        let t = topo("1-1");
        assert!(TrainedNetwork::new(t.clone(), vec![vec![0.5]], vec![0.0], vec![Activation::Linear]).is_err());
        assert!(TrainedNetwork::new(t, vec![vec![f64::NAN]], vec![1.0], vec![Activation::Linear]).is_err());
    }

    #[test]
    fn coding_params_validation() {
        assert!(CodingParams::default().validate().is_ok());
        let bad = CodingParams { f_min: 200.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = CodingParams { t_min: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn train_set_sorts_and_validates() {
        let ev = |t, n| SpikeEvent { time: t, layer: 0, neuron: n };
        let set = SpikeTrainSet::new(3, 1.0, vec![ev(0.5, 2), ev(0.1, 1), ev(0.5, 0)]).unwrap();
        let order: Vec<_> = set.events().iter().map(|e| e.neuron).collect();
        assert_eq!(order, vec![1, 0, 2]);
        assert_eq!(set.to_csv(), "time,neuron\n0.1,1\n0.5,0\n0.5,2\n");
        assert!(SpikeTrainSet::new(3, 1.0, vec![ev(1.5, 0)]).is_err());
        assert!(SpikeTrainSet::new(3, 1.0, vec![ev(0.5, 3)]).is_err());
    }

    #[test]
    fn profile_parsing() {
        let p: SpikeProfile = "724, 173,103.5,39".parse().unwrap();
        assert_eq!(p.mean_spikes_in, vec![724.0, 173.0, 103.5, 39.0]);
        assert!("1,-2".parse::<SpikeProfile>().is_err());
    }
}
