//! Event-driven Integrate-and-Fire inference.
//!
//! Input events are consumed in time order. Each input spike is integrated
//! by every neuron of the first hidden layer; the spikes that layer emits are
//! then forwarded, in emission order, to the next layer within the same
//! logical step, and so on down to the output layer. The class selector is
//! polled after every output spike.
//!
//! Neurons are non-leaky IF units with reset by subtraction and no
//! refractory period. A neuron fires at most once per incoming spike.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{self, Scheme, SpikeSelectConfig};
use crate::error::{Error, Result};
use crate::netmodel::{ActivityTrace, CodingParams, SpikeProfile, SpikeTrainSet, Termination, TrainedNetwork};
use crate::trainer::{argmax, Dataset};

/// Membrane state of one neuron.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeuronState {
    pub potential: f64,
    pub spike_count: u64,
}

/// Integrates one weighted input spike.
///
/// `s = p + w`; if `s ≥ θ` the neuron fires and keeps `s − θ`.
#[inline]
pub fn if_integrate(state: NeuronState, weight: f64, threshold: f64) -> (NeuronState, bool) {
    let s = state.potential + weight;
    if s >= threshold {
        (NeuronState { potential: s - threshold, spike_count: state.spike_count + 1 }, true)
    } else {
        (NeuronState { potential: s, spike_count: state.spike_count }, false)
    }
}

/// Integrates several simultaneous spikes (`Σ w_ij·γ_i`) with a single
/// threshold test.
pub fn if_integrate_batch(
    state: NeuronState,
    weights: impl IntoIterator<Item = f64>,
    threshold: f64,
) -> (NeuronState, bool) {
    let total: f64 = weights.into_iter().sum();
    if_integrate(state, total, threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    TerminateDelta,
    MaxTerminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub kind: SelectorKind,
    pub delta_value: u64,
    pub max_value: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self { kind: SelectorKind::TerminateDelta, delta_value: 4, max_value: 4 }
    }
}

impl SelectorConfig {
    pub fn delta(delta_value: u64) -> Self {
        Self { kind: SelectorKind::TerminateDelta, delta_value, ..Self::default() }
    }

    pub fn max(max_value: u64) -> Self {
        Self { kind: SelectorKind::MaxTerminate, max_value, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_value == 0 || self.max_value == 0 {
            return Err(Error::Invalid("selector values must be >= 1".into()));
        }
        Ok(())
    }

    pub fn decide(&self, counts: &[u64]) -> Option<usize> {
        match self.kind {
            SelectorKind::TerminateDelta => terminate_delta(counts, self.delta_value),
            SelectorKind::MaxTerminate => max_terminate(counts, self.max_value),
        }
    }

    fn termination(&self) -> Termination {
        match self.kind {
            SelectorKind::TerminateDelta => Termination::Delta,
            SelectorKind::MaxTerminate => Termination::Max,
        }
    }
}

/// Winner once the leading class is at least `delta` spikes ahead of the
/// runner-up (0 when there is none). A tie for the lead never decides.
pub fn terminate_delta(counts: &[u64], delta: u64) -> Option<usize> {
    if counts.is_empty() {
        return None;
    }
    let best = argmax(counts);
    let first = counts[best];
    let second = counts.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, &c)| c).max().unwrap_or(0);
    (first > second && first - second >= delta).then_some(best)
}

/// Lowest-index class whose count reached `max_value`.
pub fn max_terminate(counts: &[u64], max_value: u64) -> Option<usize> {
    counts.iter().position(|&c| c >= max_value)
}

/// Full outcome of one inference run, including final membrane potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct InferenceRun {
    pub class: usize,
    pub trace: ActivityTrace,
    /// `potentials[l-1][j]` of neuron `j` in layer `l`.
    pub potentials: Vec<Vec<f64>>,
    pub output_counts: Vec<u64>,
}

/// Runs one pattern through the network; see the module docs for ordering.
pub fn simulate(net: &TrainedNetwork, trains: &SpikeTrainSet, selector: &SelectorConfig) -> Result<InferenceRun> {
    let topo = net.topology();
    if trains.inputs() != topo.inputs() {
        return Err(Error::Dimension { expected: topo.inputs(), actual: trains.inputs() });
    }
    let layers = topo.num_layers();
    let mut potentials: Vec<Vec<f64>> = (1..=layers).map(|l| vec![0.0; topo.size(l)]).collect();
    let mut counts = vec![0u64; topo.classes()];
    let mut trace = ActivityTrace::new(layers);
    trace.no_input = trains.is_empty();

    let mut arriving: Vec<usize> = Vec::new();
    let mut emitted: Vec<usize> = Vec::new();
    let mut decision = None;

    'events: for event in trains.events() {
        trace.spikes_in[0] += 1;
        trace.elapsed_window = event.time;
        arriving.clear();
        arriving.push(event.neuron);

        for l in 1..=layers {
            let n = topo.size(l);
            let threshold = net.threshold(l);
            let weights = net.weights(l);
            let pots = &mut potentials[l - 1];
            emitted.clear();

            for &src in &arriving {
                let row = &weights[src * n..(src + 1) * n];
                for (j, (p, &w)) in pots.iter_mut().zip(row).enumerate() {
                    let s = *p + w;
                    if s >= threshold {
                        *p = s - threshold;
                        if l == layers {
                            counts[j] += 1;
                            trace.spikes_out[l - 1] += 1;
                            if let Some(class) = selector.decide(&counts) {
                                decision = Some(class);
                                break 'events;
                            }
                        } else {
                            emitted.push(j);
                        }
                    } else {
                        *p = s;
                    }
                }
            }

            if l == layers {
                break;
            }
            trace.spikes_out[l - 1] += emitted.len() as u64;
            trace.spikes_in[l] += emitted.len() as u64;
            if emitted.is_empty() {
                break;
            }
            std::mem::swap(&mut arriving, &mut emitted);
        }
    }

    let class = match decision {
        Some(c) => {
            trace.terminated_by = selector.termination();
            c
        }
        None => {
            trace.terminated_by = Termination::Window;
            argmax(&counts)
        }
    };
    trace.predicted_class = Some(class);

    Ok(InferenceRun { class, trace, potentials, output_counts: counts })
}

pub fn run_inference(
    net: &TrainedNetwork,
    trains: &SpikeTrainSet,
    selector: &SelectorConfig,
) -> Result<(usize, ActivityTrace)> {
    let run = simulate(net, trains, selector)?;
    Ok((run.class, run.trace))
}

/// Dataset-level spiking statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileResult {
    pub profile: SpikeProfile,
    pub accuracy: f64,
    pub samples: usize,
    pub predictions: Vec<usize>,
    /// Mean number of output-layer spikes per pattern.
    pub mean_output_spikes: f64,
}

/// Runs every sample of `data` under `scheme` and averages the traces.
///
/// Sample `i` is encoded with the RNG stream `(params.seed, i)`, so the
/// result does not depend on scheduling. Spike Select is applied to the
/// network here when `scheme` asks for it.
pub fn profile_dataset(
    net: &TrainedNetwork,
    data: &Dataset,
    scheme: Scheme,
    params: &CodingParams,
    selector: &SelectorConfig,
    spike_select: &SpikeSelectConfig,
) -> Result<ProfileResult> {
    params.validate()?;
    selector.validate()?;
    if data.is_empty() {
        return Err(Error::Invalid("cannot profile an empty dataset".into()));
    }
    let sim_net = codec::network_for(scheme, net, spike_select)?;

    let traces: Vec<ActivityTrace> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = codec::sample_rng(params.seed, i as u64);
            let trains = codec::encode(scheme, data.image(i), params, &mut rng);
            run_inference(&sim_net, &trains, selector).map(|(_, t)| t)
        })
        .collect::<Result<_>>()?;

    let layers = net.topology().num_layers();
    let mut sums = vec![0u64; layers];
    let mut out_spikes = 0u64;
    let mut correct = 0usize;
    let mut predictions = Vec::with_capacity(traces.len());
    for (i, t) in traces.iter().enumerate() {
        for (s, v) in sums.iter_mut().zip(&t.spikes_in) {
            *s += v;
        }
        out_spikes += t.spikes_out[layers - 1];
        let class = t.predicted_class.unwrap_or(0);
        if class == data.label(i) {
            correct += 1;
        }
        predictions.push(class);
    }
    let n = data.len() as f64;
    Ok(ProfileResult {
        profile: SpikeProfile::new(sums.iter().map(|&s| s as f64 / n).collect())?,
        accuracy: correct as f64 / n,
        samples: data.len(),
        predictions,
        mean_output_spikes: out_spikes as f64 / n,
    })
}
