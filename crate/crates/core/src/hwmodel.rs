//! Analytic hardware cost models for the fully-parallel (FPA),
//! time-multiplexed (TMA) and hybrid (HA) architectures.
//!
//! Cycle counts are closed forms over a per-layer spike profile
//! (`s_l` = mean spikes entering layer `l`, `N_l` = neurons in layer `l`):
//!
//! | arch | cycles |
//! |------|--------|
//! | FPA  | `Σ s_l` |
//! | TMA  | `Σ s_l·N_l` |
//! | HA   | `s_1 + Σ_{l≥2} s_l·N_l` |
//!
//! For the 784-300-300-300-10 profile `(724, 173, 103.5, 39)` these give
//! 1039.5, 300 540 and 84 064 cycles:
//!
//! ```text
//! TMA = 724·300 + 173·300 + 103.5·300 + 39·10 = 300 540
//! HA  = 724     + 173·300 + 103.5·300 + 39·10 =  84 064
//! ```
//!
//! Memory contention only stretches `latency_s`; `cycles` is never scaled.
//! Logic and register estimates are linear in five structural features and
//! are fitted to synthesis results (see [`fit_logic_model`]).

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{memory_bits, NetworkTopology, SpikeProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Fpa,
    Tma,
    Ha,
}

impl ArchKind {
    pub const ALL: [ArchKind; 3] = [ArchKind::Fpa, ArchKind::Tma, ArchKind::Ha];

    pub fn tag(self) -> &'static str {
        match self {
            ArchKind::Fpa => "fpa",
            ArchKind::Tma => "tma",
            ArchKind::Ha => "ha",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fpa" => Ok(ArchKind::Fpa),
            "tma" => Ok(ArchKind::Tma),
            "ha" => Ok(ArchKind::Ha),
            other => Err(Error::parse("arch", format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemOrg {
    Centralized,
    LayerShared,
    FullyDistributed,
}

impl MemOrg {
    pub const ALL: [MemOrg; 3] = [MemOrg::Centralized, MemOrg::LayerShared, MemOrg::FullyDistributed];

    pub fn tag(self) -> &'static str {
        match self {
            MemOrg::Centralized => "centralized",
            MemOrg::LayerShared => "layer_shared",
            MemOrg::FullyDistributed => "fully_distributed",
        }
    }
}

impl fmt::Display for MemOrg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MemOrg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "centralized" | "c" => Ok(MemOrg::Centralized),
            "layer_shared" | "ls" => Ok(MemOrg::LayerShared),
            "fully_distributed" | "fd" => Ok(MemOrg::FullyDistributed),
            other => Err(Error::parse("mem_org", format!("unknown memory organization `{other}`"))),
        }
    }
}

/// Linear resource model over the structural features of [`features`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResourceCoefficients {
    pub base: f64,
    /// Per hardware (parallel) neuron.
    pub per_neuron: f64,
    /// Per synapse feeding a parallel neuron.
    pub per_synapse: f64,
    /// Per time-multiplexed processing unit.
    pub per_npu: f64,
    /// Per logical neuron emulated by a multiplexed unit.
    pub per_mux_neuron: f64,
}

impl ResourceCoefficients {
    fn as_array(&self) -> [f64; FEATURES] {
        [self.base, self.per_neuron, self.per_synapse, self.per_npu, self.per_mux_neuron]
    }

    fn from_array(a: [f64; FEATURES]) -> Self {
        Self { base: a[0], per_neuron: a[1], per_synapse: a[2], per_npu: a[3], per_mux_neuron: a[4] }
    }

    pub fn estimate(&self, kind: ArchKind, topology: &NetworkTopology) -> f64 {
        self.as_array().iter().zip(features(kind, topology)).map(|(c, f)| c * f).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchResources {
    pub logic: ResourceCoefficients,
    pub registers: ResourceCoefficients,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogicModel {
    pub fpa: ArchResources,
    pub tma: ArchResources,
    pub ha: ArchResources,
}

impl Default for LogicModel {
    fn default() -> Self {
        static FITTED: OnceLock<LogicModel> = OnceLock::new();
        *FITTED.get_or_init(|| {
            let rows = parse_synthesis_csv(REFERENCE_SYNTHESIS.as_bytes()).expect("embedded synthesis table parses");
            fit_logic_model(&rows).expect("embedded synthesis table fits")
        })
    }
}

impl LogicModel {
    pub fn get(&self, kind: ArchKind) -> &ArchResources {
        match kind {
            ArchKind::Fpa => &self.fpa,
            ArchKind::Tma => &self.tma,
            ArchKind::Ha => &self.ha,
        }
    }

    fn get_mut(&mut self, kind: ArchKind) -> &mut ArchResources {
        match kind {
            ArchKind::Fpa => &mut self.fpa,
            ArchKind::Tma => &mut self.tma,
            ArchKind::Ha => &mut self.ha,
        }
    }
}

/// Energy per processed spike for each architecture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpikeEnergy {
    pub fpa: f64,
    pub tma: f64,
    pub ha: f64,
}

impl Default for SpikeEnergy {
    fn default() -> Self {
        Self { fpa: 10e-12, tma: 10e-12, ha: 10e-12 }
    }
}

impl SpikeEnergy {
    pub fn get(&self, kind: ArchKind) -> f64 {
        match kind {
            ArchKind::Fpa => self.fpa,
            ArchKind::Tma => self.tma,
            ArchKind::Ha => self.ha,
        }
    }
}

/// Technology and calibration constants. All values are SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechConstants {
    /// Seconds per cycle; falls back to `mem_access_latency` when unset.
    pub clock_period: Option<f64>,
    pub mem_access_latency: f64,
    /// Leakage per memory unit, in watts.
    pub mem_static_power: f64,
    /// Energy per memory access (weight fetch or potential read/write), in
    /// joules.
    pub mem_dynamic_energy: f64,
    pub spike_energy: SpikeEnergy,
    pub bits_per_weight: u32,
    /// Extra serialization per additional layer queued on a centralized memory.
    pub conflict_rate: f64,
    pub logic: LogicModel,
}

impl Default for TechConstants {
    fn default() -> Self {
        Self {
            clock_period: None,
            mem_access_latency: 2e-9,
            mem_static_power: 1e-6,
            mem_dynamic_energy: 5e-12,
            spike_energy: SpikeEnergy::default(),
            bits_per_weight: 8,
            conflict_rate: 0.01,
            logic: LogicModel::default(),
        }
    }
}

impl TechConstants {
    pub fn clock_period(&self) -> f64 {
        self.clock_period.unwrap_or(self.mem_access_latency)
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("mem_access_latency", self.mem_access_latency),
            ("clock_period", self.clock_period()),
            ("mem_static_power", self.mem_static_power),
            ("mem_dynamic_energy", self.mem_dynamic_energy),
            ("spike_energy.fpa", self.spike_energy.fpa),
            ("spike_energy.tma", self.spike_energy.tma),
            ("spike_energy.ha", self.spike_energy.ha),
            ("conflict_rate", self.conflict_rate),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::parse(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.clock_period() <= 0.0 {
            return Err(Error::parse("clock_period", "must be > 0"));
        }
        if self.bits_per_weight == 0 {
            return Err(Error::parse("bits_per_weight", "must be >= 1"));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let tech: Self = toml::from_str(text).map_err(|e| Error::parse("tech", e.to_string()))?;
        tech.validate()?;
        Ok(tech)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("tech constants serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// One point of the hardware design space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub kind: ArchKind,
    pub mem_org: MemOrg,
    pub tech: TechConstants,
}

impl ArchConfig {
    pub fn new(kind: ArchKind, mem_org: MemOrg, tech: TechConstants) -> Self {
        Self { kind, mem_org, tech }
    }
}

fn check_profile(profile: &SpikeProfile, topology: &NetworkTopology) -> Result<()> {
    if profile.layers() != topology.num_layers() {
        return Err(Error::Dimension { expected: topology.num_layers(), actual: profile.layers() });
    }
    Ok(())
}

/// Mean cycles to process one pattern.
pub fn latency_cycles(kind: ArchKind, profile: &SpikeProfile, topology: &NetworkTopology) -> Result<f64> {
    check_profile(profile, topology)?;
    let s = &profile.mean_spikes_in;
    let cycles = match kind {
        ArchKind::Fpa => s.iter().sum(),
        ArchKind::Tma => s.iter().enumerate().map(|(i, &x)| x * topology.size(i + 1) as f64).sum(),
        ArchKind::Ha => s[0] + s.iter().enumerate().skip(1).map(|(i, &x)| x * topology.size(i + 1) as f64).sum::<f64>(),
    };
    Ok(cycles)
}

/// Requesters serialized on one memory port, as a latency multiplier.
///
/// * fully distributed: 1.
/// * layer shared: the parallel neurons of a layer share a port, so FPA
///   pays `max_l N_l` and HA pays `N_1`; multiplexed units already own
///   their port (1).
/// * centralized: the layer-shared factor, stretched by
///   `1 + conflict_rate·(L − 1)` for the other layers queued on the port.
pub fn contention_factor(kind: ArchKind, mem_org: MemOrg, topology: &NetworkTopology, conflict_rate: f64) -> f64 {
    let layer_shared = match kind {
        ArchKind::Fpa => topology.layer_sizes()[1..].iter().copied().max().unwrap_or(1) as f64,
        ArchKind::Tma => 1.0,
        ArchKind::Ha => topology.size(1) as f64,
    };
    match mem_org {
        MemOrg::FullyDistributed => 1.0,
        MemOrg::LayerShared => layer_shared,
        MemOrg::Centralized => layer_shared * (1.0 + conflict_rate * (topology.num_layers() - 1) as f64),
    }
}

/// Number of physical processing units.
pub fn processing_units(kind: ArchKind, topology: &NetworkTopology) -> usize {
    let layers = topology.num_layers();
    match kind {
        ArchKind::Fpa => topology.computing_neurons(),
        ArchKind::Tma => layers,
        ArchKind::Ha => topology.size(1) + layers - 1,
    }
}

/// Number of weight memories for an organization.
pub fn memory_units(kind: ArchKind, mem_org: MemOrg, topology: &NetworkTopology) -> usize {
    match mem_org {
        MemOrg::Centralized => 1,
        MemOrg::LayerShared => topology.num_layers(),
        MemOrg::FullyDistributed => processing_units(kind, topology),
    }
}

/// Weight fetches per pattern: one per incoming spike per destination neuron.
pub fn weight_fetches(profile: &SpikeProfile, topology: &NetworkTopology) -> f64 {
    profile.mean_spikes_in.iter().enumerate().map(|(i, &x)| x * topology.size(i + 1) as f64).sum()
}

/// Potential reads and writes per pattern. Multiplexed units keep their
/// logical neurons' potentials in memory and touch each one twice per
/// incoming spike; parallel neurons hold theirs in registers.
pub fn state_accesses(kind: ArchKind, profile: &SpikeProfile, topology: &NetworkTopology) -> f64 {
    let skip = match kind {
        ArchKind::Fpa => return 0.0,
        ArchKind::Tma => 0,
        ArchKind::Ha => 1,
    };
    2.0 * profile
        .mean_spikes_in
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(i, &x)| x * topology.size(i + 1) as f64)
        .sum::<f64>()
}

/// Total memory accesses per pattern for `kind`.
pub fn memory_accesses(kind: ArchKind, profile: &SpikeProfile, topology: &NetworkTopology) -> f64 {
    weight_fetches(profile, topology) + state_accesses(kind, profile, topology)
}

pub const FEATURES: usize = 5;

/// Structural features `[1, parallel neurons, parallel synapses, NPUs,
/// multiplexed neurons]` of `kind` on `topology`.
pub fn features(kind: ArchKind, topology: &NetworkTopology) -> [f64; FEATURES] {
    let sizes = topology.layer_sizes();
    let layers = topology.num_layers() as f64;
    match kind {
        ArchKind::Fpa => [1.0, topology.computing_neurons() as f64, topology.synapses() as f64, 0.0, 0.0],
        ArchKind::Tma => [1.0, 0.0, 0.0, layers, topology.computing_neurons() as f64],
        ArchKind::Ha => {
            let mux: usize = sizes[2..].iter().sum();
            [1.0, sizes[1] as f64, (sizes[0] * sizes[1]) as f64, layers - 1.0, mux as f64]
        }
    }
}

/// `(logic_cells, registers)` for `kind` on `topology`.
pub fn logic_estimate(kind: ArchKind, topology: &NetworkTopology, tech: &TechConstants) -> (f64, f64) {
    let res = tech.logic.get(kind);
    (res.logic.estimate(kind, topology), res.registers.estimate(kind, topology))
}

/// Joules per pattern.
///
/// `E = α_kind·N_spikes + P_unit·units·latency_s + E_access·accesses`, where
/// accesses are weight fetches plus potential reads/writes.
pub fn energy_estimate(
    profile: &SpikeProfile,
    kind: ArchKind,
    mem_org: MemOrg,
    topology: &NetworkTopology,
    tech: &TechConstants,
) -> Result<f64> {
    let latency_s = latency_seconds(kind, mem_org, profile, topology, tech)?;
    let units = memory_units(kind, mem_org, topology) as f64;
    let spike = tech.spike_energy.get(kind) * profile.total();
    let leakage = tech.mem_static_power * units * latency_s;
    let dynamic = tech.mem_dynamic_energy * memory_accesses(kind, profile, topology);
    Ok(spike + leakage + dynamic)
}

fn latency_seconds(
    kind: ArchKind,
    mem_org: MemOrg,
    profile: &SpikeProfile,
    topology: &NetworkTopology,
    tech: &TechConstants,
) -> Result<f64> {
    let cycles = latency_cycles(kind, profile, topology)?;
    Ok(cycles * tech.clock_period() * contention_factor(kind, mem_org, topology, tech.conflict_rate))
}

/// One evaluated design point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub arch: ArchKind,
    pub mem_org: MemOrg,
    pub cycles: f64,
    pub contention: f64,
    pub latency_s: f64,
    pub energy_j: f64,
    pub memory_bits: u64,
    pub logic_cells: f64,
    pub registers: f64,
    /// `latency_s × energy_j × logic_cells`.
    pub cost: f64,
}

impl CostReport {
    pub const CSV_HEADER: [&'static str; 10] = [
        "arch",
        "mem_org",
        "cycles",
        "contention",
        "latency_s",
        "energy_j",
        "memory_bits",
        "logic_cells",
        "registers",
        "cost",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.arch.to_string(),
            self.mem_org.to_string(),
            self.cycles.to_string(),
            self.contention.to_string(),
            self.latency_s.to_string(),
            self.energy_j.to_string(),
            self.memory_bits.to_string(),
            self.logic_cells.to_string(),
            self.registers.to_string(),
            self.cost.to_string(),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("cost report serializes")
    }

    /// Non-negative, finite fields and the latency identity.
    pub fn is_consistent(&self, clock_period: f64) -> bool {
        let fields =
            [self.cycles, self.contention, self.latency_s, self.energy_j, self.logic_cells, self.registers, self.cost];
        let expected = self.cycles * clock_period * self.contention;
        fields.iter().all(|v| v.is_finite() && *v >= 0.0)
            && self.contention >= 1.0
            && (self.latency_s - expected).abs() <= 1e-12 * expected.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn evaluate(config: &ArchConfig, topology: &NetworkTopology, profile: &SpikeProfile) -> Result<CostReport> {
    config.tech.validate()?;
    let tech = &config.tech;
    let cycles = latency_cycles(config.kind, profile, topology)?;
    let contention = contention_factor(config.kind, config.mem_org, topology, tech.conflict_rate);
    let latency_s = cycles * tech.clock_period() * contention;
    let energy_j = energy_estimate(profile, config.kind, config.mem_org, topology, tech)?;
    let (logic_cells, registers) = logic_estimate(config.kind, topology, tech);
    Ok(CostReport {
        arch: config.kind,
        mem_org: config.mem_org,
        cycles,
        contention,
        latency_s,
        energy_j,
        memory_bits: memory_bits(topology, tech.bits_per_weight),
        logic_cells,
        registers,
        cost: latency_s * energy_j * logic_cells,
    })
}

/// Embedded synthesis results used for the default calibration.
pub const REFERENCE_SYNTHESIS: &str = include_str!("../data/synthesis_reference.csv");

/// One synthesis measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRow {
    pub arch: ArchKind,
    pub topology: NetworkTopology,
    pub logic_cells: f64,
    pub registers: f64,
}

/// Reads `arch,topology,logic_cells,registers` rows.
pub fn parse_synthesis_csv(reader: impl std::io::Read) -> Result<Vec<SynthesisRow>> {
    #[derive(Deserialize)]
    struct Raw {
        arch: String,
        topology: String,
        logic_cells: f64,
        registers: f64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.deserialize::<Raw>().enumerate() {
        let raw = record.map_err(|e| Error::parse("synthesis", format!("row {}: {e}", line + 1)))?;
        rows.push(SynthesisRow {
            arch: raw.arch.parse()?,
            topology: raw.topology.parse()?,
            logic_cells: raw.logic_cells,
            registers: raw.registers,
        });
    }
    Ok(rows)
}

pub fn load_synthesis_csv(path: impl AsRef<Path>) -> Result<Vec<SynthesisRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_synthesis_csv(file)
}

/// Fits one resource model per architecture present in `rows`.
///
/// Minimizes the squared *relative* error `Σ ((pred − y)/y)²` subject to
/// non-negative coefficients, over the features that vary for that
/// architecture. Architectures without rows keep zero coefficients.
pub fn fit_logic_model(rows: &[SynthesisRow]) -> Result<LogicModel> {
    let mut model =
        LogicModel { fpa: ArchResources::default(), tma: ArchResources::default(), ha: ArchResources::default() };
    for kind in ArchKind::ALL {
        let subset: Vec<&SynthesisRow> = rows.iter().filter(|r| r.arch == kind).collect();
        if subset.is_empty() {
            continue;
        }
        let feats: Vec<[f64; FEATURES]> = subset.iter().map(|r| features(kind, &r.topology)).collect();
        let logic: Vec<f64> = subset.iter().map(|r| r.logic_cells).collect();
        let regs: Vec<f64> = subset.iter().map(|r| r.registers).collect();
        let res = model.get_mut(kind);
        res.logic = ResourceCoefficients::from_array(nnls_relative(&feats, &logic)?);
        res.registers = ResourceCoefficients::from_array(nnls_relative(&feats, &regs)?);
    }
    Ok(model)
}

/// Exact non-negative relative least squares by support enumeration.
fn nnls_relative(feats: &[[f64; FEATURES]], targets: &[f64]) -> Result<[f64; FEATURES]> {
    if targets.iter().any(|&y| !(y.is_finite() && y > 0.0)) {
        return Err(Error::Invalid("synthesis targets must be positive".into()));
    }
    let active: Vec<usize> = (0..FEATURES).filter(|&k| feats.iter().any(|f| f[k] != 0.0)).collect();
    let n = targets.len();
    let b = DVector::from_element(n, 1.0);
    let mut best: Option<(f64, [f64; FEATURES])> = None;

    for mask in 1u32..(1 << active.len()) {
        let cols: Vec<usize> =
            active.iter().enumerate().filter(|(bit, _)| mask & (1 << bit) != 0).map(|(_, &k)| k).collect();
        let a = DMatrix::from_fn(n, cols.len(), |r, c| feats[r][cols[c]] / targets[r]);
        let Ok(x) = a.clone().svd(true, true).solve(&b, 1e-12) else {
            continue;
        };
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let resid = (&a * &x - &b).norm_squared();
        if best.as_ref().map_or(true, |(r, _)| resid < *r) {
            let mut coef = [0.0; FEATURES];
            for (c, &k) in cols.iter().enumerate() {
                coef[k] = x[c];
            }
            best = Some((resid, coef));
        }
    }
    best.map(|(_, c)| c).ok_or_else(|| Error::Invalid("no non-negative fit exists".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(s: &str) -> NetworkTopology {
        s.parse().unwrap()
    }

    fn profile(s: &str) -> SpikeProfile {
        s.parse().unwrap()
    }

    #[test]
    fn jittered_periodic_latency_cells() {
        let t = topo("784-300-300-300-10");
        let p = profile("724,173,103.5,39");
        assert_eq!(latency_cycles(ArchKind::Fpa, &p, &t).unwrap(), 1039.5);
        assert_eq!(latency_cycles(ArchKind::Tma, &p, &t).unwrap(), 300_540.0);
        assert_eq!(latency_cycles(ArchKind::Ha, &p, &t).unwrap(), 84_064.0);
    }

    #[test]
    fn zero_profile_costs_nothing() {
        let t = topo("784-100-10");
        let p = profile("0,0");
        for k in ArchKind::ALL {
            assert_eq!(latency_cycles(k, &p, &t).unwrap(), 0.0);
        }
        let tech = TechConstants::default();
        assert_eq!(energy_estimate(&p, ArchKind::Fpa, MemOrg::Centralized, &t, &tech).unwrap(), 0.0);
    }

    #[test]
    fn profile_length_must_match() {
        assert!(latency_cycles(ArchKind::Fpa, &profile("1,2,3"), &topo("4-3-2")).is_err());
    }

    #[test]
    fn contention_examples() {
        let t = topo("784-10-10");
        let c = |k, m| contention_factor(k, m, &t, 0.01);
        assert_eq!(c(ArchKind::Fpa, MemOrg::FullyDistributed), 1.0);
        assert!(c(ArchKind::Fpa, MemOrg::Centralized) > c(ArchKind::Fpa, MemOrg::LayerShared));
        assert!(c(ArchKind::Fpa, MemOrg::LayerShared) > 1.0);
        let ratio = c(ArchKind::Tma, MemOrg::Centralized) / c(ArchKind::Tma, MemOrg::LayerShared);
        assert!((ratio - 1.0).abs() <= 0.05);
    }

    #[test]
    fn state_accesses_follow_multiplexing() {
        let t = topo("4-3-2");
        let p = profile("5,2");
        assert_eq!(state_accesses(ArchKind::Fpa, &p, &t), 0.0);
        assert_eq!(state_accesses(ArchKind::Tma, &p, &t), 2.0 * (15.0 + 4.0));
        assert_eq!(state_accesses(ArchKind::Ha, &p, &t), 2.0 * 4.0);
        assert_eq!(weight_fetches(&p, &t), 19.0);
    }

    #[test]
    fn memory_units_per_org() {
        let t = topo("784-300-300-10");
        assert_eq!(memory_units(ArchKind::Fpa, MemOrg::Centralized, &t), 1);
        assert_eq!(memory_units(ArchKind::Fpa, MemOrg::LayerShared, &t), 3);
        assert_eq!(memory_units(ArchKind::Fpa, MemOrg::FullyDistributed, &t), 610);
        assert_eq!(memory_units(ArchKind::Tma, MemOrg::FullyDistributed, &t), 3);
        assert_eq!(memory_units(ArchKind::Ha, MemOrg::FullyDistributed, &t), 302);
    }

    #[test]
    fn spike_term_is_linear_in_alpha() {
        let t = topo("784-100-10");
        let p = profile("700,90");
        let zero = TechConstants { mem_static_power: 0.0, mem_dynamic_energy: 0.0, ..TechConstants::default() };
        let mut double = zero.clone();
        double.spike_energy.ha *= 2.0;
        let e1 = energy_estimate(&p, ArchKind::Ha, MemOrg::LayerShared, &t, &zero).unwrap();
        let e2 = energy_estimate(&p, ArchKind::Ha, MemOrg::LayerShared, &t, &double).unwrap();
        assert_eq!(e2, 2.0 * e1);
    }

    #[test]
    fn tech_toml_round_trip() {
        let tech = TechConstants::default();
        let back = TechConstants::from_toml(&tech.to_toml()).unwrap();
        assert_eq!(back, tech);
        let partial = TechConstants::from_toml("mem_access_latency = 4e-9\n").unwrap();
        assert_eq!(partial.clock_period(), 4e-9);
        assert_eq!(partial.logic, LogicModel::default());
    }

    #[test]
    fn tech_toml_errors_name_the_field() {
        let err = TechConstants::from_toml("mem_dynamic_energy = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("mem_dynamic_energy"));
        assert!(TechConstants::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn nnls_recovers_exact_linear_data() {
        let rows: Vec<SynthesisRow> = ["10-5-2", "10-8-2", "10-20-2", "10-20-20-2"]
            .iter()
            .map(|s| {
                let t = topo(s);
                let f = features(ArchKind::Fpa, &t);
                SynthesisRow {
                    arch: ArchKind::Fpa,
                    topology: t,
                    logic_cells: 100.0 + 3.0 * f[1] + 0.5 * f[2],
                    registers: 7.0 * f[1],
                }
            })
            .collect();
        let m = fit_logic_model(&rows).unwrap();
        assert!((m.fpa.logic.base - 100.0).abs() < 1e-6);
        assert!((m.fpa.logic.per_neuron - 3.0).abs() < 1e-8);
        assert!((m.fpa.logic.per_synapse - 0.5).abs() < 1e-9);
        assert!(m.fpa.registers.base.abs() < 1e-6);
        assert!((m.fpa.registers.per_neuron - 7.0).abs() < 1e-9);
    }

    #[test]
    fn default_fit_orders_architectures() {
        let tech = TechConstants::default();
        let t = topo("784-300-300-300-10");
        let (f, _) = logic_estimate(ArchKind::Fpa, &t, &tech);
        let (tm, _) = logic_estimate(ArchKind::Tma, &t, &tech);
        let (h, _) = logic_estimate(ArchKind::Ha, &t, &tech);
        assert!(f > h && h > tm, "{f} {h} {tm}");
    }
}
