//! Design-space exploration over coding scheme × architecture × memory
//! organization.
//!
//! Each scheme is profiled once; the profile is then costed against every
//! hardware configuration, since the architecture does not change the
//! functional spike flow.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{Scheme, SpikeSelectConfig};
use crate::engine::{profile_dataset, SelectorConfig};
use crate::error::{Error, Result};
use crate::hwmodel::{evaluate, ArchConfig, ArchKind, CostReport, MemOrg, TechConstants};
use crate::mnist::MnistDir;
use crate::netmodel::{load_network, CodingParams, SpikeProfile, TrainedNetwork};
use crate::trainer::Dataset;

/// Ranking objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `latency × energy × logic`.
    #[default]
    Product,
    /// Weighted sum of latency, energy and logic, each divided by its
    /// maximum over the explored points.
    Weighted { latency: f64, energy: f64, logic: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[default]
    Test,
}

fn default_samples() -> usize {
    1000
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_archs() -> Vec<ArchKind> {
    ArchKind::ALL.to_vec()
}

fn default_mem_orgs() -> Vec<MemOrg> {
    MemOrg::ALL.to_vec()
}

/// Exploration request, read from JSON. Relative paths resolve against the
/// file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSpec {
    pub net: PathBuf,
    pub mnist_dir: PathBuf,
    #[serde(default)]
    pub split: Split,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_archs")]
    pub archs: Vec<ArchKind>,
    #[serde(default = "default_mem_orgs")]
    pub mem_orgs: Vec<MemOrg>,
    #[serde(default)]
    pub tech: Option<PathBuf>,
    #[serde(default)]
    pub coding: CodingParams,
    #[serde(default)]
    pub selector: SelectorConfig,
    #[serde(default)]
    pub spike_select: SpikeSelectConfig,
    #[serde(default)]
    pub objective: Objective,
}

impl ExplorationSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::parse("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Loads an exploration file and rebases its relative paths on its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        spec.net = base.join(&spec.net);
        spec.mnist_dir = base.join(&spec.mnist_dir);
        spec.tech = spec.tech.map(|t| base.join(t));
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::parse("samples", "must be >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::parse("schemes", "must not be empty"));
        }
        if self.archs.is_empty() {
            return Err(Error::parse("archs", "must not be empty"));
        }
        if self.mem_orgs.is_empty() {
            return Err(Error::parse("mem_orgs", "must not be empty"));
        }
        if let Objective::Weighted { latency, energy, logic } = self.objective {
            if [latency, energy, logic].iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::parse("objective", "weights must be finite and >= 0"));
            }
        }
        self.coding.validate()?;
        self.selector.validate()
    }

    pub fn options(&self, tech: TechConstants) -> ExploreOptions {
        ExploreOptions {
            schemes: self.schemes.clone(),
            archs: self.archs.clone(),
            mem_orgs: self.mem_orgs.clone(),
            tech,
            coding: self.coding,
            selector: self.selector,
            spike_select: self.spike_select,
            objective: self.objective,
        }
    }
}

/// In-memory exploration settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExploreOptions {
    pub schemes: Vec<Scheme>,
    pub archs: Vec<ArchKind>,
    pub mem_orgs: Vec<MemOrg>,
    pub tech: TechConstants,
    pub coding: CodingParams,
    pub selector: SelectorConfig,
    pub spike_select: SpikeSelectConfig,
    pub objective: Objective,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            schemes: default_schemes(),
            archs: default_archs(),
            mem_orgs: default_mem_orgs(),
            tech: TechConstants::default(),
            coding: CodingParams::default(),
            selector: SelectorConfig::default(),
            spike_select: SpikeSelectConfig::default(),
            objective: Objective::Product,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub scheme: Scheme,
    pub accuracy: f64,
    pub profile: SpikeProfile,
    pub report: CostReport,
    /// Value minimized by the ranking; equals `report.cost` for the product
    /// objective.
    pub objective: f64,
}

impl DesignPoint {
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.scheme, self.report.arch, self.report.mem_org)
    }
}

/// Loads the network and images named by the exploration file and explores.
pub fn explore(spec: &ExplorationSpec) -> Result<Vec<DesignPoint>> {
    spec.validate()?;
    let net = load_network(&spec.net)?;
    let mnist = MnistDir::new(&spec.mnist_dir);
    let data = match spec.split {
        Split::Train => mnist.train()?,
        Split::Test => mnist.test()?,
    };
    let data = data.slice(0..spec.samples.min(data.len()));
    let tech = match &spec.tech {
        Some(p) => TechConstants::load(p)?,
        None => TechConstants::default(),
    };
    explore_with(&net, &data, &spec.options(tech))
}

/// Profiles each scheme once on `data`, then costs every architecture and
/// memory organization. The result is sorted by objective.
pub fn explore_with(net: &TrainedNetwork, data: &Dataset, opts: &ExploreOptions) -> Result<Vec<DesignPoint>> {
    let mut profiles = Vec::with_capacity(opts.schemes.len());
    for &scheme in &opts.schemes {
        let result = profile_dataset(net, data, scheme, &opts.coding, &opts.selector, &opts.spike_select)
            .map_err(|e| Error::DesignPoint { point: scheme.to_string(), source: Box::new(e) })?;
        profiles.push((scheme, result.accuracy, result.profile));
    }
    explore_profiles(net.topology(), &profiles, opts)
}

/// Costs precomputed `(scheme, accuracy, profile)` triples.
pub fn explore_profiles(
    topology: &crate::netmodel::NetworkTopology,
    profiles: &[(Scheme, f64, SpikeProfile)],
    opts: &ExploreOptions,
) -> Result<Vec<DesignPoint>> {
    let mut jobs = Vec::new();
    for (scheme, accuracy, profile) in profiles {
        for &arch in &opts.archs {
            for &org in &opts.mem_orgs {
                jobs.push((*scheme, *accuracy, profile, arch, org));
            }
        }
    }
    let mut points: Vec<DesignPoint> = jobs
        .par_iter()
        .map(|&(scheme, accuracy, profile, arch, org)| {
            let config = ArchConfig::new(arch, org, opts.tech.clone());
            evaluate(&config, topology, profile)
                .map(|report| DesignPoint {
                    scheme,
                    accuracy,
                    profile: profile.clone(),
                    objective: report.cost,
                    report,
                })
                .map_err(|e| Error::DesignPoint { point: format!("{scheme}/{arch}/{org}"), source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    apply_objective(&mut points, opts.objective);
    sort_points(&mut points, |p| p.objective);
    Ok(points)
}

fn apply_objective(points: &mut [DesignPoint], objective: Objective) {
    match objective {
        Objective::Product => {
            for p in points.iter_mut() {
                p.objective = p.report.cost;
            }
        }
        Objective::Weighted { latency, energy, logic } => {
            let max = |f: fn(&CostReport) -> f64| points.iter().map(|p| f(&p.report)).fold(0.0f64, f64::max);
            let norm = |v: f64, m: f64| if m > 0.0 { v / m } else { 0.0 };
            let (ml, me, mg) = (max(|r| r.latency_s), max(|r| r.energy_j), max(|r| r.logic_cells));
            for p in points.iter_mut() {
                let r = &p.report;
                p.objective =
                    latency * norm(r.latency_s, ml) + energy * norm(r.energy_j, me) + logic * norm(r.logic_cells, mg);
            }
        }
    }
}

fn sort_points(points: &mut [DesignPoint], key: impl Fn(&DesignPoint) -> f64) {
    points.sort_by(|a, b| {
        key(a)
            .total_cmp(&key(b))
            .then(a.report.latency_s.total_cmp(&b.report.latency_s))
            .then(a.report.logic_cells.total_cmp(&b.report.logic_cells))
    });
}

/// Ascending product cost; ties go to lower latency, then lower logic.
/// Stable for fully identical points.
pub fn rank_by_cost(points: &[DesignPoint]) -> Vec<DesignPoint> {
    let mut ranked = points.to_vec();
    sort_points(&mut ranked, |p| p.report.cost);
    ranked
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Latency,
    Energy,
    Logic,
    AccuracyLoss,
}

impl Axis {
    pub fn value(self, p: &DesignPoint) -> f64 {
        match self {
            Axis::Latency => p.report.latency_s,
            Axis::Energy => p.report.energy_j,
            Axis::Logic => p.report.logic_cells,
            Axis::AccuracyLoss => 1.0 - p.accuracy,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "latency" => Ok(Axis::Latency),
            "energy" => Ok(Axis::Energy),
            "logic" => Ok(Axis::Logic),
            "accuracy_loss" | "accuracy" => Ok(Axis::AccuracyLoss),
            other => Err(Error::parse("axis", format!("unknown axis `{other}`"))),
        }
    }
}

/// `a` is no worse than `b` on every axis and strictly better on one.
pub fn dominates(a: &DesignPoint, b: &DesignPoint, axes: &[Axis]) -> bool {
    let mut strictly = false;
    for &axis in axes {
        let (va, vb) = (axis.value(a), axis.value(b));
        if va > vb {
            return false;
        }
        strictly |= va < vb;
    }
    strictly
}

/// Non-dominated subset (all axes minimized), ordered by cost.
pub fn pareto_front(points: &[DesignPoint], axes: &[Axis]) -> Vec<DesignPoint> {
    let front: Vec<DesignPoint> =
        points.iter().filter(|p| !points.iter().any(|q| dominates(q, p, axes))).cloned().collect();
    rank_by_cost(&front)
}

/// Writes `path` through a sibling temporary file so a failure never leaves
/// a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub const CSV_COLUMNS: [&str; 11] = [
    "scheme",
    "arch",
    "mem_org",
    "accuracy",
    "cycles",
    "latency_s",
    "energy_j",
    "memory_bits",
    "logic_cells",
    "registers",
    "cost",
];

pub fn to_csv(points: &[DesignPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for p in points {
        let r = &p.report;
        w.write_record([
            p.scheme.to_string(),
            r.arch.to_string(),
            r.mem_org.to_string(),
            p.accuracy.to_string(),
            r.cycles.to_string(),
            r.latency_s.to_string(),
            r.energy_j.to_string(),
            r.memory_bits.to_string(),
            r.logic_cells.to_string(),
            r.registers.to_string(),
            r.cost.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// All points with a `pareto` flag for membership in the front over `axes`.
pub fn to_pareto_json(points: &[DesignPoint], axes: &[Axis]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = points
        .iter()
        .map(|p| {
            let mut v = serde_json::to_value(p).expect("design point serializes");
            let on_front = !points.iter().any(|q| dominates(q, p, axes));
            v["pareto"] = serde_json::Value::Bool(on_front);
            v
        })
        .collect();
    serde_json::json!({ "axes": axes, "points": rows })
}

/// Two-column `latency_s,logic_cells` extract for a trade-off scatter.
pub fn latency_logic_extract(points: &[DesignPoint]) -> String {
    let mut out = String::from("latency_s,logic_cells\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.report.latency_s, p.report.logic_cells));
    }
    out
}
