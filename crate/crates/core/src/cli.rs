//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::{Scheme, SpikeSelectConfig};
use crate::dse::{self, Axis, ExplorationSpec};
use crate::engine::{profile_dataset, SelectorConfig};
use crate::error::{Error, Result};
use crate::hwmodel::{self, ArchConfig, ArchKind, CostReport, MemOrg, TechConstants};
use crate::mnist::MnistDir;
use crate::netmodel::{load_network, save_network, CodingParams, NetworkTopology, SpikeProfile};
use crate::trainer::{evaluate_formal, init_xavier, train, Dataset, Hyperparams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SNN_DSE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "snn-dse", version, about = "Spiking network transcoding, simulation and hardware exploration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a formal MLP on MNIST and write the network file.
    Train(TrainArgs),
    /// Formal (non-spiking) test accuracy of a network file.
    Eval(EvalArgs),
    /// Spiking inference: accuracy and per-layer spike table.
    Sim(SimArgs),
    /// Spiking inference, writing the spike profile as JSON.
    Profile(ProfileArgs),
    /// Hardware cost estimate for a topology and spike profile.
    HwEstimate(HwArgs),
    /// Full design-space exploration from a JSON spec.
    Dse(DseArgs),
    /// Re-rank and summarize an exploration result.
    Report(ReportArgs),
}

fn parse_topology(s: &str) -> std::result::Result<NetworkTopology, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_profile(s: &str) -> std::result::Result<SpikeProfile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_axis(s: &str) -> std::result::Result<Axis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Directory holding the four MNIST IDX files.
    #[arg(long)]
    pub mnist_dir: PathBuf,
    /// Use the first N test images (all when omitted).
    #[arg(long)]
    pub samples: Option<usize>,
}

impl DataArgs {
    fn test_set(&self) -> Result<Dataset> {
        let data = MnistDir::new(&self.mnist_dir).test()?;
        Ok(match self.samples {
            Some(n) => data.slice(0..n.min(data.len())),
            None => data,
        })
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub mnist_dir: PathBuf,
    #[arg(long, default_value = "784-100-10", value_parser = parse_topology)]
    pub topology: NetworkTopology,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.993)]
    pub lr_decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training images held out (from the end) for validation.
    #[arg(long, default_value_t = 10_000)]
    pub validation: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    Delta,
    Max,
}

#[derive(Args, Debug)]
pub struct SimCommon {
    #[arg(long)]
    pub net: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// jp, sb, fs or ss.
    #[arg(long, default_value = "jp", value_parser = parse_scheme)]
    pub coding: Scheme,
    #[arg(long, value_enum, default_value_t = SelectorArg::Delta)]
    pub selector: SelectorArg,
    #[arg(long, default_value_t = 4)]
    pub delta: u64,
    #[arg(long = "max", default_value_t = 4)]
    pub max_value: u64,
    /// Spike Select multiplier on the first hidden threshold.
    #[arg(long, default_value_t = 3.0)]
    pub ss_factor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub f_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub f_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub s_dev: f64,
    #[arg(long, default_value_t = 0.01)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
}

impl SimCommon {
    fn coding(&self) -> CodingParams {
        CodingParams {
            f_min: self.f_min,
            f_max: self.f_max,
            s_dev: self.s_dev,
            t_min: self.t_min,
            window: self.window,
            seed: self.seed,
        }
    }

    fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            kind: match self.selector {
                SelectorArg::Delta => crate::engine::SelectorKind::TerminateDelta,
                SelectorArg::Max => crate::engine::SelectorKind::MaxTerminate,
            },
            delta_value: self.delta,
            max_value: self.max_value,
        }
    }

    fn validate(&self) -> Result<()> {
        self.coding().validate()?;
        self.selector().validate()?;
        if self.ss_factor.is_nan() || self.ss_factor < 1.0 {
            return Err(Error::parse("ss-factor", "must be >= 1"));
        }
        if self.data.samples == Some(0) {
            return Err(Error::parse("samples", "must be >= 1"));
        }
        Ok(())
    }

    fn run(&self) -> Result<crate::engine::ProfileResult> {
        let net = load_network(&self.net)?;
        let data = self.data.test_set()?;
        profile_dataset(
            &net,
            &data,
            self.coding,
            &self.coding(),
            &self.selector(),
            &SpikeSelectConfig { threshold_factor: self.ss_factor },
        )
    }
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: SimCommon,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: SimCommon,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct HwArgs {
    #[arg(long, value_parser = parse_topology)]
    pub topology: NetworkTopology,
    /// Mean spikes entering each layer, e.g. "724,173,103.5,39".
    #[arg(long, value_parser = parse_profile, required_unless_present = "profile_file")]
    pub profile: Option<SpikeProfile>,
    /// JSON file written by `profile`.
    #[arg(long, conflicts_with = "profile")]
    pub profile_file: Option<PathBuf>,
    /// Restrict to these architectures (default: all).
    #[arg(long, value_delimiter = ',')]
    pub arch: Vec<String>,
    /// Restrict to these memory organizations (default: all).
    #[arg(long, value_delimiter = ',')]
    pub mem_org: Vec<String>,
    /// Technology constants (TOML).
    #[arg(long)]
    pub tech: Option<PathBuf>,
    /// Refit logic/register coefficients from a synthesis CSV.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Write the effective technology constants to this TOML file.
    #[arg(long)]
    pub write_tech: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DseArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Ranked CSV; the Pareto JSON and latency/logic extract are written
    /// next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Pareto axes.
    #[arg(long, value_delimiter = ',', default_value = "latency,logic", value_parser = parse_axis)]
    pub axes: Vec<Axis>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Pareto JSON written by `dse`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "latency,logic", value_parser = parse_axis)]
    pub axes: Vec<Axis>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Write the latency/logic extract of the front here.
    #[arg(long)]
    pub extract: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
    /// The reader of stdout went away; stop quietly.
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) | Err(Failure::Closed) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(err, "  caused by: {s}");
                source = s.source();
            }
            EXIT_RUNTIME
        }
    }
}

/// Applies `SNN_DSE_THREADS` to the global worker pool.
pub fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn io_err(e: std::io::Error) -> Failure {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        return Failure::Closed;
    }
    Failure::Runtime(Error::io("<stdout>", e))
}

fn dispatch(command: Command, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Sim(a) => cmd_sim(a, out),
        Command::Profile(a) => cmd_profile(a, out),
        Command::HwEstimate(a) => cmd_hw(a, out),
        Command::Dse(a) => cmd_dse(a, out),
        Command::Report(a) => cmd_report(a, out),
    }
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let hp = Hyperparams {
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        weight_decay: a.weight_decay,
        lr_decay: a.lr_decay,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..Hyperparams::default()
    };
    hp.validate().map_err(usage)?;
    let mnist = MnistDir::new(&a.mnist_dir);
    let full = mnist.train()?;
    let test = mnist.test()?;
    if full.dims() != a.topology.inputs() {
        return Err(usage(Error::Dimension { expected: full.dims(), actual: a.topology.inputs() }));
    }
    let (train_set, val_set) = full.split_tail(a.validation);
    let init = init_xavier(&a.topology, a.seed);
    let mut write_err = None;
    let outcome = train(&init, &train_set, &val_set, &hp, |log| {
        if let Err(e) = writeln!(
            out,
            "epoch {:>3}  lr {:.6}  loss {:.6}  val_acc {:.4}",
            log.epoch, log.learning_rate, log.mean_loss, log.validation_accuracy
        ) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(io_err(e));
    }
    let test_acc = evaluate_formal(&outcome.network, &test)?;
    writeln!(out, "test_acc {test_acc:.4}").map_err(io_err)?;
    save_network(&outcome.network, &a.out)?;
    Ok(())
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let net = load_network(&a.net)?;
    let data = a.data.test_set()?;
    let acc = evaluate_formal(&net, &data)?;
    writeln!(out, "samples {}\naccuracy {acc:.4}", data.len()).map_err(io_err)?;
    Ok(())
}

/// Spike table in the layout `Input, FC1.., Output, Total`.
fn spike_table(result: &crate::engine::ProfileResult) -> String {
    let mut s = format!("{:<8} {:>14}\n", "layer", "spikes/pattern");
    for (l, v) in result.profile.mean_spikes_in.iter().enumerate() {
        let name = if l == 0 { "Input".to_string() } else { format!("FC{l}") };
        s.push_str(&format!("{name:<8} {v:>14.3}\n"));
    }
    s.push_str(&format!("{:<8} {:>14.3}\n", "Output", result.mean_output_spikes));
    s.push_str(&format!("{:<8} {:>14.3}\n", "Total", result.profile.total()));
    s
}

fn cmd_sim(a: SimArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    a.common.validate().map_err(usage)?;
    let result = a.common.run()?;
    write!(
        out,
        "coding {}\nsamples {}\naccuracy {:.4}\n{}",
        a.common.coding,
        result.samples,
        result.accuracy,
        spike_table(&result)
    )
    .map_err(io_err)?;
    Ok(())
}

fn cmd_profile(a: ProfileArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    a.common.validate().map_err(usage)?;
    let result = a.common.run()?;
    let json = serde_json::json!({
        "coding": a.common.coding,
        "samples": result.samples,
        "accuracy": result.accuracy,
        "mean_spikes_in": result.profile.mean_spikes_in,
        "mean_output_spikes": result.mean_output_spikes,
    });
    let text = serde_json::to_string_pretty(&json).expect("json") + "\n";
    dse::write_atomic(&a.out, text.as_bytes())?;
    write!(out, "{}", spike_table(&result)).map_err(io_err)?;
    Ok(())
}

fn read_profile_file(path: &PathBuf) -> Result<SpikeProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse("profile", e.to_string()))?;
    let values: Vec<f64> = serde_json::from_value(v["mean_spikes_in"].clone())
        .map_err(|e| Error::parse("mean_spikes_in", e.to_string()))?;
    SpikeProfile::new(values)
}

fn parse_list<T>(raw: &[String], all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = Error> + Clone,
{
    if raw.is_empty() {
        return Ok(all.to_vec());
    }
    raw.iter().map(|s| s.parse()).collect()
}

fn cmd_hw(a: HwArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let archs = parse_list(&a.arch, &ArchKind::ALL).map_err(usage)?;
    let orgs = parse_list(&a.mem_org, &MemOrg::ALL).map_err(usage)?;
    let profile = match (&a.profile, &a.profile_file) {
        (Some(p), _) => p.clone(),
        (None, Some(path)) => read_profile_file(path)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if profile.layers() != a.topology.num_layers() {
        return Err(usage(Error::Dimension { expected: a.topology.num_layers(), actual: profile.layers() }));
    }
    let mut tech = match &a.tech {
        Some(p) => TechConstants::load(p)?,
        None => TechConstants::default(),
    };
    if let Some(path) = &a.fit {
        tech.logic = hwmodel::fit_logic_model(&hwmodel::load_synthesis_csv(path)?)?;
    }
    if let Some(path) = &a.write_tech {
        dse::write_atomic(path, tech.to_toml().as_bytes())?;
    }
    let mut reports = Vec::new();
    for &kind in &archs {
        for &org in &orgs {
            reports.push(hwmodel::evaluate(&ArchConfig::new(kind, org, tech.clone()), &a.topology, &profile)?);
        }
    }
    let text = match a.format {
        Format::Json => {
            let v: Vec<_> = reports.iter().map(CostReport::to_json).collect();
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CostReport::CSV_HEADER).expect("in-memory write");
            for r in &reports {
                w.write_record(r.csv_record()).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        Format::Table => {
            let mut s = format!(
                "{:<4} {:<17} {:>12} {:>12} {:>12} {:>12} {:>10} {:>12}\n",
                "arch", "mem_org", "cycles", "latency_s", "energy_j", "logic", "registers", "cost"
            );
            for r in &reports {
                s.push_str(&format!(
                    "{:<4} {:<17} {:>12.1} {:>12.4e} {:>12.4e} {:>12.1} {:>10.1} {:>12.4e}\n",
                    r.arch.tag(),
                    r.mem_org.tag(),
                    r.cycles,
                    r.latency_s,
                    r.energy_j,
                    r.logic_cells,
                    r.registers,
                    r.cost
                ));
            }
            s
        }
    };
    write!(out, "{text}").map_err(io_err)?;
    Ok(())
}

fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn print_ranked(points: &[dse::DesignPoint], top: usize, out: &mut dyn Write) -> std::io::Result<()> {
    for (i, p) in points.iter().take(top).enumerate() {
        writeln!(
            out,
            "{:>2}. {:<28} cost {:.4e}  latency {:.4e} s  energy {:.4e} J  logic {:.1}  acc {:.4}",
            i + 1,
            p.label(),
            p.report.cost,
            p.report.latency_s,
            p.report.energy_j,
            p.report.logic_cells,
            p.accuracy
        )?;
    }
    Ok(())
}

fn cmd_dse(a: DseArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let spec = ExplorationSpec::load(&a.spec).map_err(|e| match e {
        Error::Io { .. } => Failure::Runtime(e),
        other => usage(other),
    })?;
    let points = dse::explore(&spec)?;
    let pareto = serde_json::to_string_pretty(&dse::to_pareto_json(&points, &a.axes)).expect("json") + "\n";
    let front = dse::pareto_front(&points, &a.axes);
    dse::write_atomic(&sibling(&a.out, ".pareto.json"), pareto.as_bytes())?;
    dse::write_atomic(&sibling(&a.out, ".latency_logic.csv"), dse::latency_logic_extract(&front).as_bytes())?;
    dse::write_atomic(&a.out, dse::to_csv(&points).as_bytes())?;
    writeln!(out, "{} design points, {} on the front", points.len(), front.len()).map_err(io_err)?;
    print_ranked(&points, 3, out).map_err(io_err)?;
    Ok(())
}

fn cmd_report(a: ReportArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse("report", e.to_string()))?;
    let points: Vec<dse::DesignPoint> =
        serde_json::from_value(v["points"].clone()).map_err(|e| Error::parse("points", e.to_string()))?;
    let ranked = dse::rank_by_cost(&points);
    let front = dse::pareto_front(&points, &a.axes);
    writeln!(out, "ranked by cost ({} points)", ranked.len()).map_err(io_err)?;
    print_ranked(&ranked, a.top, out).map_err(io_err)?;
    writeln!(out, "pareto front ({} points)", front.len()).map_err(io_err)?;
    print_ranked(&front, front.len(), out).map_err(io_err)?;
    if let Some(path) = &a.extract {
        dse::write_atomic(path, dse::latency_logic_extract(&front).as_bytes())?;
    }
    Ok(())
}
