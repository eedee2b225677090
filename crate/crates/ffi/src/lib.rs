//! C ABI over the `snn_dse` library.
//!
//! Every entry point returns an [`SnnStatus`]; on failure the message is kept
//! per thread and can be copied out with [`snn_last_error_message`].
//! Handles are opaque and must be released with their matching `_free`.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access implied by their
//! type and length argument. Strings must be NUL-terminated. Handles must come
//! from this library and must not be used after they are freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use snn_dse::engine::{self, SelectorConfig};
use snn_dse::hwmodel::{self, ArchConfig, ArchKind, MemOrg, TechConstants};
use snn_dse::netmodel::{self, NetworkTopology, SpikeEvent, SpikeProfile, SpikeTrainSet, TrainedNetwork};
use snn_dse::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    DimensionMismatch = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnnArch {
    Fpa = 0,
    Tma = 1,
    Ha = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnnMemOrg {
    Centralized = 0,
    LayerShared = 1,
    FullyDistributed = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnnSelectorKind {
    TerminateDelta = 0,
    MaxTerminate = 1,
}

/// Output-class selector; `value` is the delta or the max count.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SnnSelector {
    pub kind: SnnSelectorKind,
    pub value: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SnnCostReport {
    pub cycles: f64,
    pub contention: f64,
    pub latency_s: f64,
    pub energy_j: f64,
    pub memory_bits: u64,
    pub logic_cells: f64,
    pub registers: f64,
    pub cost: f64,
}

/// Opaque trained network.
pub struct SnnNetwork {
    net: TrainedNetwork,
}

/// Opaque technology constants.
pub struct SnnTech {
    tech: TechConstants,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

struct Failure(SnnStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::Io { .. } => SnnStatus::IoError,
            Error::Parse { .. } | Error::IdxMagic { .. } | Error::Idx { .. } => SnnStatus::ParseError,
            Error::Dimension { .. } | Error::Shape(_) => SnnStatus::DimensionMismatch,
            Error::Invalid(_) => SnnStatus::InvalidArgument,
            Error::Diverged { .. } | Error::DesignPoint { .. } => SnnStatus::Internal,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SnnStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(SnnStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SnnStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SnnStatus::Internal
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn topology(sizes: *const usize, n: usize) -> Result<NetworkTopology, Failure> {
    Ok(NetworkTopology::new(slice(sizes, n, "layer_sizes")?.to_vec())?)
}

unsafe fn profile(spikes_in: *const f64, layers: usize) -> Result<SpikeProfile, Failure> {
    Ok(SpikeProfile::new(slice(spikes_in, layers, "mean_spikes_in")?.to_vec())?)
}

fn arch(a: SnnArch) -> ArchKind {
    match a {
        SnnArch::Fpa => ArchKind::Fpa,
        SnnArch::Tma => ArchKind::Tma,
        SnnArch::Ha => ArchKind::Ha,
    }
}

fn mem_org(m: SnnMemOrg) -> MemOrg {
    match m {
        SnnMemOrg::Centralized => MemOrg::Centralized,
        SnnMemOrg::LayerShared => MemOrg::LayerShared,
        SnnMemOrg::FullyDistributed => MemOrg::FullyDistributed,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// Returns the length including the terminating NUL; the copy is truncated to
/// `capacity` bytes. Passing a null `buf` only queries the length.
#[no_mangle]
pub unsafe extern "C" fn snn_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let needed = msg.len() + 1;
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        needed
    })
}

/// Loads a network JSON file.
#[no_mangle]
pub unsafe extern "C" fn snn_network_load(path: *const c_char, out_net: *mut *mut SnnNetwork) -> SnnStatus {
    guard(|| {
        let slot = out(out_net, "out_net")?;
        let net = netmodel::load_network(c_str(path, "path")?)?;
        *slot = Box::into_raw(Box::new(SnnNetwork { net }));
        Ok(())
    })
}

/// Parses a network from an in-memory JSON document.
#[no_mangle]
pub unsafe extern "C" fn snn_network_from_json(json: *const c_char, out_net: *mut *mut SnnNetwork) -> SnnStatus {
    guard(|| {
        let slot = out(out_net, "out_net")?;
        let value: serde_json::Value =
            serde_json::from_str(c_str(json, "json")?).map_err(|e| Failure(SnnStatus::ParseError, e.to_string()))?;
        let net = TrainedNetwork::from_json(&value)?;
        *slot = Box::into_raw(Box::new(SnnNetwork { net }));
        Ok(())
    })
}

/// Releases a network; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn snn_network_free(net: *mut SnnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of entries in the layer-size vector (inputs included).
#[no_mangle]
pub unsafe extern "C" fn snn_network_depth(net: *const SnnNetwork, out_depth: *mut usize) -> SnnStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        *out(out_depth, "out_depth")? = net.net.topology().layer_sizes().len();
        Ok(())
    })
}

/// Copies the layer sizes into `sizes`, which must hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn snn_network_layer_sizes(
    net: *const SnnNetwork,
    sizes: *mut usize,
    capacity: usize,
) -> SnnStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        let src = net.net.topology().layer_sizes();
        if capacity < src.len() {
            return Err(Failure(SnnStatus::DimensionMismatch, format!("capacity {capacity} < depth {}", src.len())));
        }
        if sizes.is_null() {
            return Err(null("sizes"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), sizes, src.len());
        Ok(())
    })
}

/// Creates the built-in technology constants.
#[no_mangle]
pub unsafe extern "C" fn snn_tech_default(out_tech: *mut *mut SnnTech) -> SnnStatus {
    guard(|| {
        let slot = out(out_tech, "out_tech")?;
        *slot = Box::into_raw(Box::new(SnnTech { tech: TechConstants::default() }));
        Ok(())
    })
}

/// Loads technology constants from a TOML file.
#[no_mangle]
pub unsafe extern "C" fn snn_tech_load(path: *const c_char, out_tech: *mut *mut SnnTech) -> SnnStatus {
    guard(|| {
        let slot = out(out_tech, "out_tech")?;
        let tech = TechConstants::load(c_str(path, "path")?)?;
        *slot = Box::into_raw(Box::new(SnnTech { tech }));
        Ok(())
    })
}

/// Releases technology constants; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn snn_tech_free(tech: *mut SnnTech) {
    if !tech.is_null() {
        drop(Box::from_raw(tech));
    }
}

/// Weight storage in bits for a topology given as `depth` layer sizes.
#[no_mangle]
pub unsafe extern "C" fn snn_memory_bits(
    layer_sizes: *const usize,
    depth: usize,
    bits_per_weight: u32,
    out_bits: *mut u64,
) -> SnnStatus {
    guard(|| {
        let slot = out(out_bits, "out_bits")?;
        if bits_per_weight == 0 {
            return Err(invalid("bits_per_weight must be positive"));
        }
        *slot = netmodel::memory_bits(&topology(layer_sizes, depth)?, bits_per_weight);
        Ok(())
    })
}

/// Processing cycles; `mean_spikes_in` holds `depth - 1` values.
#[no_mangle]
pub unsafe extern "C" fn snn_latency_cycles(
    kind: SnnArch,
    layer_sizes: *const usize,
    depth: usize,
    mean_spikes_in: *const f64,
    out_cycles: *mut f64,
) -> SnnStatus {
    guard(|| {
        let slot = out(out_cycles, "out_cycles")?;
        let topo = topology(layer_sizes, depth)?;
        let prof = profile(mean_spikes_in, topo.num_layers())?;
        *slot = hwmodel::latency_cycles(arch(kind), &prof, &topo)?;
        Ok(())
    })
}

/// Full cost evaluation of one design point. A null `tech` uses the defaults.
#[no_mangle]
pub unsafe extern "C" fn snn_evaluate(
    kind: SnnArch,
    org: SnnMemOrg,
    tech: *const SnnTech,
    layer_sizes: *const usize,
    depth: usize,
    mean_spikes_in: *const f64,
    out_report: *mut SnnCostReport,
) -> SnnStatus {
    guard(|| {
        let slot = out(out_report, "out_report")?;
        let topo = topology(layer_sizes, depth)?;
        let prof = profile(mean_spikes_in, topo.num_layers())?;
        let tech = tech.as_ref().map(|t| t.tech.clone()).unwrap_or_default();
        let r = hwmodel::evaluate(&ArchConfig::new(arch(kind), mem_org(org), tech), &topo, &prof)?;
        *slot = SnnCostReport {
            cycles: r.cycles,
            contention: r.contention,
            latency_s: r.latency_s,
            energy_j: r.energy_j,
            memory_bits: r.memory_bits,
            logic_cells: r.logic_cells,
            registers: r.registers,
            cost: r.cost,
        };
        Ok(())
    })
}

/// Runs one input pattern given as `count` parallel arrays of input neuron
/// index and spike time.
///
/// `spikes_in` receives one counter per computing layer and must hold
/// `layers` entries; it may be null. A null `selector` uses Terminate Delta 4.
#[no_mangle]
pub unsafe extern "C" fn snn_run_inference(
    net: *const SnnNetwork,
    neurons: *const usize,
    times: *const f64,
    count: usize,
    window: f64,
    selector: *const SnnSelector,
    out_class: *mut usize,
    spikes_in: *mut u64,
    layers: usize,
) -> SnnStatus {
    guard(|| {
        let net = &net.as_ref().ok_or_else(|| null("net"))?.net;
        let slot = out(out_class, "out_class")?;
        let neurons = slice(neurons, count, "neurons")?;
        let times = slice(times, count, "times")?;
        let selector = match selector.as_ref() {
            None => SelectorConfig::default(),
            Some(s) => match s.kind {
                SnnSelectorKind::TerminateDelta => SelectorConfig::delta(s.value),
                SnnSelectorKind::MaxTerminate => SelectorConfig::max(s.value),
            },
        };
        selector.validate()?;
        let depth = net.topology().num_layers();
        if !spikes_in.is_null() && layers < depth {
            return Err(Failure(
                SnnStatus::DimensionMismatch,
                format!("spikes_in holds {layers} entries, network has {depth} layers"),
            ));
        }
        let events = neurons.iter().zip(times).map(|(&neuron, &time)| SpikeEvent { time, layer: 0, neuron }).collect();
        let trains = SpikeTrainSet::new(net.topology().inputs(), window, events)?;
        let (class, trace) = engine::run_inference(net, &trains, &selector)?;
        *slot = class;
        if !spikes_in.is_null() {
            ptr::copy_nonoverlapping(trace.spikes_in.as_ptr(), spikes_in, depth);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use snn_dse::engine::SelectorKind;

    #[test]
    fn selector_kind_maps() {
        assert_eq!(SelectorConfig::delta(2).kind, SelectorKind::TerminateDelta);
        assert_eq!(SelectorConfig::max(2).kind, SelectorKind::MaxTerminate);
    }

    #[test]
    fn panics_become_internal() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, SnnStatus::Internal);
    }
}
