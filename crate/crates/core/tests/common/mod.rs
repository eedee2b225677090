#![allow(dead_code)]

use std::path::{Path, PathBuf};

use snn_dse::engine::{SelectorConfig, SelectorKind};
use snn_dse::netmodel::TrainedNetwork;

/// MNIST location: `MNIST_DIR` or `<workspace>/data/mnist`.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn mnist_available() -> bool {
    let dir = mnist_dir();
    ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]
        .iter()
        .all(|f| dir.join(f).is_file())
}

fn idx_images(count: usize, rows: usize, cols: usize, pixel: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [0x803u32, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for i in 0..count {
        for p in 0..rows * cols {
            out.push(pixel(i, p));
        }
    }
    out
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&0x801u32.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes a synthetic MNIST-shaped set: `count` images of `rows × cols`
/// where class `k` lights the pixel band `k`.
pub fn write_fake_mnist(dir: &Path, count: usize, rows: usize, cols: usize, classes: usize) {
    let pixels = rows * cols;
    let band = pixels / classes;
    let label = |i: usize| (i % classes) as u8;
    let pixel = |i: usize, p: usize| {
        let k = label(i) as usize;
        if p / band == k {
            200 + ((i * 7 + p) % 56) as u8
        } else if (p + i) % 11 == 0 {
            30
        } else {
            0
        }
    };
    let labels: Vec<u8> = (0..count).map(label).collect();
    for (img, lab) in
        [("train-images-idx3-ubyte", "train-labels-idx1-ubyte"), ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")]
    {
        std::fs::write(dir.join(img), idx_images(count, rows, cols, pixel)).unwrap();
        std::fs::write(dir.join(lab), idx_labels(&labels)).unwrap();
    }
}

/// Result of the reference simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub class: usize,
    pub spikes_in: Vec<u64>,
    pub spikes_out: Vec<u64>,
    pub potentials: Vec<Vec<f64>>,
    /// Sum of weights each neuron received, in arrival order.
    pub received: Vec<Vec<f64>>,
    pub fires: Vec<Vec<u64>>,
}

fn oracle_decision(counts: &[u64], selector: &SelectorConfig) -> Option<usize> {
    match selector.kind {
        SelectorKind::MaxTerminate => (0..counts.len()).find(|&j| counts[j] >= selector.max_value),
        SelectorKind::TerminateDelta => {
            let mut sorted: Vec<(u64, usize)> = counts.iter().enumerate().map(|(j, &c)| (c, j)).collect();
            sorted.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let (top, who) = sorted[0];
            let runner = sorted.get(1).map_or(0, |s| s.0);
            (top > runner && top - runner >= selector.delta_value).then_some(who)
        }
    }
}

/// Straight-line IF simulation with no event queue.
///
/// Input events are `(time, neuron)` pairs. Each input spike is pushed
/// through the layers as a list of active presynaptic indices; within a
/// layer, sources are taken in list order and destinations in index order.
pub fn oracle_simulate(net: &TrainedNetwork, events: &[(f64, usize)], selector: &SelectorConfig) -> OracleRun {
    let sizes = net.topology().layer_sizes().to_vec();
    let depth = sizes.len() - 1;
    let w: Vec<Vec<Vec<f64>>> = (1..=depth)
        .map(|l| (0..sizes[l - 1]).map(|i| (0..sizes[l]).map(|j| net.weight(l, i, j)).collect()).collect())
        .collect();

    let mut ordered = events.to_vec();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut pot: Vec<Vec<f64>> = sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
    let mut received = pot.clone();
    let mut fires: Vec<Vec<u64>> = sizes[1..].iter().map(|&n| vec![0; n]).collect();
    let mut spikes_in = vec![0u64; depth];
    let mut spikes_out = vec![0u64; depth];
    let mut decided = None;

    'outer: for &(_, input) in &ordered {
        let mut active = vec![input];
        for l in 0..depth {
            spikes_in[l] += active.len() as u64;
            let theta = net.threshold(l + 1);
            let mut next = Vec::new();
            for &i in &active {
                for j in 0..sizes[l + 1] {
                    received[l][j] += w[l][i][j];
                    let s = pot[l][j] + w[l][i][j];
                    if s >= theta {
                        pot[l][j] = s - theta;
                        fires[l][j] += 1;
                        spikes_out[l] += 1;
                        next.push(j);
                        if l + 1 == depth {
                            if let Some(c) = oracle_decision(&fires[l], selector) {
                                decided = Some(c);
                                break 'outer;
                            }
                        }
                    } else {
                        pot[l][j] = s;
                    }
                }
            }
            if next.is_empty() || l + 1 == depth {
                break;
            }
            active = next;
        }
    }

    let out = &fires[depth - 1];
    let class = decided.unwrap_or_else(|| {
        let mut best = 0;
        for j in 1..out.len() {
            if out[j] > out[best] {
                best = j;
            }
        }
        best
    });
    OracleRun { class, spikes_in, spikes_out, potentials: pot, received, fires }
}
