mod common;

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snn-dse"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Synthetic 28×28 digits plus a trained 784-8-10 network.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("mnist");
        std::fs::create_dir(&data).unwrap();
        common::write_fake_mnist(&data, 60, 28, 28, 10);
        let f = Fixture { dir };
        let o = run(&[
            "train",
            "--mnist-dir",
            f.path("mnist").as_str(),
            "--topology",
            "784-8-10",
            "--epochs",
            "3",
            "--validation",
            "10",
            "--out",
            f.path("net.json").as_str(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        f
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }
}

#[test]
fn malformed_topology_is_a_usage_error() {
    let o = run(&["train", "--mnist-dir", "x", "--topology", "784--10", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("784--10"));
}

#[test]
fn unknown_coding_is_a_usage_error() {
    let o = run(&["sim", "--net", "n.json", "--mnist-dir", "x", "--coding", "morse"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_epochs_writes_initial_network() {
    let dir = tempfile::tempdir().unwrap();
    common::write_fake_mnist(dir.path(), 20, 28, 28, 10);
    let out = dir.path().join("init.json");
    let o = run(&[
        "train",
        "--mnist-dir",
        dir.path().to_str().unwrap(),
        "--topology",
        "784-5-10",
        "--epochs",
        "0",
        "--seed",
        "4",
        "--validation",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let net = snn_dse::netmodel::load_network(&out).unwrap();
    let expected = snn_dse::trainer::init_xavier(&"784-5-10".parse().unwrap(), 4);
    assert_eq!(net, expected);
}

#[test]
fn corrupt_idx_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    common::write_fake_mnist(dir.path(), 10, 28, 28, 10);
    let bad = dir.path().join("t10k-images-idx3-ubyte");
    let mut bytes = std::fs::read(&bad).unwrap();
    bytes[3] = 0x01;
    std::fs::write(&bad, bytes).unwrap();
    let net = dir.path().join("n.json");
    std::fs::write(&net, snn_dse::trainer::init_xavier(&"784-3-10".parse().unwrap(), 0).to_json().to_string()).unwrap();
    let o = run(&["eval", "--net", net.to_str().unwrap(), "--mnist-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("t10k-images-idx3-ubyte") && msg.contains("magic"), "{msg}");
}

#[test]
fn simulation_commands() {
    let f = Fixture::new();
    let sim = |seed: &str, coding: &str| {
        run(&[
            "sim",
            "--net",
            &f.path("net.json"),
            "--mnist-dir",
            &f.path("mnist"),
            "--samples",
            "12",
            "--coding",
            coding,
            "--seed",
            seed,
        ])
    };
    let a = sim("3", "jp");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, sim("3", "jp").stdout);
    let text = stdout(&a);
    assert!(text.starts_with("coding jp\nsamples 12\naccuracy "), "{text}");
    for row in ["Input", "FC1", "Output", "Total"] {
        assert!(text.contains(row), "{text}");
    }

    // Spike Select with factor 1 is plain Jittered Periodic.
    let ss_identity = run(&[
        "sim",
        "--net",
        &f.path("net.json"),
        "--mnist-dir",
        &f.path("mnist"),
        "--samples",
        "12",
        "--coding",
        "ss",
        "--ss-factor",
        "1",
        "--seed",
        "3",
    ]);
    let body = |t: &str| t.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&stdout(&ss_identity)), body(&text));
    let ss = stdout(&sim("3", "ss"));
    assert!(ss.starts_with("coding ss"));
    assert_ne!(body(&ss), body(&text));

    // Profile of one sample equals that sample's trace.
    let prof = f.path("one.json");
    let o = run(&[
        "profile",
        "--net",
        &f.path("net.json"),
        "--mnist-dir",
        &f.path("mnist"),
        "--samples",
        "1",
        "--out",
        &prof,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&prof).unwrap()).unwrap();
    let net = snn_dse::netmodel::load_network(f.path("net.json")).unwrap();
    let data = snn_dse::mnist::MnistDir::new(f.path("mnist")).test().unwrap();
    let params = snn_dse::netmodel::CodingParams::default();
    let trains = snn_dse::codec::encode(
        snn_dse::codec::Scheme::JitteredPeriodic,
        data.image(0),
        &params,
        &mut snn_dse::codec::sample_rng(params.seed, 0),
    );
    let (_, trace) = snn_dse::engine::run_inference(&net, &trains, &Default::default()).unwrap();
    let got: Vec<f64> = serde_json::from_value(v["mean_spikes_in"].clone()).unwrap();
    let want: Vec<f64> = trace.spikes_in.iter().map(|&x| x as f64).collect();
    assert_eq!(got, want);

    // The profile feeds the cost model.
    let o = run(&["hw-estimate", "--topology", "784-8-10", "--profile-file", &prof, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 10);
}

fn write_spec(f: &Fixture, name: &str, extra: &str) -> String {
    let spec = format!(
        r#"{{"net": "net.json", "mnist_dir": "mnist", "samples": 8, "selector": {{"kind": "terminate_delta", "delta_value": 2, "max_value": 4}}{extra}}}"#
    );
    let path = f.path(name);
    std::fs::write(&path, spec).unwrap();
    path
}

#[test]
fn exploration_commands() {
    let f = Fixture::new();
    let spec = write_spec(&f, "spec.json", "");
    let out = f.path("dse.csv");
    let o = run(&["dse", "--spec", &spec, "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 37);
    assert!(csv.starts_with("scheme,arch,mem_org,accuracy"));
    assert!(Path::new(&f.path("dse.pareto.json")).is_file());
    assert!(Path::new(&f.path("dse.latency_logic.csv")).is_file());

    // Same spec, same bytes; inputs untouched.
    let spec_before = std::fs::read(&spec).unwrap();
    let net_before = std::fs::read(f.path("net.json")).unwrap();
    let again = f.path("again.csv");
    assert_eq!(run(&["dse", "--spec", &spec, "--out", &again]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&again).unwrap(), csv);
    assert_eq!(std::fs::read(&spec).unwrap(), spec_before);
    assert_eq!(std::fs::read(f.path("net.json")).unwrap(), net_before);

    let o = run(&["report", "--input", &f.path("dse.pareto.json"), "--top", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("ranked by cost (36 points)"), "{text}");
    assert!(text.contains("pareto front"));

    let empty = write_spec(&f, "empty.json", r#", "schemes": []"#);
    let o = run(&["dse", "--spec", &empty, "--out", &f.path("empty.csv")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schemes"));

    // A failing exploration leaves no output behind.
    let broken = f.path("broken.json");
    std::fs::write(&broken, r#"{"net": "net.json", "mnist_dir": "missing"}"#).unwrap();
    let target = f.path("broken.csv");
    let o = run(&["dse", "--spec", &broken, "--out", &target]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new(&target).exists());
    assert!(!Path::new(&format!("{target}.tmp")).exists());
}

#[test]
fn hardware_estimate_formats_and_tech_files() {
    let dir = tempfile::tempdir().unwrap();
    let tech = dir.path().join("tech.toml");
    let o = run(&[
        "hw-estimate",
        "--topology",
        "784-300-300-300-10",
        "--profile",
        "724,173,103.5,39",
        "--arch",
        "fpa,ha,tma",
        "--mem-org",
        "fd",
        "--format",
        "json",
        "--write-tech",
        tech.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cycles: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["cycles"].as_f64().unwrap()).collect();
    assert_eq!(cycles, vec![1039.5, 84064.0, 300540.0]);

    let o = run(&[
        "hw-estimate",
        "--topology",
        "784-300-300-300-10",
        "--profile",
        "724,173,103.5,39",
        "--tech",
        tech.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 10);

    std::fs::write(&tech, "mem_access_latency = -1.0\n").unwrap();
    let o = run(&["hw-estimate", "--topology", "784-10", "--profile", "5", "--tech", tech.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mem_access_latency"));

    let o = run(&["hw-estimate", "--topology", "784-10-10", "--profile", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["hw-estimate", "--topology", "784-10", "--profile", "5", "--arch", "gpu"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let o = bin()
        .env("SNN_DSE_THREADS", "zero")
        .args(["hw-estimate", "--topology", "2-1", "--profile", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("SNN_DSE_THREADS", "2")
        .args(["hw-estimate", "--topology", "2-1", "--profile", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn closed_stdout_is_not_an_error() {
    use std::process::Stdio;
    let mut child = bin()
        .args(["hw-estimate", "--topology", "784-300-300-300-10", "--profile", "724,173,103.5,39"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // Close the read end before the child gets to write.
    drop(child.stdout.take());
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stderr.is_empty(), "{}", stderr(&o));
}
