#![allow(clippy::excessive_precision)]

use std::path::Path;
use std::process::{Command, Output};

use linkdelay::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linkdelay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV body as floats, keyed by the header.
fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_owned()).collect()
}

fn close(got: &str, want: f64, tol: f64) -> bool {
    let g: f64 = got.parse().unwrap();
    ((g - want) / want).abs() <= tol
}

#[test]
fn models_default_row() {
    let o = run(&["models"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(close(&csv_column(&s, "per")[0], 0.031863723755432924, 1e-12));
    assert!(close(&csv_column(&s, "mean_t_ms")[0], 17.721538598682375, 1e-12));
    assert!(close(&csv_column(&s, "var_a")[0], 5.4134113294645077e-6, 1e-12));

    let json: serde_json::Value = serde_json::from_slice(&run(&["models", "--format", "json"]).stdout).unwrap();
    assert!((json["lambda_per_ms"].as_f64().unwrap() - 0.019058566040414487).abs() < 1e-15);
}

#[test]
fn models_zero_payload() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", r#"{"link": {"payload_bytes": 0}}"#);
    let o = run(&["models", "--config", &c]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(csv_column(&s, "per")[0], "0");
    assert_eq!(csv_column(&s, "plr_var")[0], "0");
    // the queue term of the loss model remains
    assert!(close(&csv_column(&s, "plr_mean")[0], 1.0 / 60.0, 1e-12));
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (json, key) in [
        (r#"{"link": {"snr": 3}}"#, "snr"),
        (r#"{"bogus": 1}"#, "bogus"),
        (r#"{"link": {"max_tries": 0}}"#, "link.max_tries"),
        (r#"{"per_coeffs": {"beta": 0.1}}"#, "per_coeffs.beta"),
        (r#"{"link": "#, "EOF"),
    ] {
        let c = write_config(dir.path(), "bad.json", json);
        let o = run(&["models", "--config", &c]);
        assert_eq!(o.status.code(), Some(2), "{json}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(key), "{json}: {err}");
    }
    assert_eq!(run(&["models", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn mean_delay_examples() {
    let o = run(&["mean-delay"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(csv_column(&s, "route"), ["empirical", "distribution"]);
    assert!(close(&csv_column(&s, "mean_delay_ms")[0], 19.655806843079250, 1e-12));

    let dir = tempfile::tempdir().unwrap();
    let light = write_config(dir.path(), "light.json", r#"{"link": {"snr_db": 200, "t_pit_ms": 100000}}"#);
    let s = stdout(&run(&["mean-delay", "--config", &light]));
    let d: f64 = csv_column(&s, "mean_delay_ms")[0].parse().unwrap();
    let t: f64 = csv_column(&s, "mean_t_ms")[0].parse().unwrap();
    assert!(d >= t && (d - t) / t < 1e-4);

    let sat = write_config(dir.path(), "sat.json", r#"{"link": {"t_pit_ms": 10}}"#);
    let o = run(&["mean-delay", "--config", &sat]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("rho"));
}

#[test]
fn delay_bound_examples() {
    let s = stdout(&run(&["delay-bound"]));
    let probs: Vec<f64> = csv_column(&s, "bound_prob").iter().map(|p| p.parse().unwrap()).collect();
    assert!(probs.len() > 10);
    assert!(probs.windows(2).all(|w| w[1] <= w[0]));
    assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));

    let dir = tempfile::tempdir().unwrap();
    let heavy = write_config(
        dir.path(),
        "heavy.json",
        r#"{"traffic": {"pattern": {"kind": "poisson", "rate_per_ms": 1.0}, "packets": 10}}"#,
    );
    assert_eq!(run(&["delay-bound", "--config", &heavy]).status.code(), Some(3));

    // near-lossless link: P{D > d} <= exp(-theta_max (d - tau))
    let det = write_config(dir.path(), "det.json", r#"{"link": {"snr_db": 1000}, "delay_grid": [12, 13, 15, 20]}"#);
    let cfg = RunConfig::load(Path::new(&det)).unwrap();
    let tau = cfg.distribution().unwrap().mean();
    let s = stdout(&run(&["delay-bound", "--config", &det]));
    for (d, p) in csv_column(&s, "delay_ms").iter().zip(csv_column(&s, "bound_prob")) {
        let d: f64 = d.parse().unwrap();
        assert!(close(&p, (-(d - tau)).exp(), 0.01), "{d}: {p}");
    }
}

#[test]
fn simulate_outputs_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let out = dir.path().join("ccdf.csv");
    let o = run(&[
        "simulate",
        "--seed",
        "5",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let ccdf = std::fs::read_to_string(&out).unwrap();
    assert!(ccdf.starts_with("delay_ms,fraction,upper99\n"));
    let t = std::fs::read_to_string(&trace).unwrap();
    let mut lines = t.lines();
    assert_eq!(lines.next(), Some("arrival_ms,start_ms,attempts,outcome,delay_ms"));
    assert_eq!(lines.count(), 100_000);

    let a = run(&["simulate", "--seed", "5", "--format", "json"]);
    let b = run(&["simulate", "--seed", "5", "--format", "json"]);
    let c = run(&["simulate", "--seed", "6", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let s = &v["summary"];
    let total = s["n_delivered"].as_u64().unwrap() + s["n_queue_drops"].as_u64().unwrap() + s["n_retry_drops"].as_u64().unwrap();
    assert_eq!(total, s["n_arrivals"].as_u64().unwrap());
}

#[test]
fn validate_paths() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let dir = tempfile::tempdir().unwrap();
    // one tiny theta: a loose bound that must still dominate
    let loose = write_config(
        dir.path(),
        "loose.json",
        r#"{"theta_grid": {"min": 1e-6, "max": 1e-6, "points": 1, "refine": false}}"#,
    );
    let o = run(&["validate", "--config", &loose, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for r in v["replications"].as_array().unwrap() {
        assert!(r["dominance"]["violations"].as_array().unwrap().is_empty());
    }
    assert_eq!(o.status.code(), Some(0));

    let strict = write_config(dir.path(), "strict.json", r#"{"validation": {"mean_delay_tolerance": 0}}"#);
    let o = run(&["validate", "--config", &strict]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("mean_delay_rel_error"));
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_config(
        dir.path(),
        "src.json",
        r#"{"link": {"snr_db": 12.5, "max_tries": 4}, "traffic": {"pattern": {"kind": "on_off", "lam_on_off": 0.03, "mu_off_on": 0.02, "r_per_ms": 0.02}, "packets": 5000}, "onoff_assignment": "swapped"}"#,
    );
    let dumped = dir.path().join("dump.json");
    let o = run(&["models", "--config", &src, "--seed", "42", "--dump-config", dumped.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let reloaded = RunConfig::load(&dumped).unwrap();
    assert_eq!(reloaded.seed, 42);
    assert_eq!(reloaded.link.max_tries, 4);
    let again = dir.path().join("again.json");
    let d = dumped.to_str().unwrap();
    run(&["models", "--config", d, "--dump-config", again.to_str().unwrap()]);
    assert_eq!(RunConfig::load(&again).unwrap(), reloaded);
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(&dumped).unwrap());

    let a = run(&["simulate", "--config", &src, "--seed", "42", "--format", "json"]);
    let b = run(&["simulate", "--config", d, "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors() {
    assert_ne!(run(&[]).status.code(), Some(0));
    assert_ne!(run(&["frobnicate"]).status.code(), Some(0));
    assert_eq!(run(&["models", "--format", "xml"]).status.code(), Some(2));
}
