use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mod1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mod1")).args(args).output().expect("spawn mod1")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn denoise_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v =
        vec!["denoise", "--n", "200", "--k", "2", "--lambda", "0.1", "--noise", "uniform", "--param", "0.15", "--seed", "7", "--out", out];
    v.extend_from_slice(extra);
    v
}

#[test]
fn version_prints() {
    let o = mod1(&["version"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("mod1 "));
}

#[test]
fn denoise_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let o = mod1(&denoise_args(out, &["--method", "qcqp"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(out).join("metrics.json")).unwrap()).unwrap();
    let w = metrics["wrapRmseMod1"].as_f64().unwrap();
    assert!((0.0..=0.5).contains(&w));
    assert!(metrics["boundChecks"].as_array().unwrap().len() >= 5);
    let csv = fs::read_to_string(Path::new(out).join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "i,x,f,clean_mod1,y,estimate_mod1,unwrapped");
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn denoise_methods_all_run() {
    let dir = tempfile::tempdir().unwrap();
    for m in ["ols", "qcqp", "iqcqp"] {
        let out = dir.path().join(m);
        let o = mod1(&denoise_args(out.to_str().unwrap(), &["--method", m, "--iterations", "3"]));
        assert_eq!(code(&o), 0, "{m}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn denoise_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&mod1(&denoise_args(a.to_str().unwrap(), &[]))), 0);
    assert_eq!(code(&mod1(&denoise_args(b.to_str().unwrap(), &[]))), 0);
    for f in ["samples.csv", "metrics.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn gamma_out_of_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mod1(&[
        "denoise",
        "--n",
        "50",
        "--k",
        "2",
        "--lambda",
        "0.1",
        "--noise",
        "uniform",
        "--param",
        "0.6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma out of range"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&mod1(&["denoise", "--n", "ten"])), 2);
    assert_eq!(code(&mod1(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&mod1(&denoise_args(out, &["--zeta", "1.5"]))), 2);
    let o = mod1(&["denoise", "--n", "10", "--k", "12", "--lambda", "0.1", "--noise", "uniform", "--param", "0.1", "--out", out]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_thread_cap_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_mod1")).arg("version").env("MOD1_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_mod1")).arg("version").env("MOD1_THREADS", "2").output().unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn unwrap_reads_headered_and_plain_input() {
    let dir = tempfile::tempdir().unwrap();
    let f: Vec<f64> = (0..30).map(|i| 0.3 * i as f64).collect();
    let residues: Vec<f64> = f.iter().map(|x| x - x.floor()).collect();

    let plain = dir.path().join("plain.txt");
    fs::write(&plain, residues.iter().map(|r| format!("{r}\n")).collect::<String>()).unwrap();
    let headered = dir.path().join("h.csv");
    fs::write(&headered, format!("i,y\n{}", residues.iter().enumerate().map(|(i, r)| format!("{i},{r}\n")).collect::<String>())).unwrap();

    for (input, method) in [(&plain, "qt"), (&headered, "ols")] {
        let out = dir.path().join(format!("{method}.csv"));
        let o = mod1(&["unwrap", "--input", input.to_str().unwrap(), "--method", method, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let mut rdr = csv::Reader::from_path(&out).unwrap();
        let got: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
        let c = f[0] - got[0];
        for (a, b) in got.iter().zip(&f) {
            assert!((a + c - b).abs() < 1e-9);
        }
    }

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0.2\n1.3\n").unwrap();
    let o = mod1(&["unwrap", "--input", bad.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sweep_single_cell_counts_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"function":"f1","n":[80],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]},
            "trials":1,"seed":4,"methods":["ols","qcqp","iqcqp"],"iqcqp_iterations":[5]}"#,
    );
    let out = dir.path().join("out");
    let o = mod1(&["sweep", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.starts_with("cell,function,n,k,lambda,noise_model,noise_level,method,iterations,trial,seed,"));
    assert!(out.join("aggregate.csv").exists());
    assert!(out.join("timings.csv").exists());
    let svgs = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    assert_eq!(svgs, 2);
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"function":"f1","n":[80]"#);
    assert_eq!(code(&mod1(&["sweep", &cfg])), 2);
    let cfg = write_config(
        dir.path(),
        "empty.json",
        r#"{"function":"f1","n":[],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]}}"#,
    );
    assert_eq!(code(&mod1(&["check-bounds", &cfg])), 2);
    assert_eq!(code(&mod1(&["sweep", dir.path().join("missing.json").to_str().unwrap()])), 2);
}

#[test]
fn check_bounds_gates_large_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"function":"f1","n":[100],"k":[2],"lambda":[0.5],"noise":{"model":"uniform","levels":[0.1]},"trials":3}"#,
    );
    let o = mod1(&["check-bounds", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains("corollary1") && l.ends_with("hypotheses_not_met")));
}

#[test]
fn check_bounds_flags_tampered_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"function":"f1","n":[100],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]},"trials":2,"tamper_offset":0.1}"#,
    );
    let o = mod1(&["check-bounds", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}
