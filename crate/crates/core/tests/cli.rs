use std::path::Path;
use std::process::{Command, Output};

use kdv_core::harness::config::ExperimentConfig;
use kdv_core::ztbc::read_kernel_file;

fn kdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdv")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn small_config(out: &Path) -> String {
    format!(
        "a = -6\nb = 6\nT = 1\nN = 24\nM = 64\ng.kind = constant\ng.params = 6\nic.kind = gaussian\n\
         ic.params = 0, 1\nsnapshots = 0.25, 0.5, 0.75, 1\nreference.kind = fourier\noutput_dir = {}\n",
        out.display()
    )
}

#[test]
fn simulate_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = write_config(tmp.path(), "ex1.cfg", &small_config(&out));
    let res = kdv(&["simulate", &cfg]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for t in ["0.250000", "0.500000", "0.750000", "1.000000"] {
        let text = std::fs::read_to_string(out.join(format!("snapshot_t{t}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,u"));
        assert_eq!(lines.count(), 129);
    }
    let traces = std::fs::read_to_string(out.join("traces.csv")).unwrap();
    assert!(traces.starts_with("m,u_a,ux_a,u_b\n"));
    assert_eq!(traces.lines().count(), 66);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["grid"]["endpoints_included"], true);
    assert_eq!(manifest["grid"]["points"], 129);
    assert_eq!(manifest["stability"]["ratio"], 0.0);
    assert_eq!(manifest["kernels"]["steps"], 64);
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let echoed = ExperimentConfig::parse(manifest["config"].as_str().unwrap()).unwrap();
    assert_eq!(echoed.n, 24);
    assert!(manifest["aggregate_error"].as_f64().unwrap() < 0.2);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", &small_config(&tmp.path().join("unused")));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        assert!(kdv(&["simulate", &cfg, "--output-dir", dir.to_str().unwrap()]).status.success());
    }
    for name in ["snapshot_t0.500000.csv", "traces.csv", "errors.csv", "norms.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let body = small_config(tmp.path()).replace("N = 24", "N = many");
    let cfg = write_config(tmp.path(), "bad.cfg", &body);
    let res = kdv(&["simulate", &cfg]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 4") && err.contains("N"), "{err}");

    let body = small_config(tmp.path()).replace("ic.params = 0, 1", "ic.params = -5, 1");
    let cfg = write_config(tmp.path(), "edge.cfg", &body);
    let res = kdv(&["simulate", &cfg]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn missing_file_exits_with_three() {
    let res = kdv(&["simulate", "/nonexistent/config.cfg"]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn kernels_dump_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "k.cfg", &small_config(tmp.path()));
    let dump = tmp.path().join("kernels.csv");
    let res = kdv(&["kernels", &cfg, "--dump", dump.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let k = read_kernel_file(&dump).unwrap();
    assert_eq!(k.steps(), 64);
    assert_eq!(k.g_a, 6.0);
}

#[test]
fn reference_and_converge_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.cfg", &small_config(tmp.path()));
    let res = kdv(&["reference", &cfg, "--times", "0,0.5"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(tmp.path().join("reference_t0.000000.csv")).unwrap();
    let mid = text.lines().nth(65).unwrap();
    let u: f64 = mid.split(',').nth(1).unwrap().parse().unwrap();
    assert!((u - 1.0).abs() < 1e-11);

    let res = kdv(&["converge", &cfg, "--vary", "N", "--values", "16,24"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(tmp.path().join("convergence_N.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "N,err,alpha");
    assert!(lines[1].starts_with("16,") && lines[1].ends_with(','));
    assert!(lines[2].starts_with("24,") && !lines[2].ends_with(','));

    let res = kdv(&["converge", &cfg, "--vary", "K", "--values", "16"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let expected = [
        ("example1.cfg", ExperimentConfig::example1()),
        ("example2.cfg", ExperimentConfig::example2().with_resolution(40, 4096)),
        ("example3.cfg", ExperimentConfig::example3().with_resolution(40, 4096)),
    ];
    for (name, want) in expected {
        let got = ExperimentConfig::load(&root.join(name)).unwrap();
        assert_eq!(got, want, "{name}");
    }
}
