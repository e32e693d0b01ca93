use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qubd_core::io::{self, Tensor, TensorData};
use serde_json::Value;

fn table_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

fn qubd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubd"))
        .args(args)
        .env("QUBD_TABLE_DIR", table_dir())
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn bundle(dir: &Path, name: &str, tensors: &[Tensor]) -> String {
    let path = dir.join(name);
    io::write_bundle(tensors, &path).unwrap();
    path.to_str().unwrap().to_string()
}

fn zeros(name: &str, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(name, shape.to_vec(), TensorData::F32(vec![0.0; n])).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn analyze_all_zero_layer() {
    let dir = tempfile::tempdir().unwrap();
    let input = bundle(dir.path(), "zero.qten", &[zeros("fc.weight", &[32, 32])]);
    let out = dir.path().join("report.json");
    let run = qubd(&["analyze", "--input", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let report = read_json(&out);
    let ratio = report["report"]["total_ratio"].as_f64().unwrap();
    assert!((ratio - 0.01).abs() <= 0.02, "{ratio}");
    assert_eq!(report["report"]["per_plane"].as_array().unwrap().len(), 8);
    assert_eq!(report["config"]["q"], 8);
    assert_eq!(report["config"]["block"], "4x4");
    assert_eq!(report["config"]["baseline_samples"], 3);
    assert!(String::from_utf8_lossy(&run.stdout).contains("total"));
}

#[test]
fn analyze_only_excluded_layers() {
    let dir = tempfile::tempdir().unwrap();
    let input = bundle(dir.path(), "bn.qten", &[zeros("bn.weight", &[512])]);
    let run = qubd(&["analyze", "--input", &input]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("excluded"), "{}", stderr(&run));
}

#[test]
fn analyze_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<f64> = (0..64 * 27)
        .map(|i| ((i * 37) % 101) as f64 / 7.0)
        .collect();
    let conv = Tensor::new("conv.weight", vec![64, 3, 3, 3], TensorData::F64(data)).unwrap();
    let input = bundle(dir.path(), "conv.qten", &[conv, zeros("conv.bias", &[64])]);
    let mut files = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let run = qubd(&[
            "--threads",
            threads,
            "analyze",
            "--input",
            &input,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        files.push(std::fs::read(&out).unwrap());
    }
    let strip = |bytes: &[u8]| {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        v["config"]["out"] = Value::Null;
        v
    };
    assert_eq!(strip(&files[0]), strip(&files[1]));

    let again = dir.path().join("r1.json");
    let run = qubd(&[
        "--threads",
        "4",
        "analyze",
        "--input",
        &input,
        "--out",
        again.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read(&again).unwrap(), files[1]);
    let report: Value = serde_json::from_slice(&files[0]).unwrap();
    assert_eq!(report["report"]["excluded"][0]["reason"], "1D");
}

#[test]
fn report_config_reproduces_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<f32> = (0..40 * 24).map(|i| ((i * 13) % 17) as f32).collect();
    let input = bundle(
        dir.path(),
        "w.qten",
        &[Tensor::new("w", vec![40, 24], TensorData::F32(data)).unwrap()],
    );
    let first = dir.path().join("a.json");
    let run = qubd(&[
        "analyze",
        "--input",
        &input,
        "--bits",
        "5",
        "--block",
        "3x3",
        "--boundary",
        "pad",
        "--seed",
        "9",
        "--baseline-samples",
        "4",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let a = read_json(&first);
    let c = &a["config"];
    let second = dir.path().join("b.json");
    let rerun = qubd(&[
        "analyze",
        "--input",
        c["input"].as_str().unwrap(),
        "--table",
        c["table"].as_str().unwrap(),
        "--bits",
        &c["q"].to_string(),
        "--block",
        c["block"].as_str().unwrap(),
        "--boundary",
        c["boundary"].as_str().unwrap(),
        "--seed",
        &c["seed"].to_string(),
        "--baseline-samples",
        &c["baseline_samples"].to_string(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&rerun), 0, "{}", stderr(&rerun));
    assert_eq!(read_json(&second)["report"], a["report"]);
}

#[test]
fn analyze_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.qten");
    assert_eq!(
        code(&qubd(&["analyze", "--input", missing.to_str().unwrap()])),
        2
    );

    let path = dir.path().join("broken.qten");
    std::fs::write(&path, b"QTEN\x01\x00\x00\x00garbage").unwrap();
    assert_eq!(
        code(&qubd(&["analyze", "--input", path.to_str().unwrap()])),
        2
    );

    let input = bundle(dir.path(), "ok.qten", &[zeros("w", &[8, 8])]);
    assert_eq!(
        code(&qubd(&["analyze", "--input", &input, "--bits", "17"])),
        2
    );
    assert_eq!(
        code(&qubd(&["analyze", "--input", &input, "--block", "4"])),
        2
    );
}

#[test]
fn saturation_threshold_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sat.json");
    let run = qubd(&[
        "saturation",
        "--support",
        "65536",
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("m_eps  = 150902"), "{stdout}");
    let m = read_json(&out)["report"]["threshold"]["m_epsilon"]
        .as_f64()
        .unwrap();
    assert!((m / 1.51e5 - 1.0).abs() < 0.01);

    let bad = qubd(&["saturation", "--support", "65536", "--epsilon", "0"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn saturation_zero_grid_csv() {
    let run = qubd(&[
        "saturation",
        "--support",
        "512",
        "--grid",
        "0",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "m,sigma\n0,0\n");
}

#[test]
fn saturation_simulation_uses_table() {
    let run = qubd(&[
        "saturation",
        "--block",
        "3x3",
        "--simulate",
        "uniform",
        "--d",
        "0,512,2048",
        "--trials",
        "20",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let v: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["report"]["threshold"]["support"], 512);
    let points = v["report"]["simulated"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[0]["sigma"], 0.0);
}

#[test]
fn bench_permute_rho_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("perm.csv");
    let run = qubd(&[
        "bench",
        "permute",
        "--d",
        "1600",
        "--rho",
        "0",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows = csv_rows(&text);
    let header = rows.remove(0);
    let gap = header.iter().position(|h| h == "gap").unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[gap] == "0"), "{text}");
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_residual_planes() {
    let run = qubd(&["bench", "residual", "--trials", "2", "--format", "csv"]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let text = String::from_utf8_lossy(&run.stdout).into_owned();
    let mut rows = csv_rows(&text);
    let header = rows.remove(0);
    let gap = header.iter().position(|h| h == "gap").unwrap();
    let aligned: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "aligned")
        .map(|r| r[gap].parse().unwrap())
        .collect();
    assert_eq!(aligned.len(), 8);
    assert!(aligned.windows(2).all(|w| w[1] <= w[0]), "{aligned:?}");
}

#[test]
fn missing_table_is_a_usage_error() {
    let run = Command::new(env!("CARGO_BIN_EXE_qubd"))
        .args(["bench", "residual"])
        .env_remove("QUBD_TABLE_DIR")
        .output()
        .unwrap();
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("--table"));

    let run = qubd(&["bench", "residual", "--table", "no-such-table.csv"]);
    assert_eq!(code(&run), 2);
}

#[test]
fn ctm_sim_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let run = qubd(&[
            "ctm-sim",
            "--states",
            "1",
            "--symbols",
            "2",
            "--steps",
            "10",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
    }
    let v = read_json(&a);
    let sum: f64 = v["report"]["frequencies"]
        .as_object()
        .unwrap()
        .values()
        .map(|f| f.as_f64().unwrap())
        .sum();
    assert!((sum - 1.0).abs() < 1e-12);
    let strip = |p: &Path| {
        let mut v = read_json(p);
        v["config"]["out"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));

    assert_eq!(
        code(&qubd(&[
            "ctm-sim",
            "--states",
            "5",
            "--symbols",
            "2",
            "--steps",
            "500"
        ])),
        2
    );

    let table = dir.path().join("len2.csv");
    let run = qubd(&[
        "ctm-sim",
        "--states",
        "2",
        "--steps",
        "20",
        "--length",
        "2",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(std::fs::read_to_string(&table)
        .unwrap()
        .starts_with("#shape=1x2"));
}

#[test]
fn table_info_reports_support() {
    let run = qubd(&["table-info", "--block", "3x3"]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let v: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["support"], 512);
    assert_eq!(v["complete"], true);
}
