use std::collections::HashSet;

use qubd_core::bdm::{self, PartitionSpec};
use qubd_core::ctm::{self, CtmTable};
use qubd_core::experiments::saturation_closed_form;
use qubd_core::grid::Grid;
use qubd_core::quantize::{self, QuantizedTensor};
use qubd_core::qubd::{self, AnalysisParams};
use qubd_core::represent::{self, BinaryMatrix};
use qubd_core::{rng, Error};
use rand::Rng;

fn table() -> CtmTable {
    ctm::load_table(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/ctm-b2-d4x4.ctmt"),
        Some((4, 4)),
    )
    .unwrap()
}

#[test]
fn zero_matrix_scores_one_block() {
    let t = table();
    let s = qubd::qubd_score(&Grid::filled(8, 8, 0.0), 1, &t, &PartitionSpec::default()).unwrap();
    assert_eq!(s.total, t.get(0).unwrap() + 2.0);
}

#[test]
fn random_total_is_about_q_random_planes() {
    let t = table();
    let spec = PartitionSpec::default();
    let w = qubd::random_matrix((16, 16), 42, 0);
    let total = qubd::qubd_score(&w, 8, &t, &spec).unwrap().total;

    let mut rng = rng::stream(43, 0);
    let bits: Vec<u8> = (0..256).map(|_| rng.random_range(0..2u8)).collect();
    let plane = bdm::bdm_score(&BinaryMatrix::raw(16, 16, bits).unwrap(), &t, &spec).unwrap();
    let ratio = total / (8.0 * plane);
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn baseline_concentrates() {
    let t = table();
    let b = qubd::random_baseline((32, 32), 8, &t, &PartitionSpec::default(), 7, 16).unwrap();
    assert_eq!(b.per_plane.len(), 8);
    for s in &b.per_plane {
        assert!(s.std / s.mean < 0.05, "{s:?}");
    }
}

#[test]
fn random_model_ratio_near_one() {
    let t = table();
    let layers: Vec<_> = [(64, 48), (32, 32), (40, 72)]
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| {
            let w = qubd::random_matrix((r, c), 99, i as u64);
            qubd::preprocess_tensor(&[r, c], w.as_slice(), &format!("fc{i}")).unwrap()
        })
        .collect();
    let params = AnalysisParams {
        baseline_samples: 8,
        ..Default::default()
    };
    let report = qubd::analyze_model(&layers, &t, &params).unwrap();
    assert!(
        (0.95..=1.05).contains(&report.total_ratio),
        "{}",
        report.total_ratio
    );
    assert_eq!(report.per_plane.len(), 8);
    let plane_sum: f64 = report.per_plane.iter().map(|p| p.raw).sum();
    assert!((plane_sum - report.total_raw).abs() < 1e-6);
    assert!(report.per_plane.iter().all(|p| p.ratio >= 0.0));
}

#[test]
fn constant_msb_plane_is_simplest() {
    let t = table();
    let spec = PartitionSpec::default();
    let mut rng = rng::stream(5, 0);
    let symbols = Grid::from_fn(64, 64, |_, _| rng.random_range(0..128u16));
    let qt = QuantizedTensor::from_symbols(symbols, 8).unwrap();
    let raw = qubd::qubd_score_symbols(&qt, &t, &spec).unwrap();
    let base = qubd::random_baseline((64, 64), 8, &t, &spec, 0, 3).unwrap();
    let msb = qubd::delta_c(raw.per_plane[0].bits, base.per_plane[0].mean).unwrap();
    let lsb = qubd::delta_c(raw.per_plane[7].bits, base.per_plane[7].mean).unwrap();
    assert!(msb < lsb, "msb {msb} lsb {lsb}");
}

#[test]
fn affine_maps_keep_raw_scores() {
    let t = table();
    let w = qubd::random_matrix((24, 20), 3, 0).map(|&x| x * 2.0 - 1.0);
    let moved = w.map(|&x| 0.37 * x + 5.0);
    let params = AnalysisParams {
        q: 6,
        ..Default::default()
    };
    let a = qubd::analyze_matrix("w", &[24, 20], &w, &t, &params).unwrap();
    let b = qubd::analyze_matrix("w", &[24, 20], &moved, &t, &params).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reports_are_reproducible() {
    let t = table();
    let layer = qubd::preprocess_tensor(
        &[8, 2, 4],
        &(0..64).map(f64::from).collect::<Vec<_>>(),
        "conv",
    )
    .unwrap();
    let params = AnalysisParams::default();
    let a = serde_json::to_string(
        &qubd::analyze_model(std::slice::from_ref(&layer), &t, &params).unwrap(),
    )
    .unwrap();
    let b = serde_json::to_string(&qubd::analyze_model(&[layer], &t, &params).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sub_block_baseline_fails() {
    let t = table();
    assert!(matches!(
        qubd::random_baseline((3, 8), 8, &t, &PartitionSpec::default(), 0, 1),
        Err(Error::EmptyAfterDrop { .. })
    ));
}

#[test]
fn distinct_blocks_follow_coverage_law() {
    let t = table();
    let h = ctm::table_support(&t) as f64;
    for m in [1000usize, 20_000, 65_536, 200_000] {
        let trials = 20;
        let mean: f64 = (0..trials)
            .map(|i| {
                let mut rng = rng::stream(11, i);
                let seen: HashSet<u64> = (0..m).map(|_| rng.random_range(0..1u64 << 16)).collect();
                seen.len() as f64 / h
            })
            .sum::<f64>()
            / trials as f64;
        let expected = saturation_closed_form(m as f64, 1 << 16);
        assert!(
            (mean - expected).abs() < 0.005,
            "m = {m}: {mean} vs {expected}"
        );
    }
}

#[test]
fn block_histogram_summary() {
    let t = table();
    let spec = PartitionSpec::default();
    let q = quantize::quantize(&qubd::random_matrix((32, 32), 1, 0), 8).unwrap();
    let plane = represent::bit_plane(&q, 0);
    let ms = bdm::partition(&plane, &spec).unwrap();
    let h = bdm::block_histogram(&ms);
    assert_eq!(h.counts.iter().sum::<u64>(), 64);
    assert_eq!(h.distinct, ms.distinct());
    let direct: f64 = ms
        .counts
        .iter()
        .map(|(&k, &n)| t.get(k).unwrap() + (n as f64).log2())
        .sum();
    assert!((bdm::bdm_score(&plane, &t, &spec).unwrap() - direct).abs() < 1e-9);
}

#[test]
fn reports_roundtrip_through_files() {
    use qubd_core::experiments::{self, GapResult, Method, PermutationParams};
    use qubd_core::io::{self, ReportFormat};
    use qubd_core::ComplexityReport;

    let t = table();
    let dir = tempfile::tempdir().unwrap();
    let layer = qubd::preprocess_tensor(
        &[16, 12],
        qubd::random_matrix((16, 12), 1, 0).as_slice(),
        "w",
    )
    .unwrap();
    let report = qubd::analyze_model(&[layer], &t, &AnalysisParams::default()).unwrap();
    let path = dir.path().join("r.json");
    io::write_report(&report, &path, ReportFormat::Json).unwrap();
    let back: ComplexityReport = io::read_report(&path).unwrap();
    assert_eq!(back, report);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["per_plane"].as_array().unwrap().len(), 8);
    for key in [
        "q",
        "block_shape",
        "seed",
        "baseline_samples",
        "boundary",
        "rng",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }

    let csv_path = dir.path().join("r.csv");
    io::write_report(&report, &csv_path, ReportFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("scope,layer,plane,raw,baseline_mean,baseline_std,ratio\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 9);

    let params = PermutationParams {
        d: 1600,
        alphabet: 8,
        rho: 0.5,
        method: Method::Sign,
        trials: 2,
        seed: 1,
    };
    let gaps =
        vec![experiments::permutation_bench(&params, &t, &PartitionSpec::default()).unwrap()];
    let gap_path = dir.path().join("g.json");
    io::write_report(&gaps, &gap_path, ReportFormat::Json).unwrap();
    let back: Vec<GapResult> = io::read_report(&gap_path).unwrap();
    assert_eq!(back, gaps);
}
