//! The full estimator: preprocess, quantize, split into bit-planes, score each
//! plane with BDM and normalize against seeded random matrices of the same
//! shape.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdm::{self, BoundaryPolicy, PartitionSpec};
use crate::ctm::CtmTable;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quantize::{self, QuantizedTensor};
use crate::represent;
use crate::rng;

/// Smallest row or column count a preprocessed matrix may have.
pub const MIN_DIM: usize = 4;

pub const PLANE_NORMALIZATION: &str = "per-plane: plane raw / same plane baseline mean";
pub const QUANTIZATION_SCOPE: &str = "per-tensor min-max over each preprocessed 2D matrix";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerMatrix {
    Included(Grid<f64>),
    Excluded(String),
}

/// A named weight tensor after reshaping to 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub original_shape: Vec<usize>,
    pub matrix: LayerMatrix,
}

impl LayerRecord {
    pub fn included(&self) -> Option<&Grid<f64>> {
        match &self.matrix {
            LayerMatrix::Included(m) => Some(m),
            LayerMatrix::Excluded(_) => None,
        }
    }

    pub fn excluded_reason(&self) -> Option<&str> {
        match &self.matrix {
            LayerMatrix::Included(_) => None,
            LayerMatrix::Excluded(reason) => Some(reason),
        }
    }
}

/// 2D tensors pass through; higher ranks flatten all but the first axis;
/// 1D tensors and matrices smaller than 4x4 are excluded.
pub fn preprocess_tensor(shape: &[usize], data: &[f64], name: &str) -> Result<LayerRecord> {
    let numel: usize = shape.iter().product();
    if numel != data.len() {
        return Err(Error::InvalidParameter(format!(
            "{name}: shape {shape:?} needs {numel} values, got {}",
            data.len()
        )));
    }
    let record = |matrix| LayerRecord {
        name: name.to_string(),
        original_shape: shape.to_vec(),
        matrix,
    };
    let excluded = |reason: &str| Ok(record(LayerMatrix::Excluded(reason.to_string())));
    let (rows, cols) = match shape {
        [] => return excluded("0D"),
        [_] => return excluded("1D"),
        [rows, rest @ ..] => (*rows, rest.iter().product::<usize>()),
    };
    if rows < MIN_DIM {
        return excluded("rows < 4");
    }
    if cols < MIN_DIM {
        return excluded("cols < 4");
    }
    Ok(record(LayerMatrix::Included(Grid::new(
        rows,
        cols,
        data.to_vec(),
    )?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneScore {
    pub plane: u32,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubdScore {
    /// MSB first.
    pub per_plane: Vec<PlaneScore>,
    pub total: f64,
}

/// Scores every bit-plane of an already quantized tensor.
pub fn qubd_score_symbols(
    qt: &QuantizedTensor,
    table: &CtmTable,
    spec: &PartitionSpec,
) -> Result<QubdScore> {
    let per_plane = (0..qt.q)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|l| {
            let plane = represent::bit_plane(qt, l);
            Ok(PlaneScore {
                plane: l,
                bits: bdm::bdm_score(&plane, table, spec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = per_plane.iter().map(|p| p.bits).sum();
    Ok(QubdScore { per_plane, total })
}

pub fn qubd_score(
    matrix: &Grid<f64>,
    q: u32,
    table: &CtmTable,
    spec: &PartitionSpec,
) -> Result<QubdScore> {
    qubd_score_symbols(&quantize::quantize(matrix, q)?, table, spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    /// MSB first, aligned with [`QubdScore::per_plane`].
    pub per_plane: Vec<Stats>,
    pub total: Stats,
    pub samples: usize,
}

/// Sample `i` fills the matrix row-major with uniform `[0, 1)` draws from
/// stream `i` of the seeded generator, then runs the same pipeline.
pub fn random_matrix(shape: (usize, usize), seed: u64, sample: u64) -> Grid<f64> {
    let mut rng = rng::stream(seed, sample);
    Grid::from_fn(shape.0, shape.1, |_, _| rng::unit_f64(&mut rng))
}

pub fn random_baseline(
    shape: (usize, usize),
    q: u32,
    table: &CtmTable,
    spec: &PartitionSpec,
    seed: u64,
    samples: usize,
) -> Result<Baseline> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "need at least one baseline sample".into(),
        ));
    }
    let scores = (0..samples as u64)
        .into_par_iter()
        .map(|i| qubd_score(&random_matrix(shape, seed, i), q, table, spec))
        .collect::<Result<Vec<_>>>()?;
    let per_plane = (0..q as usize)
        .map(|j| {
            Stats::of(
                &scores
                    .iter()
                    .map(|s| s.per_plane[j].bits)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let totals: Vec<f64> = scores.iter().map(|s| s.total).collect();
    Ok(Baseline {
        per_plane,
        total: Stats::of(&totals),
        samples,
    })
}

/// `raw / baseline_mean`.
pub fn delta_c(raw: f64, baseline_mean: f64) -> Result<f64> {
    if baseline_mean > 0.0 {
        Ok(raw / baseline_mean)
    } else {
        Err(Error::ZeroBaseline(baseline_mean))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub q: u32,
    pub spec: PartitionSpec,
    pub seed: u64,
    pub baseline_samples: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            q: 8,
            spec: PartitionSpec::default(),
            seed: 0,
            baseline_samples: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneReport {
    pub plane: u32,
    pub raw: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub name: String,
    pub original_shape: Vec<usize>,
    pub matrix_shape: (usize, usize),
    pub per_plane: Vec<PlaneReport>,
    pub total_raw: f64,
    pub total_baseline_mean: f64,
    pub total_baseline_std: f64,
    pub total_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedLayer {
    pub name: String,
    pub original_shape: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub q: u32,
    pub block_shape: (usize, usize),
    pub boundary: BoundaryPolicy,
    pub seed: u64,
    pub baseline_samples: usize,
    pub rng: String,
    pub plane_normalization: String,
    pub quantization: String,
    /// Model-level values: summed layer raw scores over summed baselines.
    pub per_plane: Vec<PlaneReport>,
    pub total_raw: f64,
    pub total_baseline_mean: f64,
    pub total_baseline_std: f64,
    pub total_ratio: f64,
    pub layers: Vec<LayerReport>,
    pub excluded: Vec<ExcludedLayer>,
}

pub fn analyze_matrix(
    name: &str,
    original_shape: &[usize],
    matrix: &Grid<f64>,
    table: &CtmTable,
    params: &AnalysisParams,
) -> Result<LayerReport> {
    let score = qubd_score(matrix, params.q, table, &params.spec)?;
    let baseline = random_baseline(
        matrix.shape(),
        params.q,
        table,
        &params.spec,
        params.seed,
        params.baseline_samples,
    )?;
    let per_plane = score
        .per_plane
        .iter()
        .zip(&baseline.per_plane)
        .map(|(p, b)| {
            Ok(PlaneReport {
                plane: p.plane,
                raw: p.bits,
                baseline_mean: b.mean,
                baseline_std: b.std,
                ratio: delta_c(p.bits, b.mean)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerReport {
        name: name.to_string(),
        original_shape: original_shape.to_vec(),
        matrix_shape: matrix.shape(),
        per_plane,
        total_raw: score.total,
        total_baseline_mean: baseline.total.mean,
        total_baseline_std: baseline.total.std,
        total_ratio: delta_c(score.total, baseline.total.mean)?,
    })
}

/// Scores every included layer against its own baseline and aggregates
/// size-weighted model-level ratios.
pub fn analyze_model(
    layers: &[LayerRecord],
    table: &CtmTable,
    params: &AnalysisParams,
) -> Result<ComplexityReport> {
    quantize::check_bits(params.q)?;
    let included: Vec<(&LayerRecord, &Grid<f64>)> = layers
        .iter()
        .filter_map(|l| l.included().map(|m| (l, m)))
        .collect();
    if included.is_empty() {
        return Err(Error::AllLayersExcluded);
    }
    let excluded = layers
        .iter()
        .filter_map(|l| {
            l.excluded_reason().map(|reason| ExcludedLayer {
                name: l.name.clone(),
                original_shape: l.original_shape.clone(),
                reason: reason.to_string(),
            })
        })
        .collect();
    let reports = included
        .par_iter()
        .map(|(layer, matrix)| {
            analyze_matrix(&layer.name, &layer.original_shape, matrix, table, params)
        })
        .collect::<Result<Vec<_>>>()?;

    let per_plane = (0..params.q as usize)
        .map(|j| {
            let raw: f64 = reports.iter().map(|r| r.per_plane[j].raw).sum();
            let mean: f64 = reports.iter().map(|r| r.per_plane[j].baseline_mean).sum();
            let var: f64 = reports
                .iter()
                .map(|r| r.per_plane[j].baseline_std.powi(2))
                .sum();
            Ok(PlaneReport {
                plane: reports[0].per_plane[j].plane,
                raw,
                baseline_mean: mean,
                baseline_std: var.sqrt(),
                ratio: delta_c(raw, mean)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_raw: f64 = reports.iter().map(|r| r.total_raw).sum();
    let total_baseline_mean: f64 = reports.iter().map(|r| r.total_baseline_mean).sum();
    let total_baseline_std = reports
        .iter()
        .map(|r| r.total_baseline_std.powi(2))
        .sum::<f64>()
        .sqrt();

    Ok(ComplexityReport {
        q: params.q,
        block_shape: params.spec.block_shape,
        boundary: params.spec.boundary,
        seed: params.seed,
        baseline_samples: params.baseline_samples,
        rng: rng::RNG_ALGORITHM.to_string(),
        plane_normalization: PLANE_NORMALIZATION.to_string(),
        quantization: QUANTIZATION_SCOPE.to_string(),
        per_plane,
        total_raw,
        total_baseline_mean,
        total_baseline_std,
        total_ratio: delta_c(total_raw, total_baseline_mean)?,
        layers: reports,
        excluded,
    })
}
