use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{near_square, score_symbols, Experiment, GapResult, Method, Normalizer};
use crate::bdm::PartitionSpec;
use crate::ctm::CtmTable;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quantize::QuantizedTensor;
use crate::qubd::{self, Stats};
use crate::represent;
use crate::rng;

/// Planes of the aligned object, and the bit depth of its symbols.
pub const ALIGNED_BITS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualParams {
    pub planes: Vec<u32>,
    pub relabel_trials: usize,
    pub seed: u64,
}

/// An 8-bit object whose planes jointly enumerate the whole table support.
///
/// The support, in ascending key order, is cut into eight equal contiguous
/// runs. Plane `7 - j` tiles run `j` row-major over the most-square tile grid,
/// so every supported block occurs exactly once across all planes and the
/// top `k` planes hold the first `k` runs.
pub fn aligned_object(table: &CtmTable) -> Result<QuantizedTensor> {
    if !table.is_complete() {
        return Err(Error::IncompleteTable {
            present: table.support(),
            expected: 1usize << table.block_bits(),
        });
    }
    let keys: Vec<u64> = table.entries().map(|(k, _)| k).collect();
    let planes = ALIGNED_BITS as usize;
    if !keys.len().is_multiple_of(planes) {
        return Err(Error::InvalidParameter(format!(
            "support of {} blocks does not split into {planes} planes",
            keys.len()
        )));
    }
    let per_plane = keys.len() / planes;
    let (tile_rows, tile_cols) = near_square(per_plane, 1).expect("per-plane count is positive");
    let (br, bc) = table.block_shape();
    let bits = br * bc;
    let (rows, cols) = (tile_rows * br, tile_cols * bc);
    let symbols = Grid::from_fn(rows, cols, |r, c| {
        let tile = (r / br) * tile_cols + c / bc;
        let offset = bits - 1 - ((r % br) * bc + c % bc);
        (0..planes).fold(0u16, |acc, j| {
            let bit = (keys[j * per_plane + tile] >> offset) & 1;
            acc | ((bit as u16) << (planes - 1 - j))
        })
    });
    QuantizedTensor::from_symbols(symbols, ALIGNED_BITS)
}

/// Applies a uniformly random bijection of `0..2^q` to every symbol.
pub fn relabel(qt: &QuantizedTensor, rng: &mut impl rand::Rng) -> QuantizedTensor {
    let mut map: Vec<u16> = (0..=qt.q_max() as u16).collect();
    map.shuffle(rng);
    QuantizedTensor::from_symbols(qt.symbols.map(|&s| map[usize::from(s)]), qt.q)
        .expect("relabeling stays in range")
}

fn relative_gap(score: f64, reference: f64) -> f64 {
    (score - reference).abs() / reference
}

/// Gaps to the support reference `Σ_w CTM(w)`: first one row per retained
/// plane count for the aligned object, then one row per method for random
/// relabelings of it.
pub fn residual_bench(
    table: &CtmTable,
    spec: &PartitionSpec,
    params: &ResidualParams,
) -> Result<Vec<GapResult>> {
    if spec.block_shape != table.block_shape() {
        return Err(Error::ShapeMismatch {
            expected: table.block_shape(),
            found: spec.block_shape,
        });
    }
    let object = aligned_object(table)?;
    for &k in &params.planes {
        if !(1..=ALIGNED_BITS).contains(&k) {
            return Err(Error::KOutOfRange { k, q: ALIGNED_BITS });
        }
    }
    if params.relabel_trials == 0 {
        return Err(Error::InvalidParameter(
            "need at least one relabel trial".into(),
        ));
    }
    let reference = table.support_total();
    let d = object.symbols.len();
    let row = |experiment, method, planes_kept, trials, values: Vec<f64>| {
        let stats = Stats::of(&values);
        GapResult {
            experiment,
            method,
            d,
            rho: None,
            planes_kept,
            trials,
            seed: params.seed,
            shape: object.shape(),
            normalizer: Normalizer::SupportReference,
            normalizer_bits: reference,
            mean: stats.mean,
            std: stats.std,
            values,
        }
    };

    let mut results = params
        .planes
        .par_iter()
        .map(|&k| {
            let prefix = represent::msb_prefix(&object, k)?;
            let score = qubd::qubd_score_symbols(&prefix, table, spec)?.total;
            Ok(row(
                Experiment::Aligned,
                Method::Qubd,
                Some(k),
                1,
                vec![relative_gap(score, reference)],
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let relabeled: Vec<QuantizedTensor> = (0..params.relabel_trials as u64)
        .map(|t| relabel(&object, &mut rng::stream(params.seed, t)))
        .collect();
    for method in Method::ALL {
        let values = relabeled
            .par_iter()
            .map(|qt| {
                Ok(relative_gap(
                    score_symbols(&qt.symbols, qt.q, method, table, spec)?,
                    reference,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let planes = (method == Method::Qubd).then_some(ALIGNED_BITS);
        results.push(row(
            Experiment::Relabeled,
            method,
            planes,
            params.relabel_trials,
            values,
        ));
    }
    Ok(results)
}
