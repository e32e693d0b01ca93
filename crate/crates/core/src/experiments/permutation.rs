use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    histogram, near_square, score_symbols, type_class_bits, Experiment, GapResult, Method,
    Normalizer,
};
use crate::bdm::PartitionSpec;
use crate::ctm::CtmTable;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::qubd::Stats;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationParams {
    pub d: usize,
    pub alphabet: usize,
    pub rho: f64,
    pub method: Method,
    pub trials: usize,
    pub seed: u64,
}

fn alphabet_bits(alphabet: usize) -> Result<u32> {
    if alphabet >= 2 && alphabet.is_power_of_two() && alphabet <= 1 << 16 {
        Ok(alphabet.trailing_zeros())
    } else {
        Err(Error::InvalidParameter(format!(
            "alphabet must be a power of two in 2..=65536, got {alphabet}"
        )))
    }
}

/// Symbols `0..alphabet`, each repeated `d / alphabet` times in ascending
/// order, laid out row-major in the most-square matrix whose width is a
/// multiple of `col_multiple`.
pub fn ordered_object(d: usize, alphabet: usize, col_multiple: usize) -> Result<Grid<u16>> {
    alphabet_bits(alphabet)?;
    if d == 0 || !d.is_multiple_of(alphabet) {
        return Err(Error::InvalidParameter(format!(
            "d = {d} must be a positive multiple of the alphabet size {alphabet}"
        )));
    }
    let (rows, cols) = near_square(d, col_multiple).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "d = {d} has no layout with width a multiple of {col_multiple}"
        ))
    })?;
    let run = d / alphabet;
    let data = (0..d).map(|i| (i / run) as u16).collect();
    Grid::new(rows, cols, data)
}

/// Shuffles the values at `ceil(rho * len)` positions chosen uniformly
/// without replacement.
pub fn permute_fraction<T: Copy>(x: &Grid<T>, rho: f64, rng: &mut impl rand::Rng) -> Grid<T> {
    let len = x.len();
    let n = ((rho * len as f64).ceil() as usize).min(len);
    let mut data = x.as_slice().to_vec();
    let positions = index::sample(rng, len, n).into_vec();
    let mut values: Vec<T> = positions.iter().map(|&p| data[p]).collect();
    values.shuffle(rng);
    for (&p, v) in positions.iter().zip(values) {
        data[p] = v;
    }
    Grid::new(x.rows(), x.cols(), data).expect("shape is unchanged")
}

/// `(score(x_rho) - score(x)) / type_class_bits(x)` per trial, where `x` is
/// the ordered object and trial `t` permutes with stream `t` of `seed`.
pub fn permutation_bench(
    params: &PermutationParams,
    table: &CtmTable,
    spec: &PartitionSpec,
) -> Result<GapResult> {
    let q = alphabet_bits(params.alphabet)?;
    if !(0.0..=1.0).contains(&params.rho) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [0, 1], got {}",
            params.rho
        )));
    }
    if params.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let x = ordered_object(params.d, params.alphabet, spec.block_shape.1)?;
    let base = score_symbols(&x, q, params.method, table, spec)?;
    let normalizer = type_class_bits(&histogram(&x, params.alphabet));
    if normalizer <= 0.0 {
        return Err(Error::InvalidParameter(
            "type class of the object is trivial".into(),
        ));
    }
    let values = (0..params.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(params.seed, t);
            let permuted = permute_fraction(&x, params.rho, &mut rng);
            Ok((score_symbols(&permuted, q, params.method, table, spec)? - base) / normalizer)
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = Stats::of(&values);
    Ok(GapResult {
        experiment: Experiment::Permutation,
        method: params.method,
        d: params.d,
        rho: Some(params.rho),
        planes_kept: None,
        trials: params.trials,
        seed: params.seed,
        shape: x.shape(),
        normalizer: Normalizer::TypeClassBits,
        normalizer_bits: normalizer,
        mean: stats.mean,
        std: stats.std,
        values,
    })
}
