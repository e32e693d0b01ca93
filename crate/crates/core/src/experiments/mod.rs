//! Analytical model and synthetic experiments: finite-table saturation,
//! type-class normalization with the permutation gap, and the residual gap
//! against the full CTM support.

mod permutation;
mod residual;
mod saturation;

pub use permutation::{ordered_object, permutation_bench, permute_fraction, PermutationParams};
pub use residual::{aligned_object, relabel, residual_bench, ResidualParams, ALIGNED_BITS};
pub use saturation::{
    closed_form_curve, saturation_closed_form, saturation_simulate, saturation_threshold,
    CurveKind, Exposure, SaturationCurve, SaturationPoint, SaturationThreshold,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bdm::{self, PartitionSpec};
use crate::ctm::CtmTable;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quantize::QuantizedTensor;
use crate::qubd;
use crate::represent;

/// How a symbol object is exposed to the block estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Qubd,
    Serialized,
    OneBit,
    Sign,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Qubd,
        Method::Serialized,
        Method::OneBit,
        Method::Sign,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qubd => "qubd",
            Method::Serialized => "serialized",
            Method::OneBit => "one-bit",
            Method::Sign => "sign",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubd" => Ok(Method::Qubd),
            "serialized" => Ok(Method::Serialized),
            "one-bit" | "one_bit" => Ok(Method::OneBit),
            "sign" => Ok(Method::Sign),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Scores a `q`-bit symbol grid under one exposure method.
///
/// `Sign` binarizes the symbols after centering them on the middle of the
/// alphabet, `(2^q - 1) / 2`.
pub fn score_symbols(
    symbols: &Grid<u16>,
    q: u32,
    method: Method,
    table: &CtmTable,
    spec: &PartitionSpec,
) -> Result<f64> {
    match method {
        Method::Qubd => {
            let qt = QuantizedTensor::from_symbols(symbols.clone(), q)?;
            Ok(qubd::qubd_score_symbols(&qt, table, spec)?.total)
        }
        Method::Serialized => {
            let qt = QuantizedTensor::from_symbols(symbols.clone(), q)?;
            bdm::bdm_score(&represent::serialize(&qt), table, spec)
        }
        Method::OneBit => {
            let values = symbols.map(|&s| f64::from(s));
            bdm::bdm_score(&represent::one_bit(&values)?, table, spec)
        }
        Method::Sign => {
            let center = f64::from((1u32 << q) - 1) / 2.0;
            let values = symbols.map(|&s| f64::from(s) - center);
            bdm::bdm_score(&represent::sign_binarize(&values)?, table, spec)
        }
    }
}

/// `log2(d! / Π n_a!)`, the size of the type class of a histogram in bits.
pub fn type_class_bits(counts: &[u64]) -> f64 {
    let d: u64 = counts.iter().sum();
    if d == 0 {
        return 0.0;
    }
    let ln_fact = |n: u64| ln_gamma(n as f64 + 1.0);
    let ln = ln_fact(d)
        - counts
            .iter()
            .filter(|&&n| n > 1)
            .map(|&n| ln_fact(n))
            .sum::<f64>();
    (ln / std::f64::consts::LN_2).max(0.0)
}

/// Symbol histogram over `0..alphabet`.
pub fn histogram(symbols: &Grid<u16>, alphabet: usize) -> Vec<u64> {
    let mut counts = vec![0u64; alphabet];
    for &s in symbols.iter() {
        counts[usize::from(s)] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Ordered object against a partial permutation of itself.
    Permutation,
    /// Aligned object scored with its top `k` planes.
    Aligned,
    /// Aligned object after a random bijective relabeling of its symbols.
    Relabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalizer {
    TypeClassBits,
    SupportReference,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Permutation => "permutation",
            Experiment::Aligned => "aligned",
            Experiment::Relabeled => "relabeled",
        })
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalizer::TypeClassBits => "type-class-bits",
            Normalizer::SupportReference => "support-reference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub experiment: Experiment,
    pub method: Method,
    pub d: usize,
    pub rho: Option<f64>,
    pub planes_kept: Option<u32>,
    pub trials: usize,
    pub seed: u64,
    pub shape: (usize, usize),
    pub normalizer: Normalizer,
    pub normalizer_bits: f64,
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

/// Most-square `rows x cols = n` with `cols` a multiple of `col_multiple`.
/// Ties go to the wider layout.
pub fn near_square(n: usize, col_multiple: usize) -> Option<(usize, usize)> {
    if n == 0 || col_multiple == 0 {
        return None;
    }
    (1..=n)
        .filter(|c| c.is_multiple_of(col_multiple) && n.is_multiple_of(*c))
        .map(|c| (n / c, c))
        .min_by_key(|&(r, c)| (r.abs_diff(c), r > c))
}
