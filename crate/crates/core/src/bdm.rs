//! Block decomposition: tile a binary matrix into fixed-shape blocks and sum
//! `CTM(w) + log2(n_w)` over the distinct blocks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctm::CtmTable;
use crate::error::{Error, Result};
use crate::represent::BinaryMatrix;

/// Matrices with at least this many tile rows are counted in parallel.
const PARALLEL_TILE_ROWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Incomplete edge tiles are discarded.
    #[default]
    Drop,
    /// Edges are zero-padded to full tiles.
    #[serde(rename = "pad", alias = "pad_zero")]
    PadZero,
}

impl fmt::Display for BoundaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryPolicy::Drop => "drop",
            BoundaryPolicy::PadZero => "pad",
        })
    }
}

impl FromStr for BoundaryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(BoundaryPolicy::Drop),
            "pad" | "pad_zero" => Ok(BoundaryPolicy::PadZero),
            other => Err(Error::InvalidParameter(format!(
                "unknown boundary policy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub block_shape: (usize, usize),
    pub boundary: BoundaryPolicy,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            block_shape: (4, 4),
            boundary: BoundaryPolicy::Drop,
        }
    }
}

impl PartitionSpec {
    pub fn new(block_shape: (usize, usize), boundary: BoundaryPolicy) -> Result<Self> {
        let (r, c) = block_shape;
        if r == 0 || c == 0 || r * c > 64 {
            return Err(Error::InvalidParameter(format!(
                "unsupported block shape {r}x{c}"
            )));
        }
        Ok(Self {
            block_shape,
            boundary,
        })
    }

    pub fn block_bits(&self) -> usize {
        self.block_shape.0 * self.block_shape.1
    }
}

/// Distinct blocks with their occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockMultiset {
    pub block_shape: (usize, usize),
    pub counts: BTreeMap<u64, u64>,
    pub total_blocks: u64,
}

impl BlockMultiset {
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Adds every occurrence of `other`.
    pub fn merge(&mut self, other: &BlockMultiset) {
        for (&k, &n) in &other.counts {
            *self.counts.entry(k).or_insert(0) += n;
        }
        self.total_blocks += other.total_blocks;
    }
}

fn tile_key(bm: &BinaryMatrix, top: usize, left: usize, (br, bc): (usize, usize)) -> u64 {
    let bits = bm.bits();
    let mut key = 0u64;
    for r in top..top + br {
        for c in left..left + bc {
            let b = if r < bits.rows() && c < bits.cols() {
                bits.get(r, c)
            } else {
                0
            };
            key = (key << 1) | u64::from(b);
        }
    }
    key
}

fn count_tile_rows(
    bm: &BinaryMatrix,
    shape: (usize, usize),
    tile_rows: std::ops::Range<usize>,
    tile_cols: usize,
) -> HashMap<u64, u64> {
    let mut counts = HashMap::new();
    for tr in tile_rows {
        for tc in 0..tile_cols {
            *counts
                .entry(tile_key(bm, tr * shape.0, tc * shape.1, shape))
                .or_insert(0) += 1;
        }
    }
    counts
}

/// Non-overlapping tiling in row-major tile order.
pub fn partition(bm: &BinaryMatrix, spec: &PartitionSpec) -> Result<BlockMultiset> {
    let (rows, cols) = bm.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(
            "cannot partition an empty matrix".into(),
        ));
    }
    let (br, bc) = spec.block_shape;
    let (tile_rows, tile_cols) = match spec.boundary {
        BoundaryPolicy::Drop => (rows / br, cols / bc),
        BoundaryPolicy::PadZero => (rows.div_ceil(br), cols.div_ceil(bc)),
    };
    if tile_rows == 0 || tile_cols == 0 {
        return Err(Error::EmptyAfterDrop {
            rows,
            cols,
            block: spec.block_shape,
        });
    }

    let counts: HashMap<u64, u64> = if tile_rows >= PARALLEL_TILE_ROWS {
        (0..tile_rows)
            .into_par_iter()
            .fold(HashMap::new, |mut acc, tr| {
                for (k, n) in count_tile_rows(bm, spec.block_shape, tr..tr + 1, tile_cols) {
                    *acc.entry(k).or_insert(0) += n;
                }
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, n) in b {
                    *a.entry(k).or_insert(0) += n;
                }
                a
            })
    } else {
        count_tile_rows(bm, spec.block_shape, 0..tile_rows, tile_cols)
    };

    Ok(BlockMultiset {
        block_shape: spec.block_shape,
        counts: counts.into_iter().collect(),
        total_blocks: (tile_rows * tile_cols) as u64,
    })
}

/// `Σ_w CTM(w) + log2(n_w)`, accumulated in ascending key order.
pub fn score_multiset(ms: &BlockMultiset, table: &CtmTable) -> Result<f64> {
    if ms.block_shape != table.block_shape() {
        return Err(Error::ShapeMismatch {
            expected: table.block_shape(),
            found: ms.block_shape,
        });
    }
    ms.counts.iter().try_fold(0.0, |acc, (&key, &n)| {
        Ok(acc + table.lookup_key(key)? + (n as f64).log2())
    })
}

pub fn bdm_score(bm: &BinaryMatrix, table: &CtmTable, spec: &PartitionSpec) -> Result<f64> {
    if spec.block_shape != table.block_shape() {
        return Err(Error::ShapeMismatch {
            expected: table.block_shape(),
            found: spec.block_shape,
        });
    }
    score_multiset(&partition(bm, spec)?, table)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHistogram {
    /// Distinct blocks present.
    pub distinct: usize,
    pub max_count: u64,
    /// Occurrence counts in ascending key order.
    pub counts: Vec<u64>,
}

pub fn block_histogram(ms: &BlockMultiset) -> BlockHistogram {
    let counts: Vec<u64> = ms.counts.values().copied().collect();
    BlockHistogram {
        distinct: counts.len(),
        max_count: counts.iter().copied().max().unwrap_or(0),
        counts,
    }
}
