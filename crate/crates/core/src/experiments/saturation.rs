use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctm::CtmTable;
use crate::error::{Error, Result};
use crate::quantize;
use crate::qubd::Stats;
use crate::rng;

/// `1 - (1 - 1/H)^m`: expected fraction of an `H`-block support seen after
/// `m` independent uniform draws.
pub fn saturation_closed_form(m: f64, h: u64) -> f64 {
    if m <= 0.0 || h == 0 {
        return 0.0;
    }
    if h == 1 {
        return 1.0;
    }
    let miss = (m * (-1.0 / h as f64).ln_1p()).exp();
    1.0 - miss
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationThreshold {
    pub support: u64,
    pub epsilon: f64,
    pub block_bits: usize,
    pub q: u32,
    /// Blocks needed for `1 - epsilon` expected coverage.
    pub m_epsilon: u64,
    /// Symbols needed when each symbol contributes one bit.
    pub d_bin: f64,
    /// Symbols needed when each symbol contributes `q` serialized bits.
    pub d_ser: f64,
    /// Symbols needed to saturate a single bit-plane.
    pub d_plane: f64,
}

pub fn saturation_threshold(
    support: u64,
    epsilon: f64,
    block_bits: usize,
    q: u32,
) -> Result<SaturationThreshold> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    if support < 2 {
        return Err(Error::InvalidParameter(format!(
            "support must be at least 2, got {support}"
        )));
    }
    if block_bits == 0 || q == 0 {
        return Err(Error::InvalidParameter(
            "block bits and q must be positive".into(),
        ));
    }
    let m = (epsilon.ln() / (-1.0 / support as f64).ln_1p()).ceil();
    let pi = block_bits as f64;
    Ok(SaturationThreshold {
        support,
        epsilon,
        block_bits,
        q,
        m_epsilon: m as u64,
        d_bin: pi * m,
        d_ser: pi * m / f64::from(q),
        d_plane: pi * m,
    })
}

/// Exposure used by the coverage simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exposure {
    /// `d` blocks drawn uniformly from the table support.
    Uniform,
    /// Each bit-plane of `d` uniform symbols, coverage averaged over planes.
    Plane,
    /// The MSB-first bit stream of `d` uniform symbols.
    Serialized,
    /// One bit per symbol.
    Binary,
}

impl fmt::Display for Exposure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exposure::Uniform => "uniform",
            Exposure::Plane => "plane",
            Exposure::Serialized => "serialized",
            Exposure::Binary => "binary",
        })
    }
}

impl FromStr for Exposure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Exposure::Uniform),
            "plane" => Ok(Exposure::Plane),
            "serialized" => Ok(Exposure::Serialized),
            "binary" | "one-bit" | "sign" => Ok(Exposure::Binary),
            other => Err(Error::InvalidParameter(format!(
                "unknown exposure `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    ClosedForm,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    /// Blocks exposed (per plane for plane exposure).
    pub m: f64,
    pub sigma: f64,
    /// Symbols drawn, for simulated curves.
    pub d: Option<u64>,
    pub std_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationCurve {
    pub support: u64,
    pub kind: CurveKind,
    pub exposure: Option<Exposure>,
    pub q: Option<u32>,
    pub block_bits: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub points: Vec<SaturationPoint>,
}

pub fn closed_form_curve(support: u64, m_grid: &[f64]) -> SaturationCurve {
    let mut grid = m_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    SaturationCurve {
        support,
        kind: CurveKind::ClosedForm,
        exposure: None,
        q: None,
        block_bits: None,
        trials: None,
        seed: None,
        points: grid
            .into_iter()
            .map(|m| SaturationPoint {
                m,
                sigma: saturation_closed_form(m, support),
                d: None,
                std_err: None,
            })
            .collect(),
    }
}

/// Distinct-key tracker over the table support.
enum Seen {
    Bits(Vec<u64>),
    Set(HashSet<u64>),
}

impl Seen {
    fn new(block_bits: usize) -> Self {
        if block_bits <= 24 {
            Seen::Bits(vec![0; (1usize << block_bits).div_ceil(64)])
        } else {
            Seen::Set(HashSet::new())
        }
    }

    fn clear(&mut self) {
        match self {
            Seen::Bits(words) => words.fill(0),
            Seen::Set(set) => set.clear(),
        }
    }

    /// True the first time `key` is inserted.
    fn insert(&mut self, key: u64) -> bool {
        match self {
            Seen::Bits(words) => {
                let (w, b) = ((key / 64) as usize, key % 64);
                let fresh = words[w] >> b & 1 == 0;
                words[w] |= 1 << b;
                fresh
            }
            Seen::Set(set) => set.insert(key),
        }
    }
}

struct Chunker<'a> {
    table: &'a CtmTable,
    block_bits: usize,
    key: u64,
    filled: usize,
    seen: Seen,
    covered: u64,
}

impl<'a> Chunker<'a> {
    fn new(table: &'a CtmTable) -> Self {
        let block_bits = table.block_bits();
        Self {
            table,
            block_bits,
            key: 0,
            filled: 0,
            seen: Seen::new(block_bits),
            covered: 0,
        }
    }

    fn reset(&mut self) {
        self.key = 0;
        self.filled = 0;
        self.covered = 0;
        self.seen.clear();
    }

    fn push_key(&mut self, key: u64) {
        if self.table.get(key).is_some() && self.seen.insert(key) {
            self.covered += 1;
        }
    }

    fn push_bit(&mut self, bit: u64) {
        self.key = (self.key << 1) | bit;
        self.filled += 1;
        if self.filled == self.block_bits {
            let key = self.key;
            self.key = 0;
            self.filled = 0;
            self.push_key(key);
        }
    }
}

fn blocks_exposed(exposure: Exposure, d: u64, q: u32, block_bits: usize) -> f64 {
    let pi = block_bits as u64;
    (match exposure {
        Exposure::Uniform => d,
        Exposure::Plane | Exposure::Binary => d / pi,
        Exposure::Serialized => d * u64::from(q) / pi,
    }) as f64
}

fn simulate_trial(
    table: &CtmTable,
    support_keys: &[u64],
    exposure: Exposure,
    q: u32,
    d: u64,
    seed: u64,
    stream: u64,
) -> f64 {
    let mut rng = rng::stream(seed, stream);
    let support = support_keys.len() as f64;
    let mut chunker = Chunker::new(table);
    let top = q - 1;
    match exposure {
        Exposure::Uniform => {
            for _ in 0..d {
                chunker.push_key(support_keys[rng.random_range(0..support_keys.len())]);
            }
            chunker.covered as f64 / support
        }
        Exposure::Binary => {
            for _ in 0..d {
                let s: u32 = rng.random_range(0..1u32 << q);
                chunker.push_bit(u64::from(s >> top & 1));
            }
            chunker.covered as f64 / support
        }
        Exposure::Serialized => {
            for _ in 0..d {
                let s: u32 = rng.random_range(0..1u32 << q);
                for l in (0..q).rev() {
                    chunker.push_bit(u64::from(s >> l & 1));
                }
            }
            chunker.covered as f64 / support
        }
        Exposure::Plane => {
            let symbols: Vec<u32> = (0..d).map(|_| rng.random_range(0..1u32 << q)).collect();
            let mut total = 0.0;
            for l in (0..q).rev() {
                chunker.reset();
                for &s in &symbols {
                    chunker.push_bit(u64::from(s >> l & 1));
                }
                total += chunker.covered as f64 / support;
            }
            total / f64::from(q)
        }
    }
}

/// Empirical coverage of the table support after exposing `d` uniform
/// `q`-bit symbols (or `d` uniform blocks), averaged over trials.
///
/// Trial `t` at grid index `i` draws from stream `(i << 32) | t`, so results
/// do not depend on the thread pool.
pub fn saturation_simulate(
    table: &CtmTable,
    exposure: Exposure,
    q: u32,
    d_grid: &[u64],
    trials: usize,
    seed: u64,
) -> Result<SaturationCurve> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    quantize::check_bits(q)?;
    let support_keys: Vec<u64> = table.entries().map(|(k, _)| k).collect();
    if support_keys.is_empty() {
        return Err(Error::InvalidParameter("table has an empty support".into()));
    }
    let mut grid = d_grid.to_vec();
    grid.sort_unstable();
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let values: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    simulate_trial(
                        table,
                        &support_keys,
                        exposure,
                        q,
                        d,
                        seed,
                        (i as u64) << 32 | t,
                    )
                })
                .collect();
            let stats = Stats::of(&values);
            SaturationPoint {
                m: blocks_exposed(exposure, d, q, table.block_bits()),
                sigma: stats.mean,
                d: Some(d),
                std_err: Some(stats.std / (trials as f64).sqrt()),
            }
        })
        .collect();
    Ok(SaturationCurve {
        support: support_keys.len() as u64,
        kind: CurveKind::Simulated,
        exposure: Some(exposure),
        q: Some(q),
        block_bits: Some(table.block_bits()),
        trials: Some(trials),
        seed: Some(seed),
        points,
    })
}
