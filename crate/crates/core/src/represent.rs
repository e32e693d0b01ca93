//! Binary exposures of a quantized object: bit-planes, MSB prefixes and
//! residuals, serialization, one-bit quantization and sign binarization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quantize::{self, QuantizedTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Bit `ℓ` of every symbol; `ℓ = q - 1` is the MSB plane.
    Plane(u32),
    Serialized,
    Sign,
    OneBit,
    Raw,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Plane(l) => write!(f, "plane({l})"),
            Provenance::Serialized => f.write_str("serialized"),
            Provenance::Sign => f.write_str("sign"),
            Provenance::OneBit => f.write_str("one-bit"),
            Provenance::Raw => f.write_str("raw"),
        }
    }
}

/// A 0/1 matrix plus a tag recording how it was exposed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    bits: Grid<u8>,
    pub provenance: Provenance,
}

impl BinaryMatrix {
    pub fn new(bits: Grid<u8>, provenance: Provenance) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!(
                "bit value {b} is not 0 or 1"
            )));
        }
        Ok(Self { bits, provenance })
    }

    pub fn raw(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        Self::new(Grid::new(rows, cols, bits)?, Provenance::Raw)
    }

    /// Parses rows of `0`/`1` characters.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut bits = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::InvalidParameter("ragged bit rows".into()));
            }
            for ch in row.chars() {
                match ch {
                    '0' => bits.push(0),
                    '1' => bits.push(1),
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "bad bit character {other:?}"
                        )))
                    }
                }
            }
        }
        Self::raw(rows.len(), cols, bits)
    }

    pub(crate) fn from_grid_unchecked(bits: Grid<u8>, provenance: Provenance) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits, provenance }
    }

    pub fn bits(&self) -> &Grid<u8> {
        &self.bits
    }

    pub fn rows(&self) -> usize {
        self.bits.rows()
    }

    pub fn cols(&self) -> usize {
        self.bits.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.bits.shape()
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.bits.get(r, c)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Prefix and residual of a symbol grid after keeping its `k` MSB planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSplit {
    pub prefix: QuantizedTensor,
    /// Low-order bits, each in `0..2^(q_star - k)`.
    pub residual: Grid<u32>,
    pub k: u32,
    pub q_star: u32,
}

impl ResidualSplit {
    /// `2^(q_star - k) * prefix + residual`.
    pub fn reconstruct(&self) -> Grid<u32> {
        let shift = self.q_star - self.k;
        let data = self
            .prefix
            .symbols
            .iter()
            .zip(self.residual.iter())
            .map(|(&p, &d)| (u32::from(p) << shift) + d)
            .collect();
        Grid::new(self.residual.rows(), self.residual.cols(), data)
            .expect("prefix and residual share a shape")
    }
}

/// Planes ordered MSB (`ℓ = q - 1`) first down to the LSB.
pub fn bit_planes(qt: &QuantizedTensor) -> Vec<BinaryMatrix> {
    (0..qt.q).rev().map(|l| bit_plane(qt, l)).collect()
}

/// Plane `ℓ` alone.
pub fn bit_plane(qt: &QuantizedTensor, l: u32) -> BinaryMatrix {
    BinaryMatrix::from_grid_unchecked(
        qt.symbols.map(|&s| ((s >> l) & 1) as u8),
        Provenance::Plane(l),
    )
}

fn check_k(qt: &QuantizedTensor, k: u32) -> Result<()> {
    if (1..=qt.q).contains(&k) {
        Ok(())
    } else {
        Err(Error::KOutOfRange { k, q: qt.q })
    }
}

/// `floor(symbol / 2^(q - k))`: the symbol's top `k` bits.
///
/// The returned tensor keeps the original range; its step widens by
/// `2^(q - k)` so that dequantizing lands on the lower edge of each interval.
pub fn msb_prefix(qt: &QuantizedTensor, k: u32) -> Result<QuantizedTensor> {
    check_k(qt, k)?;
    let shift = qt.q - k;
    Ok(QuantizedTensor {
        symbols: qt.symbols.map(|&s| s >> shift),
        q: k,
        w_min: qt.w_min,
        w_max: qt.w_max,
        scale: qt.scale * f64::from(1u32 << shift),
    })
}

pub fn residual_split(qt: &QuantizedTensor, k: u32) -> Result<ResidualSplit> {
    let prefix = msb_prefix(qt, k)?;
    let mask = (1u32 << (qt.q - k)) - 1;
    Ok(ResidualSplit {
        prefix,
        residual: qt.symbols.map(|&s| u32::from(s) & mask),
        k,
        q_star: qt.q,
    })
}

/// Expands every symbol MSB-first in place along its row, giving a
/// `rows x (cols * q)` matrix.
pub fn serialize(qt: &QuantizedTensor) -> BinaryMatrix {
    let (rows, cols) = qt.shape();
    let q = qt.q as usize;
    let bits = Grid::from_fn(rows, cols * q, |r, c| {
        let symbol = qt.symbols.get(r, c / q);
        let l = q - 1 - c % q;
        ((symbol >> l) & 1) as u8
    });
    BinaryMatrix::from_grid_unchecked(bits, Provenance::Serialized)
}

/// 1 where the entry is `>= 0`, so exact zero maps to 1.
pub fn sign_binarize(tensor: &Grid<f64>) -> Result<BinaryMatrix> {
    if tensor.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(BinaryMatrix::from_grid_unchecked(
        tensor.map(|&w| u8::from(w >= 0.0)),
        Provenance::Sign,
    ))
}

/// The `q = 1` quantizer read as bits.
pub fn one_bit(tensor: &Grid<f64>) -> Result<BinaryMatrix> {
    let qt = quantize::quantize(tensor, 1)?;
    Ok(BinaryMatrix::from_grid_unchecked(
        qt.symbols.map(|&s| s as u8),
        Provenance::OneBit,
    ))
}
