//! Min-max uniform affine quantizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Ranges narrower than this collapse to the all-zero code.
pub const EPSILON: f64 = 1e-12;

pub const MAX_BITS: u32 = 16;

/// A grid of `q`-bit symbols together with the affine map that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    pub symbols: Grid<u16>,
    pub q: u32,
    pub w_min: f64,
    pub w_max: f64,
    /// Width of one quantization step; zero in the constant-input branch.
    pub scale: f64,
}

impl QuantizedTensor {
    /// Wraps symbols that are already integer codes.
    pub fn from_symbols(symbols: Grid<u16>, q: u32) -> Result<Self> {
        check_bits(q)?;
        let q_max = max_symbol(q);
        if let Some(&bad) = symbols.iter().find(|&&s| u32::from(s) > q_max) {
            return Err(Error::InvalidParameter(format!(
                "symbol {bad} does not fit in {q} bits"
            )));
        }
        Ok(Self {
            symbols,
            q,
            w_min: 0.0,
            w_max: f64::from(q_max),
            scale: 1.0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.symbols.shape()
    }

    pub fn q_max(&self) -> u32 {
        max_symbol(self.q)
    }
}

pub(crate) fn check_bits(q: u32) -> Result<()> {
    if (1..=MAX_BITS).contains(&q) {
        Ok(())
    } else {
        Err(Error::BitDepthOutOfRange(q))
    }
}

pub(crate) fn max_symbol(q: u32) -> u32 {
    (1u32 << q) - 1
}

/// Maps every entry to `clip(round((w - w_min) / s), 0, 2^q - 1)`.
///
/// Ties round half away from zero. A tensor whose range is below
/// [`EPSILON`] maps to all zeros with `scale = 0`.
pub fn quantize(tensor: &Grid<f64>, q: u32) -> Result<QuantizedTensor> {
    check_bits(q)?;
    if tensor.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot quantize an empty tensor".into(),
        ));
    }
    if tensor.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (w_min, w_max) = tensor
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| {
            (lo.min(w), hi.max(w))
        });
    let range = w_max - w_min;
    let q_max = max_symbol(q);
    if range < EPSILON {
        return Ok(QuantizedTensor {
            symbols: tensor.map(|_| 0),
            q,
            w_min,
            w_max,
            scale: 0.0,
        });
    }
    let scale = range / f64::from(q_max);
    let symbols = tensor.map(|&w| {
        // f64::round is half-away-from-zero.
        let code = ((w - w_min) / scale).round();
        code.clamp(0.0, f64::from(q_max)) as u16
    });
    Ok(QuantizedTensor {
        symbols,
        q,
        w_min,
        w_max,
        scale,
    })
}

/// `s * code + w_min` elementwise.
pub fn dequantize(qt: &QuantizedTensor) -> Grid<f64> {
    qt.symbols
        .map(|&code| qt.scale * f64::from(code) + qt.w_min)
}
