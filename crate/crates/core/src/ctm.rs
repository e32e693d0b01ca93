//! CTM lookup tables and desk-scale 1D Turing-machine enumeration.
//!
//! Block keys are row-major bit strings. Internally a key is the integer
//! whose binary expansion is that string, first bit most significant.
//!
//! Table files come in two flavors:
//!
//! * text: one `<bitstring>,<complexity>` entry per line, optional
//!   `#shape=<rows>x<cols>` and `#class=<descriptor>` header lines;
//! * binary: `CTMT`, `u32` rows, `u32` cols, `u64` count, then per entry the
//!   key packed MSB-first into `ceil(rows*cols/8)` bytes followed by an `f64`,
//!   all little-endian.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::represent::BinaryMatrix;

pub const BINARY_MAGIC: &[u8; 4] = b"CTMT";

/// Tables up to this many bits per block are stored densely.
const DENSE_BITS: usize = 20;

/// Default cap on simulated machine-steps for [`enumerate_ctm_1d`].
pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

pub const MAX_STATES: u32 = 3;

pub fn key_to_string(key: u64, bits: usize) -> String {
    (0..bits)
        .rev()
        .map(|i| if (key >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a non-empty string of `0`/`1` characters (at most 64).
pub fn parse_key(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    s.bytes().try_fold(0u64, |acc, b| match b {
        b'0' => Some(acc << 1),
        b'1' => Some((acc << 1) | 1),
        _ => None,
    })
}

/// Row-major key of a whole binary matrix.
pub fn matrix_key(bm: &BinaryMatrix) -> u64 {
    bm.bits()
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Indexed by key; NaN marks an absent block.
    Dense {
        values: Vec<f64>,
        present: usize,
    },
    Sparse(BTreeMap<u64, f64>),
}

/// Block-to-complexity lookup for a fixed block shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmTable {
    rows: usize,
    cols: usize,
    machine_class: String,
    storage: Storage,
}

impl CtmTable {
    pub fn new(
        block_shape: (usize, usize),
        machine_class: impl Into<String>,
        entries: impl IntoIterator<Item = (u64, f64)>,
    ) -> Result<Self> {
        let (rows, cols) = block_shape;
        let bits = rows * cols;
        if rows == 0 || cols == 0 || bits > 64 {
            return Err(Error::InvalidParameter(format!(
                "unsupported block shape {rows}x{cols}"
            )));
        }
        let mut storage = if bits <= DENSE_BITS {
            Storage::Dense {
                values: vec![f64::NAN; 1 << bits],
                present: 0,
            }
        } else {
            Storage::Sparse(BTreeMap::new())
        };
        for (key, value) in entries {
            if bits < 64 && key >> bits != 0 {
                return Err(Error::InvalidParameter(format!(
                    "key {key:#x} does not fit a {rows}x{cols} block"
                )));
            }
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveComplexity {
                    key: key_to_string(key, bits),
                    value,
                });
            }
            let fresh = match &mut storage {
                Storage::Dense { values, present } => {
                    let slot = &mut values[key as usize];
                    let fresh = slot.is_nan();
                    *slot = value;
                    *present += usize::from(fresh);
                    fresh
                }
                Storage::Sparse(map) => map.insert(key, value).is_none(),
            };
            if !fresh {
                return Err(Error::InvalidParameter(format!(
                    "duplicate block {}",
                    key_to_string(key, bits)
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            machine_class: machine_class.into(),
            storage,
        })
    }

    pub fn block_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn block_bits(&self) -> usize {
        self.rows * self.cols
    }

    pub fn machine_class(&self) -> &str {
        &self.machine_class
    }

    /// Number of blocks with a stored value.
    pub fn support(&self) -> usize {
        match &self.storage {
            Storage::Dense { present, .. } => *present,
            Storage::Sparse(map) => map.len(),
        }
    }

    pub fn is_complete(&self) -> bool {
        let bits = self.block_bits();
        bits < usize::BITS as usize && self.support() == 1usize << bits
    }

    pub fn get(&self, key: u64) -> Option<f64> {
        match &self.storage {
            Storage::Dense { values, .. } => {
                values.get(key as usize).copied().filter(|v| !v.is_nan())
            }
            Storage::Sparse(map) => map.get(&key).copied(),
        }
    }

    pub fn lookup_key(&self, key: u64) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::MissingBlock {
            key: key_to_string(key, self.block_bits()),
        })
    }

    /// Complexity of a block-shaped binary matrix.
    pub fn lookup(&self, block: &BinaryMatrix) -> Result<f64> {
        if block.shape() != self.block_shape() {
            return Err(Error::ShapeMismatch {
                expected: self.block_shape(),
                found: block.shape(),
            });
        }
        self.lookup_key(matrix_key(block))
    }

    /// Entries in ascending key order.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match &self.storage {
            Storage::Dense { values, .. } => Box::new(
                values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_nan())
                    .map(|(k, &v)| (k as u64, v)),
            ),
            Storage::Sparse(map) => Box::new(map.iter().map(|(&k, &v)| (k, v))),
        }
    }

    /// Sum of every stored value, each block counted once.
    pub fn support_total(&self) -> f64 {
        self.entries().map(|(_, v)| v).sum()
    }

    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "#shape={}x{}", self.rows, self.cols)?;
        writeln!(out, "#class={}", self.machine_class)?;
        let bits = self.block_bits();
        for (key, value) in self.entries() {
            writeln!(out, "{},{:?}", key_to_string(key, bits), value)?;
        }
        Ok(())
    }

    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(self.rows as u32).to_le_bytes())?;
        out.write_all(&(self.cols as u32).to_le_bytes())?;
        out.write_all(&(self.support() as u64).to_le_bytes())?;
        let bits = self.block_bits();
        let nbytes = bits.div_ceil(8);
        for (key, value) in self.entries() {
            let packed = key << (nbytes * 8 - bits);
            out.write_all(&packed.to_be_bytes()[8 - nbytes..])?;
            out.write_all(&value.to_le_bytes())?;
        }
        Ok(())
    }

    /// Writes the binary format for `.ctmt` paths and text otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        let res = if path.extension().is_some_and(|e| e == "ctmt") {
            self.write_binary(&mut buf)
        } else {
            self.write_text(&mut buf)
        };
        res.and_then(|_| fs::write(path, buf))
            .map_err(|e| Error::io(path, e))
    }
}

/// Number of supported blocks.
pub fn table_support(table: &CtmTable) -> usize {
    table.support()
}

/// Reads and validates a table file in either format.
pub fn load_table(
    path: impl AsRef<Path>,
    expected_shape: Option<(usize, usize)>,
) -> Result<CtmTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_table(&bytes, expected_shape)
}

pub fn parse_table(bytes: &[u8], expected_shape: Option<(usize, usize)>) -> Result<CtmTable> {
    let table = if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(bytes)?
    } else {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("table is not UTF-8: {e}"),
        })?;
        parse_text(text, expected_shape)?
    };
    match expected_shape {
        Some(expected) if expected != table.block_shape() => Err(Error::ShapeMismatch {
            expected,
            found: table.block_shape(),
        }),
        _ => Ok(table),
    }
}

fn parse_shape(s: &str) -> Option<(usize, usize)> {
    let (r, c) = s.trim().split_once(['x', 'X'])?;
    Some((r.trim().parse().ok()?, c.trim().parse().ok()?))
}

fn default_class(shape: (usize, usize)) -> String {
    format!("B2-D{}x{}", shape.0, shape.1)
}

fn isqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Text tables. Without a `#shape` header the shape is taken from
/// `expected_shape` when the key length matches it, otherwise a square shape
/// when the key length is a perfect square, otherwise a single row.
fn parse_text(text: &str, expected_shape: Option<(usize, usize)>) -> Result<CtmTable> {
    let mut header_shape = None;
    let mut class = None;
    let mut entries = Vec::new();
    let mut key_len = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(shape) = meta.strip_prefix("shape=") {
                header_shape = Some(parse_shape(shape).ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("bad shape header {shape:?}"),
                })?);
            } else if let Some(c) = meta.strip_prefix("class=") {
                class = Some(c.trim().to_string());
            }
            continue;
        }
        let (key_str, value_str) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "expected <bitstring>,<complexity>".into(),
        })?;
        let key_str = key_str.trim();
        let key = parse_key(key_str).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("{key_str:?} is not a binary key"),
        })?;
        match key_len {
            None => key_len = Some(key_str.len()),
            Some(len) if len != key_str.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("key length {} differs from {len}", key_str.len()),
                })
            }
            Some(_) => {}
        }
        let value: f64 = value_str.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("{:?} is not a number", value_str.trim()),
        })?;
        if value.is_nan() {
            return Err(Error::Parse {
                line: line_no,
                msg: "complexity is NaN".into(),
            });
        }
        entries.push((key, value));
    }

    let shape = match (header_shape, key_len) {
        (Some(shape), Some(len)) if shape.0 * shape.1 != len => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("keys of length {len} do not fit header shape {shape:?}"),
            })
        }
        (Some(shape), _) => shape,
        (None, Some(len)) => match expected_shape {
            Some(e) if e.0 * e.1 == len => e,
            _ => isqrt(len).map_or((1, len), |s| (s, s)),
        },
        (None, None) => expected_shape.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "empty table without a shape header".into(),
        })?,
    };
    CtmTable::new(
        shape,
        class.unwrap_or_else(|| default_class(shape)),
        entries,
    )
}

fn parse_binary(bytes: &[u8]) -> Result<CtmTable> {
    let truncated = |what: &str| Error::Parse {
        line: 0,
        msg: format!("binary table truncated in {what}"),
    };
    let header = bytes.get(4..20).ok_or_else(|| truncated("header"))?;
    let rows = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let bits = rows * cols;
    if bits == 0 || bits > 64 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("unsupported block shape {rows}x{cols}"),
        });
    }
    let nbytes = bits.div_ceil(8);
    let record = nbytes + 8;
    let body = &bytes[20..];
    if (body.len() as u64) != count.saturating_mul(record as u64) {
        return Err(truncated("records"));
    }
    let entries = body.chunks_exact(record).map(|rec| {
        let mut key_bytes = [0u8; 8];
        key_bytes[8 - nbytes..].copy_from_slice(&rec[..nbytes]);
        let key = u64::from_be_bytes(key_bytes) >> (nbytes * 8 - bits);
        let value = f64::from_le_bytes(rec[nbytes..].try_into().unwrap());
        (key, value)
    });
    CtmTable::new((rows, cols), default_class((rows, cols)), entries)
}

/// One transition of a 2-symbol machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Transition {
    Move { write: u8, right: bool, next: u8 },
    Halt { write: u8 },
}

/// Machines are numbered in mixed radix `4n + 2`, one digit per
/// `(state, read)` pair with the pair `state * 2 + read` least significant.
/// Digit values below `4n` encode `write = d & 1`, `move = (d >> 1) & 1`
/// (1 = right) and `next = d >> 2`; the two remaining values halt after
/// writing `d - 4n` without moving.
fn decode(digit: u64, n: u32) -> Transition {
    let moves = 4 * u64::from(n);
    if digit < moves {
        Transition::Move {
            write: (digit & 1) as u8,
            right: (digit >> 1) & 1 == 1,
            next: (digit >> 2) as u8,
        }
    } else {
        Transition::Halt {
            write: (digit - moves) as u8,
        }
    }
}

/// Runs machine `index` on a blank tape; returns the visited cells if it
/// halts within `max_steps` transitions.
fn run_machine(index: u64, n: u32, max_steps: u64, tape: &mut Vec<u8>) -> Option<String> {
    let radix = 4 * u64::from(n) + 2;
    let mut table = [Transition::Halt { write: 0 }; 2 * MAX_STATES as usize];
    let mut rest = index;
    for slot in table.iter_mut().take(2 * n as usize) {
        *slot = decode(rest % radix, n);
        rest /= radix;
    }

    let width = 2 * max_steps as usize + 1;
    tape.clear();
    tape.resize(width, 0);
    let mut head = max_steps as usize;
    let (mut lo, mut hi) = (head, head);
    let mut state = 0usize;
    for _ in 0..max_steps {
        let read = tape[head] as usize;
        match table[state * 2 + read] {
            Transition::Halt { write } => {
                tape[head] = write;
                let out = tape[lo..=hi]
                    .iter()
                    .map(|&b| if b == 1 { '1' } else { '0' })
                    .collect();
                return Some(out);
            }
            Transition::Move { write, right, next } => {
                tape[head] = write;
                if right {
                    head += 1;
                    hi = hi.max(head);
                } else {
                    head -= 1;
                    lo = lo.min(head);
                }
                state = next as usize;
            }
        }
    }
    None
}

/// Empirical output distribution of every machine in a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtmDistribution {
    pub n_states: u32,
    pub k_symbols: u32,
    pub max_steps: u64,
    pub halted_count: u64,
    pub total_count: u64,
    pub counts: BTreeMap<String, u64>,
    pub frequencies: BTreeMap<String, f64>,
}

impl CtmDistribution {
    pub fn frequency(&self, output: &str) -> Option<f64> {
        self.frequencies.get(output).copied()
    }

    /// `-log2 frequency(output)`.
    pub fn complexity(&self, output: &str) -> Option<f64> {
        self.frequency(output).map(|f| -f.log2())
    }

    pub fn machine_class(&self) -> String {
        format!(
            "TM1D-n{}-k{}-T{}",
            self.n_states, self.k_symbols, self.max_steps
        )
    }

    /// Complexities of every observed output of the given length, as a
    /// `1 x length` table.
    pub fn table_for_length(&self, length: usize) -> Result<CtmTable> {
        let entries = self
            .frequencies
            .iter()
            .filter(|(w, _)| w.len() == length)
            .map(|(w, &f)| (parse_key(w).expect("outputs are binary"), -f.log2()));
        CtmTable::new((1, length), self.machine_class(), entries)
    }
}

/// Number of machines in the `n`-state 2-symbol class, `(4n + 2)^(2n)`.
pub fn machine_count(n_states: u32) -> u64 {
    (4 * u64::from(n_states) + 2).pow(2 * n_states)
}

pub fn enumerate_ctm_1d(n_states: u32, k_symbols: u32, max_steps: u64) -> Result<CtmDistribution> {
    enumerate_ctm_1d_with_budget(n_states, k_symbols, max_steps, DEFAULT_STEP_BUDGET)
}

/// Simulates every machine of the class for at most `max_steps` steps and
/// counts halting outputs. The class is rejected up front when
/// `machines * max_steps` exceeds `step_budget`.
pub fn enumerate_ctm_1d_with_budget(
    n_states: u32,
    k_symbols: u32,
    max_steps: u64,
    step_budget: u64,
) -> Result<CtmDistribution> {
    if k_symbols != 2 {
        return Err(Error::InvalidParameter(format!(
            "only 2-symbol machines are supported, got k={k_symbols}"
        )));
    }
    if n_states == 0 || max_steps == 0 {
        return Err(Error::InvalidParameter(
            "need at least one state and one step".into(),
        ));
    }
    if n_states > MAX_STATES {
        return Err(Error::ClassTooLarge {
            reason: format!("{n_states} states exceeds the desk-scale limit of {MAX_STATES}"),
        });
    }
    let total = machine_count(n_states);
    if total.saturating_mul(max_steps) > step_budget {
        return Err(Error::ClassTooLarge {
            reason: format!(
                "{total} machines x {max_steps} steps exceeds the budget of {step_budget}"
            ),
        });
    }

    const CHUNK: u64 = 4096;
    let chunks = total.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut local = BTreeMap::new();
            let mut tape = Vec::new();
            for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                if let Some(out) = run_machine(index, n_states, max_steps, &mut tape) {
                    *local.entry(out).or_insert(0u64) += 1;
                }
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });

    let halted: u64 = counts.values().sum();
    if halted == 0 {
        return Err(Error::NoHalters { max_steps });
    }
    let frequencies = counts
        .iter()
        .map(|(w, &c)| (w.clone(), c as f64 / halted as f64))
        .collect();
    Ok(CtmDistribution {
        n_states,
        k_symbols,
        max_steps,
        halted_count: halted,
        total_count: total,
        counts,
        frequencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "00,1.0\n01,1.5\n10,1.5\n11,1.0\n";

    fn small() -> CtmTable {
        parse_table(SMALL.as_bytes(), Some((1, 2))).unwrap()
    }

    #[test]
    fn loads_minimal_table() {
        let t = small();
        assert_eq!(t.block_shape(), (1, 2));
        assert_eq!(table_support(&t), 4);
        assert!(t.is_complete());
        assert_eq!(t.machine_class(), "B2-D1x2");
    }

    #[test]
    fn shape_and_parse_errors() {
        assert!(matches!(
            parse_table(SMALL.as_bytes(), Some((2, 2))),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            parse_table(b"0a,1.0\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_table(b"00,abc\n", None),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_table(b"00,1.0\n011,1.0\n", None),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_table(b"00,0.0\n", None),
            Err(Error::NonPositiveComplexity { .. })
        ));
        assert!(matches!(
            parse_table(b"00,-2\n", None),
            Err(Error::NonPositiveComplexity { .. })
        ));
        assert!(matches!(
            parse_table(b"#shape=2x2\n00,1.0\n", None),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn lookup_values() {
        let t = small();
        let block = BinaryMatrix::from_rows(&["01"]).unwrap();
        assert_eq!(t.lookup(&block).unwrap(), 1.5);
        assert_eq!(
            t.lookup(&BinaryMatrix::from_rows(&["00"]).unwrap())
                .unwrap(),
            1.0
        );
        assert!(matches!(
            t.lookup(&BinaryMatrix::from_rows(&["0", "1"]).unwrap()),
            Err(Error::ShapeMismatch { .. })
        ));

        let partial = parse_table(b"00,1.0\n01,1.5\n10,1.5\n", Some((1, 2))).unwrap();
        assert!(!partial.is_complete());
        assert!(matches!(
            partial.lookup(&BinaryMatrix::from_rows(&["11"]).unwrap()),
            Err(Error::MissingBlock { key }) if key == "11"
        ));
    }

    #[test]
    fn empty_table_has_no_support() {
        let t = CtmTable::new((4, 4), "empty", std::iter::empty()).unwrap();
        assert_eq!(table_support(&t), 0);
        assert!(!t.is_complete());
    }

    #[test]
    fn square_shape_inferred_from_key_length() {
        let t = parse_table(b"0000,2.0\n", None).unwrap();
        assert_eq!(t.block_shape(), (2, 2));
        let t = parse_table(b"000,2.0\n", None).unwrap();
        assert_eq!(t.block_shape(), (1, 3));
    }

    #[test]
    fn text_and_binary_round_trip() {
        let entries = (0..512u64).map(|k| (k, 1.0 + k as f64 / 7.0));
        let t = CtmTable::new((3, 3), "B2-D3x3", entries).unwrap();
        let mut text = Vec::new();
        t.write_text(&mut text).unwrap();
        assert_eq!(parse_table(&text, None).unwrap(), t);
        let mut bin = Vec::new();
        t.write_binary(&mut bin).unwrap();
        assert_eq!(parse_table(&bin, Some((3, 3))).unwrap(), t);
        assert!(matches!(
            parse_table(&bin[..bin.len() - 3], None),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn sparse_storage_for_wide_blocks() {
        let t = CtmTable::new((5, 5), "wide", [(3u64, 2.0), (1 << 24, 4.0)]).unwrap();
        assert_eq!(t.support(), 2);
        assert_eq!(t.get(1 << 24), Some(4.0));
        assert_eq!(t.get(5), None);
        let mut bin = Vec::new();
        t.write_binary(&mut bin).unwrap();
        assert_eq!(parse_table(&bin, None).unwrap().get(3), Some(2.0));
    }

    #[test]
    fn one_state_class_by_hand() {
        // 6^2 machines; the 2 halting digits for read=0 halt at once.
        let d = enumerate_ctm_1d(1, 2, 10).unwrap();
        assert_eq!(d.total_count, 36);
        // Immediate halts: 2 choices x 6 for the unused read=1 entry.
        assert_eq!(d.counts["0"] + d.counts["1"], 12);
        let sum: f64 = d.frequencies.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(
            enumerate_ctm_1d(5, 2, 500),
            Err(Error::ClassTooLarge { .. })
        ));
        assert!(matches!(
            enumerate_ctm_1d(3, 2, 500),
            Err(Error::ClassTooLarge { .. })
        ));
        assert!(matches!(
            enumerate_ctm_1d(2, 3, 10),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn distribution_to_table() {
        let d = enumerate_ctm_1d(2, 2, 20).unwrap();
        let t = d.table_for_length(2).unwrap();
        assert_eq!(t.block_shape(), (1, 2));
        assert!(t.is_complete());
        let c01 = t.lookup_key(0b01).unwrap();
        assert_eq!(c01, d.complexity("01").unwrap());
    }
}
