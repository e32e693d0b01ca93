//! Tensor bundles (QTEN), report files and table loading.
//!
//! A QTEN file is laid out as:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `QTEN` |
//! | 4 | format version, u32 LE (currently 1) |
//! | 8 | manifest length `n`, u64 LE |
//! | n | manifest: UTF-8 JSON array of `{name, shape, dtype, offset, nbytes}` |
//! | .. | payload: raw little-endian values |
//! | 8 | FNV-1a 64 checksum of everything before it, u64 LE |
//!
//! Offsets in the manifest are relative to the start of the payload.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{GapResult, SaturationCurve};
use crate::qubd::{ComplexityReport, PlaneReport};

pub use crate::ctm::load_table;

pub const QTEN_MAGIC: &[u8; 4] = b"QTEN";
pub const QTEN_VERSION: u32 = 1;
const FIXED_HEADER: usize = 16;
const CHECKSUM_LEN: usize = 8;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Widens to `f64`, exactly.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    fn write_le(&self, out: &mut Vec<u8>) {
        match self {
            TensorData::F32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }

    fn from_le(dtype: DType, bytes: &[u8]) -> Self {
        match dtype {
            DType::F32 => TensorData::F32(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: TensorData) -> Result<Self> {
        let name = name.into();
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::InvalidParameter(format!(
                "tensor `{name}`: shape {shape:?} needs {numel} values, got {}",
                data.len()
            )));
        }
        Ok(Self { name, shape, data })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: DType,
    pub offset: u64,
    pub nbytes: u64,
}

/// A validated, immutable QTEN bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBundle {
    pub version: u32,
    pub manifest: Vec<ManifestEntry>,
    pub payload: Vec<u8>,
}

impl TensorBundle {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.manifest.iter().map(|e| e.name.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<Tensor> {
        self.manifest
            .iter()
            .find(|e| e.name == name)
            .map(|e| self.decode(e))
    }

    /// All tensors in manifest order.
    pub fn tensors(&self) -> Vec<Tensor> {
        self.manifest.iter().map(|e| self.decode(e)).collect()
    }

    fn decode(&self, e: &ManifestEntry) -> Tensor {
        let start = e.offset as usize;
        Tensor {
            name: e.name.clone(),
            shape: e.shape.clone(),
            data: TensorData::from_le(e.dtype, &self.payload[start..start + e.nbytes as usize]),
        }
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Byte-exact QTEN encoding; identical inputs give identical bytes.
pub fn encode_bundle(tensors: &[Tensor]) -> Result<Vec<u8>> {
    let mut names = HashSet::new();
    let mut manifest = Vec::with_capacity(tensors.len());
    let mut payload = Vec::new();
    for t in tensors {
        if !names.insert(t.name.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate tensor name `{}`",
                t.name
            )));
        }
        let numel: usize = t.shape.iter().product();
        if numel != t.data.len() {
            return Err(Error::InvalidParameter(format!(
                "tensor `{}`: shape {:?} needs {numel} values, got {}",
                t.name,
                t.shape,
                t.data.len()
            )));
        }
        let offset = payload.len() as u64;
        t.data.write_le(&mut payload);
        manifest.push(ManifestEntry {
            name: t.name.clone(),
            shape: t.shape.clone(),
            dtype: t.data.dtype(),
            offset,
            nbytes: payload.len() as u64 - offset,
        });
    }
    let json = serde_json::to_vec(&manifest)?;
    let mut out = Vec::with_capacity(FIXED_HEADER + json.len() + payload.len() + CHECKSUM_LEN);
    out.extend_from_slice(QTEN_MAGIC);
    out.extend_from_slice(&QTEN_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    let checksum = fnv1a64(&out);
    out.extend_from_slice(&checksum.to_le_bytes());
    Ok(out)
}

pub fn decode_bundle(bytes: &[u8]) -> Result<TensorBundle> {
    if bytes.len() < FIXED_HEADER + CHECKSUM_LEN {
        return Err(format_err(format!(
            "file too short ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != QTEN_MAGIC {
        return Err(format_err("bad magic, expected QTEN"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != QTEN_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body_end = bytes.len() - CHECKSUM_LEN;
    let manifest_end = usize::try_from(manifest_len)
        .ok()
        .and_then(|n| n.checked_add(FIXED_HEADER))
        .filter(|&end| end <= body_end)
        .ok_or_else(|| format_err(format!("manifest length {manifest_len} exceeds the file")))?;
    let manifest: Vec<ManifestEntry> = serde_json::from_slice(&bytes[FIXED_HEADER..manifest_end])
        .map_err(|e| format_err(format!("manifest: {e}")))?;
    let payload = &bytes[manifest_end..body_end];

    let mut names = HashSet::new();
    let mut spans = Vec::with_capacity(manifest.len());
    for e in &manifest {
        if !names.insert(e.name.as_str()) {
            return Err(format_err(format!("duplicate tensor name `{}`", e.name)));
        }
        let expected = e
            .shape
            .iter()
            .try_fold(e.dtype.size() as u64, |acc, &d| acc.checked_mul(d as u64));
        if expected != Some(e.nbytes) {
            return Err(format_err(format!(
                "tensor `{}`: {} bytes do not match shape {:?} of {:?}",
                e.name, e.nbytes, e.shape, e.dtype
            )));
        }
        let end = e
            .offset
            .checked_add(e.nbytes)
            .filter(|&end| end <= payload.len() as u64);
        let end = end.ok_or_else(|| {
            format_err(format!(
                "tensor `{}` at {}+{} lies outside the {}-byte payload",
                e.name,
                e.offset,
                e.nbytes,
                payload.len()
            ))
        })?;
        spans.push((e.offset, end, e.name.as_str()));
    }
    spans.sort_unstable();
    if let Some(w) = spans.windows(2).find(|w| w[1].0 < w[0].1) {
        return Err(format_err(format!(
            "tensors `{}` and `{}` overlap",
            w[0].2, w[1].2
        )));
    }

    let stored = u64::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let computed = fnv1a64(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok(TensorBundle {
        version,
        manifest,
        payload: payload.to_vec(),
    })
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<TensorBundle> {
    let path = path.as_ref();
    decode_bundle(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_bundle(tensors: &[Tensor], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_bundle(tensors)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

/// Flat tabular view of a report.
pub trait CsvReport {
    fn write_csv(&self, out: &mut dyn Write) -> Result<()>;
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CsvReport for ComplexityReport {
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scope",
            "layer",
            "plane",
            "raw",
            "baseline_mean",
            "baseline_std",
            "ratio",
        ])?;
        let mut emit = |scope: &str, layer: &str, planes: &[PlaneReport], totals: [f64; 4]| {
            for p in planes {
                w.write_record([
                    scope.to_string(),
                    layer.to_string(),
                    p.plane.to_string(),
                    p.raw.to_string(),
                    p.baseline_mean.to_string(),
                    p.baseline_std.to_string(),
                    p.ratio.to_string(),
                ])?;
            }
            let mut row = vec![scope.to_string(), layer.to_string(), "total".to_string()];
            row.extend(totals.iter().map(f64::to_string));
            w.write_record(row)
        };
        emit(
            "model",
            "",
            &self.per_plane,
            [
                self.total_raw,
                self.total_baseline_mean,
                self.total_baseline_std,
                self.total_ratio,
            ],
        )?;
        for l in &self.layers {
            emit(
                "layer",
                &l.name,
                &l.per_plane,
                [
                    l.total_raw,
                    l.total_baseline_mean,
                    l.total_baseline_std,
                    l.total_ratio,
                ],
            )?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

impl CsvReport for SaturationCurve {
    /// `m,sigma` for closed-form curves, `m,sigma,d,std_err` for simulated ones.
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let simulated = self.points.iter().any(|p| p.d.is_some());
        if simulated {
            w.write_record(["m", "sigma", "d", "std_err"])?;
        } else {
            w.write_record(["m", "sigma"])?;
        }
        for p in &self.points {
            let mut row = vec![p.m.to_string(), p.sigma.to_string()];
            if simulated {
                row.push(opt(p.d));
                row.push(opt(p.std_err));
            }
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

impl CsvReport for [GapResult] {
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "experiment",
            "method",
            "d",
            "rho",
            "planes_kept",
            "trials",
            "seed",
            "rows",
            "cols",
            "normalizer",
            "normalizer_bits",
            "gap",
            "gap_std",
        ])?;
        for g in self {
            w.write_record([
                g.experiment.to_string(),
                g.method.to_string(),
                g.d.to_string(),
                opt(g.rho),
                opt(g.planes_kept),
                g.trials.to_string(),
                g.seed.to_string(),
                g.shape.0.to_string(),
                g.shape.1.to_string(),
                g.normalizer.to_string(),
                g.normalizer_bits.to_string(),
                g.mean.to_string(),
                g.std.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

impl CsvReport for GapResult {
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        std::slice::from_ref(self).write_csv(out)
    }
}

impl CsvReport for Vec<GapResult> {
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        self.as_slice().write_csv(out)
    }
}

/// Renders a report as JSON (pretty, trailing newline) or CSV.
pub fn render_report<R>(report: &R, format: ReportFormat) -> Result<Vec<u8>>
where
    R: Serialize + CsvReport + ?Sized,
{
    let mut out = Vec::new();
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.push(b'\n');
        }
        ReportFormat::Csv => report.write_csv(&mut out)?,
    }
    Ok(out)
}

pub fn write_report<R>(report: &R, path: impl AsRef<Path>, format: ReportFormat) -> Result<()>
where
    R: Serialize + CsvReport + ?Sized,
{
    let path = path.as_ref();
    let bytes = render_report(report, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses a JSON report written by [`write_report`].
pub fn read_report<R: DeserializeOwned>(path: impl AsRef<Path>) -> Result<R> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::closed_form_curve;
    use proptest::prelude::*;

    fn fc() -> Tensor {
        Tensor::new(
            "fc.weight",
            vec![4, 4],
            TensorData::F32((0..16).map(|i| i as f32).collect()),
        )
        .unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn single_tensor_by_name() {
        let bundle = decode_bundle(&encode_bundle(&[fc()]).unwrap()).unwrap();
        let t = bundle.tensor("fc.weight").unwrap();
        assert_eq!(t.shape, vec![4, 4]);
        assert_eq!(t.data.to_f64()[5], 5.0);
        assert!(bundle.tensor("missing").is_none());
    }

    #[test]
    fn empty_bundle() {
        let bytes = encode_bundle(&[]).unwrap();
        let bundle = decode_bundle(&bytes).unwrap();
        assert!(bundle.manifest.is_empty());
        assert_eq!(bundle.version, 1);
    }

    #[test]
    fn deterministic_and_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let conv = Tensor::new(
            "conv",
            vec![2, 3, 2, 2],
            TensorData::F64((0..24).map(|i| i as f64 * 0.25 - 1.0).collect()),
        )
        .unwrap();
        let (a, b) = (dir.path().join("a.qten"), dir.path().join("b.qten"));
        write_bundle(&[fc(), conv.clone()], &a).unwrap();
        write_bundle(&[fc(), conv.clone()], &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let back = read_bundle(&a).unwrap();
        assert_eq!(back.tensor("conv").unwrap(), conv);
        assert!(matches!(
            read_bundle(dir.path().join("nope")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn corrupt_inputs() {
        let bytes = encode_bundle(&[fc()]).unwrap();
        assert!(matches!(
            decode_bundle(&bytes[..bytes.len() - 20]),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_bundle(&bytes[..10]), Err(Error::Format(_))));

        let mut flipped = bytes.clone();
        let n = flipped.len();
        flipped[n - 12] ^= 0x40;
        assert!(matches!(
            decode_bundle(&flipped),
            Err(Error::ChecksumMismatch { .. })
        ));

        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(
            decode_bundle(&v2),
            Err(Error::UnsupportedVersion(2))
        ));

        let mut magic = bytes;
        magic[0] = b'X';
        assert!(matches!(decode_bundle(&magic), Err(Error::Format(_))));

        let dup = encode_bundle(&[fc(), fc()]);
        assert!(matches!(dup, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn saturation_csv_headers() {
        let curve = closed_form_curve(16, &[0.0, 16.0]);
        let text = String::from_utf8(render_report(&curve, ReportFormat::Csv).unwrap()).unwrap();
        assert!(text.starts_with("m,sigma\n0,0\n"));
        let json = render_report(&curve, ReportFormat::Json).unwrap();
        let back: SaturationCurve = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, curve);
    }

    fn tensor_strategy() -> impl Strategy<Value = Tensor> {
        let shape = prop::collection::vec(0usize..4, 0..4);
        (shape, any::<bool>()).prop_flat_map(|(shape, wide)| {
            let n: usize = shape.iter().product();
            let data = if wide {
                prop::collection::vec(any::<u64>().prop_map(f64::from_bits), n)
                    .prop_map(TensorData::F64)
                    .boxed()
            } else {
                prop::collection::vec(any::<u32>().prop_map(f32::from_bits), n)
                    .prop_map(TensorData::F32)
                    .boxed()
            };
            data.prop_map(move |d| Tensor {
                name: String::new(),
                shape: shape.clone(),
                data: d,
            })
        })
    }

    fn bits(t: &TensorData) -> Vec<u64> {
        match t {
            TensorData::F32(v) => v.iter().map(|x| u64::from(x.to_bits())).collect(),
            TensorData::F64(v) => v.iter().map(|x| x.to_bits()).collect(),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bundle_roundtrip_is_bit_exact(mut tensors in prop::collection::vec(tensor_strategy(), 0..5)) {
            for (i, t) in tensors.iter_mut().enumerate() {
                t.name = format!("t{i}.weight");
            }
            let bytes = encode_bundle(&tensors).unwrap();
            let back = decode_bundle(&bytes).unwrap().tensors();
            prop_assert_eq!(back.len(), tensors.len());
            for (a, b) in tensors.iter().zip(&back) {
                prop_assert_eq!(&a.name, &b.name);
                prop_assert_eq!(&a.shape, &b.shape);
                prop_assert_eq!(a.data.dtype(), b.data.dtype());
                prop_assert_eq!(bits(&a.data), bits(&b.data));
            }
        }
    }
}
