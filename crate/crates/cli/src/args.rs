use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qubd_core::bdm::BoundaryPolicy;
use qubd_core::experiments::{Exposure, Method};
use qubd_core::io::ReportFormat;

#[derive(Debug, Parser)]
#[command(
    name = "qubd",
    version,
    about = "Quantized block decomposition complexity estimates"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every layer of a QTEN bundle against random baselines.
    Analyze(AnalyzeArgs),
    /// Coverage of a finite CTM support: closed form and simulation.
    Saturation(SaturationArgs),
    /// Synthetic gap experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Enumerate a small class of 1D Turing machines.
    CtmSim(CtmSimArgs),
    /// Summarize a CTM table.
    TableInfo(TableInfoArgs),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Ordered 8-ary object against partial permutations of itself.
    Permute(PermuteArgs),
    /// Gap to the full-support reference as MSB planes are added.
    Residual(ResidualArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Drop,
    Pad,
}

impl From<BoundaryArg> for BoundaryPolicy {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Drop => BoundaryPolicy::Drop,
            BoundaryArg::Pad => BoundaryPolicy::PadZero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Qubd,
    Serialized,
    OneBit,
    Sign,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Qubd => Method::Qubd,
            MethodArg::Serialized => Method::Serialized,
            MethodArg::OneBit => Method::OneBit,
            MethodArg::Sign => Method::Sign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExposureArg {
    Uniform,
    Plane,
    Serialized,
    Binary,
}

impl From<ExposureArg> for Exposure {
    fn from(e: ExposureArg) -> Self {
        match e {
            ExposureArg::Uniform => Exposure::Uniform,
            ExposureArg::Plane => Exposure::Plane,
            ExposureArg::Serialized => Exposure::Serialized,
            ExposureArg::Binary => Exposure::Binary,
        }
    }
}

/// `RxC` block shape.
pub fn parse_block(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got `{s}`"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("invalid block dimension `{v}`")),
    };
    Ok((dim(r)?, dim(c)?))
}

/// Table, block and output options shared by the table-driven commands.
#[derive(Debug, Args)]
pub struct Common {
    /// CTM table file; relative names are also looked up in $QUBD_TABLE_DIR.
    #[arg(long)]
    pub table: Option<PathBuf>,

    /// Block shape as RxC.
    #[arg(long, default_value = "4x4", value_parser = parse_block)]
    pub block: (usize, usize),

    #[arg(long, value_enum, default_value_t = BoundaryArg::Drop)]
    pub boundary: BoundaryArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Report format; inferred from a `.csv` output name when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// QTEN bundle with the weights to analyze.
    #[arg(long)]
    pub input: PathBuf,

    /// Bit depth q.
    #[arg(long, default_value_t = 8)]
    pub bits: u32,

    /// Random matrices per baseline.
    #[arg(long, default_value_t = 3)]
    pub baseline_samples: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SaturationArgs {
    /// Support size H; taken from the table when omitted.
    #[arg(long)]
    pub support: Option<u64>,

    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,

    /// Bit depth q used for the serialized budget and symbol draws.
    #[arg(long, default_value_t = 8)]
    pub bits: u32,

    /// Block counts m for the closed-form curve.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,

    /// Also simulate coverage under this exposure (needs a table).
    #[arg(long, value_enum)]
    pub simulate: Option<ExposureArg>,

    /// Symbol counts d for the simulation.
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<u64>>,

    /// Largest d for the default simulation grid.
    #[arg(long)]
    pub d_max: Option<u64>,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PermuteArgs {
    /// Object sizes.
    #[arg(long, value_delimiter = ',', default_value = "100000")]
    pub d: Vec<usize>,

    /// Drop sizes above this bound.
    #[arg(long)]
    pub d_max: Option<usize>,

    /// Permuted fractions.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
    pub rho: Vec<f64>,

    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "qubd,serialized,one-bit,sign"
    )]
    pub methods: Vec<MethodArg>,

    #[arg(long, default_value_t = 8)]
    pub alphabet: usize,

    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    /// Retained MSB plane counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    pub planes: Vec<u32>,

    /// Random relabelings.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CtmSimArgs {
    #[arg(long)]
    pub states: u32,

    #[arg(long, default_value_t = 2)]
    pub symbols: u32,

    #[arg(long)]
    pub steps: u64,

    /// Write a 1 x L CTM table of the outputs of this length instead of the
    /// distribution.
    #[arg(long)]
    pub length: Option<usize>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct TableInfoArgs {
    #[arg(long)]
    pub table: Option<PathBuf>,

    /// Block shape, used to infer the shape of headerless text tables and to
    /// pick a table from $QUBD_TABLE_DIR.
    #[arg(long, default_value = "4x4", value_parser = parse_block)]
    pub block: (usize, usize),

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_shapes() {
        assert_eq!(parse_block("4x4"), Ok((4, 4)));
        assert_eq!(parse_block("1X2"), Ok((1, 2)));
        assert!(parse_block("4").is_err());
        assert!(parse_block("0x4").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
