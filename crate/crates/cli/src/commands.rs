use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qubd_core::bdm::{BoundaryPolicy, PartitionSpec};
use qubd_core::ctm::{self, CtmTable};
use qubd_core::experiments::{
    self, Exposure, GapResult, Method, PermutationParams, ResidualParams, SaturationCurve,
    SaturationThreshold,
};
use qubd_core::io::{self, CsvReport, ReportFormat};
use qubd_core::qubd::{self, AnalysisParams, ComplexityReport};
use qubd_core::CtmDistribution;
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, BenchCommand, Common, CtmSimArgs, FormatArg, PermuteArgs, ResidualArgs,
    SaturationArgs, TableInfoArgs,
};

pub const TABLE_DIR_ENV: &str = "QUBD_TABLE_DIR";

/// Bad flags or inputs; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Effective settings of a run, echoed into every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    pub q: u32,
    pub block: String,
    pub boundary: BoundaryPolicy,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunConfig {
    fn new(command: &str, q: u32, common: &Common, table: Option<PathBuf>) -> Self {
        Self {
            command: command.to_string(),
            input: None,
            table,
            q,
            block: format!("{}x{}", common.block.0, common.block.1),
            boundary: common.boundary.into(),
            seed: common.seed,
            baseline_samples: None,
            out: common.out.clone(),
            format: output_format(common.format, common.out.as_deref()),
            extra: Default::default(),
        }
    }

    fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra.insert(
            key.to_string(),
            serde_json::to_value(value).expect("plain data"),
        );
        self
    }
}

#[derive(Serialize)]
struct Envelope<'a, R: ?Sized> {
    config: &'a RunConfig,
    report: &'a R,
}

impl<R: CsvReport + ?Sized> CsvReport for Envelope<'_, R> {
    fn write_csv(&self, out: &mut dyn Write) -> qubd_core::Result<()> {
        self.report.write_csv(out)
    }
}

fn output_format(format: Option<FormatArg>, out: Option<&Path>) -> ReportFormat {
    match format {
        Some(f) => f.into(),
        None if out
            .is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))) =>
        {
            ReportFormat::Csv
        }
        None => ReportFormat::Json,
    }
}

/// Writes the report to `config.out` or stdout.
fn emit<R: Serialize + CsvReport + ?Sized>(config: &RunConfig, report: &R) -> Result<()> {
    let envelope = Envelope { config, report };
    match &config.out {
        Some(path) => io::write_report(&envelope, path, config.format)?,
        None => {
            let bytes = io::render_report(&envelope, config.format)?;
            std::io::stdout()
                .write_all(&bytes)
                .context("writing to stdout")?;
        }
    }
    Ok(())
}

/// Human-readable lines go to stdout only when the report itself does not.
fn say(config: &RunConfig, line: impl fmt::Display) {
    if config.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn table_dir() -> Option<PathBuf> {
    std::env::var_os(TABLE_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Finds the table file: an explicit path as given or under the table
/// directory, otherwise `ctm-b2-d<R>x<C>.{ctmt,csv}` in the table directory.
pub fn resolve_table(explicit: Option<&Path>, block: (usize, usize)) -> Result<PathBuf> {
    let dir = table_dir();
    if let Some(path) = explicit {
        if path.exists() {
            return Ok(path.to_path_buf());
        }
        if let Some(candidate) = dir
            .as_ref()
            .filter(|_| path.is_relative())
            .map(|d| d.join(path))
        {
            if candidate.exists() {
                return Ok(candidate);
            }
        }
        return Err(usage(format!("table file {} not found", path.display())));
    }
    let stem = format!("ctm-b2-d{}x{}", block.0, block.1);
    if let Some(dir) = &dir {
        for ext in ["ctmt", "csv"] {
            let candidate = dir.join(format!("{stem}.{ext}"));
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(usage(format!(
        "no CTM table given: pass --table PATH or set {TABLE_DIR_ENV} to a directory containing {stem}.ctmt"
    )))
}

fn load(path: &Path, block: (usize, usize)) -> Result<CtmTable> {
    let table = ctm::load_table(path, Some(block))?;
    Ok(table)
}

fn spec(common: &Common) -> Result<PartitionSpec> {
    Ok(PartitionSpec::new(common.block, common.boundary.into())?)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    if !args.input.exists() {
        return Err(usage(format!("input {} not found", args.input.display())));
    }
    let table_path = resolve_table(args.common.table.as_deref(), args.common.block)?;
    let table = load(&table_path, args.common.block)?;
    let mut config = RunConfig::new("analyze", args.bits, &args.common, Some(table_path));
    config.input = Some(args.input.clone());
    config.baseline_samples = Some(args.baseline_samples);

    let bundle = io::read_bundle(&args.input)?;
    let layers = bundle
        .tensors()
        .iter()
        .map(|t| qubd::preprocess_tensor(&t.shape, &t.data.to_f64(), &t.name))
        .collect::<qubd_core::Result<Vec<_>>>()?;
    let params = AnalysisParams {
        q: args.bits,
        spec: spec(&args.common)?,
        seed: args.common.seed,
        baseline_samples: args.baseline_samples,
    };
    let report = qubd::analyze_model(&layers, &table, &params)?;
    emit(&config, &report)?;
    print_summary(&config, &report);
    Ok(())
}

fn print_summary(config: &RunConfig, report: &ComplexityReport) {
    say(
        config,
        format!(
            "{:>6} {:>14} {:>14} {:>12} {:>8}",
            "plane", "raw", "baseline", "std", "ratio"
        ),
    );
    for p in &report.per_plane {
        say(
            config,
            format!(
                "{:>6} {:>14.3} {:>14.3} {:>12.3} {:>8.4}",
                p.plane, p.raw, p.baseline_mean, p.baseline_std, p.ratio
            ),
        );
    }
    say(
        config,
        format!(
            "{:>6} {:>14.3} {:>14.3} {:>12.3} {:>8.4}",
            "total",
            report.total_raw,
            report.total_baseline_mean,
            report.total_baseline_std,
            report.total_ratio
        ),
    );
    for e in &report.excluded {
        say(
            config,
            format!("excluded {} {:?}: {}", e.name, e.original_shape, e.reason),
        );
    }
}

#[derive(Serialize)]
struct SaturationReport {
    threshold: SaturationThreshold,
    closed_form: SaturationCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated: Option<SaturationCurve>,
}

impl CsvReport for SaturationReport {
    /// The closed-form curve, then the simulated one after a blank line.
    fn write_csv(&self, out: &mut dyn Write) -> qubd_core::Result<()> {
        self.closed_form.write_csv(out)?;
        if let Some(sim) = &self.simulated {
            writeln!(out).map_err(|e| qubd_core::Error::Io {
                path: "<csv>".into(),
                source: e,
            })?;
            sim.write_csv(out)?;
        }
        Ok(())
    }
}

fn default_m_grid(support: u64) -> Vec<f64> {
    (0..=50).map(|i| support as f64 * i as f64 / 10.0).collect()
}

fn default_d_grid(d_max: u64) -> Vec<u64> {
    (0..=20).map(|i| d_max * i / 20).collect()
}

pub fn saturation(args: &SaturationArgs) -> Result<()> {
    let common = &args.common;
    let wants_table = args.simulate.is_some() || args.support.is_none();
    let (table, table_path) = if wants_table {
        let path = resolve_table(common.table.as_deref(), common.block)?;
        (Some(load(&path, common.block)?), Some(path))
    } else {
        (None, None)
    };
    let support = match (args.support, &table) {
        (Some(h), _) => h,
        (None, Some(t)) => ctm::table_support(t) as u64,
        (None, None) => unreachable!("a table is loaded when no support is given"),
    };
    let block_bits = common.block.0 * common.block.1;
    let threshold =
        experiments::saturation_threshold(support, args.epsilon, block_bits, args.bits)?;
    let grid = args.grid.clone().unwrap_or_else(|| default_m_grid(support));
    if grid.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(usage("grid values must be finite and nonnegative"));
    }
    let closed_form = experiments::closed_form_curve(support, &grid);

    let mut config = RunConfig::new("saturation", args.bits, common, table_path)
        .with("support", support)
        .with("epsilon", args.epsilon)
        .with("grid", &grid);
    let simulated = match (args.simulate, &table) {
        (Some(exposure), Some(table)) => {
            let exposure: Exposure = exposure.into();
            let d_grid = match (&args.d, args.d_max) {
                (Some(d), _) => d.clone(),
                (None, Some(max)) => default_d_grid(max),
                (None, None) => default_d_grid(threshold.d_plane.ceil() as u64 * 2),
            };
            config = config
                .with("simulate", exposure)
                .with("d", &d_grid)
                .with("trials", args.trials);
            Some(experiments::saturation_simulate(
                table,
                exposure,
                args.bits,
                &d_grid,
                args.trials,
                common.seed,
            )?)
        }
        _ => None,
    };

    let report = SaturationReport {
        threshold,
        closed_form,
        simulated,
    };
    emit(&config, &report)?;
    say(
        &config,
        format!("H = {support}, epsilon = {}", args.epsilon),
    );
    say(
        &config,
        format!(
            "m_eps  = {} ({:.3e})",
            threshold.m_epsilon, threshold.m_epsilon as f64
        ),
    );
    say(&config, format!("d_bin  = {:.3e}", threshold.d_bin));
    say(&config, format!("d_ser  = {:.3e}", threshold.d_ser));
    say(&config, format!("d_plane = {:.3e}", threshold.d_plane));
    Ok(())
}

pub fn bench(command: &BenchCommand) -> Result<()> {
    match command {
        BenchCommand::Permute(args) => permute(args),
        BenchCommand::Residual(args) => residual(args),
    }
}

fn print_gaps(config: &RunConfig, rows: &[GapResult]) {
    say(
        config,
        format!(
            "{:<12} {:<11} {:>8} {:>6} {:>6} {:>10} {:>10}",
            "experiment", "method", "d", "rho", "k", "gap", "std"
        ),
    );
    for g in rows {
        let rho = g.rho.map(|r| format!("{r}")).unwrap_or_else(|| "-".into());
        let k = g
            .planes_kept
            .map(|k| k.to_string())
            .unwrap_or_else(|| "-".into());
        say(
            config,
            format!(
                "{:<12} {:<11} {:>8} {:>6} {:>6} {:>10.5} {:>10.5}",
                g.experiment.to_string(),
                g.method.to_string(),
                g.d,
                rho,
                k,
                g.mean,
                g.std
            ),
        );
    }
}

fn permute(args: &PermuteArgs) -> Result<()> {
    let common = &args.common;
    let table_path = resolve_table(common.table.as_deref(), common.block)?;
    let table = load(&table_path, common.block)?;
    let spec = spec(common)?;
    let sizes: Vec<usize> = args
        .d
        .iter()
        .copied()
        .filter(|&d| args.d_max.is_none_or(|max| d <= max))
        .collect();
    if sizes.is_empty() {
        return Err(usage("no object size left after applying --d-max"));
    }
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    let q = args.alphabet.trailing_zeros();
    let config = RunConfig::new("bench permute", q, common, Some(table_path))
        .with("d", &sizes)
        .with("rho", &args.rho)
        .with("methods", &methods)
        .with("alphabet", args.alphabet)
        .with("trials", args.trials);

    let mut rows = Vec::new();
    for &d in &sizes {
        for &method in &methods {
            for &rho in &args.rho {
                let params = PermutationParams {
                    d,
                    alphabet: args.alphabet,
                    rho,
                    method,
                    trials: args.trials,
                    seed: common.seed,
                };
                rows.push(experiments::permutation_bench(&params, &table, &spec)?);
            }
        }
    }
    emit(&config, &rows)?;
    print_gaps(&config, &rows);
    Ok(())
}

fn residual(args: &ResidualArgs) -> Result<()> {
    let common = &args.common;
    let table_path = resolve_table(common.table.as_deref(), common.block)?;
    let table = load(&table_path, common.block)?;
    let config = RunConfig::new(
        "bench residual",
        experiments::ALIGNED_BITS,
        common,
        Some(table_path),
    )
    .with("planes", &args.planes)
    .with("trials", args.trials);
    let params = ResidualParams {
        planes: args.planes.clone(),
        relabel_trials: args.trials,
        seed: common.seed,
    };
    let rows = experiments::residual_bench(&table, &spec(common)?, &params)?;
    emit(&config, &rows)?;
    print_gaps(&config, &rows);
    Ok(())
}

struct DistributionCsv<'a>(&'a CtmDistribution);

impl CsvReport for DistributionCsv<'_> {
    fn write_csv(&self, out: &mut dyn Write) -> qubd_core::Result<()> {
        let d = self.0;
        let mut lines = String::from("output,count,frequency,complexity\n");
        for (w, &count) in &d.counts {
            let f = d.frequencies[w];
            lines.push_str(&format!("{w},{count},{f},{}\n", -f.log2()));
        }
        out.write_all(lines.as_bytes())
            .map_err(|e| qubd_core::Error::Io {
                path: "<csv>".into(),
                source: e,
            })
    }
}

impl Serialize for DistributionCsv<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

pub fn ctm_sim(args: &CtmSimArgs) -> Result<()> {
    let dist = ctm::enumerate_ctm_1d(args.states, args.symbols, args.steps)?;
    if let Some(length) = args.length {
        let table = dist.table_for_length(length)?;
        let mut bytes = Vec::new();
        table.write_text(&mut bytes).context("rendering table")?;
        return match &args.out {
            Some(path) => table.save(path).map_err(Into::into),
            None => std::io::stdout()
                .write_all(&bytes)
                .context("writing to stdout"),
        };
    }
    let config = RunConfig {
        command: "ctm-sim".into(),
        input: None,
        table: None,
        q: 1,
        block: "1xL".into(),
        boundary: BoundaryPolicy::Drop,
        seed: 0,
        baseline_samples: None,
        out: args.out.clone(),
        format: output_format(args.format, args.out.as_deref()),
        extra: Default::default(),
    }
    .with("states", args.states)
    .with("symbols", args.symbols)
    .with("steps", args.steps);
    emit(&config, &DistributionCsv(&dist))?;
    say(
        &config,
        format!(
            "{}: {} of {} machines halted, {} distinct outputs",
            dist.machine_class(),
            dist.halted_count,
            dist.total_count,
            dist.frequencies.len()
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct TableInfo {
    path: PathBuf,
    block_shape: (usize, usize),
    machine_class: String,
    support: usize,
    complete: bool,
    min: f64,
    max: f64,
    mean: f64,
    support_total: f64,
}

pub fn table_info(args: &TableInfoArgs) -> Result<()> {
    let path = resolve_table(args.table.as_deref(), args.block)?;
    let table = ctm::load_table(&path, Some(args.block))
        .or_else(|_| ctm::load_table(&path, None))
        .with_context(|| format!("loading {}", path.display()))?;
    let values: Vec<f64> = table.entries().map(|(_, v)| v).collect();
    let info = TableInfo {
        path,
        block_shape: table.block_shape(),
        machine_class: table.machine_class().to_string(),
        support: ctm::table_support(&table),
        complete: table.is_complete(),
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
        support_total: table.support_total(),
    };
    let mut json = serde_json::to_vec_pretty(&info)?;
    json.push(b'\n');
    match &args.out {
        Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&json)?,
    }
    Ok(())
}
