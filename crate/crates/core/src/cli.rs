//! Command-line orchestration: argument and config handling, the
//! pipeline stages, report rendering and exit codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::baseline::{self, BaselineError, BaselineResult, BaselineRow};
use crate::compare::{self, CompareError, ComparisonRow, Matrix};
use crate::ingestion::{
    self, find_table, read_records, ClaimSource, Dataset, IngestError, TableKind,
};
use crate::simulator::{self, SimConfig, SimError};
use crate::stats::{Confidence, StatsError};
use crate::vmt::{self, VmtError, VmtSelection, VmtTable};

pub const CONFIG_ENV: &str = "CLAIMSBENCH_CONFIG";
const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "claimsbench",
    version,
    about = "Fleet vs. human-baseline liability claims benchmarking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Directory holding the input tables.
    #[arg(long, global = true)]
    pub inputs: Option<PathBuf>,
    /// Directory receiving all outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Two-sided confidence level in (0, 1).
    #[arg(long, global = true)]
    pub confidence: Option<f64>,
    /// VMT estimate used for baseline exposure.
    #[arg(long, global = true, value_parser = parse_selection)]
    pub vmt_selection: Option<VmtSelection>,
    /// Fail on cells without fleet miles or baseline instead of reporting "no data".
    #[arg(long, global = true)]
    pub strict: bool,
    /// Seed for simulation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
}

fn parse_selection(s: &str) -> Result<VmtSelection, String> {
    s.parse()
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse every input table and report row counts and violations.
    Validate,
    /// Write per region-year VMT estimates.
    Vmt,
    /// Write mileage-mixed human baselines.
    Baseline,
    /// Write the fleet vs. baseline comparison matrix and reports.
    Compare,
    /// Generate a synthetic dataset and interval coverage summary.
    Simulate {
        /// Simulation config (JSON).
        simconfig: PathBuf,
    },
    /// Run every stage and print the full report with provenance.
    Report,
}

/// Optional settings read from the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub inputs: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub confidence: Option<f64>,
    pub strict: Option<bool>,
    pub vmt_selection: Option<VmtSelection>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: PathBuf,
    pub out: PathBuf,
    pub confidence: Confidence,
    pub strict: bool,
    pub vmt_selection: VmtSelection,
    pub seed: Option<u64>,
}

/// The settings that affect results; paths are excluded so that the
/// digest only changes when the analysis does.
#[derive(Debug, Serialize)]
struct Settings {
    confidence: f64,
    strict: bool,
    vmt_selection: VmtSelection,
    seed: Option<u64>,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<RunConfig, Error> {
        let file = match &flags.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::io("config", path, e))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let level = flags.confidence.or(file.confidence).unwrap_or(0.95);
        let confidence = Confidence::new(level).map_err(|e| Error::config(e.to_string()))?;
        Ok(RunConfig {
            inputs: flags
                .inputs
                .clone()
                .or(file.inputs)
                .unwrap_or_else(|| PathBuf::from(".")),
            out: flags
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            confidence,
            strict: flags.strict || file.strict.unwrap_or(false),
            vmt_selection: flags
                .vmt_selection
                .or(file.vmt_selection)
                .unwrap_or_default(),
            seed: flags.seed.or(file.seed),
        })
    }

    fn settings(&self) -> Settings {
        Settings {
            confidence: self.confidence.level(),
            strict: self.strict,
            vmt_selection: self.vmt_selection,
            seed: self.seed,
        }
    }

    pub fn digest(&self) -> String {
        sha256_hex(
            serde_json::to_string(&self.settings())
                .expect("plain struct")
                .as_bytes(),
        )
    }
}

#[derive(Debug, Error)]
pub enum ErrorKind {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Vmt(#[from] VmtError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A pipeline failure tagged with the stage that raised it.
#[derive(Debug, Error)]
#[error("{stage}: {kind}")]
pub struct Error {
    pub stage: &'static str,
    pub kind: ErrorKind,
}

impl Error {
    fn config(message: String) -> Error {
        Error {
            stage: "config",
            kind: ErrorKind::Config(message),
        }
    }

    fn io(stage: &'static str, path: &Path, source: std::io::Error) -> Error {
        Error {
            stage,
            kind: ErrorKind::Io {
                path: path.to_path_buf(),
                source,
            },
        }
    }

    /// 2 input/schema, 3 invariant, 4 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        fn stats_code(e: &StatsError) -> i32 {
            match e {
                StatsError::NoConvergence { .. } => 4,
                _ => 3,
            }
        }
        match &self.kind {
            ErrorKind::Config(_) | ErrorKind::Io { .. } => 2,
            ErrorKind::Ingest(e) if e.is_invariant_violation() => 3,
            ErrorKind::Ingest(_) => 2,
            ErrorKind::Vmt(_) => 3,
            ErrorKind::Baseline(BaselineError::Stats(e)) => stats_code(e),
            ErrorKind::Baseline(_) => 3,
            ErrorKind::Compare(e) => match e.root() {
                CompareError::Stats(s) => stats_code(s),
                _ => 3,
            },
            ErrorKind::Sim(SimError::Stats(e)) => stats_code(e),
            ErrorKind::Sim(_) => 2,
            ErrorKind::Stats(e) => stats_code(e),
        }
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Error>;
}

impl<T, E: Into<ErrorKind>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Error> {
        self.map_err(|e| Error {
            stage,
            kind: e.into(),
        })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io("output", dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io("output", &path, e))?;
    Ok(path)
}

/// Digest of one input file, keyed by its file name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineSource {
    Computed,
    Precomputed,
}

/// Everything a full run produces, before rendering.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config: RunConfig,
    pub dataset: Dataset,
    pub vmt: Option<VmtTable>,
    pub baselines: Vec<BaselineResult>,
    pub baseline_source: BaselineSource,
    pub matrix: Matrix,
    pub inputs: BTreeMap<String, InputDigest>,
}

fn digest_inputs(
    paths: &BTreeMap<String, PathBuf>,
) -> Result<BTreeMap<String, InputDigest>, Error> {
    paths
        .iter()
        .map(|(table, path)| {
            let bytes = std::fs::read(path).map_err(|e| Error::io("provenance", path, e))?;
            let file = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((
                table.clone(),
                InputDigest {
                    file,
                    sha256: sha256_hex(&bytes),
                },
            ))
        })
        .collect()
}

fn load(config: &RunConfig) -> Result<Dataset, Error> {
    Dataset::load(&config.inputs).stage("ingest")
}

fn estimate_vmt(config: &RunConfig, dataset: &Dataset) -> Result<Option<VmtTable>, Error> {
    if dataset.vmt_inputs.is_empty() {
        return Ok(None);
    }
    vmt::estimate_vmt(&dataset.vmt_inputs, config.vmt_selection)
        .stage("vmt")
        .map(Some)
}

fn require_vmt<'a>(config: &RunConfig, vmt: &'a Option<VmtTable>) -> Result<&'a VmtTable, Error> {
    vmt.as_ref().ok_or_else(|| Error {
        stage: "vmt",
        kind: ErrorKind::Ingest(IngestError::MissingTable {
            dir: config.inputs.clone(),
            table: TableKind::VmtInputs.name().into(),
        }),
    })
}

/// Reads `baseline.csv`/`.json` from the inputs when present.
fn precomputed_baselines(
    config: &RunConfig,
) -> Result<Option<(PathBuf, Vec<BaselineResult>)>, Error> {
    let Some(path) = find_table(&config.inputs, <BaselineRow as ingestion::Record>::TABLE) else {
        return Ok(None);
    };
    let rows: Vec<BaselineRow> = read_records(&path).stage("baseline")?;
    let results: Vec<BaselineResult> = rows.into_iter().map(BaselineRow::into_result).collect();
    for r in &results {
        let level = r.estimate.confidence.level();
        if level != config.confidence.level() {
            return Err(Error::config(format!(
                "{} holds {} {} at confidence {level}, but the run uses {}",
                path.display(),
                r.category,
                r.coverage,
                config.confidence.level()
            )));
        }
    }
    Ok(Some((path, results)))
}

/// Runs ingestion, VMT, baseline and comparison.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput, Error> {
    let dataset = load(config)?;
    let mut sources = dataset.sources.clone();
    let vmt = estimate_vmt(config, &dataset)?;
    let (baselines, baseline_source) = match precomputed_baselines(config)? {
        Some((path, results)) => {
            sources.insert("baseline".into(), path);
            (results, BaselineSource::Precomputed)
        }
        None => {
            let table = require_vmt(config, &vmt)?;
            let results =
                baseline::build_baselines(&dataset, table, config.confidence).stage("baseline")?;
            (results, BaselineSource::Computed)
        }
    };
    let matrix = compare::full_matrix(
        &dataset.claims,
        &dataset.mileage,
        &baselines,
        config.confidence,
        config.strict,
    )
    .stage("compare")?;
    let inputs = digest_inputs(&sources)?;
    Ok(PipelineOutput {
        config: config.clone(),
        dataset,
        vmt,
        baselines,
        baseline_source,
        matrix,
        inputs,
    })
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    inputs: &'a BTreeMap<String, InputDigest>,
    baseline_source: BaselineSource,
}

#[derive(Debug, Serialize)]
struct JsonReport<'a> {
    provenance: Provenance<'a>,
    settings: Settings,
    excluded_non_liable_claims: BTreeMap<&'static str, usize>,
    cells: Vec<ComparisonRow>,
}

impl PipelineOutput {
    fn provenance(&self) -> Provenance<'_> {
        Provenance {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            config_sha256: self.config.digest(),
            inputs: &self.inputs,
            baseline_source: self.baseline_source,
        }
    }

    fn excluded(&self) -> BTreeMap<&'static str, usize> {
        [ClaimSource::Fleet, ClaimSource::HumanBaseline]
            .into_iter()
            .map(|s| (s.as_str(), self.dataset.excluded_claims(s)))
            .collect()
    }

    pub fn report_json(&self) -> String {
        let report = JsonReport {
            provenance: self.provenance(),
            settings: self.config.settings(),
            excluded_non_liable_claims: self.excluded(),
            cells: compare::matrix_rows(&self.matrix),
        };
        let mut text = serde_json::to_string_pretty(&report).expect("serializable report");
        text.push('\n');
        text
    }

    pub fn report_text(&self) -> String {
        let p = self.provenance();
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", p.tool, p.version);
        let _ = writeln!(out, "config sha256 {}", p.config_sha256);
        for (table, d) in p.inputs {
            let _ = writeln!(out, "input {table:<11} {:<18} sha256 {}", d.file, d.sha256);
        }
        let _ = writeln!(
            out,
            "baselines {}, VMT selection {}, confidence {}",
            match p.baseline_source {
                BaselineSource::Computed => "computed",
                BaselineSource::Precomputed => "precomputed",
            },
            self.config.vmt_selection.as_str(),
            self.config.confidence.level()
        );
        for (source, n) in self.excluded() {
            let _ = writeln!(
                out,
                "excluded {source} claims without liability payment: {n}"
            );
        }
        out.push('\n');
        out.push_str(&compare::matrix_to_table(&self.matrix));
        out
    }

    /// Writes every output of a full run and returns the file paths.
    pub fn write_all(&self) -> Result<Vec<PathBuf>, Error> {
        let dir = &self.config.out;
        let mut written = Vec::new();
        if let Some(table) = &self.vmt {
            written.push(write_output(
                dir,
                "vmt.csv",
                &table.to_csv(self.config.vmt_selection),
            )?);
        }
        written.push(write_output(
            dir,
            "baseline.csv",
            &baseline::baselines_to_csv(&self.baselines),
        )?);
        written.push(write_output(
            dir,
            "comparison.csv",
            &compare::matrix_to_csv(&self.matrix),
        )?);
        written.push(write_output(dir, "report.json", &self.report_json())?);
        written.push(write_output(dir, "report.txt", &self.report_text())?);
        Ok(written)
    }
}

/// Parses every table, checks VMT coverage of the exposure years and
/// returns the human-readable validation report.
pub fn cmd_validate(config: &RunConfig) -> Result<String, Error> {
    let mut out = String::new();
    let mut paths = Vec::new();
    for kind in TableKind::ALL {
        let Some(path) = find_table(&config.inputs, kind.name()) else {
            let _ = writeln!(out, "{:<11} absent", kind.name());
            continue;
        };
        let table = ingestion::parse_dataset(&path, kind).stage("validate")?;
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let _ = write!(
            out,
            "{:<11} {:<18} {:>8} rows",
            kind.name(),
            file,
            table.len()
        );
        if let Some(total) = table.total() {
            let _ = write!(out, "  total {total}");
        }
        out.push('\n');
        paths.push(path);
    }
    let dataset = load(config)?;
    for source in [ClaimSource::Fleet, ClaimSource::HumanBaseline] {
        let total = dataset.claims.iter().filter(|c| c.source == source).count();
        let _ = writeln!(
            out,
            "{source} claims: {total}, excluded without liability payment: {}",
            dataset.excluded_claims(source)
        );
    }
    let zips = dataset.zip_sets();
    let in_zip = ingestion::filter_claims_by_zip(&dataset.claims, &zips).len();
    let _ = writeln!(
        out,
        "claims outside operating zips: {}",
        dataset.claims.len() - in_zip
    );

    if let Some(table) = estimate_vmt(config, &dataset)? {
        let _ = writeln!(out, "VMT estimates: {} region-years", table.len());
        let exposure = ingestion::filter_exposure_by_zip(&dataset.exposure, &zips);
        for e in &exposure {
            table.get(e.region, e.coverage_year).stage("validate")?;
        }
    } else if !dataset.exposure.is_empty() && precomputed_baselines(config)?.is_none() {
        require_vmt(config, &None)?;
    }
    if let Some((path, rows)) = precomputed_baselines(config)? {
        let _ = writeln!(
            out,
            "precomputed baselines: {} rows from {}",
            rows.len(),
            path.display()
        );
    }
    out.push_str("ok\n");
    Ok(out)
}

pub fn cmd_vmt(config: &RunConfig) -> Result<PathBuf, Error> {
    let dataset = load(config)?;
    let vmt = estimate_vmt(config, &dataset)?;
    let table = require_vmt(config, &vmt)?;
    write_output(&config.out, "vmt.csv", &table.to_csv(config.vmt_selection))
}

pub fn cmd_baseline(config: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    let dataset = load(config)?;
    let vmt = estimate_vmt(config, &dataset)?;
    let table = require_vmt(config, &vmt)?;
    let results =
        baseline::build_baselines(&dataset, table, config.confidence).stage("baseline")?;
    Ok(vec![
        write_output(&config.out, "vmt.csv", &table.to_csv(config.vmt_selection))?,
        write_output(
            &config.out,
            "baseline.csv",
            &baseline::baselines_to_csv(&results),
        )?,
    ])
}

pub fn cmd_compare(config: &RunConfig) -> Result<PipelineOutput, Error> {
    let output = run_pipeline(config)?;
    output.write_all()?;
    Ok(output)
}

/// Writes the synthetic tables, `coverage.csv` and the ground truth.
pub fn cmd_simulate(config: &RunConfig, simconfig: &Path) -> Result<String, Error> {
    let text =
        std::fs::read_to_string(simconfig).map_err(|e| Error::io("simulate", simconfig, e))?;
    let mut sim = SimConfig::from_json(&text).stage("simulate")?;
    if let Some(seed) = config.seed {
        sim.seed = seed;
    }
    let data = simulator::simulate_claims(&sim).stage("simulate")?;
    data.write_to(&config.out).stage("simulate")?;
    let coverage = simulator::coverage_summary(&sim).stage("simulate")?;
    write_output(
        &config.out,
        "coverage.csv",
        &simulator::coverage_to_csv(&coverage),
    )?;

    let mut truth = Vec::new();
    for category in ingestion::Category::ALL {
        for coverage in ingestion::Coverage::ALL {
            if let Some((rate, se)) = sim.expected_baseline(category, coverage) {
                truth.push(serde_json::json!({
                    "category": category,
                    "coverage": coverage,
                    "baseline_rate_cpmm": rate,
                    "baseline_standard_error": se,
                }));
            }
        }
    }
    let mut truth_text = serde_json::to_string_pretty(&serde_json::json!({
        "seed": sim.seed,
        "expected_baselines": truth,
    }))
    .expect("serializable");
    truth_text.push('\n');
    write_output(&config.out, "truth.json", &truth_text)?;

    let mut out = format!(
        "wrote {} claims, {} exposure rows, {} mileage rows to {}\n",
        data.claims.len(),
        data.exposure.len(),
        data.mileage.len(),
        config.out.display()
    );
    for r in &coverage {
        let _ = writeln!(
            out,
            "lambda {:>6}: coverage {:.4} over {} trials (nominal {})",
            r.lambda, r.coverage, r.trials, r.confidence
        );
    }
    Ok(out)
}

/// Dispatches a parsed command line; returns the text to print.
pub fn execute(cli: &Cli) -> Result<String, Error> {
    let config = RunConfig::resolve(&cli.flags)?;
    match &cli.command {
        Command::Validate => cmd_validate(&config),
        Command::Vmt => cmd_vmt(&config).map(|p| format!("wrote {}\n", p.display())),
        Command::Baseline => cmd_baseline(&config).map(|paths| {
            paths
                .iter()
                .map(|p| format!("wrote {}\n", p.display()))
                .collect()
        }),
        Command::Compare => cmd_compare(&config).map(|o| compare::matrix_to_table(&o.matrix)),
        Command::Simulate { simconfig } => cmd_simulate(&config, simconfig),
        Command::Report => cmd_compare(&config).map(|o| o.report_text()),
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
