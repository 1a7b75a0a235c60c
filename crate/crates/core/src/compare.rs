//! Fleet-versus-baseline comparison for every category and coverage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::BaselineResult;
use crate::ingestion::{Category, ClaimRecord, ClaimSource, Coverage, DrivingMode, MileageLog};
use crate::stats::{
    self, format_cpmm, Confidence, PercentReduction, RateEstimate, SignificanceVerdict, StatsError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("{category} has zero fleet miles")]
    ZeroMileage { category: Category },
    #[error("no baseline for {category} {coverage}")]
    MissingBaseline {
        category: Category,
        coverage: Coverage,
    },
    #[error("{category}/{coverage}: {source}")]
    Cell {
        category: Category,
        coverage: Coverage,
        #[source]
        source: Box<CompareError>,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl CompareError {
    fn in_cell(self, category: Category, coverage: Coverage) -> Self {
        match self {
            CompareError::Cell { .. } => self,
            other => CompareError::Cell {
                category,
                coverage,
                source: Box::new(other),
            },
        }
    }

    /// The underlying error, looking through the cell wrapper.
    pub fn root(&self) -> &CompareError {
        match self {
            CompareError::Cell { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Total fleet miles of a category; TO+RO adds the TO and RO totals.
pub fn category_miles(mileage: &[MileageLog], category: Category) -> f64 {
    category
        .modes()
        .iter()
        .map(|&mode| mode_miles(mileage, mode))
        .sum()
}

fn mode_miles(mileage: &[MileageLog], mode: DrivingMode) -> f64 {
    mileage
        .iter()
        .filter(|m| m.mode == mode)
        .map(|m| m.miles)
        .sum()
}

/// Countable fleet claims of `coverage` attributed to `category`.
pub fn category_claims(claims: &[ClaimRecord], category: Category, coverage: Coverage) -> u64 {
    claims
        .iter()
        .filter(|c| {
            c.source == ClaimSource::Fleet
                && c.coverage == coverage
                && c.is_countable()
                && c.effective_mode().is_some_and(|m| category.includes(m))
        })
        .count() as u64
}

/// Exact Poisson rate for one fleet cell.
pub fn fleet_cell(
    claims: &[ClaimRecord],
    mileage: &[MileageLog],
    category: Category,
    coverage: Coverage,
    confidence: Confidence,
) -> Result<RateEstimate, CompareError> {
    let miles = category_miles(mileage, category);
    if !(miles > 0.0) {
        return Err(CompareError::ZeroMileage { category });
    }
    let k = category_claims(claims, category, coverage);
    Ok(stats::poisson_exact_rate_ci(k, miles / 1e6, confidence)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub category: Category,
    pub coverage: Coverage,
    pub fleet: RateEstimate,
    pub baseline: RateEstimate,
    pub reduction: PercentReduction,
    pub verdict: SignificanceVerdict,
}

pub fn compare_cell(
    category: Category,
    coverage: Coverage,
    fleet: RateEstimate,
    baseline: RateEstimate,
) -> Result<ComparisonResult, CompareError> {
    let reduction = stats::percent_reduction(fleet.rate_cpmm, baseline.rate_cpmm)?;
    let verdict = stats::significance(&fleet, &baseline)?;
    Ok(ComparisonResult {
        category,
        coverage,
        fleet,
        baseline,
        reduction,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Compared(ComparisonResult),
    /// Partial data: the category has no miles or no baseline.
    NoData {
        category: Category,
        coverage: Coverage,
        reason: String,
    },
}

impl Cell {
    pub fn key(&self) -> (Category, Coverage) {
        match self {
            Cell::Compared(r) => (r.category, r.coverage),
            Cell::NoData {
                category, coverage, ..
            } => (*category, *coverage),
        }
    }

    pub fn result(&self) -> Option<&ComparisonResult> {
        match self {
            Cell::Compared(r) => Some(r),
            Cell::NoData { .. } => None,
        }
    }
}

/// The eight category × coverage cells, coverage-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub confidence: Confidence,
    pub cells: Vec<Cell>,
}

impl Matrix {
    pub fn get(&self, category: Category, coverage: Coverage) -> Option<&Cell> {
        self.cells.iter().find(|c| c.key() == (category, coverage))
    }
}

/// Builds all eight cells. In strict mode a cell without miles or
/// baseline aborts the matrix; otherwise it is reported as no data.
pub fn full_matrix(
    claims: &[ClaimRecord],
    mileage: &[MileageLog],
    baselines: &[BaselineResult],
    confidence: Confidence,
    strict: bool,
) -> Result<Matrix, CompareError> {
    let mut cells = Vec::with_capacity(8);
    for coverage in Coverage::ALL {
        for category in Category::ALL {
            let cell = build_cell(claims, mileage, baselines, category, coverage, confidence);
            match cell {
                Ok(result) => cells.push(Cell::Compared(result)),
                Err(e)
                    if !strict
                        && matches!(
                            e,
                            CompareError::ZeroMileage { .. } | CompareError::MissingBaseline { .. }
                        ) =>
                {
                    cells.push(Cell::NoData {
                        category,
                        coverage,
                        reason: e.to_string(),
                    })
                }
                Err(e) => return Err(e.in_cell(category, coverage)),
            }
        }
    }
    Ok(Matrix { confidence, cells })
}

fn build_cell(
    claims: &[ClaimRecord],
    mileage: &[MileageLog],
    baselines: &[BaselineResult],
    category: Category,
    coverage: Coverage,
    confidence: Confidence,
) -> Result<ComparisonResult, CompareError> {
    let fleet = fleet_cell(claims, mileage, category, coverage, confidence)?;
    let baseline = baselines
        .iter()
        .find(|b| b.category == category && b.coverage == coverage)
        .ok_or(CompareError::MissingBaseline { category, coverage })?;
    compare_cell(category, coverage, fleet, baseline.estimate.clone())
}

/// Flat machine-readable form of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub category: Category,
    pub coverage: Coverage,
    pub fleet_k: Option<u64>,
    pub fleet_mmi: Option<f64>,
    pub fleet_rate: Option<f64>,
    pub fleet_ci_low: Option<f64>,
    pub fleet_ci_high: Option<f64>,
    pub baseline_rate: Option<f64>,
    pub baseline_ci_low: Option<f64>,
    pub baseline_ci_high: Option<f64>,
    pub reduction_pct_unrounded: Option<f64>,
    pub reduction_pct_display: Option<i64>,
    pub verdict: String,
}

impl From<&Cell> for ComparisonRow {
    fn from(cell: &Cell) -> Self {
        match cell {
            Cell::Compared(r) => ComparisonRow {
                category: r.category,
                coverage: r.coverage,
                fleet_k: r.fleet.claim_count,
                fleet_mmi: r.fleet.exposure_mmi,
                fleet_rate: Some(r.fleet.rate_cpmm),
                fleet_ci_low: Some(r.fleet.ci_low_cpmm),
                fleet_ci_high: Some(r.fleet.ci_high_cpmm),
                baseline_rate: Some(r.baseline.rate_cpmm),
                baseline_ci_low: Some(r.baseline.ci_low_cpmm),
                baseline_ci_high: Some(r.baseline.ci_high_cpmm),
                reduction_pct_unrounded: Some(r.reduction.unrounded()),
                reduction_pct_display: Some(r.reduction.display()),
                verdict: format!("{:?}", r.verdict),
            },
            Cell::NoData {
                category, coverage, ..
            } => ComparisonRow {
                category: *category,
                coverage: *coverage,
                fleet_k: None,
                fleet_mmi: None,
                fleet_rate: None,
                fleet_ci_low: None,
                fleet_ci_high: None,
                baseline_rate: None,
                baseline_ci_low: None,
                baseline_ci_high: None,
                reduction_pct_unrounded: None,
                reduction_pct_display: None,
                verdict: "NoData".into(),
            },
        }
    }
}

pub fn matrix_rows(matrix: &Matrix) -> Vec<ComparisonRow> {
    matrix.cells.iter().map(ComparisonRow::from).collect()
}

pub fn matrix_to_csv(matrix: &Matrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in matrix_rows(matrix) {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("UTF-8")
}

fn fmt_interval(low: f64, high: f64) -> String {
    format!("[{}, {}]", format_cpmm(low), format_cpmm(high))
}

/// Plain-text table with S/NS markers, one line per cell.
pub fn matrix_to_table(matrix: &Matrix) -> String {
    let pct = format!(
        "{}%",
        stats::round_half_up(100.0 * matrix.confidence.level(), 1)
    );
    let mut out = format!(
        "{:<4} {:<7} {:>6} {:<14} {:>8} {:<14} {:>9}  {}\n",
        "Cov",
        "Mode",
        "Fleet",
        format!("{pct} CI"),
        "Baseline",
        format!("{pct} CI"),
        "Reduction",
        "Sig"
    );
    for cell in &matrix.cells {
        let (category, coverage) = cell.key();
        match cell {
            Cell::Compared(r) => out.push_str(&format!(
                "{:<4} {:<7} {:>6} {:<14} {:>8} {:<14} {:>9}  {}\n",
                coverage.as_str(),
                category.as_str(),
                format_cpmm(r.fleet.rate_cpmm),
                fmt_interval(r.fleet.ci_low_cpmm, r.fleet.ci_high_cpmm),
                format_cpmm(r.baseline.rate_cpmm),
                fmt_interval(r.baseline.ci_low_cpmm, r.baseline.ci_high_cpmm),
                format!("{}%", r.reduction.display()),
                r.verdict.marker()
            )),
            Cell::NoData { .. } => out.push_str(&format!(
                "{:<4} {:<7} {:>6}\n",
                coverage.as_str(),
                category.as_str(),
                "no data"
            )),
        }
    }
    out
}
