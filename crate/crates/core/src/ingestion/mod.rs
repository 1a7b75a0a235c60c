//! Input schemas, parsing and validation, plus driving-mode attribution
//! and operating-zip filtering.

mod mode;
pub mod table;
mod types;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use mode::{classify_mode, EngagementTrace, ENGAGEMENT_LOOKBACK};
pub use table::{find_table, read_records, to_canonical_csv, write_records, FieldError, Record};
pub use types::{
    Category, ClaimRecord, ClaimSource, Coverage, DrivingMode, ExposureRecord, MileageLog, Region,
    StudyWindows, ZipCode, ZipCodeSet, ZipRow, BASELINE_FIRST_YEAR, BASELINE_LAST_YEAR,
};

use crate::vmt::VmtInputRow;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: file is empty", path.display())]
    EmptyFile { path: PathBuf },
    #[error("{}: schema mismatch: {detail}", path.display())]
    SchemaMismatch { path: PathBuf, detail: String },
    #[error("{}: row {row}, field {field:?}: {message}", path.display())]
    MalformedRow {
        path: PathBuf,
        row: usize,
        field: String,
        message: String,
    },
    #[error("missing input table {table:?} in {}", dir.display())]
    MissingTable { dir: PathBuf, table: String },
    #[error("invalid engagement trace: {0}")]
    InvalidTrace(String),
}

impl IngestError {
    /// True for per-row invariant violations, false for file/schema problems.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            IngestError::MalformedRow { .. } | IngestError::InvalidTrace(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableKind {
    Claims,
    Exposure,
    Mileage,
    Zips,
    VmtInputs,
}

impl TableKind {
    pub const ALL: [TableKind; 5] = [
        TableKind::Claims,
        TableKind::Exposure,
        TableKind::Mileage,
        TableKind::Zips,
        TableKind::VmtInputs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableKind::Claims => ClaimRecord::TABLE,
            TableKind::Exposure => ExposureRecord::TABLE,
            TableKind::Mileage => MileageLog::TABLE,
            TableKind::Zips => ZipRow::TABLE,
            TableKind::VmtInputs => VmtInputRow::TABLE,
        }
    }
}

/// A parsed, validated table.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Claims(Vec<ClaimRecord>),
    Exposure(Vec<ExposureRecord>),
    Mileage(Vec<MileageLog>),
    Zips(Vec<ZipRow>),
    VmtInputs(Vec<VmtInputRow>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Claims(v) => v.len(),
            Table::Exposure(v) => v.len(),
            Table::Mileage(v) => v.len(),
            Table::Zips(v) => v.len(),
            Table::VmtInputs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of the table's quantity column, where it has one
    /// (policy-years for exposure, miles for mileage).
    pub fn total(&self) -> Option<f64> {
        match self {
            Table::Exposure(v) => Some(v.iter().map(|r| r.policy_years).sum()),
            Table::Mileage(v) => Some(v.iter().map(|r| r.miles).sum()),
            _ => None,
        }
    }

    pub fn to_canonical_csv(&self) -> String {
        match self {
            Table::Claims(v) => to_canonical_csv(v),
            Table::Exposure(v) => to_canonical_csv(v),
            Table::Mileage(v) => to_canonical_csv(v),
            Table::Zips(v) => to_canonical_csv(v),
            Table::VmtInputs(v) => to_canonical_csv(v),
        }
    }
}

/// Parses and validates one input file as the given table.
pub fn parse_dataset(path: &Path, kind: TableKind) -> Result<Table, IngestError> {
    Ok(match kind {
        TableKind::Claims => Table::Claims(read_records(path)?),
        TableKind::Exposure => Table::Exposure(read_records(path)?),
        TableKind::Mileage => Table::Mileage(read_records(path)?),
        TableKind::Zips => Table::Zips(read_records(path)?),
        TableKind::VmtInputs => Table::VmtInputs(read_records(path)?),
    })
}

/// All input tables of one run. Exposure and VMT tables may be absent
/// when baselines are supplied precomputed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub claims: Vec<ClaimRecord>,
    pub exposure: Vec<ExposureRecord>,
    pub mileage: Vec<MileageLog>,
    pub zips: Vec<ZipRow>,
    pub vmt_inputs: Vec<VmtInputRow>,
    /// Paths the tables were read from, keyed by table name.
    pub sources: BTreeMap<String, PathBuf>,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Dataset, IngestError> {
        let mut ds = Dataset::default();
        for kind in TableKind::ALL {
            let required = matches!(
                kind,
                TableKind::Claims | TableKind::Mileage | TableKind::Zips
            );
            let Some(path) = find_table(dir, kind.name()) else {
                if required {
                    return Err(IngestError::MissingTable {
                        dir: dir.to_path_buf(),
                        table: kind.name().to_string(),
                    });
                }
                continue;
            };
            match parse_dataset(&path, kind)? {
                Table::Claims(v) => ds.claims = v,
                Table::Exposure(v) => ds.exposure = v,
                Table::Mileage(v) => ds.mileage = v,
                Table::Zips(v) => ds.zips = v,
                Table::VmtInputs(v) => ds.vmt_inputs = v,
            }
            ds.sources.insert(kind.name().to_string(), path);
        }
        Ok(ds)
    }

    pub fn zip_sets(&self) -> Vec<ZipCodeSet> {
        ZipCodeSet::from_rows(&self.zips)
    }

    /// Claims of `source` whose liability flag is false; reported, never counted.
    pub fn excluded_claims(&self, source: ClaimSource) -> usize {
        self.claims
            .iter()
            .filter(|c| c.source == source && !c.is_countable())
            .count()
    }
}

fn in_operating_zips(zips: &[ZipCodeSet], region: Region, zip: &ZipCode) -> bool {
    zips.iter()
        .any(|set| set.region == region && set.contains(zip))
}

/// Keeps the claims whose zip code belongs to their region's operating set.
pub fn filter_claims_by_zip(claims: &[ClaimRecord], zips: &[ZipCodeSet]) -> Vec<ClaimRecord> {
    claims
        .iter()
        .filter(|c| in_operating_zips(zips, c.region, &c.zip_code))
        .cloned()
        .collect()
}

/// Same rule as [`filter_claims_by_zip`], for exposure rows.
pub fn filter_exposure_by_zip(
    exposure: &[ExposureRecord],
    zips: &[ZipCodeSet],
) -> Vec<ExposureRecord> {
    exposure
        .iter()
        .filter(|e| in_operating_zips(zips, e.region, &e.zip_code))
        .cloned()
        .collect()
}
