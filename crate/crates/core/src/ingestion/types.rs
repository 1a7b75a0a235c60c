use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::table::{fmt_f64, FieldError, Record, Row};

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $canon:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $canon),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($canon $(| $alias)* => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} {other:?}",
                        stringify!($name)
                    )),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coverage {
    BodilyInjury,
    PropertyDamage,
}

text_enum!(Coverage {
    BodilyInjury => "BI" | "BodilyInjury",
    PropertyDamage => "PD" | "PropertyDamage" | "PDL",
});

impl Coverage {
    pub const ALL: [Coverage; 2] = [Coverage::BodilyInjury, Coverage::PropertyDamage];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    SanFrancisco,
    Phoenix,
}

text_enum!(Region {
    SanFrancisco => "SanFrancisco" | "SF",
    Phoenix => "Phoenix" | "PHX",
});

impl Region {
    pub const ALL: [Region; 2] = [Region::SanFrancisco, Region::Phoenix];

    /// Short key used in per-region output columns.
    pub fn key(self) -> &'static str {
        match self {
            Region::SanFrancisco => "sf",
            Region::Phoenix => "phx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClaimSource {
    Fleet,
    HumanBaseline,
}

text_enum!(ClaimSource {
    Fleet => "Fleet",
    HumanBaseline => "HumanBaseline" | "Human",
});

/// Driving mode recorded on a fleet claim or mileage row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DrivingMode {
    Manual,
    TestingOperations,
    RiderOnly,
}

text_enum!(DrivingMode {
    Manual => "Manual",
    TestingOperations => "TO",
    RiderOnly => "RO",
});

impl DrivingMode {
    pub const ALL: [DrivingMode; 3] = [
        DrivingMode::Manual,
        DrivingMode::TestingOperations,
        DrivingMode::RiderOnly,
    ];
}

/// Reporting category: one stored mode, or the TO+RO aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Manual,
    TestingOperations,
    RiderOnly,
    TestingPlusRiderOnly,
}

text_enum!(Category {
    Manual => "Manual",
    TestingOperations => "TO",
    RiderOnly => "RO",
    TestingPlusRiderOnly => "TO+RO" | "TOplusRO",
});

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Manual,
        Category::TestingOperations,
        Category::RiderOnly,
        Category::TestingPlusRiderOnly,
    ];

    pub fn modes(self) -> &'static [DrivingMode] {
        match self {
            Category::Manual => &[DrivingMode::Manual],
            Category::TestingOperations => &[DrivingMode::TestingOperations],
            Category::RiderOnly => &[DrivingMode::RiderOnly],
            Category::TestingPlusRiderOnly => {
                &[DrivingMode::TestingOperations, DrivingMode::RiderOnly]
            }
        }
    }

    pub fn includes(self, mode: DrivingMode) -> bool {
        self.modes().contains(&mode)
    }
}

/// Five ASCII digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ZipCode(String);

impl ZipCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ZipCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.len() == 5 && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(ZipCode(s.to_string()))
        } else {
            Err(format!(
                "zip code must be exactly 5 ASCII digits, got {s:?}"
            ))
        }
    }
}

impl TryFrom<String> for ZipCode {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ZipCode> for String {
    fn from(z: ZipCode) -> String {
        z.0
    }
}

impl fmt::Display for ZipCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Inclusive date ranges claims must fall in, per source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyWindows {
    pub human: (NaiveDate, NaiveDate),
    pub fleet: (NaiveDate, NaiveDate),
}

impl Default for StudyWindows {
    fn default() -> Self {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid date");
        StudyWindows {
            human: (d(2016, 1, 1), d(2021, 12, 31)),
            fleet: (d(2018, 1, 1), d(2023, 8, 1)),
        }
    }
}

impl StudyWindows {
    pub fn for_source(&self, source: ClaimSource) -> (NaiveDate, NaiveDate) {
        match source {
            ClaimSource::Fleet => self.fleet,
            ClaimSource::HumanBaseline => self.human,
        }
    }
}

pub const BASELINE_FIRST_YEAR: i32 = 2016;
pub const BASELINE_LAST_YEAR: i32 = 2021;

/// One third-party liability claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub coverage: Coverage,
    pub occurrence_date: NaiveDate,
    pub zip_code: ZipCode,
    pub region: Region,
    pub source: ClaimSource,
    pub liability_payment_expected: bool,
    /// Attributed driving mode; fleet claims only.
    pub mode: Option<DrivingMode>,
    /// Curator override of `mode`.
    pub mode_override: Option<DrivingMode>,
}

impl ClaimRecord {
    pub fn effective_mode(&self) -> Option<DrivingMode> {
        self.mode_override.or(self.mode)
    }

    /// Counted in frequencies only when a liability payment is expected.
    pub fn is_countable(&self) -> bool {
        self.liability_payment_expected
    }

    /// Checks the record's invariants against the given study windows.
    pub fn validate(&self, windows: &StudyWindows) -> Result<(), FieldError> {
        if self.claim_id.trim().is_empty() {
            return Err(FieldError::new("claim_id", "value is required"));
        }
        let (first, last) = windows.for_source(self.source);
        if self.occurrence_date < first || self.occurrence_date > last {
            return Err(FieldError::new(
                "occurrence_date",
                format!(
                    "{} lies outside the {} study window {first}..{last}",
                    self.occurrence_date, self.source
                ),
            ));
        }
        match self.source {
            ClaimSource::Fleet if self.mode.is_none() => Err(FieldError::new(
                "mode",
                "fleet claims must carry one of Manual, TO, RO",
            )),
            ClaimSource::HumanBaseline if self.mode.is_some() || self.mode_override.is_some() => {
                Err(FieldError::new(
                    "mode",
                    "human baseline claims carry no driving mode",
                ))
            }
            _ => Ok(()),
        }
    }
}

fn parse_bool(row: &Row<'_>, field: &str) -> Result<bool, FieldError> {
    let raw = row.required(field)?;
    match raw.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(FieldError::new(
            field,
            format!("expected true/false, got {raw:?}"),
        )),
    }
}

impl Record for ClaimRecord {
    const TABLE: &'static str = "claims";
    const COLUMNS: &'static [&'static str] = &[
        "claim_id",
        "coverage",
        "occurrence_date",
        "zip_code",
        "region",
        "source",
        "liability_payment_expected",
        "mode",
        "mode_override",
    ];
    const OPTIONAL: &'static [&'static str] = &["mode_override"];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError> {
        let record = ClaimRecord {
            claim_id: row.required("claim_id")?.to_string(),
            coverage: row.parse("coverage")?,
            occurrence_date: row.parse("occurrence_date")?,
            zip_code: row.parse("zip_code")?,
            region: row.parse("region")?,
            source: row.parse("source")?,
            liability_payment_expected: parse_bool(row, "liability_payment_expected")?,
            mode: row.parse_optional("mode")?,
            mode_override: row.parse_optional("mode_override")?,
        };
        record.validate(&StudyWindows::default())?;
        Ok(record)
    }

    fn to_row(&self) -> Vec<String> {
        vec![
            self.claim_id.clone(),
            self.coverage.to_string(),
            self.occurrence_date.format("%Y-%m-%d").to_string(),
            self.zip_code.to_string(),
            self.region.to_string(),
            self.source.to_string(),
            self.liability_payment_expected.to_string(),
            self.mode.map(|m| m.to_string()).unwrap_or_default(),
            self.mode_override
                .map(|m| m.to_string())
                .unwrap_or_default(),
        ]
    }
}

/// Earned policy-years for one region, zip and coverage year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub region: Region,
    pub zip_code: ZipCode,
    pub coverage_year: i32,
    pub policy_years: f64,
}

impl Record for ExposureRecord {
    const TABLE: &'static str = "exposure";
    const COLUMNS: &'static [&'static str] =
        &["region", "zip_code", "coverage_year", "policy_years"];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError> {
        let coverage_year: i32 = row.parse("coverage_year")?;
        if !(BASELINE_FIRST_YEAR..=BASELINE_LAST_YEAR).contains(&coverage_year) {
            return Err(FieldError::new(
                "coverage_year",
                format!("{coverage_year} outside {BASELINE_FIRST_YEAR}..={BASELINE_LAST_YEAR}"),
            ));
        }
        let policy_years: f64 = row.parse("policy_years")?;
        if !(policy_years >= 0.0) || !policy_years.is_finite() {
            return Err(FieldError::new(
                "policy_years",
                format!("must be a non-negative number, got {policy_years}"),
            ));
        }
        Ok(ExposureRecord {
            region: row.parse("region")?,
            zip_code: row.parse("zip_code")?,
            coverage_year,
            policy_years,
        })
    }

    fn to_row(&self) -> Vec<String> {
        vec![
            self.region.to_string(),
            self.zip_code.to_string(),
            self.coverage_year.to_string(),
            fmt_f64(self.policy_years),
        ]
    }
}

/// Fleet miles for one region and driving mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MileageLog {
    pub region: Region,
    pub mode: DrivingMode,
    pub miles: f64,
}

impl Record for MileageLog {
    const TABLE: &'static str = "mileage";
    const COLUMNS: &'static [&'static str] = &["region", "mode", "miles"];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError> {
        let miles: f64 = row.parse("miles")?;
        if !(miles >= 0.0) || !miles.is_finite() {
            return Err(FieldError::new(
                "miles",
                format!("must be a non-negative number, got {miles}"),
            ));
        }
        Ok(MileageLog {
            region: row.parse("region")?,
            mode: row.parse("mode")?,
            miles,
        })
    }

    fn to_row(&self) -> Vec<String> {
        vec![
            self.region.to_string(),
            self.mode.to_string(),
            fmt_f64(self.miles),
        ]
    }
}

/// One row of `zips.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipRow {
    pub region: Region,
    pub zip_code: ZipCode,
}

impl Record for ZipRow {
    const TABLE: &'static str = "zips";
    const COLUMNS: &'static [&'static str] = &["region", "zip_code"];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError> {
        Ok(ZipRow {
            region: row.parse("region")?,
            zip_code: row.parse("zip_code")?,
        })
    }

    fn to_row(&self) -> Vec<String> {
        vec![self.region.to_string(), self.zip_code.to_string()]
    }
}

/// Operating zip codes of one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZipCodeSet {
    pub region: Region,
    pub zip_codes: BTreeSet<ZipCode>,
}

impl ZipCodeSet {
    pub fn contains(&self, zip: &ZipCode) -> bool {
        self.zip_codes.contains(zip)
    }

    /// Groups rows into one non-empty set per region, in region order.
    pub fn from_rows(rows: &[ZipRow]) -> Vec<ZipCodeSet> {
        Region::ALL
            .iter()
            .filter_map(|&region| {
                let zip_codes: BTreeSet<ZipCode> = rows
                    .iter()
                    .filter(|r| r.region == region)
                    .map(|r| r.zip_code.clone())
                    .collect();
                (!zip_codes.is_empty()).then_some(ZipCodeSet { region, zip_codes })
            })
            .collect()
    }
}
