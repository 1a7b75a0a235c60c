//! Annual vehicle-miles-traveled per vehicle, estimated per region and
//! year from state and urbanized-area aggregates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::table::{fmt_f64, fmt_opt_f64, FieldError, Record, Row};
use crate::ingestion::Region;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmtError {
    #[error("invalid VMT input: {0}")]
    InvalidInput(String),
    #[error("{scope} VMT for {region_name} {year} has months {present:?}; all 12 are required")]
    IncompleteMonths {
        scope: RegionScope,
        region_name: String,
        year: i32,
        present: Vec<u32>,
    },
    #[error("duplicate {scope} VMT rows for {region} {year}")]
    DuplicateRows {
        scope: RegionScope,
        region: Region,
        year: i32,
    },
    #[error("no {scope} VMT estimate for {region} {year}")]
    MissingYear {
        region: Region,
        year: i32,
        scope: RegionScope,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionScope {
    State,
    UrbanizedArea,
}

impl fmt::Display for RegionScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionScope::State => "State",
            RegionScope::UrbanizedArea => "UrbanizedArea",
        })
    }
}

impl FromStr for RegionScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "State" => Ok(RegionScope::State),
            "UrbanizedArea" | "Urban" => Ok(RegionScope::UrbanizedArea),
            other => Err(format!("unknown region scope {other:?}")),
        }
    }
}

/// Maps a published area name onto the study region it calibrates.
///
/// Accepts the region keys themselves, the state names for `State`
/// rows, and any urbanized-area name mentioning the city for
/// `UrbanizedArea` rows.
pub fn resolve_region(scope: RegionScope, name: &str) -> Option<Region> {
    if let Ok(region) = name.parse::<Region>() {
        return Some(region);
    }
    match scope {
        RegionScope::State => match name.to_ascii_lowercase().as_str() {
            "california" | "ca" => Some(Region::SanFrancisco),
            "arizona" | "az" => Some(Region::Phoenix),
            _ => None,
        },
        RegionScope::UrbanizedArea => {
            let lower = name.to_ascii_lowercase();
            if lower.contains("san francisco") {
                Some(Region::SanFrancisco)
            } else if lower.contains("phoenix") {
                Some(Region::Phoenix)
            } else {
                None
            }
        }
    }
}

/// One row of `vmt_inputs.csv`. `month` is blank for annual rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmtInputRow {
    pub region_scope: RegionScope,
    pub region_name: String,
    pub year: i32,
    pub month: Option<u32>,
    pub total_vmt_miles: f64,
    pub registered_vehicles: Option<f64>,
    pub population: Option<f64>,
    pub vehicles_per_capita: Option<f64>,
}

impl VmtInputRow {
    pub fn region(&self) -> Region {
        resolve_region(self.region_scope, &self.region_name)
            .expect("region_name validated at parse time")
    }
}

fn positive(row: &Row<'_>, field: &str) -> Result<Option<f64>, FieldError> {
    match row.parse_optional::<f64>(field)? {
        Some(v) if !(v > 0.0) || !v.is_finite() => {
            Err(FieldError::new(field, format!("must be positive, got {v}")))
        }
        other => Ok(other),
    }
}

impl Record for VmtInputRow {
    const TABLE: &'static str = "vmt_inputs";
    const COLUMNS: &'static [&'static str] = &[
        "region_scope",
        "region_name",
        "year",
        "month",
        "total_vmt_miles",
        "registered_vehicles",
        "population",
        "vehicles_per_capita",
    ];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError> {
        let region_scope: RegionScope = row.parse("region_scope")?;
        let region_name = row.required("region_name")?.to_string();
        if resolve_region(region_scope, &region_name).is_none() {
            return Err(FieldError::new(
                "region_name",
                format!("{region_name:?} does not map to a study region"),
            ));
        }
        let month: Option<u32> = row.parse_optional("month")?;
        if let Some(m) = month {
            if !(1..=12).contains(&m) {
                return Err(FieldError::new("month", format!("must be 1..=12, got {m}")));
            }
        }
        let total_vmt_miles = positive(row, "total_vmt_miles")?
            .ok_or_else(|| FieldError::new("total_vmt_miles", "value is required"))?;
        let registered_vehicles = positive(row, "registered_vehicles")?;
        let population = positive(row, "population")?;
        let vehicles_per_capita = positive(row, "vehicles_per_capita")?;

        match region_scope {
            RegionScope::State => {
                if registered_vehicles.is_none() {
                    return Err(FieldError::new(
                        "registered_vehicles",
                        "required for State rows",
                    ));
                }
                if population.is_some() || vehicles_per_capita.is_some() {
                    return Err(FieldError::new(
                        "population",
                        "State rows carry registered_vehicles only",
                    ));
                }
            }
            RegionScope::UrbanizedArea => {
                if month.is_some() {
                    return Err(FieldError::new("month", "UrbanizedArea rows are annual"));
                }
                if population.is_none() {
                    return Err(FieldError::new(
                        "population",
                        "required for UrbanizedArea rows",
                    ));
                }
                if vehicles_per_capita.is_none() {
                    return Err(FieldError::new(
                        "vehicles_per_capita",
                        "required for UrbanizedArea rows",
                    ));
                }
                if registered_vehicles.is_some() {
                    return Err(FieldError::new(
                        "registered_vehicles",
                        "UrbanizedArea rows use population x vehicles_per_capita",
                    ));
                }
            }
        }

        Ok(VmtInputRow {
            region_scope,
            region_name,
            year: row.parse("year")?,
            month,
            total_vmt_miles,
            registered_vehicles,
            population,
            vehicles_per_capita,
        })
    }

    fn to_row(&self) -> Vec<String> {
        vec![
            self.region_scope.to_string(),
            self.region_name.clone(),
            self.year.to_string(),
            self.month.map(|m| m.to_string()).unwrap_or_default(),
            fmt_f64(self.total_vmt_miles),
            fmt_opt_f64(self.registered_vehicles),
            fmt_opt_f64(self.population),
            fmt_opt_f64(self.vehicles_per_capita),
        ]
    }
}

fn require_positive(name: &str, value: f64) -> Result<(), VmtError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(VmtError::InvalidInput(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

/// Annual state VMT over registered vehicles.
pub fn vmt_per_vehicle_state(
    total_vmt_miles: f64,
    registered_vehicles: f64,
) -> Result<f64, VmtError> {
    require_positive("total_vmt_miles", total_vmt_miles)?;
    require_positive("registered_vehicles", registered_vehicles)?;
    Ok(total_vmt_miles / registered_vehicles)
}

/// Annual urbanized-area VMT over `population × vehicles_per_capita`.
pub fn vmt_per_vehicle_urban(
    total_vmt_miles: f64,
    population: f64,
    vehicles_per_capita: f64,
) -> Result<f64, VmtError> {
    require_positive("total_vmt_miles", total_vmt_miles)?;
    require_positive("population", population)?;
    require_positive("vehicles_per_capita", vehicles_per_capita)?;
    Ok(total_vmt_miles / (population * vehicles_per_capita))
}

/// The estimate giving the lower baseline frequency, i.e. the larger
/// miles-per-vehicle value.
pub fn select_conservative(state_est: f64, urban_est: f64) -> f64 {
    state_est.max(urban_est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VmtSelection {
    #[default]
    #[serde(rename = "auto")]
    ConservativeAuto,
    #[serde(rename = "state")]
    ForceState,
    #[serde(rename = "urban")]
    ForceUrban,
}

impl VmtSelection {
    pub fn select(self, state_est: f64, urban_est: f64) -> f64 {
        match self {
            VmtSelection::ConservativeAuto => select_conservative(state_est, urban_est),
            VmtSelection::ForceState => state_est,
            VmtSelection::ForceUrban => urban_est,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VmtSelection::ConservativeAuto => "auto",
            VmtSelection::ForceState => "state",
            VmtSelection::ForceUrban => "urban",
        }
    }
}

impl FromStr for VmtSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(VmtSelection::ConservativeAuto),
            "state" => Ok(VmtSelection::ForceState),
            "urban" => Ok(VmtSelection::ForceUrban),
            other => Err(format!(
                "unknown VMT selection {other:?} (auto, state, urban)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmtEstimate {
    pub region: Region,
    pub year: i32,
    pub miles_per_vehicle_state: f64,
    pub miles_per_vehicle_urban: f64,
    pub selected: f64,
}

/// Per region-year estimates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VmtTable {
    estimates: BTreeMap<(Region, i32), VmtEstimate>,
}

impl VmtTable {
    pub fn get(&self, region: Region, year: i32) -> Result<&VmtEstimate, VmtError> {
        self.estimates
            .get(&(region, year))
            .ok_or(VmtError::MissingYear {
                region,
                year,
                scope: RegionScope::State,
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = &VmtEstimate> {
        self.estimates.values()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn to_csv(&self, selection: VmtSelection) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "region",
            "year",
            "miles_per_vehicle_state",
            "miles_per_vehicle_urban",
            "selected",
            "selection",
        ])
        .expect("in-memory write");
        for e in self.iter() {
            w.write_record([
                e.region.to_string(),
                e.year.to_string(),
                fmt_f64(e.miles_per_vehicle_state),
                fmt_f64(e.miles_per_vehicle_urban),
                fmt_f64(e.selected),
                selection.as_str().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("UTF-8")
    }
}

fn annual_state_total(
    region: Region,
    year: i32,
    rows: &[&VmtInputRow],
) -> Result<(f64, f64), VmtError> {
    let annual: Vec<_> = rows.iter().filter(|r| r.month.is_none()).collect();
    let monthly: Vec<_> = rows.iter().filter(|r| r.month.is_some()).collect();
    let duplicate = || VmtError::DuplicateRows {
        scope: RegionScope::State,
        region,
        year,
    };
    if !annual.is_empty() {
        if annual.len() > 1 || !monthly.is_empty() {
            return Err(duplicate());
        }
        let row = annual[0];
        return Ok((
            row.total_vmt_miles,
            row.registered_vehicles.expect("validated at parse time"),
        ));
    }
    let months: BTreeSet<u32> = monthly.iter().filter_map(|r| r.month).collect();
    if months.len() != monthly.len() {
        return Err(duplicate());
    }
    if months.len() != 12 {
        return Err(VmtError::IncompleteMonths {
            scope: RegionScope::State,
            region_name: rows[0].region_name.clone(),
            year,
            present: months.into_iter().collect(),
        });
    }
    let registered = monthly[0]
        .registered_vehicles
        .expect("validated at parse time");
    if monthly
        .iter()
        .any(|r| r.registered_vehicles != Some(registered))
    {
        return Err(VmtError::InvalidInput(format!(
            "monthly State rows for {region} {year} disagree on registered_vehicles"
        )));
    }
    Ok((monthly.iter().map(|r| r.total_vmt_miles).sum(), registered))
}

/// Builds one estimate per region-year. Every region-year that appears in
/// either scope must appear in both; nothing is interpolated.
pub fn estimate_vmt(rows: &[VmtInputRow], selection: VmtSelection) -> Result<VmtTable, VmtError> {
    let mut groups: BTreeMap<(Region, i32, RegionScope), Vec<&VmtInputRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.region(), row.year, row.region_scope))
            .or_default()
            .push(row);
    }
    let keys: BTreeSet<(Region, i32)> = groups.keys().map(|&(r, y, _)| (r, y)).collect();

    let mut estimates = BTreeMap::new();
    for (region, year) in keys {
        let scoped = |scope| {
            groups
                .get(&(region, year, scope))
                .ok_or(VmtError::MissingYear {
                    region,
                    year,
                    scope,
                })
        };
        let (state_total, registered) =
            annual_state_total(region, year, scoped(RegionScope::State)?)?;
        let urban_rows = scoped(RegionScope::UrbanizedArea)?;
        if urban_rows.len() > 1 {
            return Err(VmtError::DuplicateRows {
                scope: RegionScope::UrbanizedArea,
                region,
                year,
            });
        }
        let urban = urban_rows[0];
        let state_est = vmt_per_vehicle_state(state_total, registered)?;
        let urban_est = vmt_per_vehicle_urban(
            urban.total_vmt_miles,
            urban.population.expect("validated at parse time"),
            urban.vehicles_per_capita.expect("validated at parse time"),
        )?;
        estimates.insert(
            (region, year),
            VmtEstimate {
                region,
                year,
                miles_per_vehicle_state: state_est,
                miles_per_vehicle_urban: urban_est,
                selected: selection.select(state_est, urban_est),
            },
        );
    }
    Ok(VmtTable { estimates })
}
