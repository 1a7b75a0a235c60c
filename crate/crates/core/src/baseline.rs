//! Human-driver baseline frequencies calibrated to the fleet's zip codes
//! and regional mileage mix.
//!
//! Per region, baseline claims are divided by exposure miles, where
//! exposure miles are earned policy-years converted year by year with
//! that year's selected VMT per vehicle. Regional frequencies are then
//! mixed with the fleet category's share of miles in each region.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::table::{fmt_f64, fmt_opt_f64, FieldError, Record, Row};
use crate::ingestion::{
    filter_claims_by_zip, filter_exposure_by_zip, Category, ClaimRecord, ClaimSource, Coverage,
    Dataset, ExposureRecord, MileageLog, Region,
};
use crate::stats::{self, Confidence, IntervalMethod, RateEstimate, StatsError};
use crate::vmt::{VmtError, VmtTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("no VMT estimate for {region} {year}")]
    MissingVmtYear { region: Region, year: i32 },
    #[error("zero baseline exposure for {region} {coverage}")]
    ZeroExposure { region: Region, coverage: Coverage },
    #[error("{category} mix puts weight on {region}, which has no baseline frequency")]
    MissingRegion { category: Category, region: Region },
    #[error(transparent)]
    Vmt(#[from] VmtError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Converts earned policy-years into miles.
pub fn exposure_miles(policy_years: f64, vmt_selected: f64) -> f64 {
    policy_years * vmt_selected
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFrequency {
    pub region: Region,
    pub coverage: Coverage,
    pub claim_count: u64,
    pub exposure_mmi: f64,
    pub frequency_cpmm: f64,
}

/// Frequency for one region and coverage from zip-filtered inputs.
///
/// Only countable human-baseline claims of `region` and `coverage` are
/// counted; exposure rows of other regions are ignored.
pub fn region_frequency(
    region: Region,
    coverage: Coverage,
    claims: &[ClaimRecord],
    exposure: &[ExposureRecord],
    vmt: &VmtTable,
) -> Result<RegionFrequency, BaselineError> {
    let claim_count = claims
        .iter()
        .filter(|c| {
            c.source == ClaimSource::HumanBaseline
                && c.region == region
                && c.coverage == coverage
                && c.is_countable()
        })
        .count() as u64;

    let mut exposure_miles_total = 0.0;
    for row in exposure.iter().filter(|e| e.region == region) {
        let estimate =
            vmt.get(region, row.coverage_year)
                .map_err(|_| BaselineError::MissingVmtYear {
                    region,
                    year: row.coverage_year,
                })?;
        exposure_miles_total += exposure_miles(row.policy_years, estimate.selected);
    }
    let exposure_mmi = exposure_miles_total / 1e6;
    if !(exposure_mmi > 0.0) {
        return Err(BaselineError::ZeroExposure { region, coverage });
    }
    Ok(RegionFrequency {
        region,
        coverage,
        claim_count,
        exposure_mmi,
        frequency_cpmm: claim_count as f64 / exposure_mmi,
    })
}

/// Share of a fleet category's miles driven in each region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MileageMix {
    pub category: Category,
    pub weights: BTreeMap<Region, f64>,
}

impl MileageMix {
    /// `None` when the category has no miles. TO+RO weights come from the
    /// combined TO and RO miles.
    pub fn from_mileage(category: Category, mileage: &[MileageLog]) -> Option<MileageMix> {
        let mut miles: BTreeMap<Region, f64> = BTreeMap::new();
        for log in mileage.iter().filter(|m| category.includes(m.mode)) {
            *miles.entry(log.region).or_default() += log.miles;
        }
        let total: f64 = miles.values().sum();
        if !(total > 0.0) {
            return None;
        }
        Some(MileageMix {
            category,
            weights: miles.into_iter().map(|(r, m)| (r, m / total)).collect(),
        })
    }

    pub fn weight(&self, region: Region) -> f64 {
        self.weights.get(&region).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionContribution {
    pub weight: f64,
    pub frequency: RegionFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub category: Category,
    pub coverage: Coverage,
    pub estimate: RateEstimate,
    pub standard_error: Option<f64>,
    pub regions: Vec<RegionContribution>,
}

impl BaselineResult {
    pub fn claim_count_total(&self) -> Option<u64> {
        (!self.regions.is_empty())
            .then(|| self.regions.iter().map(|r| r.frequency.claim_count).sum())
    }

    pub fn exposure_mmi_total(&self) -> Option<f64> {
        (!self.regions.is_empty())
            .then(|| self.regions.iter().map(|r| r.frequency.exposure_mmi).sum())
    }
}

/// Mileage-weighted baseline with a normal-approximation interval.
pub fn mix_baseline(
    per_region: &[RegionFrequency],
    mix: &MileageMix,
    coverage: Coverage,
    confidence: Confidence,
) -> Result<BaselineResult, BaselineError> {
    let mut weights = Vec::new();
    let mut rates = Vec::new();
    let mut exposures = Vec::new();
    for (&region, &w) in &mix.weights {
        if w == 0.0 {
            continue;
        }
        let freq = per_region
            .iter()
            .find(|f| f.region == region && f.coverage == coverage)
            .ok_or(BaselineError::MissingRegion {
                category: mix.category,
                region,
            })?;
        weights.push(w);
        rates.push(freq.frequency_cpmm);
        exposures.push(freq.exposure_mmi);
    }
    let se = stats::mixture_standard_error(&weights, &rates, &exposures)?;
    let point: f64 = weights.iter().zip(&rates).map(|(w, f)| w * f).sum();
    let estimate = stats::normal_rate_ci(point, se, confidence)?;
    let regions = per_region
        .iter()
        .filter(|f| f.coverage == coverage)
        .map(|f| RegionContribution {
            weight: mix.weight(f.region),
            frequency: f.clone(),
        })
        .collect();
    Ok(BaselineResult {
        category: mix.category,
        coverage,
        estimate,
        standard_error: Some(se),
        regions,
    })
}

/// Regional frequencies for every region with in-zip exposure.
pub fn region_frequencies(
    dataset: &Dataset,
    vmt: &VmtTable,
) -> Result<Vec<RegionFrequency>, BaselineError> {
    let zips = dataset.zip_sets();
    let claims = filter_claims_by_zip(&dataset.claims, &zips);
    let exposure = filter_exposure_by_zip(&dataset.exposure, &zips);
    let mut out = Vec::new();
    for region in Region::ALL {
        if !exposure.iter().any(|e| e.region == region) {
            continue;
        }
        for coverage in Coverage::ALL {
            out.push(region_frequency(region, coverage, &claims, &exposure, vmt)?);
        }
    }
    Ok(out)
}

/// Baselines for every category with fleet miles, both coverages.
pub fn build_baselines(
    dataset: &Dataset,
    vmt: &VmtTable,
    confidence: Confidence,
) -> Result<Vec<BaselineResult>, BaselineError> {
    let per_region = region_frequencies(dataset, vmt)?;
    let mut out = Vec::new();
    for category in Category::ALL {
        let Some(mix) = MileageMix::from_mileage(category, &dataset.mileage) else {
            continue;
        };
        for coverage in Coverage::ALL {
            out.push(mix_baseline(&per_region, &mix, coverage, confidence)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
struct RegionColumns {
    weight: Option<f64>,
    claims: Option<u64>,
    exposure_mmi: Option<f64>,
    rate_cpmm: Option<f64>,
}

/// One row of `baseline.csv`; also accepted as a precomputed input.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    category: Category,
    coverage: Coverage,
    confidence: f64,
    rate_cpmm: f64,
    ci_low: f64,
    ci_high: f64,
    standard_error: Option<f64>,
    claim_count_total: Option<u64>,
    exposure_mmi_total: Option<f64>,
    regions: [RegionColumns; 2],
}

impl From<&BaselineResult> for BaselineRow {
    fn from(b: &BaselineResult) -> Self {
        let mut regions: [RegionColumns; 2] = Default::default();
        for (slot, region) in regions.iter_mut().zip(Region::ALL) {
            if let Some(c) = b.regions.iter().find(|c| c.frequency.region == region) {
                *slot = RegionColumns {
                    weight: Some(c.weight),
                    claims: Some(c.frequency.claim_count),
                    exposure_mmi: Some(c.frequency.exposure_mmi),
                    rate_cpmm: Some(c.frequency.frequency_cpmm),
                };
            }
        }
        BaselineRow {
            category: b.category,
            coverage: b.coverage,
            confidence: b.estimate.confidence.level(),
            rate_cpmm: b.estimate.rate_cpmm,
            ci_low: b.estimate.ci_low_cpmm,
            ci_high: b.estimate.ci_high_cpmm,
            standard_error: b.standard_error,
            claim_count_total: b.claim_count_total(),
            exposure_mmi_total: b.exposure_mmi_total(),
            regions,
        }
    }
}

impl BaselineRow {
    pub fn into_result(self) -> BaselineResult {
        let regions = self
            .regions
            .iter()
            .zip(Region::ALL)
            .filter_map(|(cols, region)| {
                Some(RegionContribution {
                    weight: cols.weight?,
                    frequency: RegionFrequency {
                        region,
                        coverage: self.coverage,
                        claim_count: cols.claims?,
                        exposure_mmi: cols.exposure_mmi?,
                        frequency_cpmm: cols.rate_cpmm?,
                    },
                })
            })
            .collect();
        BaselineResult {
            category: self.category,
            coverage: self.coverage,
            estimate: RateEstimate {
                rate_cpmm: self.rate_cpmm,
                ci_low_cpmm: self.ci_low,
                ci_high_cpmm: self.ci_high,
                confidence: Confidence::new(self.confidence).expect("validated at parse time"),
                method: IntervalMethod::NormalApprox,
                claim_count: None,
                exposure_mmi: None,
            },
            standard_error: self.standard_error,
            regions,
        }
    }
}

impl Record for BaselineRow {
    const TABLE: &'static str = "baseline";
    const COLUMNS: &'static [&'static str] = &[
        "category",
        "coverage",
        "confidence",
        "rate_cpmm",
        "ci_low",
        "ci_high",
        "standard_error",
        "claim_count_total",
        "exposure_mmi_total",
        "sf_weight",
        "sf_claims",
        "sf_exposure_mmi",
        "sf_rate_cpmm",
        "phx_weight",
        "phx_claims",
        "phx_exposure_mmi",
        "phx_rate_cpmm",
    ];
    const OPTIONAL: &'static [&'static str] = &[
        "standard_error",
        "claim_count_total",
        "exposure_mmi_total",
        "sf_weight",
        "sf_claims",
        "sf_exposure_mmi",
        "sf_rate_cpmm",
        "phx_weight",
        "phx_claims",
        "phx_exposure_mmi",
        "phx_rate_cpmm",
    ];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError> {
        let confidence: f64 = row.parse("confidence")?;
        Confidence::new(confidence).map_err(|e| FieldError::new("confidence", e.to_string()))?;
        let rate_cpmm: f64 = row.parse("rate_cpmm")?;
        let ci_low: f64 = row.parse("ci_low")?;
        let ci_high: f64 = row.parse("ci_high")?;
        if !(0.0 <= ci_low && ci_low <= rate_cpmm && rate_cpmm <= ci_high) {
            return Err(FieldError::new(
                "rate_cpmm",
                format!(
                    "need 0 <= ci_low <= rate <= ci_high, got {ci_low}, {rate_cpmm}, {ci_high}"
                ),
            ));
        }
        let mut regions: [RegionColumns; 2] = Default::default();
        for (slot, region) in regions.iter_mut().zip(Region::ALL) {
            let k = region.key();
            *slot = RegionColumns {
                weight: row.parse_optional(&format!("{k}_weight"))?,
                claims: row.parse_optional(&format!("{k}_claims"))?,
                exposure_mmi: row.parse_optional(&format!("{k}_exposure_mmi"))?,
                rate_cpmm: row.parse_optional(&format!("{k}_rate_cpmm"))?,
            };
        }
        Ok(BaselineRow {
            category: row.parse("category")?,
            coverage: row.parse("coverage")?,
            confidence,
            rate_cpmm,
            ci_low,
            ci_high,
            standard_error: row.parse_optional("standard_error")?,
            claim_count_total: row.parse_optional("claim_count_total")?,
            exposure_mmi_total: row.parse_optional("exposure_mmi_total")?,
            regions,
        })
    }

    fn to_row(&self) -> Vec<String> {
        let mut out = vec![
            self.category.to_string(),
            self.coverage.to_string(),
            fmt_f64(self.confidence),
            fmt_f64(self.rate_cpmm),
            fmt_f64(self.ci_low),
            fmt_f64(self.ci_high),
            fmt_opt_f64(self.standard_error),
            self.claim_count_total
                .map(|c| c.to_string())
                .unwrap_or_default(),
            fmt_opt_f64(self.exposure_mmi_total),
        ];
        for cols in &self.regions {
            out.push(fmt_opt_f64(cols.weight));
            out.push(cols.claims.map(|c| c.to_string()).unwrap_or_default());
            out.push(fmt_opt_f64(cols.exposure_mmi));
            out.push(fmt_opt_f64(cols.rate_cpmm));
        }
        out
    }
}

pub fn baselines_to_csv(results: &[BaselineResult]) -> String {
    let rows: Vec<BaselineRow> = results.iter().map(BaselineRow::from).collect();
    crate::ingestion::to_canonical_csv(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmt::{estimate_vmt, RegionScope, VmtInputRow, VmtSelection};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    const C95: Confidence = Confidence::NINETY_FIVE;

    fn freq(region: Region, claims: u64, exposure_mmi: f64) -> RegionFrequency {
        RegionFrequency {
            region,
            coverage: Coverage::PropertyDamage,
            claim_count: claims,
            exposure_mmi,
            frequency_cpmm: claims as f64 / exposure_mmi,
        }
    }

    fn mix(sf: f64) -> MileageMix {
        MileageMix {
            category: Category::RiderOnly,
            weights: [(Region::SanFrancisco, sf), (Region::Phoenix, 1.0 - sf)].into(),
        }
    }

    fn vmt_rows(region: &str, years: &[(i32, f64)]) -> Vec<VmtInputRow> {
        years
            .iter()
            .flat_map(|&(year, per_vehicle)| {
                [
                    VmtInputRow {
                        region_scope: RegionScope::State,
                        region_name: region.into(),
                        year,
                        month: None,
                        total_vmt_miles: per_vehicle * 1e6,
                        registered_vehicles: Some(1e6),
                        population: None,
                        vehicles_per_capita: None,
                    },
                    VmtInputRow {
                        region_scope: RegionScope::UrbanizedArea,
                        region_name: region.into(),
                        year,
                        month: None,
                        total_vmt_miles: 0.5 * per_vehicle * 1e6,
                        registered_vehicles: None,
                        population: Some(1e6),
                        vehicles_per_capita: Some(1.0),
                    },
                ]
            })
            .collect()
    }

    fn human_claims(region: Region, coverage: Coverage, n: usize) -> Vec<ClaimRecord> {
        (0..n)
            .map(|i| ClaimRecord {
                claim_id: format!("h{i}"),
                coverage,
                occurrence_date: NaiveDate::from_ymd_opt(2017, 1, 1).unwrap(),
                zip_code: "94103".parse().unwrap(),
                region,
                source: ClaimSource::HumanBaseline,
                liability_payment_expected: true,
                mode: None,
                mode_override: None,
            })
            .collect()
    }

    fn exposure(region: Region, year: i32, policy_years: f64) -> ExposureRecord {
        ExposureRecord {
            region,
            zip_code: "94103".parse().unwrap(),
            coverage_year: year,
            policy_years,
        }
    }

    #[test]
    fn exposure_miles_examples() {
        assert_eq!(exposure_miles(1.0, 12_000.0), 12_000.0);
        assert_eq!(exposure_miles(0.0, 11_000.0), 0.0);
        assert_eq!(exposure_miles(10.5, 11_000.0), 115_500.0);
    }

    #[test]
    fn two_year_fixture() {
        let vmt = estimate_vmt(
            &vmt_rows("SanFrancisco", &[(2017, 12_000.0), (2018, 13_000.0)]),
            VmtSelection::ForceState,
        )
        .unwrap();
        let claims = human_claims(Region::SanFrancisco, Coverage::BodilyInjury, 250);
        let exp = [
            exposure(Region::SanFrancisco, 2017, 5_000.0),
            exposure(Region::SanFrancisco, 2018, 6_000.0),
        ];
        let f = region_frequency(
            Region::SanFrancisco,
            Coverage::BodilyInjury,
            &claims,
            &exp,
            &vmt,
        )
        .unwrap();
        assert_eq!(f.claim_count, 250);
        assert!((f.exposure_mmi - 138.0).abs() < 1e-9);
        assert!((f.frequency_cpmm - 250.0 / 138.0).abs() < 1e-12);
        assert!((f.frequency_cpmm - 1.812).abs() < 1e-3);
    }

    #[test]
    fn simple_frequencies() {
        let vmt = estimate_vmt(
            &vmt_rows("Phoenix", &[(2019, 10_000.0)]),
            VmtSelection::ForceState,
        )
        .unwrap();
        let exp = [exposure(Region::Phoenix, 2019, 10_000.0)];
        let claims = human_claims(Region::Phoenix, Coverage::PropertyDamage, 120);
        let f = region_frequency(
            Region::Phoenix,
            Coverage::PropertyDamage,
            &claims,
            &exp,
            &vmt,
        )
        .unwrap();
        assert!((f.frequency_cpmm - 1.2).abs() < 1e-12);
        let f =
            region_frequency(Region::Phoenix, Coverage::BodilyInjury, &claims, &exp, &vmt).unwrap();
        assert_eq!(f.frequency_cpmm, 0.0);
    }

    #[test]
    fn region_frequency_errors() {
        let vmt = estimate_vmt(
            &vmt_rows("Phoenix", &[(2019, 10_000.0)]),
            VmtSelection::ForceState,
        )
        .unwrap();
        let exp = [exposure(Region::Phoenix, 2020, 10.0)];
        assert_eq!(
            region_frequency(Region::Phoenix, Coverage::BodilyInjury, &[], &exp, &vmt),
            Err(BaselineError::MissingVmtYear {
                region: Region::Phoenix,
                year: 2020
            })
        );
        assert_eq!(
            region_frequency(Region::Phoenix, Coverage::BodilyInjury, &[], &[], &vmt),
            Err(BaselineError::ZeroExposure {
                region: Region::Phoenix,
                coverage: Coverage::BodilyInjury
            })
        );
    }

    #[test]
    fn mixing_examples() {
        let per_region = [
            freq(Region::SanFrancisco, 330, 100.0),
            freq(Region::Phoenix, 200, 100.0),
        ];
        let b = mix_baseline(&per_region, &mix(1.0), Coverage::PropertyDamage, C95).unwrap();
        assert!((b.estimate.rate_cpmm - 3.3).abs() < 1e-12);
        assert!((b.standard_error.unwrap() - (3.3_f64 / 100.0).sqrt()).abs() < 1e-12);

        let per_region = [
            freq(Region::SanFrancisco, 200, 100.0),
            freq(Region::Phoenix, 400, 100.0),
        ];
        let b = mix_baseline(&per_region, &mix(0.5), Coverage::PropertyDamage, C95).unwrap();
        assert!((b.estimate.rate_cpmm - 3.0).abs() < 1e-12);
        assert_eq!(b.estimate.method, IntervalMethod::NormalApprox);
        assert_eq!(b.claim_count_total(), Some(600));

        let only_sf = [freq(Region::SanFrancisco, 200, 100.0)];
        assert_eq!(
            mix_baseline(&only_sf, &mix(0.5), Coverage::PropertyDamage, C95),
            Err(BaselineError::MissingRegion {
                category: Category::RiderOnly,
                region: Region::Phoenix
            })
        );
        let bad = MileageMix {
            category: Category::Manual,
            weights: [(Region::SanFrancisco, 0.7)].into(),
        };
        assert!(matches!(
            mix_baseline(&per_region, &bad, Coverage::PropertyDamage, C95),
            Err(BaselineError::Stats(StatsError::WeightSumInvalid { .. }))
        ));
    }

    #[test]
    fn to_plus_ro_mix_uses_combined_miles() {
        let logs = [
            MileageLog {
                region: Region::SanFrancisco,
                mode: crate::ingestion::DrivingMode::TestingOperations,
                miles: 30.0,
            },
            MileageLog {
                region: Region::Phoenix,
                mode: crate::ingestion::DrivingMode::TestingOperations,
                miles: 10.0,
            },
            MileageLog {
                region: Region::Phoenix,
                mode: crate::ingestion::DrivingMode::RiderOnly,
                miles: 60.0,
            },
        ];
        let m = MileageMix::from_mileage(Category::TestingPlusRiderOnly, &logs).unwrap();
        assert!((m.weight(Region::SanFrancisco) - 0.3).abs() < 1e-12);
        assert!((m.weight(Region::Phoenix) - 0.7).abs() < 1e-12);
        // averaging the TO (0.75/0.25) and RO (0/1) mixes would give 0.375
        assert!(MileageMix::from_mileage(Category::Manual, &logs).is_none());
    }

    #[test]
    fn baseline_csv_round_trips() {
        let per_region = [
            freq(Region::SanFrancisco, 200, 100.0),
            freq(Region::Phoenix, 400, 120.0),
        ];
        let b = mix_baseline(&per_region, &mix(0.25), Coverage::PropertyDamage, C95).unwrap();
        let text = baselines_to_csv(std::slice::from_ref(&b));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("baseline.csv");
        std::fs::write(&path, &text).unwrap();
        let rows: Vec<BaselineRow> = crate::ingestion::read_records(&path).unwrap();
        assert_eq!(rows.len(), 1);
        let back = rows.into_iter().next().unwrap().into_result();
        assert_eq!(back, b);
    }

    #[test]
    fn distinct_mixes_give_distinct_baselines() {
        let per_region = [
            freq(Region::SanFrancisco, 350, 100.0),
            freq(Region::Phoenix, 250, 100.0),
        ];
        let a = mix_baseline(&per_region, &mix(0.2), Coverage::PropertyDamage, C95).unwrap();
        let b = mix_baseline(&per_region, &mix(0.6), Coverage::PropertyDamage, C95).unwrap();
        let c = mix_baseline(&per_region, &mix(0.6), Coverage::PropertyDamage, C95).unwrap();
        assert_ne!(a.estimate.rate_cpmm, b.estimate.rate_cpmm);
        assert_eq!(b.estimate.rate_cpmm, c.estimate.rate_cpmm);
    }

    proptest! {
        #[test]
        fn mixture_stays_in_convex_hull(w in 0.0_f64..=1.0, k1 in 0_u64..5000, k2 in 0_u64..5000, e1 in 1.0_f64..1e4, e2 in 1.0_f64..1e4) {
            let per_region = [freq(Region::SanFrancisco, k1, e1), freq(Region::Phoenix, k2, e2)];
            let b = mix_baseline(&per_region, &mix(w), Coverage::PropertyDamage, C95).unwrap();
            let (lo, hi) = (per_region[0].frequency_cpmm.min(per_region[1].frequency_cpmm), per_region[0].frequency_cpmm.max(per_region[1].frequency_cpmm));
            prop_assert!(b.estimate.rate_cpmm >= lo - 1e-12 && b.estimate.rate_cpmm <= hi + 1e-12);
        }

        #[test]
        fn doubling_data_shrinks_width_by_root_two(w in 0.05_f64..=0.95, k1 in 100_u64..5000, k2 in 100_u64..5000, e1 in 100.0_f64..1e4, e2 in 100.0_f64..1e4) {
            let one = [freq(Region::SanFrancisco, k1, e1), freq(Region::Phoenix, k2, e2)];
            let two = [freq(Region::SanFrancisco, 2 * k1, 2.0 * e1), freq(Region::Phoenix, 2 * k2, 2.0 * e2)];
            let a = mix_baseline(&one, &mix(w), Coverage::PropertyDamage, C95).unwrap();
            let b = mix_baseline(&two, &mix(w), Coverage::PropertyDamage, C95).unwrap();
            prop_assert!((a.estimate.rate_cpmm - b.estimate.rate_cpmm).abs() < 1e-12);
            let ratio = b.estimate.width() / a.estimate.width();
            prop_assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "ratio {}", ratio);
        }
    }
}
