//! Synthetic Poisson claim data with known ground truth.
//!
//! Generated tables use the same schemas as real inputs, so the whole
//! pipeline can be run on them and compared against the true rates.
//! Every random draw comes from a seeded ChaCha stream consumed in a
//! fixed order; parallel experiments give each chunk of trials its own
//! stream derived from the master seed.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::{
    to_canonical_csv, Category, ClaimRecord, ClaimSource, Coverage, DrivingMode, ExposureRecord,
    MileageLog, Record, Region, StudyWindows, ZipCode, ZipRow, BASELINE_FIRST_YEAR,
    BASELINE_LAST_YEAR,
};
use crate::stats::{self, Confidence, StatsError};
use crate::vmt::{RegionScope, VmtInputRow};

/// Largest mean drawn by a single inversion pass; larger means are split.
const INVERSION_CHUNK: f64 = 200.0;
/// Trials per independently seeded stream in coverage experiments.
const TRIALS_PER_STREAM: usize = 10_000;
const MIN_COVERAGE_TRIALS: usize = 10_000;
const REGISTERED_VEHICLES: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn default_years() -> Vec<i32> {
    (BASELINE_FIRST_YEAR..=BASELINE_LAST_YEAR).collect()
}

fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 3.0, 10.0, 50.0]
}

fn default_trials() -> usize {
    100_000
}

fn default_vmt() -> f64 {
    12_000.0
}

/// Human-baseline ground truth for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRegion {
    pub region: Region,
    pub zip_codes: Vec<ZipCode>,
    pub true_rate_cpmm: BTreeMap<Coverage, f64>,
    /// Earned policy-years per coverage year (exclusive with `exposure_mmi`).
    #[serde(default)]
    pub policy_years: Option<f64>,
    /// Total exposure over all years (exclusive with `policy_years`).
    #[serde(default)]
    pub exposure_mmi: Option<f64>,
    /// True miles per vehicle per year, published as the state estimate.
    #[serde(default = "default_vmt")]
    pub vmt_state: f64,
    /// Urbanized-area estimate; defaults to 85% of `vmt_state`.
    #[serde(default)]
    pub vmt_urban: Option<f64>,
    /// Extra claims, as a fraction of the expected count, registered outside the operating zips.
    #[serde(default)]
    pub out_of_zip_fraction: f64,
    /// Extra claims, as a fraction of the expected count, with no liability payment.
    #[serde(default)]
    pub non_liable_fraction: f64,
}

impl SimRegion {
    pub fn policy_years_per_year(&self, n_years: usize) -> f64 {
        match (self.policy_years, self.exposure_mmi) {
            (Some(py), _) => py,
            (None, Some(e)) => e * 1e6 / (self.vmt_state * n_years as f64),
            (None, None) => 0.0,
        }
    }

    pub fn vmt_urban(&self) -> f64 {
        self.vmt_urban.unwrap_or(0.85 * self.vmt_state)
    }

    fn rate(&self, coverage: Coverage) -> f64 {
        self.true_rate_cpmm.get(&coverage).copied().unwrap_or(0.0)
    }

    /// True in-zip exposure over all simulated years, in Mmi.
    pub fn true_exposure_mmi(&self, n_years: usize) -> f64 {
        self.policy_years_per_year(n_years) * self.vmt_state * n_years as f64 / 1e6
    }
}

/// Fleet ground truth for one stored driving mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFleetMode {
    pub mode: DrivingMode,
    pub miles: BTreeMap<Region, f64>,
    pub true_rate_cpmm: BTreeMap<Coverage, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub regions: Vec<SimRegion>,
    #[serde(default)]
    pub fleet: Vec<SimFleetMode>,
    #[serde(default = "default_years")]
    pub years: Vec<i32>,
    /// Trials per coverage experiment.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Poisson means for the coverage experiments.
    #[serde(default = "default_lambdas")]
    pub coverage_lambdas: Vec<f64>,
    #[serde(default)]
    pub confidence: Confidence,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<SimConfig, SimError> {
        let config: SimConfig =
            serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.regions.is_empty() {
            return bad("at least one region is required".into());
        }
        if self.years.is_empty()
            || self
                .years
                .iter()
                .any(|y| !(BASELINE_FIRST_YEAR..=BASELINE_LAST_YEAR).contains(y))
        {
            return bad(format!(
                "years must be a non-empty subset of {BASELINE_FIRST_YEAR}..={BASELINE_LAST_YEAR}"
            ));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if self.regions[..i].iter().any(|o| o.region == r.region) {
                return bad(format!("region {} listed twice", r.region));
            }
            if r.zip_codes.is_empty() {
                return bad(format!("{}: zip_codes must not be empty", r.region));
            }
            if r.true_rate_cpmm
                .values()
                .any(|v| !(*v >= 0.0) || !v.is_finite())
            {
                return bad(format!("{}: rates must be non-negative", r.region));
            }
            match (r.policy_years, r.exposure_mmi) {
                (Some(v), None) | (None, Some(v)) if v > 0.0 && v.is_finite() => {}
                _ => {
                    return bad(format!(
                    "{}: exactly one of policy_years or exposure_mmi must be given and positive",
                    r.region
                ))
                }
            }
            if !(r.vmt_state > 0.0) || !(r.vmt_urban() > 0.0) {
                return bad(format!("{}: VMT per vehicle must be positive", r.region));
            }
            if !(r.out_of_zip_fraction >= 0.0) || !(r.non_liable_fraction >= 0.0) {
                return bad(format!(
                    "{}: noise fractions must be non-negative",
                    r.region
                ));
            }
        }
        for f in &self.fleet {
            if f.miles.values().any(|m| !(*m >= 0.0) || !m.is_finite()) {
                return bad(format!("fleet {}: miles must be non-negative", f.mode));
            }
            if f.true_rate_cpmm
                .values()
                .any(|v| !(*v >= 0.0) || !v.is_finite())
            {
                return bad(format!("fleet {}: rates must be non-negative", f.mode));
            }
            for region in f.miles.keys() {
                if !self.regions.iter().any(|r| r.region == *region) {
                    return bad(format!(
                        "fleet {} drives in {region}, which has no zip codes",
                        f.mode
                    ));
                }
            }
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self
            .coverage_lambdas
            .iter()
            .any(|l| !(*l >= 0.0) || !l.is_finite())
        {
            return bad("coverage_lambdas must be non-negative".into());
        }
        Ok(())
    }

    fn category_miles(&self, category: Category) -> BTreeMap<Region, f64> {
        let mut miles = BTreeMap::new();
        for f in self.fleet.iter().filter(|f| category.includes(f.mode)) {
            for (&region, &m) in &f.miles {
                *miles.entry(region).or_insert(0.0) += m;
            }
        }
        miles
    }

    /// Fleet mileage share per region for a category.
    pub fn mix_weights(&self, category: Category) -> Option<BTreeMap<Region, f64>> {
        let miles = self.category_miles(category);
        let total: f64 = miles.values().sum();
        (total > 0.0).then(|| miles.into_iter().map(|(r, m)| (r, m / total)).collect())
    }

    /// True mixed baseline `Σ w_r · rate_r` and the standard error a
    /// baseline estimated from the simulated exposure should have.
    pub fn expected_baseline(&self, category: Category, coverage: Coverage) -> Option<(f64, f64)> {
        let weights = self.mix_weights(category)?;
        let n_years = self.years.len();
        let mut mean = 0.0;
        let mut variance = 0.0;
        for (region, w) in weights {
            let r = self.regions.iter().find(|r| r.region == region)?;
            let rate = r.rate(coverage);
            mean += w * rate;
            variance += w * w * rate / r.true_exposure_mmi(n_years);
        }
        Some((mean, variance.sqrt()))
    }
}

/// Poisson draw by sequential CDF inversion; means above
/// `INVERSION_CHUNK` are split into independent parts and summed.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let mut remaining = mean;
    let mut total = 0;
    while remaining > 0.0 {
        let part = remaining.min(INVERSION_CHUNK);
        remaining -= part;
        total += invert_poisson(rng, part);
    }
    total
}

fn invert_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0_u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
        // cdf can stall just below 1.0 in floating point
        if pmf == 0.0 && k as f64 > mean {
            break;
        }
    }
    k
}

fn random_date<R: Rng + ?Sized>(rng: &mut R, first: NaiveDate, last: NaiveDate) -> NaiveDate {
    let span = (last - first).num_days() as u64;
    first + Days::new(rng.random_range(0..=span))
}

fn decoy_zip(region: Region, zips: &[ZipCode]) -> ZipCode {
    let base = match region {
        Region::SanFrancisco => 99_100,
        Region::Phoenix => 99_200,
    };
    (base..base + 100)
        .map(|n| ZipCode::try_from(n.to_string()).expect("five digits"))
        .find(|z| !zips.contains(z))
        .expect("fewer than 100 configured zips")
}

/// The five input tables of one simulated run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulatedDataset {
    pub claims: Vec<ClaimRecord>,
    pub exposure: Vec<ExposureRecord>,
    pub mileage: Vec<MileageLog>,
    pub zips: Vec<ZipRow>,
    pub vmt_inputs: Vec<VmtInputRow>,
}

impl SimulatedDataset {
    /// Writes `claims.csv`, `exposure.csv`, `mileage.csv`, `zips.csv` and
    /// `vmt_inputs.csv` in canonical form.
    pub fn write_to(&self, dir: &Path) -> Result<(), SimError> {
        fn put<T: Record>(dir: &Path, rows: &[T]) -> Result<(), SimError> {
            let path = dir.join(format!("{}.csv", T::TABLE));
            std::fs::write(&path, to_canonical_csv(rows))
                .map_err(|source| SimError::Io { path, source })
        }
        std::fs::create_dir_all(dir).map_err(|source| SimError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        put(dir, &self.claims)?;
        put(dir, &self.exposure)?;
        put(dir, &self.mileage)?;
        put(dir, &self.zips)?;
        put(dir, &self.vmt_inputs)?;
        Ok(())
    }
}

struct ClaimFactory {
    next_human: u64,
    next_fleet: u64,
}

impl ClaimFactory {
    #[allow(clippy::too_many_arguments)]
    fn make<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        source: ClaimSource,
        coverage: Coverage,
        region: Region,
        zip: ZipCode,
        window: (NaiveDate, NaiveDate),
        liable: bool,
        mode: Option<DrivingMode>,
    ) -> ClaimRecord {
        let claim_id = match source {
            ClaimSource::HumanBaseline => {
                self.next_human += 1;
                format!("H{:07}", self.next_human)
            }
            ClaimSource::Fleet => {
                self.next_fleet += 1;
                format!("F{:07}", self.next_fleet)
            }
        };
        ClaimRecord {
            claim_id,
            coverage,
            occurrence_date: random_date(rng, window.0, window.1),
            zip_code: zip,
            region,
            source,
            liability_payment_expected: liable,
            mode,
            mode_override: None,
        }
    }
}

/// Draws a full synthetic dataset from the config.
pub fn simulate_claims(config: &SimConfig) -> Result<SimulatedDataset, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = SimulatedDataset::default();
    let mut factory = ClaimFactory {
        next_human: 0,
        next_fleet: 0,
    };
    let n_years = config.years.len();
    let windows = StudyWindows::default();

    for r in &config.regions {
        let decoy = decoy_zip(r.region, &r.zip_codes);
        for zip in &r.zip_codes {
            out.zips.push(ZipRow {
                region: r.region,
                zip_code: zip.clone(),
            });
        }
        let py = r.policy_years_per_year(n_years);
        for &year in &config.years {
            let per_zip = py / r.zip_codes.len() as f64;
            for zip in &r.zip_codes {
                out.exposure.push(ExposureRecord {
                    region: r.region,
                    zip_code: zip.clone(),
                    coverage_year: year,
                    policy_years: per_zip,
                });
            }
            if r.out_of_zip_fraction > 0.0 {
                out.exposure.push(ExposureRecord {
                    region: r.region,
                    zip_code: decoy.clone(),
                    coverage_year: year,
                    policy_years: py * r.out_of_zip_fraction,
                });
            }
            push_vmt_rows(&mut out.vmt_inputs, r, year);

            let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
            let last = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year");
            let mmi = py * r.vmt_state / 1e6;
            for coverage in Coverage::ALL {
                let expected = r.rate(coverage) * mmi;
                let draws = [
                    (sample_poisson(&mut rng, expected), true, None),
                    (
                        sample_poisson(&mut rng, expected * r.non_liable_fraction),
                        false,
                        None,
                    ),
                    (
                        sample_poisson(&mut rng, expected * r.out_of_zip_fraction),
                        true,
                        Some(decoy.clone()),
                    ),
                ];
                for (count, liable, fixed_zip) in draws {
                    for _ in 0..count {
                        let zip = fixed_zip.clone().unwrap_or_else(|| {
                            r.zip_codes[rng.random_range(0..r.zip_codes.len())].clone()
                        });
                        let claim = factory.make(
                            &mut rng,
                            ClaimSource::HumanBaseline,
                            coverage,
                            r.region,
                            zip,
                            (first, last),
                            liable,
                            None,
                        );
                        out.claims.push(claim);
                    }
                }
            }
        }
    }

    for f in &config.fleet {
        for (&region, &miles) in &f.miles {
            out.mileage.push(MileageLog {
                region,
                mode: f.mode,
                miles,
            });
            let zips = &config
                .regions
                .iter()
                .find(|r| r.region == region)
                .expect("validated")
                .zip_codes;
            for coverage in Coverage::ALL {
                let rate = f.true_rate_cpmm.get(&coverage).copied().unwrap_or(0.0);
                let count = sample_poisson(&mut rng, rate * miles / 1e6);
                for _ in 0..count {
                    let zip = zips[rng.random_range(0..zips.len())].clone();
                    let claim = factory.make(
                        &mut rng,
                        ClaimSource::Fleet,
                        coverage,
                        region,
                        zip,
                        windows.fleet,
                        true,
                        Some(f.mode),
                    );
                    out.claims.push(claim);
                }
            }
        }
    }
    Ok(out)
}

fn push_vmt_rows(rows: &mut Vec<VmtInputRow>, r: &SimRegion, year: i32) {
    let (state, urban) = match r.region {
        Region::SanFrancisco => ("California", "San Francisco--Oakland, CA"),
        Region::Phoenix => ("Arizona", "Phoenix--Mesa, AZ"),
    };
    let annual = r.vmt_state * REGISTERED_VEHICLES;
    for month in 1..=12 {
        rows.push(VmtInputRow {
            region_scope: RegionScope::State,
            region_name: state.into(),
            year,
            month: Some(month),
            total_vmt_miles: annual / 12.0,
            registered_vehicles: Some(REGISTERED_VEHICLES),
            population: None,
            vehicles_per_capita: None,
        });
    }
    rows.push(VmtInputRow {
        region_scope: RegionScope::UrbanizedArea,
        region_name: urban.into(),
        year,
        month: None,
        total_vmt_miles: r.vmt_urban() * REGISTERED_VEHICLES,
        registered_vehicles: None,
        population: Some(REGISTERED_VEHICLES),
        vehicles_per_capita: Some(1.0),
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub true_rate_cpmm: f64,
    pub exposure_mmi: f64,
    pub lambda: f64,
    pub trials: usize,
    pub confidence: f64,
    pub covered: usize,
    pub coverage: f64,
}

/// Fraction of simulated exact intervals that contain the true rate.
///
/// Trials are split into streams of 10,000, each seeded from `seed` and
/// its stream index, so the result does not depend on thread count.
pub fn coverage_experiment(
    true_rate: f64,
    exposure_mmi: f64,
    trials: usize,
    confidence: Confidence,
    seed: u64,
) -> Result<CoverageReport, SimError> {
    if trials < MIN_COVERAGE_TRIALS {
        return Err(SimError::InvalidConfig(format!(
            "coverage experiments need at least {MIN_COVERAGE_TRIALS} trials, got {trials}"
        )));
    }
    if !(true_rate >= 0.0) || !(exposure_mmi > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "need true_rate >= 0 and exposure > 0, got {true_rate}, {exposure_mmi}"
        )));
    }
    let lambda = true_rate * exposure_mmi;
    let streams = trials.div_ceil(TRIALS_PER_STREAM);
    let covered: Result<Vec<usize>, StatsError> = (0..streams)
        .into_par_iter()
        .map(|stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let n = TRIALS_PER_STREAM.min(trials - stream * TRIALS_PER_STREAM);
            let mut cache: HashMap<u64, bool> = HashMap::new();
            let mut hits = 0;
            for _ in 0..n {
                let k = sample_poisson(&mut rng, lambda);
                let hit = match cache.get(&k) {
                    Some(&h) => h,
                    None => {
                        let est = stats::poisson_exact_rate_ci(k, exposure_mmi, confidence)?;
                        let h = est.contains(true_rate);
                        cache.insert(k, h);
                        h
                    }
                };
                hits += usize::from(hit);
            }
            Ok(hits)
        })
        .collect();
    let covered: usize = covered?.into_iter().sum();
    Ok(CoverageReport {
        true_rate_cpmm: true_rate,
        exposure_mmi,
        lambda,
        trials,
        confidence: confidence.level(),
        covered,
        coverage: covered as f64 / trials as f64,
    })
}

/// Runs one coverage experiment per configured mean, at unit exposure.
pub fn coverage_summary(config: &SimConfig) -> Result<Vec<CoverageReport>, SimError> {
    config
        .coverage_lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            coverage_experiment(
                lambda,
                1.0,
                config.trials,
                config.confidence,
                config.seed.wrapping_add(i as u64 + 1),
            )
        })
        .collect()
}

pub fn coverage_to_csv(reports: &[CoverageReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("UTF-8")
}

/// Year of a date, for grouping simulated claims.
pub fn claim_year(claim: &ClaimRecord) -> i32 {
    claim.occurrence_date.year()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// P(X = k) for X ~ Poisson(mean).
    fn pmf(k: u64, mean: f64) -> f64 {
        (k as f64 * mean.ln() - mean - stats::ln_gamma(k as f64 + 1.0)).exp()
    }

    fn config() -> SimConfig {
        SimConfig::from_json(
            r#"{
                "seed": 7,
                "regions": [
                    {"region": "SanFrancisco", "zip_codes": ["94103", "94110"],
                     "true_rate_cpmm": {"BI": 1.2, "PD": 3.5}, "policy_years": 2000,
                     "out_of_zip_fraction": 0.2, "non_liable_fraction": 0.1},
                    {"region": "Phoenix", "zip_codes": ["85281"],
                     "true_rate_cpmm": {"BI": 0.9, "PD": 2.5}, "exposure_mmi": 100}
                ],
                "fleet": [
                    {"mode": "RO", "miles": {"Phoenix": 2000000}, "true_rate_cpmm": {"PD": 1.0}}
                ],
                "trials": 10000
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn zero_rate_never_claims() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| sample_poisson(&mut rng, 0.0) == 0));
    }

    #[test]
    fn sample_mean_matches_lambda() {
        // rate 3 cpmm over 100 Mmi; bound 3·sqrt(300 / 10,000)
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_poisson(&mut rng, 3.0 * 100.0))
            .sum::<u64>() as f64
            / n as f64;
        assert!(
            (mean - 300.0).abs() <= 3.0 * (300.0_f64 / n as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn simulation_is_deterministic() {
        let a = simulate_claims(&config()).unwrap();
        let b = simulate_claims(&config()).unwrap();
        assert_eq!(a, b);
        let mut other = config();
        other.seed = 8;
        assert_ne!(simulate_claims(&other).unwrap().claims, a.claims);
    }

    #[test]
    fn simulated_tables_parse_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let sim = simulate_claims(&config()).unwrap();
        sim.write_to(dir.path()).unwrap();
        let ds = crate::ingestion::Dataset::load(dir.path()).unwrap();
        assert_eq!(ds.claims, sim.claims);
        assert_eq!(ds.exposure, sim.exposure);
        assert_eq!(ds.vmt_inputs, sim.vmt_inputs);
        assert!(ds.claims.iter().any(|c| !c.liability_payment_expected));
        assert!(ds.claims.iter().any(|c| c.source == ClaimSource::Fleet));
    }

    #[test]
    fn config_validation() {
        let mut c = config();
        c.regions[0].exposure_mmi = Some(5.0);
        assert!(c.validate().is_err());
        let mut c = config();
        c.regions[1]
            .true_rate_cpmm
            .insert(Coverage::BodilyInjury, -1.0);
        assert!(c.validate().is_err());
        assert!(SimConfig::from_json(r#"{"seed": 1, "regions": []}"#).is_err());
        assert!(SimConfig::from_json(r#"{"seed": 1, "regions": [], "bogus": 2}"#).is_err());
    }

    #[test]
    fn expected_baseline_uses_mix() {
        let c = config();
        let (mean, se) = c
            .expected_baseline(Category::RiderOnly, Coverage::PropertyDamage)
            .unwrap();
        assert_eq!(mean, 2.5);
        assert!((se - (2.5_f64 / 100.0).sqrt()).abs() < 1e-12);
        assert!(c
            .expected_baseline(Category::Manual, Coverage::PropertyDamage)
            .is_none());
    }

    #[test]
    fn coverage_of_zero_rate_is_one() {
        let r = coverage_experiment(0.0, 5.0, 10_000, Confidence::NINETY_FIVE, 3).unwrap();
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn coverage_requires_enough_trials() {
        assert!(coverage_experiment(1.0, 1.0, 9_999, Confidence::NINETY_FIVE, 3).is_err());
    }

    #[test]
    fn exact_coverage_at_fifty_is_between_95_and_97_percent() {
        // Oracle: sum the Poisson pmf over counts whose interval covers λ.
        let lambda = 50.0;
        let exact: f64 = (0..400_u64)
            .filter(|&k| {
                stats::poisson_exact_rate_ci(k, 1.0, Confidence::NINETY_FIVE)
                    .unwrap()
                    .contains(lambda)
            })
            .map(|k| pmf(k, lambda))
            .sum();
        assert!((0.95..=0.97).contains(&exact), "{exact}");
        let r = coverage_experiment(lambda, 1.0, 20_000, Confidence::NINETY_FIVE, 11).unwrap();
        // 4 binomial standard errors around the exact value
        let sd = (exact * (1.0 - exact) / 20_000.0).sqrt();
        assert!(
            (r.coverage - exact).abs() < 4.0 * sd,
            "{} vs {exact}",
            r.coverage
        );
    }

    #[test]
    fn coverage_is_thread_count_independent() {
        let a = coverage_experiment(3.0, 1.0, 30_000, Confidence::NINETY_FIVE, 99).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool
            .install(|| coverage_experiment(3.0, 1.0, 30_000, Confidence::NINETY_FIVE, 99))
            .unwrap();
        assert_eq!(a, b);
    }
}
