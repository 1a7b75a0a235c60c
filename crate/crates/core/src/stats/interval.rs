use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{inverse_regularized_lower_gamma, round_half_up, StatsError};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Two-sided confidence level in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Confidence(f64);

impl Confidence {
    pub const NINETY_FIVE: Confidence = Confidence(0.95);

    pub fn new(level: f64) -> Result<Self, StatsError> {
        if level > 0.0 && level < 1.0 {
            Ok(Confidence(level))
        } else {
            Err(StatsError::InvalidArgument(format!(
                "confidence must lie in (0, 1), got {level}"
            )))
        }
    }

    pub fn level(self) -> f64 {
        self.0
    }

    /// `1 - confidence`
    pub fn alpha(self) -> f64 {
        1.0 - self.0
    }

    /// Standard normal quantile at `1 - alpha/2`.
    pub fn z(self) -> f64 {
        Normal::standard().inverse_cdf(1.0 - self.alpha() / 2.0)
    }

    fn same_as(self, other: Confidence) -> bool {
        (self.0 - other.0).abs() <= 1e-12
    }
}

impl Default for Confidence {
    fn default() -> Self {
        Confidence::NINETY_FIVE
    }
}

impl TryFrom<f64> for Confidence {
    type Error = StatsError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Confidence::new(value)
    }
}

impl From<Confidence> for f64 {
    fn from(c: Confidence) -> f64 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalMethod {
    PoissonExact,
    NormalApprox,
}

/// A claims-per-million-miles point estimate with its confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate_cpmm: f64,
    pub ci_low_cpmm: f64,
    pub ci_high_cpmm: f64,
    pub confidence: Confidence,
    pub method: IntervalMethod,
    pub claim_count: Option<u64>,
    pub exposure_mmi: Option<f64>,
}

impl RateEstimate {
    pub fn width(&self) -> f64 {
        self.ci_high_cpmm - self.ci_low_cpmm
    }

    pub fn contains(&self, rate: f64) -> bool {
        self.ci_low_cpmm <= rate && rate <= self.ci_high_cpmm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignificanceVerdict {
    Significant,
    NotSignificant,
}

impl SignificanceVerdict {
    /// Table marker: `S` or `NS`.
    pub fn marker(self) -> &'static str {
        match self {
            SignificanceVerdict::Significant => "S",
            SignificanceVerdict::NotSignificant => "NS",
        }
    }
}

/// Garwood interval for a Poisson rate observed as `claim_count` events
/// over `exposure_mmi` million miles.
///
/// The expected-count bounds are gamma quantiles: `L = P⁻¹(k, α/2)` (zero
/// when `k = 0`) and `U = P⁻¹(k + 1, 1 − α/2)`, i.e. half of the
/// chi-square quantiles with `2k` and `2k + 2` degrees of freedom.
pub fn poisson_exact_rate_ci(
    claim_count: u64,
    exposure_mmi: f64,
    confidence: Confidence,
) -> Result<RateEstimate, StatsError> {
    if !(exposure_mmi > 0.0) || !exposure_mmi.is_finite() {
        return Err(StatsError::InvalidArgument(format!(
            "exposure must be positive, got {exposure_mmi}"
        )));
    }
    let half_alpha = confidence.alpha() / 2.0;
    let k = claim_count as f64;
    let lower_count = if claim_count == 0 {
        0.0
    } else {
        inverse_regularized_lower_gamma(k, half_alpha)?
    };
    let upper_count = inverse_regularized_lower_gamma(k + 1.0, 1.0 - half_alpha)?;
    let rate = k / exposure_mmi;
    Ok(RateEstimate {
        rate_cpmm: rate,
        ci_low_cpmm: (lower_count / exposure_mmi).min(rate),
        ci_high_cpmm: (upper_count / exposure_mmi).max(rate),
        confidence,
        method: IntervalMethod::PoissonExact,
        claim_count: Some(claim_count),
        exposure_mmi: Some(exposure_mmi),
    })
}

/// `rate ± z·SE`, lower end clamped at zero.
pub fn normal_rate_ci(
    rate_cpmm: f64,
    standard_error_cpmm: f64,
    confidence: Confidence,
) -> Result<RateEstimate, StatsError> {
    if !(rate_cpmm >= 0.0) || !rate_cpmm.is_finite() {
        return Err(StatsError::InvalidArgument(format!(
            "rate must be non-negative, got {rate_cpmm}"
        )));
    }
    if !(standard_error_cpmm >= 0.0) || !standard_error_cpmm.is_finite() {
        return Err(StatsError::InvalidArgument(format!(
            "standard error must be non-negative, got {standard_error_cpmm}"
        )));
    }
    let half_width = confidence.z() * standard_error_cpmm;
    Ok(RateEstimate {
        rate_cpmm,
        ci_low_cpmm: (rate_cpmm - half_width).max(0.0),
        ci_high_cpmm: rate_cpmm + half_width,
        confidence,
        method: IntervalMethod::NormalApprox,
        claim_count: None,
        exposure_mmi: None,
    })
}

/// Standard error of `Σ w_r f_r` for independent per-region Poisson rate
/// estimates: `sqrt(Σ w_r² f_r / E_r)`.
///
/// Regions with zero weight contribute nothing and may carry any exposure.
pub fn mixture_standard_error(
    weights: &[f64],
    per_region_rates: &[f64],
    per_region_exposure_mmi: &[f64],
) -> Result<f64, StatsError> {
    if weights.len() != per_region_rates.len() || weights.len() != per_region_exposure_mmi.len() {
        return Err(StatsError::InvalidArgument(format!(
            "length mismatch: {} weights, {} rates, {} exposures",
            weights.len(),
            per_region_rates.len(),
            per_region_exposure_mmi.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(StatsError::InvalidArgument(
            "weights must be non-negative".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(StatsError::WeightSumInvalid { sum });
    }
    let mut variance = 0.0;
    for ((&w, &f), &e) in weights
        .iter()
        .zip(per_region_rates)
        .zip(per_region_exposure_mmi)
    {
        if w == 0.0 {
            continue;
        }
        if !(e > 0.0) {
            return Err(StatsError::InvalidArgument(format!(
                "exposure must be positive for weighted regions, got {e}"
            )));
        }
        if !(f >= 0.0) {
            return Err(StatsError::InvalidArgument(format!(
                "rate must be non-negative, got {f}"
            )));
        }
        variance += w * w * f / e;
    }
    Ok(variance.sqrt())
}

/// Percent reduction of the fleet rate relative to the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentReduction(f64);

impl PercentReduction {
    pub fn unrounded(self) -> f64 {
        self.0
    }

    /// Nearest integer.
    pub fn display(self) -> i64 {
        round_half_up(self.0, 0) as i64
    }
}

/// `100 · (1 − fleet/baseline)` on unrounded rates.
pub fn percent_reduction(
    fleet_rate: f64,
    baseline_rate: f64,
) -> Result<PercentReduction, StatsError> {
    if baseline_rate == 0.0 {
        return Err(StatsError::BaselineZero);
    }
    if !(baseline_rate > 0.0) || !(fleet_rate >= 0.0) {
        return Err(StatsError::InvalidArgument(format!(
            "rates must be non-negative (fleet {fleet_rate}, baseline {baseline_rate})"
        )));
    }
    Ok(PercentReduction(100.0 * (1.0 - fleet_rate / baseline_rate)))
}

/// Significant iff the two intervals are disjoint; a shared endpoint
/// counts as overlap.
pub fn significance(a: &RateEstimate, b: &RateEstimate) -> Result<SignificanceVerdict, StatsError> {
    if !a.confidence.same_as(b.confidence) {
        return Err(StatsError::ConfidenceMismatch(
            a.confidence.level(),
            b.confidence.level(),
        ));
    }
    if a.ci_high_cpmm < b.ci_low_cpmm || b.ci_high_cpmm < a.ci_low_cpmm {
        Ok(SignificanceVerdict::Significant)
    } else {
        Ok(SignificanceVerdict::NotSignificant)
    }
}
