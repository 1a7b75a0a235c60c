//! Regularized incomplete gamma function and its inverse in `x`.
//!
//! The inverse is found by bracketed bisection on the lower regularized
//! function `P(a, x)`, which is strictly increasing in `x` for fixed `a`.

use super::StatsError;

const SERIES_MAX_ITER: usize = 10_000;
const CF_MAX_ITER: usize = 10_000;
const BISECTION_MAX_ITER: usize = 400;
const BISECTION_WIDTH: f64 = 1e-12;

/// Lanczos coefficients (g = 7, n = 9).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma function `P(shape, x)`.
pub fn regularized_lower_gamma(shape: f64, x: f64) -> Result<f64, StatsError> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(StatsError::InvalidArgument(format!(
            "gamma shape must be positive and finite, got {shape}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::InvalidArgument(format!(
            "gamma argument must be non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = -x + shape * x.ln() - ln_gamma(shape);
    if x < shape + 1.0 {
        let sum = lower_series(shape, x)?;
        Ok((log_prefactor.exp() * sum).clamp(0.0, 1.0))
    } else {
        let cf = upper_continued_fraction(shape, x)?;
        Ok((1.0 - log_prefactor.exp() * cf).clamp(0.0, 1.0))
    }
}

/// Σ x^n / (a (a+1) ... (a+n))
fn lower_series(shape: f64, x: f64) -> Result<f64, StatsError> {
    let mut denom = shape;
    let mut term = 1.0 / shape;
    let mut sum = term;
    for _ in 0..SERIES_MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(StatsError::NoConvergence {
        iterations: SERIES_MAX_ITER,
        residual: term,
    })
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x) / prefactor`.
fn upper_continued_fraction(shape: f64, x: f64) -> Result<f64, StatsError> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - shape;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - shape);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(StatsError::NoConvergence {
        iterations: CF_MAX_ITER,
        residual: h,
    })
}

/// Returns `x` with `P(shape, x) = probability`.
///
/// Bisection over `[0, shape + 20·sqrt(shape) + 20]`, widening the upper
/// end if it does not yet bracket the root, down to an interval width of
/// `1e-12` (or to adjacent floats when `x` is too large for that).
pub fn inverse_regularized_lower_gamma(shape: f64, probability: f64) -> Result<f64, StatsError> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(StatsError::InvalidArgument(format!(
            "gamma shape must be positive and finite, got {shape}"
        )));
    }
    if !(probability > 0.0 && probability < 1.0) {
        return Err(StatsError::InvalidArgument(format!(
            "probability must lie in (0, 1), got {probability}"
        )));
    }

    let mut lo = 0.0_f64;
    let mut hi = shape + 20.0 * shape.sqrt() + 20.0;
    let mut widenings = 0;
    while regularized_lower_gamma(shape, hi)? < probability {
        lo = hi;
        hi *= 2.0;
        widenings += 1;
        if widenings > 64 {
            return Err(StatsError::NoConvergence {
                iterations: widenings,
                residual: probability - regularized_lower_gamma(shape, hi)?,
            });
        }
    }

    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_WIDTH || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if regularized_lower_gamma(shape, mid)? < probability {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(StatsError::NoConvergence {
        iterations: BISECTION_MAX_ITER,
        residual: regularized_lower_gamma(shape, mid)? - probability,
    })
}
