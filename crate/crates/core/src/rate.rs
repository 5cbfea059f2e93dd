//! Log-linear convergence-rate fitting.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default error floor: points at or below it are treated as converged.
pub const DEFAULT_FLOOR: f64 = 1e-11;

/// Minimum number of points inside the fitting window.
pub const MIN_POINTS: usize = 10;

/// Least-squares fit of `log10(error)` against the iteration index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    /// Decrease of `log10(error)` per iteration (negative when converging).
    pub slope: f64,
    /// Inclusive iteration window `[start, end]` used by the fit.
    pub window: (usize, usize),
    pub residual_floor: f64,
    pub r_squared: f64,
}

impl RateReport {
    /// Per-iteration contraction factor `10^slope`.
    pub fn factor(&self) -> f64 {
        10f64.powf(self.slope)
    }
}

/// Index after the last time the error set a new running maximum.
///
/// Used as an identification proxy when the active-set history is not
/// available: iterates that are still wandering before identification
/// push the error up; afterwards the error only decreases on trend.
pub fn burn_in<T: Real>(errors: &[T]) -> usize {
    let mut best = T::neg_infinity();
    let mut last = 0;
    for (k, &e) in errors.iter().enumerate() {
        if e > best {
            best = e;
            last = k;
        }
    }
    last
}

/// Fits the rate after the [`burn_in`] heuristic.
pub fn fit_linear_rate<T: Real>(errors: &[T], floor: T) -> Result<RateReport> {
    fit_linear_rate_from(errors, burn_in(errors), floor)
}

/// Fits the rate on `[start, end]`, where `end` is the last index before the
/// error first drops to or below `floor`.
pub fn fit_linear_rate_from<T: Real>(errors: &[T], start: usize, floor: T) -> Result<RateReport> {
    if errors.iter().any(|e| e.is_nan() || *e < T::zero()) {
        return Err(Error::InvalidArgument(
            "errors must be nonnegative numbers".into(),
        ));
    }
    let stop = errors
        .iter()
        .enumerate()
        .skip(start)
        .find(|(_, &e)| e <= floor)
        .map_or(errors.len(), |(k, _)| k);
    let usable = stop.saturating_sub(start);
    if usable < MIN_POINTS {
        return Err(Error::TooFewPoints {
            usable,
            needed: MIN_POINTS,
        });
    }
    let pts: Vec<(f64, f64)> = (start..stop)
        .map(|k| (k as f64, errors[k].as_f64().log10()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (my + slope * (p.0 - mx));
            r * r
        })
        .sum();
    // constant data is fitted exactly by a zero slope
    let r_squared = if ss_tot <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateReport {
        slope,
        window: (start, stop - 1),
        residual_floor: floor.as_f64(),
        r_squared,
    })
}
