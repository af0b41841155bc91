//! Least-squares curve fits for run diagnostics: power laws on log-log
//! axes and exponentials on semi-log axes, with a reporting structure and
//! a default late-window selector that skips the early transient.

use serde::Serialize;
use thiserror::Error;

/// Minimum number of in-window samples a fit will accept.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Errors from the fitting routines.
#[derive(Debug, Error)]
pub enum FitError {
    /// Both fits linearize through logarithms, so every fitted value (and
    /// for power fits every abscissa) must be positive.
    #[error("fit requires positive data: sample {index} is {value}")]
    NonPositive { index: usize, value: f64 },
    /// Too few samples fall inside the window.
    #[error("fit window [{lo}, {hi}] holds {found} samples; need at least {MIN_FIT_SAMPLES}")]
    TooFewSamples { lo: f64, hi: f64, found: usize },
    /// Times and values must pair up.
    #[error("mismatched series lengths: {times} times vs {values} values")]
    MismatchedLengths { times: usize, values: usize },
    /// The in-window abscissas are all equal.
    #[error("degenerate fit: all in-window times coincide")]
    DegenerateWindow,
}

/// Which functional form was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// `value = C * t^p`; the report carries `p`.
    Power,
    /// `value = C * exp(r t)`; the report carries `r`.
    Exponential,
}

/// Outcome of a curve fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitReport {
    pub kind: FitKind,
    /// Power-law exponent or exponential rate, by `kind`.
    pub exponent_or_rate: f64,
    /// Closed time window the fit used.
    pub window: (f64, f64),
    /// Coefficient of determination on the linearized axes.
    pub r_squared: f64,
}

/// Fits `value = C * t^p` over the window by least squares on log-log
/// axes.
pub fn fit_power(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<FitReport, FitError> {
    let pts = windowed(times, values, window)?;
    for &(i, t, v) in &pts {
        if t <= 0.0 {
            return Err(FitError::NonPositive { index: i, value: t });
        }
        if v <= 0.0 {
            return Err(FitError::NonPositive { index: i, value: v });
        }
    }
    let (slope, r_squared) = linear_regression(
        pts.iter().map(|&(_, t, v)| (t.ln(), v.ln())).collect::<Vec<_>>(),
    )?;
    Ok(FitReport {
        kind: FitKind::Power,
        exponent_or_rate: slope,
        window,
        r_squared,
    })
}

/// Fits `value = C * exp(r t)` over the window by least squares on
/// semi-log axes.
pub fn fit_exponential(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<FitReport, FitError> {
    let pts = windowed(times, values, window)?;
    for &(i, _, v) in &pts {
        if v <= 0.0 {
            return Err(FitError::NonPositive { index: i, value: v });
        }
    }
    let (slope, r_squared) = linear_regression(
        pts.iter().map(|&(_, t, v)| (t, v.ln())).collect::<Vec<_>>(),
    )?;
    Ok(FitReport {
        kind: FitKind::Exponential,
        exponent_or_rate: slope,
        window,
        r_squared,
    })
}

/// Default fit window: the final third of the horizon, pushed later if
/// the early transient (everything before the values first double) ends
/// after that.
pub fn default_window(times: &[f64], values: &[f64]) -> (f64, f64) {
    let t0 = times.first().copied().unwrap_or(0.0);
    let t1 = times.last().copied().unwrap_or(0.0);
    let mut lo = t0 + (t1 - t0) * 2.0 / 3.0;
    if let Some(first) = values.first() {
        let doubled = times
            .iter()
            .zip(values)
            .find(|(_, &v)| v >= 2.0 * first)
            .map(|(&t, _)| t);
        if let Some(t_double) = doubled {
            lo = lo.max(t_double);
        }
    }
    (lo, t1)
}

fn windowed(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<Vec<(usize, f64, f64)>, FitError> {
    if times.len() != values.len() {
        return Err(FitError::MismatchedLengths {
            times: times.len(),
            values: values.len(),
        });
    }
    let pts: Vec<(usize, f64, f64)> = times
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(_, (&t, _))| t >= window.0 && t <= window.1)
        .map(|(i, (&t, &v))| (i, t, v))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(FitError::TooFewSamples {
            lo: window.0,
            hi: window.1,
            found: pts.len(),
        });
    }
    Ok(pts)
}

/// Slope and `r^2` of the ordinary least-squares line through the points.
pub(crate) fn linear_regression(pts: Vec<(f64, f64)>) -> Result<(f64, f64), FitError> {
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::DegenerateWindow);
    }
    let slope = sxy / sxx;
    // Flat data fitted by a flat line is a perfect fit, not a zero one.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok((slope, r_squared))
}
