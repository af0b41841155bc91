//! Canned experiments with pinned defaults: the sector-bump gradient growth
//! run, the boundary-plateau steepening run, and the rotating two-value
//! pattern. Each preset assembles a full run config, executes it, and adds
//! the derived measurements its question is about.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::circle_field::CircleField;
use crate::euler1d::{self, EulerRunConfig, EulerSample, StepOptions};

use super::config::{ExperimentConfig, Model};
use super::execute::{execute_plan, RunOutcome};
use super::fit::{default_window, fit_exponential, fit_power, linear_regression, FitReport};
use super::HarnessError;

/// Fraction of the initial integral carried by one sector of the growth
/// bump: `m = l1 / 8` because the profile repeats over four sectors with
/// alternating sign.
pub const SECTORS_TIMES_TWO: f64 = 8.0;

/// Start of the window in which the boundary plateau defect must shrink
/// monotonically; the first moments hold the initial rearrangement.
pub const PLATEAU_TRANSIENT: f64 = 1.0;

/// A canned experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    /// Gradient growth from a small sector bump, with the two-sided mass
    /// bracket and the power-law fit of the gradient sup.
    ThmGrowth,
    /// Plateau formation from sector data with a corner jump, with the
    /// exponential fit of the gradient sup.
    ThmBoundary,
    /// Mollified two-value pattern rotating at a measurable speed.
    RotatingPattern,
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetKind::ThmGrowth => f.write_str("thm-growth"),
            PresetKind::ThmBoundary => f.write_str("thm-boundary"),
            PresetKind::RotatingPattern => f.write_str("rotating-pattern"),
        }
    }
}

impl FromStr for PresetKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thm-growth" => Ok(PresetKind::ThmGrowth),
            "thm-boundary" => Ok(PresetKind::ThmBoundary),
            "rotating-pattern" => Ok(PresetKind::RotatingPattern),
            other => Err(HarnessError::Config(format!(
                "preset: unknown preset {other:?}; use thm-growth, thm-boundary, or rotating-pattern"
            ))),
        }
    }
}

/// Tunable preset knobs; everything not set falls back to the pinned
/// defaults of the selected preset.
#[derive(Debug, Clone, Copy)]
pub struct PresetParams {
    /// Growth-bump support width.
    pub epsilon: f64,
    /// Growth-bump amplitude.
    pub amplitude: f64,
    /// Pattern sector values.
    pub c1: f64,
    pub c2: f64,
    /// Pattern mollification scale.
    pub sigma: f64,
    /// Grid-size override for quick runs.
    pub n: Option<usize>,
    /// Step override.
    pub dt: Option<f64>,
    /// Horizon override.
    pub t_end: Option<f64>,
    /// Sample-cadence override.
    pub sample_interval: Option<f64>,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            amplitude: 2.7,
            c1: 1.0,
            c2: 0.0,
            sigma: 0.1,
            n: None,
            dt: None,
            t_end: None,
            sample_interval: None,
        }
    }
}

/// Outcome of an in-memory preset run.
#[derive(Debug)]
pub struct PresetReport {
    /// Diagnostic rows at the sample cadence.
    pub samples: Vec<EulerSample>,
    /// Derived scalar measurements.
    pub measured: BTreeMap<String, f64>,
    /// The fitted growth law, when the preset fits one.
    pub fit: Option<FitReport>,
    /// Deduplicated warning lines from the run.
    pub warnings: Vec<String>,
    /// Set when the dynamics halted the run early.
    pub abort: Option<String>,
}

/// Builds the full run config of a preset.
pub fn preset_config(kind: PresetKind, params: &PresetParams) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        model: "euler1d".into(),
        initial: String::new(),
        n: 1024,
        t_end: 0.0,
        dt: 0.0,
        cfl: None,
        sample_interval: None,
        symmetry_m: Some(4),
        odd_axis: Some(0.0),
        stepper: Some("semi-lagrangian".into()),
        dealias: None,
        filter: None,
        seed: None,
        output_dir: None,
        run_name: Some(kind.to_string()),
        blowup_threshold: None,
        a: None,
        center: None,
        width: None,
        amplitude: None,
        epsilon: None,
        c1: None,
        c2: None,
        sigma: None,
        modes: None,
    };
    match kind {
        PresetKind::ThmGrowth => {
            cfg.initial = "growth-bump".into();
            cfg.epsilon = Some(params.epsilon);
            cfg.amplitude = Some(params.amplitude);
            cfg.t_end = 50.0;
            cfg.dt = 0.05;
            cfg.sample_interval = Some(0.5);
        }
        PresetKind::ThmBoundary => {
            cfg.initial = "sector".into();
            cfg.t_end = 30.0;
            cfg.dt = 0.01;
            cfg.sample_interval = Some(0.25);
        }
        PresetKind::RotatingPattern => {
            cfg.initial = "pattern".into();
            cfg.c1 = Some(params.c1);
            cfg.c2 = Some(params.c2);
            cfg.sigma = Some(params.sigma);
            cfg.n = 256;
            cfg.t_end = 10.0;
            cfg.dt = 0.01;
            cfg.sample_interval = Some(0.1);
            cfg.stepper = Some("pseudospectral".into());
            cfg.odd_axis = None;
        }
    }
    if let Some(n) = params.n {
        cfg.n = n;
    }
    if let Some(dt) = params.dt {
        cfg.dt = dt;
    }
    if let Some(t_end) = params.t_end {
        cfg.t_end = t_end;
    }
    if let Some(si) = params.sample_interval {
        cfg.sample_interval = Some(si);
    }
    cfg
}

/// Runs a preset in memory, returning samples and derived measurements.
pub fn run_preset(kind: PresetKind, params: &PresetParams) -> Result<PresetReport, HarnessError> {
    let plan = preset_config(kind, params).validate()?;
    let Model::Euler1d(method) = plan.model else {
        return Err(HarnessError::Config("presets run the transport model".into()));
    };
    let config = EulerRunConfig {
        dt: plan.dt,
        t_end: plan.t_end,
        sample_interval: plan.sample_interval,
        method,
        options: StepOptions {
            cfl: plan.cfl,
            dealias: plan.dealias,
            filter: plan.filter,
        },
    };
    let mut samples: Vec<EulerSample> = Vec::new();
    let mut snapshots: Vec<(f64, CircleField)> = Vec::new();
    let report = euler1d::run(&plan.initial, plan.n, &plan.symmetry, &config, |s, field| {
        samples.push(*s);
        snapshots.push((s.t, field.clone()));
    });
    let (measured, fit) = analyze_preset(kind, params, &samples, &snapshots)?;
    Ok(PresetReport {
        samples,
        measured,
        fit,
        warnings: report.warnings,
        abort: report.abort.map(|a| a.to_string()),
    })
}

/// Runs a preset into a run directory, like a config-file run but with the
/// preset's derived measurements in the manifest and the fit (when one is
/// produced) as `fit.json`.
pub fn execute_preset(
    kind: PresetKind,
    params: &PresetParams,
    output_dir: Option<String>,
    run_name: Option<String>,
) -> Result<RunOutcome, HarnessError> {
    let mut cfg = preset_config(kind, params);
    cfg.output_dir = output_dir;
    if run_name.is_some() {
        cfg.run_name = run_name;
    }
    let echo = toml::to_string(&cfg)
        .map_err(|e| HarnessError::Io(format!("config echo serialization: {e}")))?;
    let plan = cfg.validate()?;
    let params = *params;
    execute_plan(&plan, &echo, move |samples, snapshots, manifest, dir| {
        let (measured, fit) = analyze_preset(kind, &params, samples, snapshots)?;
        manifest.measured.extend(measured);
        if let Some(fit) = fit {
            dir.write_json("fit.json", &fit)?;
        }
        Ok(())
    })
}

fn analyze_preset(
    kind: PresetKind,
    params: &PresetParams,
    samples: &[EulerSample],
    snapshots: &[(f64, CircleField)],
) -> Result<(BTreeMap<String, f64>, Option<FitReport>), HarnessError> {
    match kind {
        PresetKind::ThmGrowth => analyze_growth(params.epsilon, samples),
        PresetKind::ThmBoundary => analyze_boundary(samples, snapshots),
        PresetKind::RotatingPattern => analyze_pattern(samples, snapshots),
    }
}

/// Mass bracket and gradient power law of the growth run. The sector mass
/// `m(t) = l1 / 8` must track between `1 / (t + 1/m0)` and
/// `1 / ((1 - 8 eps^2) t + 1/m0)`; the gradient sup follows a power of
/// `t + 1/m0`.
fn analyze_growth(
    epsilon: f64,
    samples: &[EulerSample],
) -> Result<(BTreeMap<String, f64>, Option<FitReport>), HarnessError> {
    let first = samples
        .first()
        .ok_or_else(|| HarnessError::Config("growth run produced no samples".into()))?;
    let m0 = first.l1 / SECTORS_TIMES_TWO;
    if !(m0 > 0.0) {
        return Err(HarnessError::Config(format!(
            "growth run started with nonpositive sector mass {m0}"
        )));
    }
    let shift = 1.0 / m0;
    let decay = 1.0 - 8.0 * epsilon * epsilon;

    let mut violations = 0.0;
    let mut min_low_ratio = f64::INFINITY;
    let mut max_high_ratio = 0.0f64;
    for s in samples {
        let m = s.l1 / SECTORS_TIMES_TWO;
        let lo = 1.0 / (s.t + shift);
        let hi = 1.0 / (decay * s.t + shift);
        min_low_ratio = min_low_ratio.min(m / lo);
        max_high_ratio = max_high_ratio.max(m / hi);
        if m < 0.95 * lo || m > 1.05 * hi {
            violations += 1.0;
        }
    }

    let xs: Vec<f64> = samples.iter().map(|s| s.t + shift).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.grad_linf).collect();
    let window = default_window(&xs, &ys);
    let fit = fit_power(&xs, &ys, window)?;

    let mut measured = BTreeMap::new();
    measured.insert("m0".into(), m0);
    measured.insert(
        "sector_mass_final".into(),
        samples.last().expect("nonempty").l1 / SECTORS_TIMES_TWO,
    );
    measured.insert("bracket_violations".into(), violations);
    measured.insert("bracket_min_low_ratio".into(), min_low_ratio);
    measured.insert("bracket_max_high_ratio".into(), max_high_ratio);
    measured.insert("growth_exponent".into(), fit.exponent_or_rate);
    measured.insert("fit_r_squared".into(), fit.r_squared);
    Ok((measured, Some(fit)))
}

/// Exponential gradient fit and interior plateau defect of the boundary
/// run. The defect is the mean distance to the sup value 1 over grid nodes
/// strictly inside the first sector.
fn analyze_boundary(
    samples: &[EulerSample],
    snapshots: &[(f64, CircleField)],
) -> Result<(BTreeMap<String, f64>, Option<FitReport>), HarnessError> {
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.grad_linf).collect();
    let window = default_window(&ts, &ys);
    let fit = fit_exponential(&ts, &ys, window)?;

    let defects: Vec<(f64, f64)> = snapshots
        .iter()
        .map(|(t, field)| (*t, plateau_defect(field)))
        .collect();
    let mut max_increase = f64::NEG_INFINITY;
    for w in defects.windows(2) {
        if w[0].0 >= PLATEAU_TRANSIENT {
            max_increase = max_increase.max(w[1].1 - w[0].1);
        }
    }

    let mut measured = BTreeMap::new();
    measured.insert("boundary_rate".into(), fit.exponent_or_rate);
    measured.insert("fit_r_squared".into(), fit.r_squared);
    measured.insert(
        "plateau_defect_initial".into(),
        defects.first().map(|d| d.1).unwrap_or(f64::NAN),
    );
    measured.insert(
        "plateau_defect_final".into(),
        defects.last().map(|d| d.1).unwrap_or(f64::NAN),
    );
    if max_increase > f64::NEG_INFINITY {
        measured.insert("plateau_defect_max_increase".into(), max_increase);
    }
    measured.insert(
        "hprime0_final".into(),
        samples.last().map(|s| s.hprime0).unwrap_or(f64::NAN),
    );
    Ok((measured, Some(fit)))
}

/// Mean distance of the profile to the plateau value 1 over nodes strictly
/// inside the first sector, the corners excluded.
pub fn plateau_defect(field: &CircleField) -> f64 {
    let lo = 0.05;
    let hi = PI / 4.0 - 0.05;
    let values = field.values();
    let mut acc = 0.0;
    let mut count = 0.0;
    for j in 0..field.n() {
        let theta = field.theta(j);
        if theta > lo && theta < hi {
            acc += (values[j] - 1.0).abs();
            count += 1.0;
        }
    }
    acc / count
}

/// Rotation speed of the pattern from the phase drift of the order-4
/// coefficient: for data rotating as `h(theta - omega t)` that phase
/// advances linearly at rate `4 omega`.
fn analyze_pattern(
    samples: &[EulerSample],
    snapshots: &[(f64, CircleField)],
) -> Result<(BTreeMap<String, f64>, Option<FitReport>), HarnessError> {
    if snapshots.len() < 3 {
        return Err(HarnessError::Config(
            "pattern run produced too few snapshots to fit a rotation".into(),
        ));
    }
    let mut pts = Vec::with_capacity(snapshots.len());
    let mut prev = 0.0;
    let mut offset = 0.0;
    for (i, (t, field)) in snapshots.iter().enumerate() {
        let raw = field.coeff(4).arg();
        if i > 0 {
            let mut step = raw - prev;
            while step > PI {
                step -= 2.0 * PI;
            }
            while step < -PI {
                step += 2.0 * PI;
            }
            offset += step;
        }
        prev = raw;
        pts.push((*t, offset));
    }
    let (slope, r_squared) = linear_regression(pts)?;

    let mut measured = BTreeMap::new();
    measured.insert("rotation_speed".into(), slope / 4.0);
    measured.insert("rotation_r_squared".into(), r_squared);
    measured.insert(
        "mean_value".into(),
        samples.first().map(|s| s.mean).unwrap_or(f64::NAN),
    );
    Ok((measured, None))
}
