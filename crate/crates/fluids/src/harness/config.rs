//! Flat TOML run configuration with strict unknown-key rejection, and its
//! validation into a ready-to-execute plan. Every field is top-level so a
//! config file reads as a plain key-value list; which keys are required
//! depends on the model and the initial-data family.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circle_field::{wrap_angle, SymmetrySpec};
use crate::euler1d::{InitialData, SteppingMethod};
use crate::sqg1d::{SqgVariant, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_SQG_CFL};

use super::HarnessError;

/// Hypothesis bound on the compact-bump support width.
pub const GROWTH_BUMP_MAX_EPSILON: f64 = 0.25;

/// Raw deserialization target for a run config file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of `euler1d`, `sqg-exact`, `sqg-approx`, `degregorio`.
    pub model: String,
    /// Initial-data family: `bump`, `growth-bump`, `sector`, `pattern`,
    /// or `modes`.
    pub initial: String,
    pub n: usize,
    pub t_end: f64,
    /// Time step; the stretching models treat it as an upper bound.
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    /// Rotational symmetry order to project onto.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_m: Option<u32>,
    /// Odd-reflection axis of the symmetry, when the data has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd_axis: Option<f64>,
    /// `pseudospectral` or `semi-lagrangian` (transport model only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_name: Option<String>,
    /// Gradient growth factor that halts a stretching run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_threshold: Option<f64>,
    /// Family parameter for `model = "degregorio"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// `bump` center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    /// `bump` width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// `bump` and `growth-bump` amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// `growth-bump` support width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// `pattern` sector values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    /// `pattern` mollification scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// `modes` list, written `"k:cos_amp:sin_amp,..."`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<String>,
}

/// Model selector after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Euler1d(SteppingMethod),
    Sqg(SqgVariant),
}

/// A validated, executable run plan.
#[derive(Debug)]
pub struct RunPlan {
    pub model: Model,
    pub initial: InitialData,
    pub n: usize,
    pub dt: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub symmetry: SymmetrySpec,
    pub dealias: bool,
    pub filter: bool,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub run_name: String,
    pub blowup_threshold: f64,
}

impl ExperimentConfig {
    /// Parses a TOML source string.
    pub fn from_toml(source: &str) -> Result<Self, HarnessError> {
        toml::from_str(source).map_err(|e| HarnessError::Config(format!("config parse: {e}")))
    }

    /// Checks cross-field requirements and builds the plan.
    pub fn validate(&self) -> Result<RunPlan, HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if !(self.n >= 8 && self.n.is_power_of_two()) {
            return bad(format!("n: grid size {} must be a power of two, at least 8", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt: step {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end: horizon {} must be positive", self.t_end));
        }
        let cfl = self.cfl.unwrap_or(DEFAULT_SQG_CFL);
        if !(cfl > 0.0 && cfl <= 1.0) {
            return bad(format!("cfl: fraction {cfl} must lie in (0, 1]"));
        }
        let sample_interval = self.sample_interval.unwrap_or(self.t_end / 50.0);
        if !(sample_interval > 0.0) {
            return bad(format!(
                "sample_interval: cadence {sample_interval} must be positive"
            ));
        }

        let model = match self.model.as_str() {
            "euler1d" => {
                let stepper = match self.stepper.as_deref() {
                    None | Some("pseudospectral") => SteppingMethod::PseudoSpectral,
                    Some("semi-lagrangian") => SteppingMethod::SemiLagrangian,
                    Some(other) => {
                        return bad(format!(
                            "stepper: unknown stepper {other:?}; use \"pseudospectral\" or \"semi-lagrangian\""
                        ))
                    }
                };
                Model::Euler1d(stepper)
            }
            "sqg-exact" => Model::Sqg(SqgVariant::Exact),
            "sqg-approx" => Model::Sqg(SqgVariant::Approx),
            "degregorio" => {
                let a = match self.a {
                    Some(a) if a.is_finite() => a,
                    _ => return bad("a: model \"degregorio\" needs a finite family parameter".into()),
                };
                Model::Sqg(SqgVariant::DeGregorio { a })
            }
            other => {
                return bad(format!(
                    "model: unknown model {other:?}; use euler1d, sqg-exact, sqg-approx, or degregorio"
                ))
            }
        };
        if matches!(model, Model::Euler1d(_)) && self.a.is_some() {
            return bad("a: only model \"degregorio\" accepts a family parameter".into());
        }
        if matches!(model, Model::Sqg(_)) && self.stepper.is_some() {
            return bad("stepper: stretching models always step pseudospectrally".into());
        }

        let symmetry = match (self.symmetry_m, self.odd_axis) {
            (None, None) => SymmetrySpec::none(),
            (None, Some(_)) => {
                return bad("odd_axis: needs symmetry_m to define the symmetry group".into())
            }
            (Some(m), axis) => SymmetrySpec::new(m, axis)
                .map_err(|e| HarnessError::Config(format!("symmetry_m: {e}")))?,
        };
        if let Model::Sqg(SqgVariant::Exact) = model {
            if symmetry.m() < 2 {
                return bad(
                    "symmetry_m: model \"sqg-exact\" needs rotational symmetry of order >= 2".into(),
                );
            }
        }

        let initial = self.initial_data()?;
        let run_name = match &self.run_name {
            Some(name) if !name.is_empty() => name.clone(),
            _ => self.model.clone(),
        };
        let blowup_threshold = self.blowup_threshold.unwrap_or(DEFAULT_BLOWUP_THRESHOLD);
        if !(blowup_threshold > 1.0) {
            return bad(format!(
                "blowup_threshold: factor {blowup_threshold} must exceed 1"
            ));
        }

        Ok(RunPlan {
            model,
            initial,
            n: self.n,
            dt: self.dt,
            cfl,
            t_end: self.t_end,
            sample_interval,
            symmetry,
            dealias: self.dealias.unwrap_or(true),
            filter: self.filter.unwrap_or(false),
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            run_name,
            blowup_threshold,
        })
    }

    fn initial_data(&self) -> Result<InitialData, HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        match self.initial.as_str() {
            "bump" => {
                let center = self.center.unwrap_or(0.0);
                let width = match self.width {
                    Some(w) if w > 0.0 => w,
                    _ => return bad("width: initial \"bump\" needs a positive width".into()),
                };
                let amplitude = self.amplitude.unwrap_or(1.0);
                Ok(gaussian_bump(center, width, amplitude))
            }
            "growth-bump" => {
                let epsilon = match self.epsilon {
                    Some(e) => e,
                    None => return bad("epsilon: initial \"growth-bump\" needs a support width".into()),
                };
                if !(epsilon > 0.0 && epsilon <= GROWTH_BUMP_MAX_EPSILON) {
                    return bad(format!(
                        "epsilon: support width {epsilon} outside (0, {GROWTH_BUMP_MAX_EPSILON}]"
                    ));
                }
                Ok(growth_bump(epsilon, self.amplitude.unwrap_or(1.0)))
            }
            "sector" => Ok(boundary_sector()),
            "pattern" => Ok(mollified_pattern(
                self.c1.unwrap_or(1.0),
                self.c2.unwrap_or(0.0),
                self.sigma.unwrap_or(0.1),
            )),
            "modes" => {
                let spec = match &self.modes {
                    Some(s) if !s.is_empty() => s,
                    _ => return bad("modes: initial \"modes\" needs a mode list".into()),
                };
                Ok(InitialData::from_modes(&parse_modes(spec)?))
            }
            other => bad(format!(
                "initial: unknown initial data {other:?}; use bump, growth-bump, sector, pattern, or modes"
            )),
        }
    }
}

/// Smooth periodic bump `A exp(-(d/w)^2 / 2)` with `d` the wrapped angular
/// distance to the center.
pub fn gaussian_bump(center: f64, width: f64, amplitude: f64) -> InitialData {
    let f = move |x: f64| {
        let d = wrap_angle(x - center);
        amplitude * (-(d / width).powi(2) / 2.0).exp()
    };
    let df = move |x: f64| {
        let d = wrap_angle(x - center);
        -amplitude * d / (width * width) * (-(d / width).powi(2) / 2.0).exp()
    };
    InitialData::from_closures(f, df)
}

/// Odd 4-fold compact bump `A s (1 - s^2)^4` on `[0, eps]`, `s = theta / eps`.
/// Positive slope at the origin and support inside the sector make it the
/// canonical gradient-growth seed.
pub fn growth_bump(epsilon: f64, amplitude: f64) -> InitialData {
    let f = move |y: f64| {
        let s = y / epsilon;
        if s >= 1.0 {
            0.0
        } else {
            amplitude * s * (1.0 - s * s).powi(4)
        }
    };
    let df = move |y: f64| {
        let s = y / epsilon;
        if s >= 1.0 {
            0.0
        } else {
            amplitude / epsilon * (1.0 - s * s).powi(3) * (1.0 - 9.0 * s * s)
        }
    };
    InitialData::odd_fourfold(f, df)
}

/// Odd 4-fold sector profile `sin(2 theta)` on `[0, pi/4]`: continuous at
/// the origin, unit value and a jump at the sector edge.
pub fn boundary_sector() -> InitialData {
    InitialData::odd_fourfold(|y| (2.0 * y).sin(), |y| 2.0 * (2.0 * y).cos())
}

/// Four-sector two-value pattern mollified at scale `sigma`, as a damped
/// square-wave mode sum.
pub fn mollified_pattern(c1: f64, c2: f64, sigma: f64) -> InitialData {
    let mean = 0.5 * (c1 + c2);
    let delta = 0.5 * (c1 - c2);
    let mut modes = vec![(0i64, mean, 0.0)];
    let mut m = 1i64;
    loop {
        let k = 4 * m;
        let damp = (-(k as f64 * sigma).powi(2) / 2.0).exp();
        if damp < 1e-16 {
            break;
        }
        modes.push((k, 0.0, delta * 4.0 / PI * damp / m as f64));
        m += 2;
    }
    InitialData::from_modes(&modes)
}

/// Parses `"k:cos_amp:sin_amp,..."` triples.
pub fn parse_modes(spec: &str) -> Result<Vec<(i64, f64, f64)>, HarnessError> {
    let mut out = Vec::new();
    for (i, chunk) in spec.split(',').enumerate() {
        let parts: Vec<&str> = chunk.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(HarnessError::Config(format!(
                "modes: entry {i} ({chunk:?}) is not of the form k:cos_amp:sin_amp"
            )));
        }
        let k: i64 = parts[0]
            .parse()
            .map_err(|e| HarnessError::Config(format!("modes: entry {i} wavenumber: {e}")))?;
        let a: f64 = parts[1]
            .parse()
            .map_err(|e| HarnessError::Config(format!("modes: entry {i} cosine amplitude: {e}")))?;
        let b: f64 = parts[2]
            .parse()
            .map_err(|e| HarnessError::Config(format!("modes: entry {i} sine amplitude: {e}")))?;
        out.push((k, a, b));
    }
    Ok(out)
}
