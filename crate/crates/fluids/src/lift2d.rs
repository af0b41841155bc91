//! On-demand reconstruction of plane fields from circle profiles: the
//! scale-invariant vorticity, velocity, and stream of the transport model,
//! the scalar and velocity of the stretching models, a rotation-averaged
//! Biot-Savart kernel with its decay study, and a radially weighted
//! Hölder-type norm on annular sample grids.
//!
//! Nothing here stores a plane grid: every 2D field is homogeneous in the
//! radius, so a circle profile plus a degree determines it everywhere and
//! queries are evaluated on demand.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::circle_field::CircleField;
use crate::kernels::{solve_stream_euler, solve_stream_sqg};

/// Homogeneity weight at which the built-in stream inversion applies.
const SUPPORTED_ALPHA: f64 = 0.5;

/// Squared separation under which the plane kernel is treated as singular.
const SINGULAR_SEPARATION_SQ: f64 = 1e-24;

/// Errors from plane-field queries and grid construction.
#[derive(Debug, Error)]
pub enum LiftError {
    /// Radii must be finite and nonnegative.
    #[error("invalid polar radius {0}")]
    BadRadius(f64),
    /// The built-in stream solve only covers one homogeneity weight.
    #[error("no built-in stream solve for alpha = {alpha}; supply the stream profile")]
    UnsupportedAlpha { alpha: f64 },
    /// Stream inversion rejected the profile.
    #[error(transparent)]
    Field(#[from] crate::circle_field::FieldError),
    /// A kernel query hit one of the rotated copies of the source point.
    #[error("kernel query is singular: |x - O^{i} y|^2 = {separation_sq:.3e}")]
    SingularConfiguration { i: u32, separation_sq: f64 },
    /// Rotation order must be at least 1.
    #[error("rotation order m = {0} is invalid: m must be at least 1")]
    BadOrder(u32),
    /// An annular grid needs positive, ordered radii and enough samples.
    #[error("degenerate annular grid: {0}")]
    DegenerateGrid(String),
}

/// A point of the plane carried in polar form, with Cartesian accessors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    r: f64,
    theta: f64,
}

impl PlanePoint {
    /// Builds from polar data; the radius must be finite and nonnegative.
    pub fn from_polar(r: f64, theta: f64) -> Result<Self, LiftError> {
        if !(r.is_finite() && r >= 0.0 && theta.is_finite()) {
            return Err(LiftError::BadRadius(r));
        }
        Ok(Self { r, theta })
    }

    /// Builds from Cartesian coordinates.
    pub fn from_cartesian(x1: f64, x2: f64) -> Self {
        Self {
            r: x1.hypot(x2),
            theta: x2.atan2(x1),
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn x1(&self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn x2(&self) -> f64 {
        self.r * self.theta.sin()
    }

    /// The same point rotated about the origin.
    pub fn rotated(&self, angle: f64) -> PlanePoint {
        PlanePoint {
            r: self.r,
            theta: self.theta + angle,
        }
    }
}

/// One transport-model query result.
#[derive(Debug, Clone, Copy)]
pub struct LiftedEuler {
    /// Scalar vorticity, homogeneous of degree 0.
    pub omega: f64,
    /// Velocity, homogeneous of degree 1.
    pub u: [f64; 2],
    /// Stream function, homogeneous of degree 2.
    pub psi: f64,
}

/// One stretching-model query result.
#[derive(Debug, Clone, Copy)]
pub struct LiftedSqg {
    /// Active scalar, homogeneous of degree `2 - 2 alpha`.
    pub theta_scalar: f64,
    /// Velocity, homogeneous of degree 1.
    pub u: [f64; 2],
    /// Stream function, homogeneous of degree 2.
    pub psi: f64,
}

/// Prepared transport-model lift: one stream solve shared by any number of
/// point queries.
#[derive(Debug, Clone)]
pub struct EulerLift {
    profile: CircleField,
    stream: CircleField,
    dstream: CircleField,
}

impl EulerLift {
    pub fn new(h: &CircleField) -> Self {
        let stream = solve_stream_euler(h).stream;
        let dstream = stream.derivative();
        Self {
            profile: h.clone(),
            stream,
            dstream,
        }
    }

    /// Evaluates vorticity, velocity, and stream at a point. The velocity
    /// is the perpendicular gradient of `r^2 H(theta)`.
    pub fn at(&self, p: &PlanePoint) -> LiftedEuler {
        let (sin, cos) = p.theta().sin_cos();
        let h2 = 2.0 * self.stream.eval(p.theta());
        let hp = self.dstream.eval(p.theta());
        LiftedEuler {
            omega: self.profile.eval(p.theta()),
            u: [
                p.r() * (-h2 * sin - hp * cos),
                p.r() * (h2 * cos - hp * sin),
            ],
            psi: p.r() * p.r() * self.stream.eval(p.theta()),
        }
    }
}

/// Single-query transport-model lift.
pub fn lift_euler(h: &CircleField, p: &PlanePoint) -> LiftedEuler {
    EulerLift::new(h).at(p)
}

/// Prepared stretching-model lift with a caller-supplied stream profile
/// and homogeneity weight.
#[derive(Debug, Clone)]
pub struct SqgLift {
    profile: CircleField,
    stream: CircleField,
    dstream: CircleField,
    alpha: f64,
}

impl SqgLift {
    /// Uses the built-in stream inversion, which exists only at
    /// `alpha = 1/2`.
    pub fn new(g: &CircleField, alpha: f64) -> Result<Self, LiftError> {
        if (alpha - SUPPORTED_ALPHA).abs() > 1e-12 {
            return Err(LiftError::UnsupportedAlpha { alpha });
        }
        let stream = solve_stream_sqg(g)?;
        Ok(Self::with_stream(g, &stream, alpha))
    }

    /// Accepts any stream profile, for homogeneity weights the built-in
    /// inversion does not cover.
    pub fn with_stream(g: &CircleField, stream: &CircleField, alpha: f64) -> Self {
        Self {
            profile: g.clone(),
            stream: stream.clone(),
            dstream: stream.derivative(),
            alpha,
        }
    }

    /// Evaluates the scalar, velocity, and stream at a point. The velocity
    /// is minus the perpendicular gradient of `r^2 G(theta)`.
    pub fn at(&self, p: &PlanePoint) -> LiftedSqg {
        let (sin, cos) = p.theta().sin_cos();
        let g2 = 2.0 * self.stream.eval(p.theta());
        let gp = self.dstream.eval(p.theta());
        LiftedSqg {
            theta_scalar: p.r().powf(2.0 - 2.0 * self.alpha) * self.profile.eval(p.theta()),
            u: [
                p.r() * (g2 * sin + gp * cos),
                p.r() * (-g2 * cos + gp * sin),
            ],
            psi: p.r() * p.r() * self.stream.eval(p.theta()),
        }
    }
}

/// Single-query stretching-model lift at the built-in weight.
pub fn lift_sqg(g: &CircleField, alpha: f64, p: &PlanePoint) -> Result<LiftedSqg, LiftError> {
    Ok(SqgLift::new(g, alpha)?.at(p))
}

/// Plane Biot-Savart kernel `z^perp / (2 pi |z|^2)`.
pub fn biot_savart(z: [f64; 2]) -> [f64; 2] {
    let norm_sq = z[0] * z[0] + z[1] * z[1];
    let scale = 1.0 / (TAU * norm_sq);
    [-z[1] * scale, z[0] * scale]
}

/// Rotation-averaged kernel: the mean of the Biot-Savart kernel over the
/// `m` rotated copies of the source point.
pub fn k2d_symmetrized(x: &PlanePoint, y: &PlanePoint, m: u32) -> Result<[f64; 2], LiftError> {
    if m == 0 {
        return Err(LiftError::BadOrder(m));
    }
    let mut acc = [0.0, 0.0];
    for i in 0..m {
        let copy = y.rotated(TAU * i as f64 / m as f64);
        let d = [x.x1() - copy.x1(), x.x2() - copy.x2()];
        let separation_sq = d[0] * d[0] + d[1] * d[1];
        if separation_sq < SINGULAR_SEPARATION_SQ {
            return Err(LiftError::SingularConfiguration { i, separation_sq });
        }
        let k = biot_savart(d);
        acc[0] += k[0];
        acc[1] += k[1];
    }
    Ok([acc[0] / m as f64, acc[1] / m as f64])
}

/// One row of the kernel decay study: the worst rescaled kernel magnitude
/// at a fixed source-to-query separation.
#[derive(Debug, Clone, Copy)]
pub struct DecayRow {
    /// `|y| / |x|`.
    pub separation: f64,
    /// `max over directions of |K^(m)(x, y)| |y|^m / |x|^(m-1)`.
    pub ratio: f64,
}

/// Sweeps the rescaled kernel magnitude over separations, maximizing over
/// a deterministic fan of query and source directions.
pub fn kernel_decay_ratios(m: u32, separations: &[f64], directions: usize) -> Result<Vec<DecayRow>, LiftError> {
    if m == 0 {
        return Err(LiftError::BadOrder(m));
    }
    let mut rows = Vec::with_capacity(separations.len());
    for &sep in separations {
        let mut worst = 0.0f64;
        for ix in 0..directions {
            // Offset the two fans so query and source angles never align
            // with each other or the symmetry axes.
            let ax = TAU * (ix as f64 + 0.317) / directions as f64;
            let x = PlanePoint::from_polar(1.0, ax).expect("unit radius");
            for iy in 0..directions {
                let ay = TAU * (iy as f64 + 0.613) / directions as f64;
                let y = PlanePoint::from_polar(sep, ay).expect("positive radius");
                let k = k2d_symmetrized(&x, &y, m)?;
                let magnitude = k[0].hypot(k[1]);
                worst = worst.max(magnitude * sep.powi(m as i32));
            }
        }
        rows.push(DecayRow {
            separation: sep,
            ratio: worst,
        });
    }
    Ok(rows)
}

/// Total kernel load of the far field: the integral of `|K^(m)(x, y)|` over
/// the annulus `2 <= |y| <= r_max` with `|x| = 1`, by the midpoint rule on
/// a log-radial grid. Bounded in `r_max` for `m >= 3`, logarithmic for
/// `m = 2`.
pub fn kernel_far_field_load(m: u32, r_max: f64, rings: usize, angular: usize) -> Result<f64, LiftError> {
    if m == 0 {
        return Err(LiftError::BadOrder(m));
    }
    if !(r_max > 2.0) || rings < 2 || angular < 8 {
        return Err(LiftError::DegenerateGrid(format!(
            "far-field load needs r_max > 2, rings >= 2, angular >= 8; got ({r_max}, {rings}, {angular})"
        )));
    }
    let x = PlanePoint::from_polar(1.0, 0.1).expect("unit radius");
    let log_lo = 2.0f64.ln();
    let log_hi = r_max.ln();
    let dlog = (log_hi - log_lo) / rings as f64;
    let dphi = TAU / angular as f64;
    let mut total = 0.0;
    for i in 0..rings {
        let rho = (log_lo + (i as f64 + 0.5) * dlog).exp();
        for j in 0..angular {
            let phi = (j as f64 + 0.5) * dphi;
            let y = PlanePoint::from_polar(rho, phi).expect("positive radius");
            let k = k2d_symmetrized(&x, &y, m)?;
            // Area element rho * d rho * d phi with d rho = rho * d log.
            total += k[0].hypot(k[1]) * rho * rho * dlog * dphi;
        }
    }
    Ok(total)
}

/// Log-radial times uniform-angular sample grid for the weighted Hölder
/// norm.
#[derive(Debug, Clone)]
pub struct RingGrid {
    radii: Vec<f64>,
    angular: usize,
}

impl RingGrid {
    /// Log-spaced radii from `r_min` to `r_max` over `rings` rings, each
    /// sampled at `angular` uniform angles.
    pub fn new(r_min: f64, r_max: f64, rings: usize, angular: usize) -> Result<Self, LiftError> {
        if !(r_min > 0.0 && r_max > r_min) || rings < 2 || angular < 8 {
            return Err(LiftError::DegenerateGrid(format!(
                "need 0 < r_min < r_max, rings >= 2, angular >= 8; got ({r_min}, {r_max}, {rings}, {angular})"
            )));
        }
        let step = (r_max / r_min).powf(1.0 / (rings - 1) as f64);
        let radii = (0..rings).map(|i| r_min * step.powi(i as i32)).collect();
        Ok(Self { radii, angular })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn angular(&self) -> usize {
        self.angular
    }

    fn point(&self, ring: usize, slot: usize) -> PlanePoint {
        PlanePoint {
            r: self.radii[ring],
            theta: TAU * slot as f64 / self.angular as f64,
        }
    }
}

/// Discrete radially weighted Hölder norm: the sup of `|f|` over the grid
/// plus the sup over same-ring and adjacent-ring pairs of
/// `min(|x|, |x'|)^alpha |f(x) - f(x')| / |x - x'|^alpha`. The weight
/// makes jumps that sharpen toward the origin cost the same on every
/// ring, which is the scale-invariant reading of Hölder continuity.
pub fn ring_norm(
    grid: &RingGrid,
    f: impl Fn(&PlanePoint) -> f64,
    alpha: f64,
) -> Result<f64, LiftError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LiftError::DegenerateGrid(format!(
            "Hölder exponent {alpha} outside (0, 1]"
        )));
    }
    let rings = grid.radii.len();
    let samples: Vec<Vec<(PlanePoint, f64)>> = (0..rings)
        .map(|i| {
            (0..grid.angular)
                .map(|j| {
                    let p = grid.point(i, j);
                    let v = f(&p);
                    (p, v)
                })
                .collect()
        })
        .collect();

    let mut sup = 0.0f64;
    for ring in &samples {
        for (_, v) in ring {
            sup = sup.max(v.abs());
        }
    }

    let mut quotient = 0.0f64;
    for i in 0..rings {
        for di in 0..=1usize {
            if i + di >= rings {
                continue;
            }
            for (p, v) in &samples[i] {
                for (q, w) in &samples[i + di] {
                    let dx = p.x1() - q.x1();
                    let dy = p.x2() - q.x2();
                    let dist = dx.hypot(dy);
                    if dist == 0.0 {
                        continue;
                    }
                    let weight = p.r().min(q.r()).powf(alpha);
                    quotient = quotient.max(weight * (v - w).abs() / dist.powf(alpha));
                }
            }
        }
    }
    Ok(sup + quotient)
}
