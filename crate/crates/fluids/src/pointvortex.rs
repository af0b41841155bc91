//! Point vortices on the circle: the weighted interaction system for atomic
//! data under 4-fold symmetry, the integrable two-gap reduction for three
//! equal vortices, and period detection for its closed orbits.
//!
//! Vortex positions are tracked on an increasing lift so that adjacent gaps
//! stay positive; [`VortexSystem::wrapped_positions`] reduces them back to
//! the fundamental window `[0, pi/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::interp::HermiteSegment;

/// Hard floor on the gap between adjacent vortices before a run aborts.
pub const MIN_GAP: f64 = 1e-9;

/// Largest internal RK4 substep taken by the integrators.
pub const MAX_SUBSTEP: f64 = 1e-2;

/// Ratio between the gap velocities of three equal unit-weight vortices and
/// the right-hand side of the normalized two-gap system. The sign flip means
/// the normalized system traverses the same orbits in the opposite sense.
pub const GAP_TO_VORTEX_RATE: f64 = -2.0 / PI;

/// The unique interior rest point of the two-gap system.
pub const GAP_FIXED_POINT: [f64; 2] = [PI / 6.0, PI / 6.0];

/// Errors raised by the vortex integrators.
#[derive(Debug, Error)]
pub enum VortexError {
    /// The configuration has no vortices.
    #[error("need at least one vortex")]
    Empty,
    /// Positions and weights disagree in length.
    #[error("got {positions} positions but {weights} weights")]
    MismatchedWeights { positions: usize, weights: usize },
    /// Positions must be finite, strictly increasing, and separated.
    #[error("vortex gap {gap:.3e} at t = {t:.6} fell below the floor {MIN_GAP:.1e}")]
    TooClose { t: f64, gap: f64 },
    /// The vortex span must stay inside one symmetry window.
    #[error("vortex span {span:.6} at t = {t:.6} is not below pi/2")]
    SpanTooWide { t: f64, span: f64 },
    /// The state lost finiteness.
    #[error("vortex state lost finiteness at t = {t:.6}")]
    NonFinite { t: f64 },
    /// Requested energy level lies outside the open range of closed orbits.
    #[error("energy level {e} must lie in (1, 3/2]")]
    EnergyOutOfRange { e: f64 },
}

/// Ordered point vortices with weights.
#[derive(Debug, Clone)]
pub struct VortexSystem {
    weights: Vec<f64>,
    positions: Vec<f64>,
    t: f64,
}

impl VortexSystem {
    /// Validates and adopts an ordered configuration.
    pub fn new(positions: &[f64], weights: &[f64]) -> Result<Self, VortexError> {
        if positions.is_empty() {
            return Err(VortexError::Empty);
        }
        if positions.len() != weights.len() {
            return Err(VortexError::MismatchedWeights {
                positions: positions.len(),
                weights: weights.len(),
            });
        }
        let system = Self {
            weights: weights.to_vec(),
            positions: positions.to_vec(),
            t: 0.0,
        };
        system.check()?;
        Ok(system)
    }

    /// Current time.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Positions on the increasing lift.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Positions reduced to the fundamental window `[0, pi/2)`.
    pub fn wrapped_positions(&self) -> Vec<f64> {
        self.positions
            .iter()
            .map(|&p| p.rem_euclid(FRAC_PI_2))
            .collect()
    }

    /// Gaps between adjacent vortices.
    pub fn gaps(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Interaction velocities at the current positions.
    pub fn velocities(&self) -> Vec<f64> {
        vortex_velocity(&self.weights, &self.positions)
    }

    /// Advances by `dt`, internally subdividing to at most [`MAX_SUBSTEP`].
    pub fn step(&mut self, dt: f64) -> Result<(), VortexError> {
        let pieces = (dt / MAX_SUBSTEP).ceil().max(1.0) as usize;
        let sub = dt / pieces as f64;
        for _ in 0..pieces {
            self.substep(sub);
            self.check()?;
        }
        Ok(())
    }

    fn substep(&mut self, dt: f64) {
        let y = &self.positions;
        let k1 = vortex_velocity(&self.weights, y);
        let k2 = vortex_velocity(&self.weights, &offset(y, &k1, 0.5 * dt));
        let k3 = vortex_velocity(&self.weights, &offset(y, &k2, 0.5 * dt));
        let k4 = vortex_velocity(&self.weights, &offset(y, &k3, dt));
        for j in 0..self.positions.len() {
            self.positions[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        self.t += dt;
    }

    fn check(&self) -> Result<(), VortexError> {
        if self.positions.iter().any(|p| !p.is_finite()) {
            return Err(VortexError::NonFinite { t: self.t });
        }
        for w in self.positions.windows(2) {
            let gap = w[1] - w[0];
            if gap < MIN_GAP {
                return Err(VortexError::TooClose { t: self.t, gap });
            }
        }
        let span = self.positions[self.positions.len() - 1] - self.positions[0];
        if span >= FRAC_PI_2 {
            return Err(VortexError::SpanTooWide { t: self.t, span });
        }
        Ok(())
    }
}

/// Interaction velocities of the weighted system.
fn vortex_velocity(weights: &[f64], positions: &[f64]) -> Vec<f64> {
    positions
        .iter()
        .map(|&tj| {
            let total: f64 = weights
                .iter()
                .zip(positions)
                .map(|(&a, &tl)| a * (2.0 * (tl - tj)).abs().sin())
                .sum();
            2.0 / PI * total
        })
        .collect()
}

fn offset(y: &[f64], k: &[f64], scale: f64) -> Vec<f64> {
    y.iter().zip(k).map(|(&a, &b)| a + scale * b).collect()
}

/// Right-hand side of the normalized two-gap system.
pub fn gap_rhs(z: [f64; 2]) -> [f64; 2] {
    let s12 = (2.0 * z[0] + 2.0 * z[1]).sin();
    [s12 - (2.0 * z[1]).sin(), (2.0 * z[0]).sin() - s12]
}

/// Conserved energy of the two-gap system.
pub fn gap_hamiltonian(z: [f64; 2]) -> f64 {
    (2.0 * z[0]).cos() + (2.0 * z[1]).cos() - (2.0 * z[0] + 2.0 * z[1]).cos()
}

/// Diagonal point `z1 = z2` on the energy level `e`, on the small-gap side
/// of the rest point.
pub fn gap_diagonal_point(e: f64) -> Result<[f64; 2], VortexError> {
    if !(e > 1.0 && e <= 1.5) {
        return Err(VortexError::EnergyOutOfRange { e });
    }
    // E(z, z) = 1 + 2c - 2c^2 with c = cos(2z).
    let c = 0.5 * (1.0 + (3.0 - 2.0 * e).sqrt());
    let z = 0.5 * c.clamp(-1.0, 1.0).acos();
    Ok([z, z])
}

/// One RK4 step of the two-gap system.
pub fn gap_step(z: [f64; 2], dt: f64) -> [f64; 2] {
    let k1 = gap_rhs(z);
    let k2 = gap_rhs(gap_offset(z, k1, 0.5 * dt));
    let k3 = gap_rhs(gap_offset(z, k2, 0.5 * dt));
    let k4 = gap_rhs(gap_offset(z, k3, dt));
    [
        z[0] + dt / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
        z[1] + dt / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
    ]
}

fn gap_offset(z: [f64; 2], k: [f64; 2], scale: f64) -> [f64; 2] {
    [z[0] + scale * k[0], z[1] + scale * k[1]]
}

/// Outcome of the period search for a gap orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitPeriod {
    /// The starting point does not move.
    FixedPoint,
    /// First return time to the starting section.
    Period(f64),
    /// No return was found before the time horizon.
    NotFound,
}

/// Mismatch allowed in the transverse coordinate when accepting a return.
const RETURN_GATE: f64 = 1e-5;

/// Finds the first return of a gap orbit to its starting Poincare section
/// `{z1 = z1(0), sign(dz1/dt) matching}` by marching with RK4 steps of `dt`
/// and refining each candidate crossing with a cubic Hermite root.
pub fn detect_period(z0: [f64; 2], dt: f64, t_max: f64) -> OrbitPeriod {
    let v0 = gap_rhs(z0);
    if v0[0].hypot(v0[1]) < 1e-12 {
        return OrbitPeriod::FixedPoint;
    }
    let dir = v0[0].signum();
    let mut t = 0.0;
    let mut z = z0;
    let mut armed = false;
    while t < t_max {
        let z_next = gap_step(z, dt);
        let t_next = t + dt;
        let s = (z[0] - z0[0]) * dir;
        let s_next = (z_next[0] - z0[0]) * dir;
        // Wait until the orbit has left the section before hunting returns.
        if s < -RETURN_GATE {
            armed = true;
        }
        if armed && s < 0.0 && s_next >= 0.0 {
            let seg = HermiteSegment {
                t0: t,
                t1: t_next,
                y0: s,
                y1: s_next,
                dy0: gap_rhs(z)[0] * dir,
                dy1: gap_rhs(z_next)[0] * dir,
            };
            if let Some(t_cross) = seg.find_root() {
                let z_cross = gap_step(z, t_cross - t);
                if (z_cross[1] - z0[1]).abs() < RETURN_GATE {
                    return OrbitPeriod::Period(t_cross);
                }
            }
            armed = false;
        }
        z = z_next;
        t = t_next;
    }
    OrbitPeriod::NotFound
}
