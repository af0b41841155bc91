//! Interpolation utilities: periodic cubic splines and local Lagrange tables
//! on uniform grids, cubic Hermite segments, and small-stencil Lagrange
//! extrapolation in time.

use std::f64::consts::{PI, TAU};

/// Uniform samples of a 2pi-periodic function with local degree-seven
/// Lagrange evaluation.
///
/// Each query interpolates through the eight nearest samples, so the error
/// is O(h^8) on smooth data while evaluation stays O(1) per query.
#[derive(Debug, Clone)]
pub struct UniformPeriodicTable {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl UniformPeriodicTable {
    /// Wraps samples taken at `theta_j = -pi + 2 pi j / n`.
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 8, "degree-seven stencils need at least 8 samples, got {n}");
        Self {
            x0: -PI,
            h: TAU / n as f64,
            values,
        }
    }

    /// Interpolates the table at `x` (any real number, wrapped periodically).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len() as i64;
        let s = (x - self.x0) / self.h;
        let base = s.floor();
        let frac = s - base;
        let i0 = base as i64;
        let mut acc = 0.0;
        for o in -3i64..=4 {
            let mut w = 1.0;
            for p in -3i64..=4 {
                if p != o {
                    w *= (frac - p as f64) / ((o - p) as f64);
                }
            }
            let idx = (i0 + o).rem_euclid(n) as usize;
            acc += w * self.values[idx];
        }
        acc
    }
}

/// C^2 cubic spline through uniform samples of a 2pi-periodic function.
///
/// Construction solves the cyclic tridiagonal moment system once; evaluation
/// and differentiation are O(1) per query.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    /// Second derivatives at the nodes.
    moments: Vec<f64>,
}

impl PeriodicSpline {
    /// Fits samples taken at `theta_j = -pi + 2 pi j / n`.
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 3, "spline needs at least 3 samples, got {n}");
        let h = TAU / n as f64;
        let rhs: Vec<f64> = (0..n)
            .map(|j| {
                let prev = values[(j + n - 1) % n];
                let next = values[(j + 1) % n];
                6.0 * (prev - 2.0 * values[j] + next) / (h * h)
            })
            .collect();
        let moments = solve_cyclic_uniform(4.0, 1.0, &rhs);
        Self {
            x0: -PI,
            h,
            values: values.to_vec(),
            moments,
        }
    }

    fn locate(&self, x: f64) -> (usize, usize, f64) {
        let n = self.values.len();
        let s = (x - self.x0).rem_euclid(TAU);
        let mut j = (s / self.h) as usize;
        if j >= n {
            j = n - 1;
        }
        let local = s - j as f64 * self.h;
        (j, (j + 1) % n, local)
    }

    /// Spline value at an arbitrary angle.
    pub fn eval(&self, x: f64) -> f64 {
        let (j, j1, u) = self.locate(x);
        let h = self.h;
        let (ma, mb) = (self.moments[j], self.moments[j1]);
        let (ya, yb) = (self.values[j], self.values[j1]);
        let a = h - u;
        ma * a * a * a / (6.0 * h)
            + mb * u * u * u / (6.0 * h)
            + (ya / h - ma * h / 6.0) * a
            + (yb / h - mb * h / 6.0) * u
    }

    /// Spline derivative at an arbitrary angle.
    pub fn deriv(&self, x: f64) -> f64 {
        let (j, j1, u) = self.locate(x);
        let h = self.h;
        let (ma, mb) = (self.moments[j], self.moments[j1]);
        let (ya, yb) = (self.values[j], self.values[j1]);
        let a = h - u;
        -ma * a * a / (2.0 * h) + mb * u * u / (2.0 * h) + (yb - ya) / h - (mb - ma) * h / 6.0
    }
}

/// Solves the cyclic tridiagonal system with constant diagonal `diag`,
/// constant off-diagonals `off`, and wrap-around corners equal to `off`.
/// Uses the Sherman-Morrison rank-one correction of a plain Thomas sweep.
fn solve_cyclic_uniform(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n >= 3);
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - off * off / gamma;
    let y = solve_tridiagonal(&b, off, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = solve_tridiagonal(&b, off, &u);
    let vy = y[0] + off / gamma * y[n - 1];
    let vz = z[0] + off / gamma * z[n - 1];
    let factor = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect()
}

/// Thomas algorithm for a tridiagonal system with per-row diagonal `diag`
/// and constant off-diagonal `off`.
fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = off / diag[0];
    d_prime[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * c_prime[i - 1];
        c_prime[i] = off / m;
        d_prime[i] = (rhs[i] - off * d_prime[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
    x
}

/// Cubic Hermite segment on `[t0, t1]` matching values and derivatives at
/// both ends.
#[derive(Debug, Clone, Copy)]
pub struct HermiteSegment {
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
    pub dy0: f64,
    pub dy1: f64,
}

impl HermiteSegment {
    /// Value at `t` in `[t0, t1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.y0
            + (s3 - 2.0 * s2 + s) * h * self.dy0
            + (-2.0 * s3 + 3.0 * s2) * self.y1
            + (s3 - s2) * h * self.dy1
    }

    /// Locates a root in `[t0, t1]` by bisection, assuming a sign change of
    /// the endpoint values. Returns `None` without one.
    pub fn find_root(&self) -> Option<f64> {
        let (mut lo, mut hi) = (self.t0, self.t1);
        let (mut flo, fhi) = (self.eval(lo), self.eval(hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() == fhi.signum() {
            return None;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let fmid = self.eval(mid);
            if fmid == 0.0 {
                return Some(mid);
            }
            if fmid.signum() == flo.signum() {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Evaluates the Lagrange interpolant through `(ts[i], ys[i])` at `t`.
/// Intended for short stencils (2 to 4 points) when extrapolating a velocity
/// history in time; the abscissas must be pairwise distinct.
pub fn lagrange_eval(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    assert_eq!(ts.len(), ys.len());
    assert!(!ts.is_empty());
    let mut acc = 0.0;
    for i in 0..ts.len() {
        let mut w = ys[i];
        for j in 0..ts.len() {
            if i != j {
                w *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += w;
    }
    acc
}
