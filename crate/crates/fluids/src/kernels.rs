//! Stream solves on the circle and their convolution-kernel reference forms.
//!
//! A vorticity profile `h` determines a stream profile `H` through
//! `h = 4H + H''`, which in Fourier space is division by `4 - k^2`. The
//! resonant modes `k = +/-2` lie in the operator's kernel and are
//! annihilated by the solve. The same map has an integral form
//!
//! ```text
//! H(t) = (1/2pi) integral K(t - s) h(s) ds
//! ```
//!
//! against the explicit kernel [`k_circle`], kept here as an independent
//! reference route for cross-checking the multiplier solve.
//!
//! The half-Laplacian transport model (`alpha = 1/2`) has its own stream
//! solve with multiplier [`sqg_multiplier`]; it requires the `k = 0, +/-1`
//! modes of the input to vanish.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::circle_field::{wrap_angle, CircleField, FieldError, MEAN_FREE_TOL};

/// Above this magnitude, annihilated `k = +/-2` vorticity content is worth
/// surfacing as a warning.
pub const MODE_TWO_WARN_TOL: f64 = 1e-8;

/// Multiplier of the stream solve `h -> H` with `h = 4H + H''`. The resonant
/// modes `k = +/-2` map to zero.
pub fn euler_multiplier(k: i64) -> f64 {
    if k.abs() == 2 {
        0.0
    } else {
        1.0 / (4.0 - (k * k) as f64)
    }
}

/// Multiplier of the half-Laplacian stream solve,
/// `-(k^2 - 1) / (|k| (k^2 + 2))`, defined for `|k| >= 2`.
pub fn sqg_multiplier(k: i64) -> f64 {
    assert!(k.abs() >= 2, "multiplier undefined for k = {k}");
    let ka = k.abs() as f64;
    -(ka * ka - 1.0) / (ka * (ka * ka + 2.0))
}

/// Convolution kernel of the Euler stream solve on `[-pi, pi)`:
///
/// ```text
/// K(t) = (pi/2) sin(2t) sgn(t) - (t/2) sin(2t) - (1/8) cos(2t)
/// ```
///
/// Even and continuous, with derivative kinks at `t = 0` and the wrap at
/// `+/-pi`. Its Fourier coefficients reproduce [`euler_multiplier`].
pub fn k_circle(theta: f64) -> f64 {
    let t = wrap_angle(theta);
    let s2 = (2.0 * t).sin();
    let sgn = if t >= 0.0 { 1.0 } else { -1.0 };
    (PI / 2.0) * s2 * sgn - 0.5 * t * s2 - 0.125 * (2.0 * t).cos()
}

/// m-fold symmetrization of the kernel: the average of [`k_circle`] over the
/// `m` rotations by `2 pi / m`. Acting on m-fold symmetric profiles it is
/// equivalent to the full kernel.
pub fn k_circle_symmetrized(m: u32, theta: f64) -> f64 {
    assert!(m >= 1, "symmetry order must be at least 1");
    (0..m)
        .map(|l| k_circle(theta + TAU * l as f64 / m as f64))
        .sum::<f64>()
        / m as f64
}

/// Outcome of the Euler stream solve.
#[derive(Debug, Clone)]
pub struct StreamSolution {
    /// The stream profile `H`.
    pub stream: CircleField,
    /// Magnitude of the input's `k = +/-2` content, annihilated by the solve.
    pub mode_two_residual: f64,
}

impl StreamSolution {
    /// A warning line when the annihilated `k = +/-2` content is significant.
    pub fn warning(&self) -> Option<String> {
        (self.mode_two_residual > MODE_TWO_WARN_TOL).then(|| {
            format!(
                "stream solve dropped k = +/-2 vorticity content of magnitude {:.3e}",
                self.mode_two_residual
            )
        })
    }
}

/// Solves `h = 4H + H''` for the stream profile `H`. The resonant `k = +/-2`
/// modes of the input are annihilated; their magnitude is reported so
/// callers can surface a warning instead of silently losing content.
pub fn solve_stream_euler(h: &CircleField) -> StreamSolution {
    let mode_two_residual = h.coeff(2).norm().max(h.coeff(-2).norm());
    let stream = h.map_spectrum(|k| Complex64::new(euler_multiplier(k), 0.0));
    StreamSolution {
        stream,
        mode_two_residual,
    }
}

/// Solves the half-Laplacian stream relation for `G`. The `k = 0` and
/// `k = +/-1` modes have no finite multiplier and must vanish in the input.
pub fn solve_stream_sqg(g: &CircleField) -> Result<CircleField, FieldError> {
    let low = g
        .coeff(0)
        .norm()
        .max(g.coeff(1).norm())
        .max(g.coeff(-1).norm());
    if low > MEAN_FREE_TOL {
        return Err(FieldError::UnsupportedLowModes {
            magnitude: low,
            limit: MEAN_FREE_TOL,
        });
    }
    Ok(g.map_spectrum(|k| {
        if k.abs() <= 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(sqg_multiplier(k), 0.0)
        }
    }))
}

/// Derivative of the Euler stream profile at the distinguished angles `0`
/// and `pi/4`, evaluated spectrally (exact for the interpolant). These are
/// the corners of the fundamental sector of odd 4-fold profiles, where
/// growth and decay rates are read off.
pub fn h_prime_endpoints(h: &CircleField) -> (f64, f64) {
    let hp = solve_stream_euler(h).stream.derivative();
    (hp.eval(0.0), hp.eval(PI / 4.0))
}

/// Direct quadrature of the stream integral with the trapezoid rule on the
/// sample nodes. Second-order accurate: the kernel's derivative kinks cap
/// the rate. Reference route only.
pub fn stream_euler_trapezoid(h: &CircleField, theta_bar: f64) -> f64 {
    let n = h.n();
    let sum: f64 = (0..n)
        .map(|j| k_circle(theta_bar - h.theta(j)) * h.values()[j])
        .sum();
    sum / n as f64
}

/// Direct quadrature of the stream integral with composite Gauss-Legendre
/// panels between the kernel's kinks at `s = theta_bar` and
/// `theta_bar +/- pi`, evaluating `h` through its trigonometric
/// interpolant. Spectrally accurate on each smooth arc. Reference route
/// only: cost is O(n) per panel point.
pub fn stream_euler_gauss(h: &CircleField, theta_bar: f64) -> f64 {
    let panels_per_arc = (h.n() / 32).max(4);
    let (nodes, weights) = gauss_legendre(32);
    let mut acc = 0.0;
    for (lo, hi) in [(theta_bar - PI, theta_bar), (theta_bar, theta_bar + PI)] {
        let panel = (hi - lo) / panels_per_arc as f64;
        for p in 0..panels_per_arc {
            let mid = lo + (p as f64 + 0.5) * panel;
            let half = 0.5 * panel;
            for (x, w) in nodes.iter().zip(&weights) {
                let s = mid + half * x;
                acc += w * half * k_circle(theta_bar - s) * h.eval(s);
            }
        }
    }
    acc / TAU
}

/// Nodes and weights of the n-point Gauss-Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence. Nodes come back in
/// ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_distinguished_values() {
        assert!((k_circle(0.0) + 0.125).abs() < 1e-15, "K(0) = -1/8");
        assert!(
            (k_circle(PI / 4.0) - 3.0 * PI / 8.0).abs() < 1e-15,
            "K(pi/4) = 3 pi / 8"
        );
    }

    #[test]
    fn kernel_is_even_and_continuous_at_the_wrap() {
        for &t in &[0.3, 1.2, 2.9, 0.01] {
            let err = (k_circle(t) - k_circle(-t)).abs();
            assert!(err < 1e-14, "evenness at {t}: {err}");
        }
        let jump = (k_circle(PI - 1e-9) - k_circle(-PI + 1e-9)).abs();
        assert!(jump < 1e-7, "wrap jump {jump}");
        let across_zero = (k_circle(1e-9) - k_circle(-1e-9)).abs();
        assert!(across_zero < 1e-8, "jump across zero {across_zero}");
    }

    #[test]
    fn kernel_derivative_kink_at_zero_has_jump_two_pi() {
        let eps = 1e-6;
        let right = (k_circle(2.0 * eps) - k_circle(eps)) / eps;
        let left = (k_circle(-eps) - k_circle(-2.0 * eps)) / eps;
        let jump = right - left;
        assert!(
            (jump - TAU).abs() < 1e-3,
            "derivative jump at zero was {jump}, expected 2 pi"
        );
    }

    #[test]
    fn euler_multiplier_spot_values() {
        assert_eq!(euler_multiplier(0), 0.25);
        assert_eq!(euler_multiplier(1), 1.0 / 3.0);
        assert_eq!(euler_multiplier(2), 0.0);
        assert_eq!(euler_multiplier(-2), 0.0);
        assert_eq!(euler_multiplier(3), -0.2);
        assert_eq!(euler_multiplier(4), -1.0 / 12.0);
    }

    #[test]
    fn sqg_multiplier_spot_values() {
        assert!((sqg_multiplier(2) + 0.25).abs() < 1e-15);
        assert!((sqg_multiplier(-2) + 0.25).abs() < 1e-15);
        assert!((sqg_multiplier(3) + 8.0 / 33.0).abs() < 1e-15);
    }

    #[test]
    fn sqg_multiplier_approaches_negative_inverse_modulus() {
        // |k| M(k) -> -1 monotonically: the model's stream solve behaves
        // like -|nabla|^{-1} at high wavenumber.
        let mut prev = 0.0;
        for k in 2..=64 {
            let scaled = -(k as f64) * sqg_multiplier(k);
            assert!(
                scaled > prev && scaled < 1.0,
                "k = {k}: |k| M(k) = {scaled} should increase toward 1"
            );
            prev = scaled;
        }
        assert!(prev > 0.999, "at k = 64 the ratio should be close to 1: {prev}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(4);
        for degree in 0..=7 {
            let num: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * xi.powi(degree))
                .sum();
            let exact = if degree % 2 == 1 {
                0.0
            } else {
                2.0 / (degree as f64 + 1.0)
            };
            assert!(
                (num - exact).abs() < 1e-14,
                "degree {degree}: {num} vs {exact}"
            );
        }
    }

    #[test]
    fn gauss_legendre_handles_smooth_integrands() {
        let (x, w) = gauss_legendre(20);
        let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.cos()).sum();
        let exact = 2.0 * 1.0_f64.sin();
        assert!((num - exact).abs() < 1e-14, "cos integral: {num}");
    }

    #[test]
    fn stream_solve_applies_the_multiplier() {
        let h = CircleField::from_fn(64, |t| (4.0 * t).sin()).unwrap();
        let sol = solve_stream_euler(&h);
        let want: Vec<f64> = (0..64)
            .map(|j| -(4.0 * h.theta(j)).sin() / 12.0)
            .collect();
        let err: f64 = sol
            .stream
            .values()
            .iter()
            .zip(&want)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-14, "stream error {err}");
        assert!(sol.mode_two_residual < 1e-14);
        assert!(sol.warning().is_none());
    }

    #[test]
    fn stream_solve_annihilates_and_reports_resonant_modes() {
        let h = CircleField::from_fn(64, |t| (2.0 * t).cos() + (4.0 * t).cos()).unwrap();
        let sol = solve_stream_euler(&h);
        assert!(
            sol.stream.coeff(2).norm() < 1e-15,
            "resonant mode must be annihilated"
        );
        assert!((sol.mode_two_residual - 0.5).abs() < 1e-14);
        let msg = sol.warning().expect("significant resonant content warns");
        assert!(msg.contains("k = +/-2"), "warning names the modes: {msg}");
    }

    #[test]
    fn sqg_stream_solve_rejects_low_modes() {
        let g = CircleField::from_fn(64, |t| t.cos() + (3.0 * t).sin()).unwrap();
        let err = solve_stream_sqg(&g).unwrap_err();
        assert!(
            err.to_string().contains("k in {0, +1, -1}"),
            "error names the offending modes: {err}"
        );
    }

    #[test]
    fn sqg_stream_solve_applies_the_multiplier() {
        let g = CircleField::from_fn(64, |t| (2.0 * t).sin()).unwrap();
        let stream = solve_stream_sqg(&g).unwrap();
        let want: Vec<f64> = (0..64).map(|j| -0.25 * (2.0 * g.theta(j)).sin()).collect();
        let err: f64 = stream
            .values()
            .iter()
            .zip(&want)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-14, "sqg stream error {err}");
    }

    #[test]
    fn endpoint_derivatives_for_the_pure_fourth_mode() {
        let h = CircleField::from_fn(128, |t| (4.0 * t).sin()).unwrap();
        let (d0, dq) = h_prime_endpoints(&h);
        assert!((d0 + 1.0 / 3.0).abs() < 1e-13, "H'(0) = -1/3, got {d0}");
        assert!((dq - 1.0 / 3.0).abs() < 1e-13, "H'(pi/4) = 1/3, got {dq}");
    }

    #[test]
    fn endpoint_derivatives_for_a_two_mode_profile() {
        // h = sin(4t) + 0.5 sin(8t): H' (0) = -1/3 + 0.5 * (-8/60),
        // H'(pi/4) = 1/3 + 0.5 * (-8/60) * cos(2 pi) * ... derived from
        // H_k' (0) = -k/(4 - k^2) per sine mode and cos(k pi / 4) at pi/4.
        let h = CircleField::from_fn(128, |t| (4.0 * t).sin() + 0.5 * (8.0 * t).sin()).unwrap();
        let (d0, dq) = h_prime_endpoints(&h);
        let mode = |k: f64, amp: f64, at: f64| amp * k / (4.0 - k * k) * (k * at).cos();
        let want0 = mode(4.0, 1.0, 0.0) + mode(8.0, 0.5, 0.0);
        let wantq = mode(4.0, 1.0, PI / 4.0) + mode(8.0, 0.5, PI / 4.0);
        assert!((d0 - want0).abs() < 1e-13, "H'(0): {d0} vs {want0}");
        assert!((dq - wantq).abs() < 1e-13, "H'(pi/4): {dq} vs {wantq}");
    }

    #[test]
    fn symmetrized_kernel_acts_like_the_full_kernel_on_symmetric_data() {
        // For 4-fold data the symmetrized kernel gives the same stream:
        // compare trapezoid quadrature with both kernels.
        let h = CircleField::from_fn(256, |t| (4.0 * t).sin() + 0.3 * (8.0 * t).cos()).unwrap();
        let full = stream_euler_trapezoid(&h, 0.4);
        let sym: f64 = (0..256)
            .map(|j| k_circle_symmetrized(4, 0.4 - h.theta(j)) * h.values()[j])
            .sum::<f64>()
            / 256.0;
        assert!(
            (full - sym).abs() < 1e-12,
            "kernels disagree on symmetric data: {full} vs {sym}"
        );
    }
}
