//! Cross-checks of the angular stretching models: hand values for the
//! stream inversion, agreement of the two independently coded routes to
//! the approximate model, convergence and reversibility of the stepper,
//! tracking between the exact and approximate models, and the blow-up
//! monitor on the steepening family member.

use fluids::circle_field::{CircleField, SymmetrySpec};
use fluids::kernels::solve_stream_sqg;
use fluids::sqg1d::{
    rhs_degregorio, rhs_sqg_approx, run_sqg, step_sqg, SqgRunConfig, SqgVariant, SqgVerdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field_from(n: usize, f: impl Fn(f64) -> f64) -> CircleField {
    CircleField::from_fn(n, f).expect("valid grid")
}

fn sup_diff(a: &CircleField, b: &CircleField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn stream_solve_scales_pure_modes_by_the_hand_multipliers() {
    // Mode 2 inverts to -1/4 and mode 3 to -8/33.
    let g2 = field_from(256, |t| (2.0 * t).cos());
    let s2 = solve_stream_sqg(&g2).expect("mode 2 is admissible");
    let want2 = field_from(256, |t| -(2.0 * t).cos() / 4.0);
    assert!(
        sup_diff(&s2, &want2) < 1e-13,
        "mode 2 stream off by {:.3e}",
        sup_diff(&s2, &want2)
    );

    let g3 = field_from(256, |t| (3.0 * t).cos() + 0.5 * (3.0 * t).sin());
    let s3 = solve_stream_sqg(&g3).expect("mode 3 is admissible");
    let want3 = field_from(256, |t| -8.0 / 33.0 * ((3.0 * t).cos() + 0.5 * (3.0 * t).sin()));
    assert!(
        sup_diff(&s3, &want3) < 1e-13,
        "mode 3 stream off by {:.3e}",
        sup_diff(&s3, &want3)
    );
}

#[test]
fn the_two_code_paths_to_the_approximate_model_agree_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for round in 0..20 {
        let modes: Vec<(f64, f64, f64)> = (2..=12)
            .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let g = field_from(256, |t| {
            modes
                .iter()
                .map(|&(k, a, b)| a * (k * t).cos() + b * (k * t).sin())
                .sum()
        });
        let via_family = rhs_degregorio(&g, 2.0, true).expect("mean-free data");
        let via_stream = rhs_sqg_approx(&g, true).expect("mean-free data");
        let gap = sup_diff(&via_family, &via_stream);
        assert!(gap < 1e-12, "round {round}: code paths disagree by {gap:.3e}");
    }
}

#[test]
fn one_step_of_the_exact_model_keeps_the_parity_without_projection() {
    let g = field_from(256, |t| (2.0 * t).sin() + 0.3 * (4.0 * t).sin());
    let sym = SymmetrySpec::new(2, Some(0.0)).expect("valid symmetry");
    assert!(g.symmetry_residual(&sym) < 1e-14, "data must start symmetric");
    let stepped = step_sqg(&g, 1e-2, SqgVariant::Exact, true).expect("admissible data");
    let residual = stepped.symmetry_residual(&sym);
    assert!(
        residual < 1e-12,
        "unprojected step leaked an even part of size {residual:.3e}"
    );
}

#[test]
fn the_stepper_self_converges_at_fourth_order_on_the_exact_model() {
    let n = 512;
    let g0 = field_from(n, |t| (2.0 * t).sin());
    let t_end = 0.5;
    let advance = |steps: usize| -> CircleField {
        let dt = t_end / steps as f64;
        let mut g = g0.clone();
        for _ in 0..steps {
            g = step_sqg(&g, dt, SqgVariant::Exact, true).expect("smooth data");
        }
        g
    };
    let reference = advance(1024);
    let coarse = sup_diff(&advance(64), &reference);
    let fine = sup_diff(&advance(128), &reference);
    let order = (coarse / fine).log2();
    assert!(
        (order - 4.0).abs() < 0.1,
        "observed order {order:.3} (errors {coarse:.3e} -> {fine:.3e})"
    );
}

#[test]
fn integrating_forward_and_back_recovers_the_initial_state() {
    let g0 = field_from(256, |t| (2.0 * t).sin() + 0.3 * (6.0 * t).sin());
    let dt = 2e-3;
    let steps = 100;
    let mut g = g0.clone();
    for _ in 0..steps {
        g = step_sqg(&g, dt, SqgVariant::Exact, true).expect("smooth data");
    }
    for _ in 0..steps {
        g = step_sqg(&g, -dt, SqgVariant::Exact, true).expect("smooth data");
    }
    let err = sup_diff(&g, &g0);
    assert!(err < 1e-7, "round trip missed the initial state by {err:.3e}");
}

#[test]
fn the_exact_run_from_a_pure_mode_stays_resolved() {
    let g0 = field_from(512, |t| (2.0 * t).sin());
    let sym = SymmetrySpec::new(2, Some(0.0)).expect("valid symmetry");
    let config = SqgRunConfig {
        variant: SqgVariant::Exact,
        dt: 5e-3,
        t_end: 1.0,
        sample_interval: 0.1,
        ..SqgRunConfig::default()
    };
    let mut rows = Vec::new();
    let report = run_sqg(&g0, &sym, &config, |s| rows.push(*s)).expect("smooth run");
    assert_eq!(report.verdict, SqgVerdict::Resolved);
    let mut prev = 0.0;
    for row in &rows {
        assert!(row.bkm_integral.is_finite());
        assert!(
            row.bkm_integral >= prev,
            "bkm integral decreased at t = {}",
            row.t
        );
        prev = row.bkm_integral;
    }
}

#[test]
fn the_approximate_model_tracks_the_exact_one_within_the_multiplier_gap() {
    // The two streams differ by 3/(|k|(k^2+2)) per mode, which is 1/4 at
    // k = 2; for g = sin(2t) the right-hand sides then differ by
    // sin(4t)/4, so the trajectories can separate at rate 1/4 and no
    // faster. The envelope below is that rate with 4% headroom.
    let n = 512;
    let g0 = field_from(n, |t| (2.0 * t).sin());
    let dt = 1e-3;
    let steps = 500;
    let mut exact = g0.clone();
    let mut approx = g0.clone();
    let mut worst = 0.0f64;
    for i in 0..steps {
        exact = step_sqg(&exact, dt, SqgVariant::Exact, true).expect("smooth data");
        approx = step_sqg(&approx, dt, SqgVariant::Approx, true).expect("smooth data");
        let t = (i + 1) as f64 * dt;
        let gap = sup_diff(&exact, &approx);
        assert!(
            gap <= 0.26 * t + 1e-3,
            "gap {gap:.4} at t = {t:.3} outruns the multiplier-remainder rate"
        );
        worst = worst.max(gap);
    }
    assert!(
        worst <= 0.13,
        "worst tracking gap {worst:.4} exceeds the half-unit-time bound"
    );
}

#[test]
fn steepening_member_blows_up_consistently_across_resolutions() {
    let mut estimates = Vec::new();
    for &n in &[256usize, 512, 1024] {
        let g0 = field_from(n, |t| t.sin());
        let sym = SymmetrySpec::new(1, Some(0.0)).expect("valid symmetry");
        let config = SqgRunConfig {
            variant: SqgVariant::DeGregorio { a: -1.0 },
            dt: 1e-2,
            t_end: 10.0,
            sample_interval: 0.25,
            blowup_threshold: 12.0,
            ..SqgRunConfig::default()
        };
        let report = run_sqg(&g0, &sym, &config, |_| {}).expect("monitored run");
        assert_eq!(
            report.verdict,
            SqgVerdict::SuspectedBlowup,
            "n = {n}: expected a blow-up verdict, got {}",
            report.verdict
        );
        let t_star = report
            .blowup_time_estimate
            .expect("a steepening run must yield a singularity-time estimate");
        assert!(
            t_star > report.halt_time,
            "n = {n}: estimate {t_star:.4} is not past the halt time {:.4}",
            report.halt_time
        );
        estimates.push(t_star);
    }
    let (lo, hi) = estimates
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    assert!(
        hi / lo - 1.0 <= 0.10,
        "singularity-time estimates {estimates:?} spread beyond 10%"
    );
}

#[test]
fn contracting_transport_on_small_data_reports_no_blowup() {
    let g0 = field_from(512, |t| 0.1 * (2.0 * t).sin());
    let sym = SymmetrySpec::new(2, Some(0.0)).expect("valid symmetry");
    let config = SqgRunConfig {
        variant: SqgVariant::DeGregorio { a: 2.0 },
        dt: 1e-2,
        t_end: 10.0,
        sample_interval: 0.5,
        blowup_threshold: 12.0,
        ..SqgRunConfig::default()
    };
    let report = run_sqg(&g0, &sym, &config, |_| {}).expect("monitored run");
    assert_eq!(report.verdict, SqgVerdict::Resolved);
    assert!(report.blowup_time_estimate.is_none());
}

#[test]
#[ignore = "measurement probe: variant tracking gap"]
fn probe_variant_agreement() {
    let n = 512;
    let g0 = field_from(n, |t| (2.0 * t).sin());
    let dt = 1e-3;
    let steps = 500;
    let mut ge = g0.clone();
    let mut ga = g0.clone();
    let mut worst = 0.0f64;
    let mut worst_t = 0.0;
    for i in 0..steps {
        ge = step_sqg(&ge, dt, SqgVariant::Exact, true).expect("smooth data");
        ga = step_sqg(&ga, dt, SqgVariant::Approx, true).expect("smooth data");
        let gap = sup_diff(&ge, &ga);
        let t = (i + 1) as f64 * dt;
        if gap > worst {
            worst = gap;
            worst_t = t;
        }
        if i % 50 == 49 {
            println!(
                "t = {t:.3}: gap {gap:.5}, |exact| {:.4}, |approx| {:.4}",
                ge.linf_nodes(),
                ga.linf_nodes()
            );
        }
    }
    println!("worst gap {worst:.5} at t = {worst_t:.3}");
}

#[test]
#[ignore = "measurement probe: blow-up times across resolutions"]
fn probe_blowup_calibration() {
    for &n in &[256usize, 512, 1024] {
        let g0 = field_from(n, |t| t.sin());
        let sym = SymmetrySpec::new(1, Some(0.0)).expect("valid symmetry");
        let config = SqgRunConfig {
            variant: SqgVariant::DeGregorio { a: -1.0 },
            dt: 1e-2,
            t_end: 10.0,
            sample_interval: 0.25,
            blowup_threshold: 12.0,
            ..SqgRunConfig::default()
        };
        let mut rows = Vec::new();
        let report = run_sqg(&g0, &sym, &config, |s| rows.push(*s)).expect("monitored run");
        let last = rows.last().expect("samples");
        println!(
            "n = {n}: verdict {}, halt t = {:.4}, steps {}, T* = {:?}, last grad {:.2}, last tail_ratio {:.2e}",
            report.verdict, report.halt_time, report.steps, report.blowup_time_estimate,
            last.grad_linf, last.tail_ratio
        );
        for w in &report.warnings {
            println!("  warning: {w}");
        }
    }
    for &(n, amp) in &[(256usize, 0.2), (512, 0.2), (1024, 0.2), (512, 0.1)] {
        let g0 = field_from(n, move |t| amp * (2.0 * t).sin());
        let sym = SymmetrySpec::new(2, Some(0.0)).expect("valid symmetry");
        let config = SqgRunConfig {
            variant: SqgVariant::DeGregorio { a: 2.0 },
            dt: 1e-2,
            t_end: 10.0,
            sample_interval: 0.5,
            blowup_threshold: 12.0,
            ..SqgRunConfig::default()
        };
        let mut rows = Vec::new();
        let report = run_sqg(&g0, &sym, &config, |s| rows.push(*s)).expect("monitored run");
        let last = rows.last().expect("samples");
        println!(
            "a = 2, n = {n}, amp {amp}: verdict {}, halt t = {:.4}, last grad {:.3}, tail {:.2e}",
            report.verdict, report.halt_time, last.grad_linf, last.tail_ratio
        );
    }
}
