//! Temporary calibration probes for the full-scale preset runs.

use std::time::Instant;

use fluids::harness::presets::{run_preset, PresetKind, PresetParams};

#[test]
#[ignore]
fn probe_growth_full_scale() {
    let start = Instant::now();
    let report = run_preset(PresetKind::ThmGrowth, &PresetParams::default()).expect("runs");
    println!("growth wall time: {:.1} s", start.elapsed().as_secs_f64());
    println!("abort: {:?}", report.abort);
    println!("warnings: {:?}", report.warnings);
    println!("measured: {:#?}", report.measured);
    println!("fit: {:?}", report.fit);
    let last = report.samples.last().unwrap();
    println!(
        "final: t = {}, grad = {}, l1 = {}, tail = {}",
        last.t, last.grad_linf, last.l1, last.spectral_tail
    );
    for s in report.samples.iter().step_by(10) {
        println!(
            "t = {:6.2}  m = {:.6e}  grad = {:.6e}  hprime0 = {:+.4e}",
            s.t,
            s.l1 / 8.0,
            s.grad_linf,
            s.hprime0
        );
    }
}

#[test]
#[ignore]
fn probe_boundary_full_scale() {
    let start = Instant::now();
    let report = run_preset(PresetKind::ThmBoundary, &PresetParams::default()).expect("runs");
    println!("boundary wall time: {:.1} s", start.elapsed().as_secs_f64());
    println!("abort: {:?}", report.abort);
    println!("warnings: {:?}", report.warnings);
    println!("measured: {:#?}", report.measured);
    println!("fit: {:?}", report.fit);
    for s in report.samples.iter().step_by(8) {
        println!(
            "t = {:6.2}  grad = {:.6e}  hprime0 = {:+.4e}  hq = {:+.4e}",
            s.t, s.grad_linf, s.hprime0, s.hprime_quarter
        );
    }
}

#[test]
#[ignore]
fn probe_boundary_defect_series() {
    use fluids::euler1d::{self, EulerRunConfig, StepOptions};
    use fluids::harness::config::Model;
    use fluids::harness::presets::{plateau_defect, preset_config};

    let plan = preset_config(PresetKind::ThmBoundary, &PresetParams::default())
        .validate()
        .expect("valid");
    let Model::Euler1d(method) = plan.model else {
        panic!("transport preset");
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
    let mut series: Vec<(f64, f64)> = Vec::new();
    euler1d::run(&plan.initial, plan.n, &plan.symmetry, &config, |s, field| {
        series.push((s.t, plateau_defect(field)));
    });
    for w in series.windows(2) {
        if w[1].1 > w[0].1 {
            println!(
                "increase at t = {:.2} -> {:.2}: {:.6e} -> {:.6e} (delta {:.3e})",
                w[0].0,
                w[1].0,
                w[0].1,
                w[1].1,
                w[1].1 - w[0].1
            );
        }
    }
    for (t, d) in series.iter().step_by(4) {
        println!("t = {t:6.2}  defect = {d:.6e}");
    }
}

#[test]
#[ignore]
fn probe_pattern_full_scale() {
    let start = Instant::now();
    let report = run_preset(PresetKind::RotatingPattern, &PresetParams::default()).expect("runs");
    println!("pattern wall time: {:.1} s", start.elapsed().as_secs_f64());
    println!("abort: {:?}", report.abort);
    println!("measured: {:#?}", report.measured);
}
