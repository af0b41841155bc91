//! Plan executors: run a validated plan, stream diagnostics into a run
//! directory, and report how the run ended. A run that the dynamics halt
//! early still gets its full output directory; the caller decides what the
//! halt means for the process exit code.

use std::path::PathBuf;
use std::time::Instant;

use crate::circle_field::CircleField;
use crate::euler1d::{self, EulerRunConfig, EulerSample, StepOptions};
use crate::sqg1d::{run_sqg, SqgRunConfig, SqgSample};

use super::config::{Model, RunPlan};
use super::output::{output_root, Manifest, RunDir};
use super::HarnessError;

/// Trajectory columns of a transport-model run.
pub const EULER_COLUMNS: [&str; 9] = [
    "t",
    "linf",
    "l1",
    "mean",
    "grad_linf",
    "hprime0",
    "hprime_quarter",
    "spectral_tail",
    "stretch_integral",
];

/// Trajectory columns of a stretching-model run.
pub const SQG_COLUMNS: [&str; 8] = [
    "t",
    "linf",
    "l1",
    "mean",
    "grad_linf",
    "spectral_tail",
    "bkm_integral",
    "tail_ratio",
];

/// How an executed run ended, with its output location.
#[derive(Debug)]
pub struct RunOutcome {
    /// Finished run directory.
    pub dir: PathBuf,
    /// Steps completed.
    pub steps: usize,
    /// Stretching-model verdict, when the model produces one.
    pub verdict: Option<String>,
    /// Set when the dynamics halted the run early.
    pub abort: Option<String>,
}

fn euler_row(s: &EulerSample) -> Vec<f64> {
    vec![
        s.t,
        s.linf,
        s.l1,
        s.mean,
        s.grad_linf,
        s.hprime0,
        s.hprime_quarter,
        s.spectral_tail,
        s.stretch_integral,
    ]
}

fn sqg_row(s: &SqgSample) -> Vec<f64> {
    vec![
        s.t,
        s.linf,
        s.l1,
        s.mean,
        s.grad_linf,
        s.spectral_tail,
        s.bkm_integral,
        s.tail_ratio,
    ]
}

fn base_manifest(plan: &RunPlan) -> Manifest {
    let (model, stepper) = match plan.model {
        Model::Euler1d(method) => (
            "euler1d".to_string(),
            Some(
                match method {
                    euler1d::SteppingMethod::PseudoSpectral => "pseudospectral",
                    euler1d::SteppingMethod::SemiLagrangian => "semi-lagrangian",
                }
                .to_string(),
            ),
        ),
        Model::Sqg(variant) => (variant.to_string(), None),
    };
    let mut manifest = Manifest::new(&model);
    manifest.stepper = stepper;
    manifest.n = Some(plan.n);
    manifest.dt = Some(plan.dt);
    manifest.t_end = Some(plan.t_end);
    manifest.seed = plan.seed;
    manifest
}

/// Runs a plan and writes the run directory. The `hook` sees the collected
/// samples and field snapshots before the manifest lands, so callers can add
/// fits and derived measurements.
pub fn execute_plan(
    plan: &RunPlan,
    echo: &str,
    hook: impl FnOnce(
        &[EulerSample],
        &[(f64, CircleField)],
        &mut Manifest,
        &RunDir,
    ) -> Result<(), HarnessError>,
) -> Result<RunOutcome, HarnessError> {
    match plan.model {
        Model::Euler1d(_) => execute_euler(plan, echo, hook),
        Model::Sqg(_) => execute_sqg(plan, echo),
    }
}

fn execute_euler(
    plan: &RunPlan,
    echo: &str,
    hook: impl FnOnce(
        &[EulerSample],
        &[(f64, CircleField)],
        &mut Manifest,
        &RunDir,
    ) -> Result<(), HarnessError>,
) -> Result<RunOutcome, HarnessError> {
    let Model::Euler1d(method) = plan.model else {
        return Err(HarnessError::Config("plan is not a transport run".into()));
    };
    let root = output_root(plan.output_dir.as_deref().map(std::path::Path::new));
    let dir = RunDir::create(&root, &plan.run_name)?;
    dir.write_text("config.toml", echo)?;

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
    let start = Instant::now();
    let mut samples: Vec<EulerSample> = Vec::new();
    let mut snapshots: Vec<(f64, CircleField)> = Vec::new();
    let report = euler1d::run(&plan.initial, plan.n, &plan.symmetry, &config, |s, field| {
        samples.push(*s);
        snapshots.push((s.t, field.clone()));
    });
    let wall = start.elapsed().as_secs_f64();

    let rows: Vec<Vec<f64>> = samples.iter().map(euler_row).collect();
    dir.write_csv("trajectory.csv", &EULER_COLUMNS, &rows)?;

    let mut manifest = base_manifest(plan);
    manifest.warnings = report.warnings.clone();
    manifest.abort = report.abort.as_ref().map(|a| a.to_string());
    manifest.steps = report.steps;
    manifest.samples = samples.len();
    manifest.wall_time_seconds = wall;
    hook(&samples, &snapshots, &mut manifest, &dir)?;
    dir.write_json("manifest.json", &manifest)?;
    let finished = dir.finish()?;

    Ok(RunOutcome {
        dir: finished,
        steps: report.steps,
        verdict: None,
        abort: report.abort.map(|a| a.to_string()),
    })
}

fn execute_sqg(plan: &RunPlan, echo: &str) -> Result<RunOutcome, HarnessError> {
    let Model::Sqg(variant) = plan.model else {
        return Err(HarnessError::Config("plan is not a stretching run".into()));
    };
    let root = output_root(plan.output_dir.as_deref().map(std::path::Path::new));
    let dir = RunDir::create(&root, &plan.run_name)?;
    dir.write_text("config.toml", echo)?;

    let config = SqgRunConfig {
        variant,
        dt: plan.dt,
        t_end: plan.t_end,
        sample_interval: plan.sample_interval,
        cfl: plan.cfl,
        blowup_threshold: plan.blowup_threshold,
        dealias: plan.dealias,
    };
    let initial = plan.initial.sample(plan.n);
    let start = Instant::now();
    let mut samples: Vec<SqgSample> = Vec::new();
    let result = run_sqg(&initial, &plan.symmetry, &config, |s| samples.push(*s));
    let wall = start.elapsed().as_secs_f64();

    let mut manifest = base_manifest(plan);
    manifest.samples = samples.len();
    manifest.wall_time_seconds = wall;

    let (outcome, manifest) = match result {
        Ok(report) => {
            manifest.warnings = report.warnings.clone();
            manifest.verdict = Some(report.verdict.to_string());
            manifest.steps = report.steps;
            manifest.measured.insert("halt_time".into(), report.halt_time);
            if let Some(estimate) = report.blowup_time_estimate {
                manifest
                    .measured
                    .insert("blowup_time_estimate".into(), estimate);
            }
            (
                RunOutcome {
                    dir: PathBuf::new(),
                    steps: report.steps,
                    verdict: Some(report.verdict.to_string()),
                    abort: None,
                },
                manifest,
            )
        }
        Err(e) if e.is_physics() => {
            let mut manifest = manifest;
            manifest.abort = Some(e.to_string());
            (
                RunOutcome {
                    dir: PathBuf::new(),
                    steps: 0,
                    verdict: None,
                    abort: Some(e.to_string()),
                },
                manifest,
            )
        }
        Err(e) => {
            // A malformed run has nothing worth keeping on disk.
            let _ = std::fs::remove_dir_all(dir.path());
            return Err(e.into());
        }
    };

    let rows: Vec<Vec<f64>> = samples.iter().map(sqg_row).collect();
    dir.write_csv("trajectory.csv", &SQG_COLUMNS, &rows)?;
    dir.write_json("manifest.json", &manifest)?;
    let finished = dir.finish()?;

    Ok(RunOutcome {
        dir: finished,
        ..outcome
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn run_in_temp(source: &str) -> (tempfile::TempDir, RunOutcome) {
        let tmp = tempfile::tempdir().expect("tempdir");
        let source = format!(
            "{source}output_dir = {:?}\n",
            tmp.path().to_str().expect("utf-8 temp path")
        );
        let cfg = ExperimentConfig::from_toml(&source).expect("valid toml");
        let plan = cfg.validate().expect("valid plan");
        let outcome =
            execute_plan(&plan, &source, |_, _, _, _| Ok(())).expect("run succeeds");
        (tmp, outcome)
    }

    #[test]
    fn a_transport_run_writes_the_full_directory_schema() {
        let (_tmp, outcome) = run_in_temp(
            "model = \"euler1d\"\ninitial = \"modes\"\nmodes = \"0:1:0,4:0.25:0\"\nn = 64\ndt = 0.02\nt_end = 0.2\n",
        );
        assert!(outcome.abort.is_none());
        let names: Vec<String> = std::fs::read_dir(&outcome.dir)
            .expect("run dir")
            .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
            .collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["config.toml", "manifest.json", "trajectory.csv"]);
        let csv = std::fs::read_to_string(outcome.dir.join("trajectory.csv")).expect("csv");
        assert!(csv.starts_with("t,linf,l1,mean,grad_linf"));
        let manifest = std::fs::read_to_string(outcome.dir.join("manifest.json")).expect("json");
        assert!(manifest.contains("\"model\": \"euler1d\""));
    }

    #[test]
    fn a_stretching_run_records_its_verdict() {
        let (_tmp, outcome) = run_in_temp(
            "model = \"sqg-approx\"\ninitial = \"modes\"\nmodes = \"2:0:0.1\"\nn = 64\ndt = 0.01\nt_end = 0.3\nsymmetry_m = 2\nodd_axis = 0.0\n",
        );
        assert_eq!(outcome.verdict.as_deref(), Some("resolved"));
        let manifest = std::fs::read_to_string(outcome.dir.join("manifest.json")).expect("json");
        assert!(manifest.contains("\"verdict\": \"resolved\""));
        assert!(manifest.contains("halt_time"));
    }
}
