//! Command-line front end. Simulation subcommands land their output in run
//! directories; `lift` prints JSON lines to stdout. Exit codes: 0 on
//! success, 2 when the dynamics halt a run, 3 for malformed requests and io
//! failures.

use std::f64::consts::FRAC_PI_2;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::euler1d::InitialData;
use crate::lift2d::{kernel_decay_ratios, EulerLift, PlanePoint, SqgLift};
use crate::pointvortex::{detect_period, gap_hamiltonian, gap_step, OrbitPeriod, VortexSystem};

use super::config::{parse_modes, ExperimentConfig};
use super::execute::{execute_plan, RunOutcome};
use super::output::{output_root, Manifest, RunDir};
use super::presets::{execute_preset, PresetKind, PresetParams};
use super::{HarnessError, EXIT_CONFIG};

#[derive(Parser)]
#[command(
    name = "fluids",
    version,
    about = "Radially homogeneous fluid models on the circle: simulation runs, vortex orbits, and plane lifts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the transport model from a config file.
    Euler1d(ConfigRun),
    /// Run a stretching model (sqg-exact or sqg-approx) from a config file.
    Sqg(ConfigRun),
    /// Run the one-parameter stretching family from a config file.
    Degregorio(ConfigRun),
    /// Integrate weighted point vortices clustered on the circle.
    Vortex(VortexArgs),
    /// Integrate the two-gap system of three identical vortices.
    Gap3(Gap3Args),
    /// Evaluate the plane lift of a circle profile at chosen points.
    Lift(LiftArgs),
    /// Tabulate decay ratios of the symmetrized interaction kernel.
    KernelDecay(KernelDecayArgs),
    /// Run a canned experiment with pinned defaults.
    Preset(PresetArgs),
    /// Run every config file matching a glob pattern.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ConfigRun {
    /// Run config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output root.
    #[arg(long)]
    output_dir: Option<String>,
    /// Overrides the config's run-directory name.
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args)]
struct VortexArgs {
    /// Comma-separated vortex weights.
    #[arg(long, allow_hyphen_values = true)]
    weights: String,
    /// Comma-separated initial angles, strictly increasing, spanning less
    /// than a quarter circle.
    #[arg(long, allow_hyphen_values = true)]
    positions: String,
    #[arg(long)]
    t_end: f64,
    #[arg(long)]
    dt: f64,
    /// Cadence of trajectory rows; defaults to t_end / 100.
    #[arg(long)]
    sample_interval: Option<f64>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args)]
struct Gap3Args {
    /// First gap at t = 0.
    #[arg(long)]
    z1: Option<f64>,
    /// Second gap at t = 0.
    #[arg(long)]
    z2: Option<f64>,
    #[arg(long)]
    t_end: f64,
    #[arg(long)]
    dt: f64,
    /// Cadence of trajectory rows; defaults to t_end / 100.
    #[arg(long)]
    sample_interval: Option<f64>,
    /// Comma-separated energy levels in (1, 3/2]; each gets a period
    /// measurement from its diagonal starting point instead of a trajectory.
    #[arg(long)]
    scan: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args)]
struct LiftArgs {
    /// Circle profile as modes "k:cos_amp:sin_amp,...".
    #[arg(long)]
    modes: String,
    /// Evaluation point "x1,x2"; repeat for more points.
    #[arg(long = "at", value_name = "X1,X2", allow_hyphen_values = true)]
    at: Vec<String>,
    /// Lift the stretching-model scalar instead of the vorticity.
    #[arg(long)]
    sqg: bool,
    /// Grid size for the profile (power of two, at least 8).
    #[arg(long, default_value_t = 256)]
    n: usize,
}

#[derive(Args)]
struct KernelDecayArgs {
    /// Derivative order of the symmetrized kernel.
    #[arg(long)]
    m: u32,
    /// Comma-separated separations |y| / |x|.
    #[arg(long, default_value = "2,5,10,20,50,100")]
    separations: String,
    /// Probe directions per separation.
    #[arg(long, default_value_t = 12)]
    directions: usize,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args)]
struct PresetArgs {
    /// Which canned experiment: thm-growth, thm-boundary, or
    /// rotating-pattern.
    name: String,
    /// Growth-bump support width.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Growth-bump amplitude.
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    /// Pattern sector values.
    #[arg(long, allow_negative_numbers = true)]
    c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c2: Option<f64>,
    /// Pattern mollification scale.
    #[arg(long)]
    sigma: Option<f64>,
    /// Grid-size override for quick runs.
    #[arg(long)]
    n: Option<usize>,
    /// Step override.
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon override.
    #[arg(long)]
    t_end: Option<f64>,
    /// Sample-cadence override.
    #[arg(long)]
    sample_interval: Option<f64>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Glob pattern over config files, e.g. "configs/*.toml".
    pattern: String,
    /// Overrides each config's output root.
    #[arg(long)]
    output_dir: Option<String>,
}

/// Parses the arguments and runs the selected subcommand, returning the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Euler1d(args) => report(run_config_command(&args, &["euler1d"])?),
        Command::Sqg(args) => report(run_config_command(&args, &["sqg-exact", "sqg-approx"])?),
        Command::Degregorio(args) => report(run_config_command(&args, &["degregorio"])?),
        Command::Vortex(args) => report(run_vortex(&args)?),
        Command::Gap3(args) => report(run_gap3(&args)?),
        Command::Lift(args) => run_lift(&args),
        Command::KernelDecay(args) => report(run_kernel_decay(&args)?),
        Command::Preset(args) => {
            let kind: PresetKind = args.name.parse()?;
            let params = preset_params(&args);
            report(execute_preset(
                kind,
                &params,
                args.output_dir.clone(),
                args.run_name.clone(),
            )?)
        }
        Command::Sweep(args) => run_sweep(&args),
    }
}

/// Prints where the run landed and turns a dynamics halt into the physics
/// exit path.
fn report(outcome: RunOutcome) -> Result<(), HarnessError> {
    println!("run directory: {}", outcome.dir.display());
    println!("steps: {}", outcome.steps);
    if let Some(verdict) = &outcome.verdict {
        println!("verdict: {verdict}");
    }
    match outcome.abort {
        Some(msg) => Err(HarnessError::Physics(msg)),
        None => Ok(()),
    }
}

fn run_config_command(args: &ConfigRun, expected: &[&str]) -> Result<RunOutcome, HarnessError> {
    run_config_file(
        &args.config,
        expected,
        args.output_dir.clone(),
        args.run_name.clone(),
    )
}

fn run_config_file(
    path: &std::path::Path,
    expected: &[&str],
    output_dir: Option<String>,
    run_name: Option<String>,
) -> Result<RunOutcome, HarnessError> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&source)?;
    if !expected.contains(&cfg.model.as_str()) {
        return Err(HarnessError::Config(format!(
            "model: config declares {:?} but this subcommand runs {}",
            cfg.model,
            expected.join(" or ")
        )));
    }
    if output_dir.is_some() {
        cfg.output_dir = output_dir;
    }
    if run_name.is_some() {
        cfg.run_name = run_name;
    }
    let plan = cfg.validate()?;
    execute_plan(&plan, &source, |_, _, _, _| Ok(()))
}

fn preset_params(args: &PresetArgs) -> PresetParams {
    let mut params = PresetParams::default();
    if let Some(epsilon) = args.epsilon {
        params.epsilon = epsilon;
    }
    if let Some(amplitude) = args.amplitude {
        params.amplitude = amplitude;
    }
    if let Some(c1) = args.c1 {
        params.c1 = c1;
    }
    if let Some(c2) = args.c2 {
        params.c2 = c2;
    }
    if let Some(sigma) = args.sigma {
        params.sigma = sigma;
    }
    params.n = args.n;
    params.dt = args.dt;
    params.t_end = args.t_end;
    params.sample_interval = args.sample_interval;
    params
}

fn parse_float_list(spec: &str, field: &str) -> Result<Vec<f64>, HarnessError> {
    spec.split(',')
        .enumerate()
        .map(|(i, chunk)| {
            chunk.trim().parse::<f64>().map_err(|e| {
                HarnessError::Config(format!("{field}: entry {i} ({:?}): {e}", chunk.trim()))
            })
        })
        .collect()
}

fn check_march_args(t_end: f64, dt: f64, sample_interval: Option<f64>) -> Result<f64, HarnessError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(HarnessError::Config(format!(
            "t_end: horizon {t_end} must be positive"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(HarnessError::Config(format!("dt: step {dt} must be positive")));
    }
    let interval = sample_interval.unwrap_or(t_end / 100.0).max(dt);
    if !(interval > 0.0) {
        return Err(HarnessError::Config(format!(
            "sample_interval: cadence {interval} must be positive"
        )));
    }
    Ok(interval)
}

fn run_vortex(args: &VortexArgs) -> Result<RunOutcome, HarnessError> {
    let weights = parse_float_list(&args.weights, "weights")?;
    let positions = parse_float_list(&args.positions, "positions")?;
    let interval = check_march_args(args.t_end, args.dt, args.sample_interval)?;
    let mut system = VortexSystem::new(&positions, &weights)?;

    let row = |system: &VortexSystem| -> Vec<f64> {
        let mut row = vec![system.t()];
        row.extend_from_slice(system.positions());
        row.extend(system.gaps());
        row
    };

    let mut rows = vec![row(&system)];
    let mut min_gap = system.gaps().into_iter().fold(f64::INFINITY, f64::min);
    let mut abort = None;
    let samples = (args.t_end / interval).ceil() as usize;
    'march: for k in 1..=samples {
        let target = (k as f64 * interval).min(args.t_end);
        while system.t() < target - 1e-12 {
            let step = args.dt.min(target - system.t());
            if let Err(e) = system.step(step) {
                let mapped: HarnessError = e.into();
                match mapped {
                    HarnessError::Physics(msg) => {
                        abort = Some(msg);
                        break 'march;
                    }
                    other => return Err(other),
                }
            }
        }
        rows.push(row(&system));
        min_gap = system.gaps().into_iter().fold(min_gap, f64::min);
    }

    let span = {
        let p = system.positions();
        p[p.len() - 1] - p[0]
    };

    let mut header = vec!["t".to_string()];
    for i in 0..weights.len() {
        header.push(format!("pos{i}"));
    }
    for i in 0..weights.len().saturating_sub(1) {
        header.push(format!("gap{i}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut manifest = Manifest::new("pointvortex");
    manifest.n = Some(weights.len());
    manifest.dt = Some(args.dt);
    manifest.t_end = Some(args.t_end);
    manifest.abort = abort.clone();
    manifest.samples = rows.len();
    if min_gap.is_finite() {
        manifest.measured.insert("min_gap".into(), min_gap);
    }
    manifest.measured.insert("final_span".into(), span);

    let echo = format!(
        "# synthesized from command-line flags\nweights = {:?}\npositions = {:?}\nt_end = {}\ndt = {}\nsample_interval = {}\n",
        args.weights, args.positions, args.t_end, args.dt, interval
    );
    write_flag_run(
        args.output_dir.as_deref(),
        args.run_name.as_deref().unwrap_or("vortex"),
        &echo,
        &header_refs,
        &rows,
        manifest,
        abort,
    )
}

fn run_gap3(args: &Gap3Args) -> Result<RunOutcome, HarnessError> {
    let interval = check_march_args(args.t_end, args.dt, args.sample_interval)?;
    match &args.scan {
        Some(levels) => run_gap3_scan(args, levels),
        None => run_gap3_orbit(args, interval),
    }
}

fn run_gap3_orbit(args: &Gap3Args, interval: f64) -> Result<RunOutcome, HarnessError> {
    let (z1, z2) = match (args.z1, args.z2) {
        (Some(z1), Some(z2)) => (z1, z2),
        _ => {
            return Err(HarnessError::Config(
                "z1: gap3 needs --z1 and --z2 unless --scan is given".into(),
            ))
        }
    };
    if !(z1 > 0.0 && z2 > 0.0 && z1 + z2 < FRAC_PI_2) {
        return Err(HarnessError::Config(format!(
            "z1: gaps ({z1}, {z2}) must be positive with z1 + z2 < pi/2"
        )));
    }

    let z0 = [z1, z2];
    let energy0 = gap_hamiltonian(z0);
    let mut z = z0;
    let mut t = 0.0;
    let mut rows = vec![vec![t, z[0], z[1], energy0]];
    let mut next = interval;
    let mut abort = None;
    let mut energy_drift = 0.0f64;
    while t < args.t_end - 1e-12 {
        let step = args.dt.min(args.t_end - t);
        z = gap_step(z, step);
        t += step;
        if !(z[0].is_finite() && z[1].is_finite()) {
            abort = Some(format!("gap state lost finiteness at t = {t:.6}"));
            break;
        }
        if z[0] <= 0.0 || z[1] <= 0.0 || z[0] + z[1] >= FRAC_PI_2 {
            abort = Some(format!(
                "gaps ({:.6}, {:.6}) left the admissible triangle at t = {t:.6}",
                z[0], z[1]
            ));
            break;
        }
        energy_drift = energy_drift.max((gap_hamiltonian(z) - energy0).abs());
        if t >= next - 1e-12 {
            rows.push(vec![t, z[0], z[1], gap_hamiltonian(z)]);
            next += interval;
        }
    }

    let mut manifest = Manifest::new("gap3");
    manifest.dt = Some(args.dt);
    manifest.t_end = Some(args.t_end);
    manifest.abort = abort.clone();
    manifest.samples = rows.len();
    manifest.measured.insert("energy".into(), energy0);
    manifest.measured.insert("energy_drift".into(), energy_drift);
    if abort.is_none() {
        match detect_period(z0, args.dt, args.t_end) {
            OrbitPeriod::FixedPoint => {
                manifest.verdict = Some("fixed-point".into());
                manifest.measured.insert("period".into(), 0.0);
                println!("the starting point is the rest configuration (period 0)");
            }
            OrbitPeriod::Period(p) => {
                manifest.verdict = Some("periodic".into());
                manifest.measured.insert("period".into(), p);
                println!("orbit period: {p}");
            }
            OrbitPeriod::NotFound => {
                manifest.verdict = Some("no-return-found".into());
            }
        }
    }

    let echo = format!(
        "# synthesized from command-line flags\nz1 = {z1}\nz2 = {z2}\nt_end = {}\ndt = {}\nsample_interval = {interval}\n",
        args.t_end, args.dt
    );
    write_flag_run(
        args.output_dir.as_deref(),
        args.run_name.as_deref().unwrap_or("gap3"),
        &echo,
        &["t", "z1", "z2", "energy"],
        &rows,
        manifest,
        abort,
    )
}

fn run_gap3_scan(args: &Gap3Args, levels: &str) -> Result<RunOutcome, HarnessError> {
    let energies = parse_float_list(levels, "scan")?;
    let mut rows = Vec::with_capacity(energies.len());
    for &energy in &energies {
        let z0 = crate::pointvortex::gap_diagonal_point(energy)?;
        let period = match detect_period(z0, args.dt, args.t_end) {
            OrbitPeriod::FixedPoint => {
                println!("E = {energy}: rest configuration (period 0)");
                0.0
            }
            OrbitPeriod::Period(p) => {
                println!("E = {energy}: period {p}");
                p
            }
            OrbitPeriod::NotFound => {
                println!("E = {energy}: no return before t = {}", args.t_end);
                f64::NAN
            }
        };
        rows.push(vec![energy, z0[0], period]);
    }

    let mut manifest = Manifest::new("gap3");
    manifest.dt = Some(args.dt);
    manifest.t_end = Some(args.t_end);
    manifest.samples = rows.len();
    manifest
        .measured
        .insert("levels_scanned".into(), energies.len() as f64);

    let echo = format!(
        "# synthesized from command-line flags\nscan = {levels:?}\nt_end = {}\ndt = {}\n",
        args.t_end, args.dt
    );
    write_flag_run(
        args.output_dir.as_deref(),
        args.run_name.as_deref().unwrap_or("gap3-scan"),
        &echo,
        &["energy", "z_diagonal", "period"],
        &rows,
        manifest,
        None,
    )
}

fn run_kernel_decay(args: &KernelDecayArgs) -> Result<RunOutcome, HarnessError> {
    let separations = parse_float_list(&args.separations, "separations")?;
    if separations.is_empty() {
        return Err(HarnessError::Config(
            "separations: give at least one separation".into(),
        ));
    }
    let table = kernel_decay_ratios(args.m, &separations, args.directions)?;
    let rows: Vec<Vec<f64>> = table.iter().map(|r| vec![r.separation, r.ratio]).collect();

    let mut manifest = Manifest::new("kernel-decay");
    manifest.samples = rows.len();
    manifest
        .measured
        .insert("derivative_order".into(), args.m as f64);
    manifest
        .measured
        .insert("ratio_first".into(), table.first().map(|r| r.ratio).unwrap_or(f64::NAN));
    manifest
        .measured
        .insert("ratio_last".into(), table.last().map(|r| r.ratio).unwrap_or(f64::NAN));

    let run_name = args
        .run_name
        .clone()
        .unwrap_or_else(|| format!("kernel-decay-m{}", args.m));
    let echo = format!(
        "# synthesized from command-line flags\nm = {}\nseparations = {:?}\ndirections = {}\n",
        args.m, args.separations, args.directions
    );
    write_flag_run(
        args.output_dir.as_deref(),
        &run_name,
        &echo,
        &["separation", "ratio"],
        &rows,
        manifest,
        None,
    )
}

/// Shared tail of the flag-driven runs: write the directory, finish it, and
/// surface a recorded dynamics halt.
fn write_flag_run(
    output_dir: Option<&str>,
    run_name: &str,
    echo: &str,
    header: &[&str],
    rows: &[Vec<f64>],
    manifest: Manifest,
    abort: Option<String>,
) -> Result<RunOutcome, HarnessError> {
    let root = output_root(output_dir.map(std::path::Path::new));
    let dir = RunDir::create(&root, run_name)?;
    dir.write_text("config.toml", echo)?;
    dir.write_csv("trajectory.csv", header, rows)?;
    dir.write_json("manifest.json", &manifest)?;
    let verdict = manifest.verdict.clone();
    let finished = dir.finish()?;
    Ok(RunOutcome {
        dir: finished,
        steps: rows.len().saturating_sub(1),
        verdict,
        abort,
    })
}

fn run_lift(args: &LiftArgs) -> Result<(), HarnessError> {
    if !(args.n >= 8 && args.n.is_power_of_two()) {
        return Err(HarnessError::Config(format!(
            "n: grid size {} must be a power of two, at least 8",
            args.n
        )));
    }
    if args.at.is_empty() {
        return Err(HarnessError::Config(
            "at: give at least one evaluation point".into(),
        ));
    }
    let profile = InitialData::from_modes(&parse_modes(&args.modes)?).sample(args.n);
    let mut points = Vec::with_capacity(args.at.len());
    for spec in &args.at {
        let coords = parse_float_list(spec, "at")?;
        if coords.len() != 2 {
            return Err(HarnessError::Config(format!(
                "at: point {spec:?} is not of the form x1,x2"
            )));
        }
        points.push(PlanePoint::from_cartesian(coords[0], coords[1]));
    }

    if args.sqg {
        let lift = SqgLift::new(&profile, 0.5)?;
        for p in &points {
            let v = lift.at(p);
            let line = serde_json::json!({
                "x1": p.x1(),
                "x2": p.x2(),
                "theta": v.theta_scalar,
                "u1": v.u[0],
                "u2": v.u[1],
                "psi": v.psi,
            });
            println!("{line}");
        }
    } else {
        let lift = EulerLift::new(&profile);
        for p in &points {
            let v = lift.at(p);
            let line = serde_json::json!({
                "x1": p.x1(),
                "x2": p.x2(),
                "omega": v.omega,
                "u1": v.u[0],
                "u2": v.u[1],
                "psi": v.psi,
            });
            println!("{line}");
        }
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), HarnessError> {
    let paths: Vec<PathBuf> = glob::glob(&args.pattern)
        .map_err(|e| HarnessError::Config(format!("sweep: bad pattern {:?}: {e}", args.pattern)))?
        .filter_map(Result::ok)
        .collect();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!(
            "sweep: no config files match {:?}",
            args.pattern
        )));
    }

    let all_models = ["euler1d", "sqg-exact", "sqg-approx", "degregorio"];
    let mut ok = 0usize;
    let mut physics = 0usize;
    let mut invalid = 0usize;
    for path in &paths {
        match run_config_file(path, &all_models, args.output_dir.clone(), None) {
            Ok(outcome) => match outcome.abort {
                None => {
                    ok += 1;
                    println!("ok {} -> {}", path.display(), outcome.dir.display());
                }
                Some(msg) => {
                    physics += 1;
                    println!("halted {} -> {}: {msg}", path.display(), outcome.dir.display());
                }
            },
            Err(e) => match e {
                HarnessError::Physics(msg) => {
                    physics += 1;
                    println!("halted {}: {msg}", path.display());
                }
                other => {
                    invalid += 1;
                    println!("failed {}: {other}", path.display());
                }
            },
        }
    }
    println!(
        "swept {} configs: {ok} ok, {physics} halted, {invalid} invalid",
        paths.len()
    );
    if invalid > 0 {
        Err(HarnessError::Config(format!(
            "sweep: {invalid} configs failed to run"
        )))
    } else if physics > 0 {
        Err(HarnessError::Physics(format!(
            "sweep: the dynamics halted {physics} runs"
        )))
    } else {
        Ok(())
    }
}
