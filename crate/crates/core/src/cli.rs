//! Command-line front end.
//!
//! Every subcommand is a reproducible batch run: the fully resolved
//! configuration is echoed as `#` comments at the top of each CSV output
//! and all randomness sits behind `--seed`. An optional TOML config file
//! supplies defaults; command-line flags override file values.
//!
//! Exit codes: 0 success, 1 runtime failure or failed check, 2 validation
//! error, 3 inconclusive decay verdict.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::decay::{run_decay, stability_probe, DecayClass, DecayExperimentSpec, InitialData};
use crate::dispersion::{
    asymptotics_report, dispersion_sweep, solve_dispersion, CouplingParams, DEFAULT_TOL,
};
use crate::eigenbasis::{load_external_eigenvalues, rectangle_eigensequence, Eigenpair};
use crate::error::{Error, Result};
use crate::fields::{assemble, export_snapshot, ModalSource};
use crate::periodic::{initial_data, residual_check, PeriodicModeSpec};
use crate::simulator::{run, BottomCondition, GridSpec, ProbeSet, TimeSeries};

#[derive(Parser)]
#[command(
    name = "tubewave",
    version,
    about = "Modal analysis and time-domain experiments for a gas column over an elastic plate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the dispersion system over a mode sweep and emit the
    /// asymptotics table as CSV.
    Dispersion(DispersionArgs),
    /// Check the closed-form periodic solution: analytic residuals plus
    /// one simulated period against the exact solution.
    PeriodicCheck(PeriodicCheckArgs),
    /// Run a single mode simulation and emit the probe time series.
    Simulate(SimulateArgs),
    /// Local-energy decay experiment with a rigid or elastic bottom.
    Decay(DecayArgs),
    /// Lyapunov stability probe across a perturbation sweep.
    Stability(StabilityArgs),
    /// Assemble and export multi-mode field snapshots.
    ExportField(ExportFieldArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config file; flags override file values.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Seed for all pseudorandomness (residual sample clouds).
    #[arg(long)]
    seed: Option<u64>,
    /// Thread count for concurrent independent experiments.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DispersionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Gas-plate interaction intensity (> 0).
    #[arg(long)]
    nu: Option<f64>,
    /// Number of rectangle eigenvalues to sweep.
    #[arg(long)]
    modes: Option<usize>,
    /// External eigenvalue table (one positive decimal per line).
    #[arg(long)]
    eigenvalues: Option<PathBuf>,
    /// Relative residual tolerance, in (0, 1e-6].
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct PeriodicCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    nu: Option<f64>,
    /// Rectangle mode as "m,n".
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    /// Residual sample cloud size.
    #[arg(long)]
    samples: Option<usize>,
    /// Shift alpha off the dispersion root to demonstrate sensitivity.
    #[arg(long)]
    perturb_alpha: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    nu: Option<f64>,
    /// Rectangle mode as "m,n".
    #[arg(long)]
    mode: Option<String>,
    /// Bottom condition: "elastic" or "rigid".
    #[arg(long)]
    bottom: Option<String>,
    /// Initial data: "periodic" or "gaussian".
    #[arg(long)]
    initial: Option<String>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long)]
    center: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Plate damping coefficient (>= 0).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Local-energy window radii, comma separated.
    #[arg(long = "R")]
    r: Option<String>,
    /// Sample every this many steps.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    bottom: Option<String>,
    /// Initial data: "gaussian", "periodic" or "perturbed-periodic".
    #[arg(long)]
    initial: Option<String>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long)]
    center: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Local-energy window radius.
    #[arg(long = "R")]
    r: Option<String>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    /// Perturbation sizes, comma separated.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon in multiples of the mode period.
    #[arg(long)]
    periods: Option<f64>,
}

#[derive(Args)]
struct ExportFieldArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    nu: Option<f64>,
    /// Rectangle modes as "m,n;m,n;...".
    #[arg(long)]
    modes: Option<String>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    /// Snapshot time.
    #[arg(long)]
    t: Option<f64>,
    /// Plate grid as "n1,n2".
    #[arg(long)]
    plate_grid: Option<String>,
    /// Gas z samples, comma separated.
    #[arg(long)]
    z: Option<String>,
}

/// Flat optional key set accepted in a TOML config file. Keys mirror the
/// long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    nu: Option<f64>,
    mode: Option<String>,
    modes: Option<toml::Value>,
    eigenvalues: Option<PathBuf>,
    tol: Option<f64>,
    #[serde(rename = "A")]
    a: Option<f64>,
    #[serde(rename = "B")]
    b: Option<f64>,
    #[serde(rename = "L")]
    l: Option<f64>,
    nz: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    #[serde(rename = "R")]
    r: Option<String>,
    gamma: Option<f64>,
    epsilon: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    center: Option<f64>,
    width: Option<f64>,
    amplitude: Option<f64>,
    stride: Option<usize>,
    samples: Option<usize>,
    bottom: Option<String>,
    initial: Option<String>,
    t: Option<f64>,
    plate_grid: Option<String>,
    z: Option<String>,
    perturb_alpha: Option<f64>,
    periods: Option<f64>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    Error::Validation(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| Error::Validation(format!("config {}: {e}", p.display())))
            }
        }
    }

    fn modes_count(&self) -> Result<Option<usize>> {
        match &self.modes {
            None => Ok(None),
            Some(toml::Value::Integer(n)) if *n >= 1 => Ok(Some(*n as usize)),
            Some(other) => Err(Error::Validation(format!(
                "config key `modes` must be a positive integer, got {other}"
            ))),
        }
    }
}

/// Tracks resolved configuration for the `#` comment echo.
struct Echo {
    entries: Vec<(String, String)>,
}

impl Echo {
    fn new() -> Echo {
        Echo {
            entries: Vec::new(),
        }
    }

    fn put<T: Display>(&mut self, key: &str, value: T) -> T {
        self.entries.push((key.to_string(), value.to_string()));
        value
    }

    fn header(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("# {k} = {v}\n"))
            .collect()
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn parse_mode(text: &str) -> Result<(u32, u32)> {
    let parts: Vec<&str> = text.split(',').collect();
    let err = || {
        Error::Validation(format!(
            "mode must be \"m,n\" with m, n >= 1, got \"{text}\""
        ))
    };
    if parts.len() != 2 {
        return Err(err());
    }
    let m: u32 = parts[0].trim().parse().map_err(|_| err())?;
    let n: u32 = parts[1].trim().parse().map_err(|_| err())?;
    if m == 0 || n == 0 {
        return Err(err());
    }
    Ok((m, n))
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("{what}: not a number: \"{s}\"")))
        })
        .collect()
}

fn rectangle_pair(m: u32, n: u32) -> Eigenpair {
    Eigenpair {
        index: 1,
        lambda: (m as f64).powi(2) + (n as f64).powi(2),
        descriptor: crate::eigenbasis::ModeDescriptor::Rectangle { m, n },
    }
}

fn out_dir(common: &CommonArgs, file: &FileConfig, echo: &mut Echo) -> Result<PathBuf> {
    let dir = pick(common.out.clone(), file.out.clone(), PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    echo.put("out", dir.display().to_string());
    Ok(dir)
}

fn init_jobs(common: &CommonArgs, file: &FileConfig) {
    if let Some(jobs) = common.jobs.or(file.jobs) {
        // Errors if a global pool already exists (e.g. in tests); the
        // default pool is fine then.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

fn write_series_csv(path: &Path, header: &str, series: &TimeSeries) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    w.write_all(header.as_bytes())?;
    writeln!(w, "t,{}", series.columns.join(","))?;
    for (t, values) in &series.records {
        write!(w, "{t}")?;
        for v in values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Adjusts `dt` so that an integer number of steps lands exactly on
/// `t_end`, never increasing the step beyond the requested one.
fn snap_dt(dt: f64, t_end: f64) -> f64 {
    let n = (t_end / dt).ceil().max(1.0);
    t_end / n
}

fn cmd_dispersion(args: DispersionArgs) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    init_jobs(&args.common, &file);
    let mut echo = Echo::new();
    echo.put("subcommand", "dispersion");
    let nu = echo.put("nu", pick(args.nu, file.nu, 1.0));
    let tol = echo.put("tol", pick(args.tol, file.tol, DEFAULT_TOL));

    let eigenvalues = args.eigenvalues.clone().or(file.eigenvalues.clone());
    let seq = match &eigenvalues {
        Some(path) => {
            echo.put("eigenvalues", path.display().to_string());
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
            load_external_eigenvalues(&text)?
        }
        None => {
            let modes = echo.put("modes", pick(args.modes, file.modes_count()?, 50));
            if modes == 0 {
                return Err(Error::Validation("--modes must be >= 1".into()));
            }
            rectangle_eigensequence(modes)
        }
    };
    let out = out_dir(&args.common, &file, &mut echo)?;

    let roots = dispersion_sweep(&seq, nu, tol)?;
    let report = asymptotics_report(&roots);

    let path = out.join("dispersion.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    w.write_all(echo.header().as_bytes())?;
    writeln!(
        w,
        "# omega_dev_decreasing = {}\n# alpha_dev_decreasing = {}",
        report.omega_dev_decreasing, report.alpha_dev_decreasing
    )?;
    writeln!(
        w,
        "k,lambda,alpha,omega,omega2_minus_lambda,alpha_lambda_minus_nu"
    )?;
    for ((pair, root), row) in seq.iter().zip(&roots).zip(&report.rows) {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            pair.index,
            pair.lambda,
            root.alpha(),
            root.omega(),
            row.omega2_minus_lambda,
            row.alpha_lambda_minus_nu
        )?;
    }
    w.flush()?;
    println!(
        "dispersion: {} modes -> {} (tail deviations decreasing: omega {}, alpha {})",
        roots.len(),
        path.display(),
        report.omega_dev_decreasing,
        report.alpha_dev_decreasing
    );
    Ok(0)
}

fn cmd_periodic_check(args: PeriodicCheckArgs) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    init_jobs(&args.common, &file);
    let mut echo = Echo::new();
    echo.put("subcommand", "periodic-check");
    let nu = echo.put("nu", pick(args.nu, file.nu, 1.0));
    let mode_text = pick(args.mode, file.mode.clone(), "1,1".to_string());
    let (m, n) = parse_mode(&mode_text)?;
    echo.put("mode", format!("{m},{n}"));
    let lambda = (m as f64).powi(2) + (n as f64).powi(2);
    echo.put("lambda", lambda);
    let a = echo.put("A", pick(args.a, file.a, 1.0));
    let b = echo.put("B", pick(args.b, file.b, 0.0));
    let samples = echo.put("samples", pick(args.samples, file.samples, 1000));
    let seed = echo.put("seed", pick(args.common.seed, file.seed, 0));
    let perturb = echo.put(
        "perturb_alpha",
        pick(args.perturb_alpha, file.perturb_alpha, 0.0),
    );
    let l = echo.put("L", pick(args.l, file.l, 200.0));
    let nz = echo.put("nz", pick(args.nz, file.nz, 20_000));
    let dt_req = echo.put("dt", pick(args.dt, file.dt, 0.008));
    let _out = out_dir(&args.common, &file, &mut echo)?;

    let params = CouplingParams::new(nu, lambda)?;
    let root = solve_dispersion(params, DEFAULT_TOL)?.with_alpha_offset(perturb);
    let spec = PeriodicModeSpec::new(root, a, b);

    let residual = residual_check(&spec, samples.max(1), seed);
    let residual_bound = 1e-10 * (1.0 + a.abs() + b.abs()) * lambda * lambda;

    let period = spec.period();
    let dt = snap_dt(dt_req, period);
    let grid = GridSpec::new(l, nz, dt, period, lambda)?;
    let initial = initial_data(&spec, &grid);
    let mut state = initial.clone();
    let mut accel = vec![0.0; grid.nodes()];
    let n_steps = (period / dt).round() as usize;
    for _ in 0..n_steps {
        crate::simulator::advance(&mut state, &grid, BottomCondition::Elastic, &mut accel)?;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..grid.nodes() {
        let d = state.phi[j] - initial.phi[j];
        num += d * d;
        den += initial.phi[j] * initial.phi[j];
    }
    let period_error = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    let period_bound = 1e-3;

    let pass = residual <= residual_bound && period_error <= period_bound;
    for (k, v) in &echo.entries {
        println!("# {k} = {v}");
    }
    println!("max_residual = {residual} (bound {residual_bound})");
    println!("period_return_error = {period_error} (bound {period_bound})");
    println!("verdict = {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    init_jobs(&args.common, &file);
    let mut echo = Echo::new();
    echo.put("subcommand", "simulate");
    let nu = echo.put("nu", pick(args.nu, file.nu, 1.0));
    let mode_text = pick(args.mode, file.mode.clone(), "1,1".to_string());
    let (m, n) = parse_mode(&mode_text)?;
    echo.put("mode", format!("{m},{n}"));
    let lambda = (m as f64).powi(2) + (n as f64).powi(2);
    echo.put("lambda", lambda);
    let bottom_text = pick(args.bottom, file.bottom.clone(), "elastic".to_string());
    let bottom = parse_bottom(&bottom_text)?;
    echo.put("bottom", &bottom_text);
    let initial_kind = pick(args.initial, file.initial.clone(), "periodic".to_string());
    echo.put("initial", &initial_kind);
    let gamma = echo.put("gamma", pick(args.gamma, file.gamma, 0.0));
    let l = echo.put("L", pick(args.l, file.l, 200.0));
    let nz = echo.put("nz", pick(args.nz, file.nz, 20_000));
    let dt = echo.put("dt", pick(args.dt, file.dt, 0.008));
    let t_end = echo.put("t_end", pick(args.t_end, file.t_end, 50.0));
    let r_text = pick(args.r, file.r.clone(), "10".to_string());
    let r_values = parse_f64_list(&r_text, "--R")?;
    echo.put("R", &r_text);
    let stride = echo.put("stride", pick(args.stride, file.stride, 0));

    let params = CouplingParams::new(nu, lambda)?;
    let grid = GridSpec::new(l, nz, dt, t_end, lambda)?;
    let mut state = match initial_kind.as_str() {
        "periodic" => {
            let a = echo.put("A", pick(args.a, file.a, 1.0));
            let b = echo.put("B", pick(args.b, file.b, 0.0));
            let root = solve_dispersion(params, DEFAULT_TOL)?;
            initial_data(&PeriodicModeSpec::new(root, a, b), &grid)
        }
        "gaussian" => {
            let center = echo.put("center", pick(args.center, file.center, 5.0));
            let width = echo.put("width", pick(args.width, file.width, 0.5));
            let amplitude = echo.put("amplitude", pick(args.amplitude, file.amplitude, 1.0));
            let mut s = crate::simulator::ModeState::zero(params, gamma, &grid);
            for j in 0..grid.nodes() {
                let arg = (grid.z(j) - center) / width;
                s.phi[j] = amplitude * (-0.5 * arg * arg).exp();
            }
            s
        }
        other => {
            return Err(Error::Validation(format!(
                "initial data must be \"periodic\" or \"gaussian\", got \"{other}\""
            )))
        }
    };
    state.gamma = gamma;
    let out = out_dir(&args.common, &file, &mut echo)?;

    let n_steps = (t_end / dt).round() as usize;
    let stride = if stride == 0 {
        (n_steps / 400).max(1)
    } else {
        stride
    };
    let series = run(state, &grid, bottom, &ProbeSet::new(stride, r_values))?;
    let path = out.join("series.csv");
    write_series_csv(&path, &echo.header(), &series)?;
    println!(
        "simulate: {} samples -> {}",
        series.records.len(),
        path.display()
    );
    Ok(0)
}

fn parse_bottom(text: &str) -> Result<BottomCondition> {
    match text {
        "elastic" => Ok(BottomCondition::Elastic),
        "rigid" => Ok(BottomCondition::Rigid),
        other => Err(Error::Validation(format!(
            "bottom must be \"elastic\" or \"rigid\", got \"{other}\""
        ))),
    }
}

fn cmd_decay(args: DecayArgs) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    init_jobs(&args.common, &file);
    let mut echo = Echo::new();
    echo.put("subcommand", "decay");
    let nu = echo.put("nu", pick(args.nu, file.nu, 1.0));
    let mode_text = pick(args.mode, file.mode.clone(), "1,1".to_string());
    let (m, n) = parse_mode(&mode_text)?;
    echo.put("mode", format!("{m},{n}"));
    let lambda = (m as f64).powi(2) + (n as f64).powi(2);
    echo.put("lambda", lambda);
    let bottom_text = pick(args.bottom, file.bottom.clone(), "rigid".to_string());
    let bottom = parse_bottom(&bottom_text)?;
    echo.put("bottom", &bottom_text);
    let default_initial = match bottom {
        BottomCondition::Rigid => "gaussian",
        BottomCondition::Elastic => "periodic",
    };
    let initial_kind = pick(
        args.initial,
        file.initial.clone(),
        default_initial.to_string(),
    );
    echo.put("initial", &initial_kind);
    let gamma = echo.put("gamma", pick(args.gamma, file.gamma, 0.0));
    let l = echo.put("L", pick(args.l, file.l, 200.0));
    let nz = echo.put("nz", pick(args.nz, file.nz, 20_000));
    let dt = echo.put("dt", pick(args.dt, file.dt, 0.008));
    let t_end = echo.put("t_end", pick(args.t_end, file.t_end, 150.0));
    let r_text = pick(args.r, file.r.clone(), "10".to_string());
    let r: f64 = r_text
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("--R: not a number: \"{r_text}\"")))?;
    echo.put("R", r);

    let params = CouplingParams::new(nu, lambda)?;
    let initial = match initial_kind.as_str() {
        "gaussian" => InitialData::Localized {
            center: echo.put("center", pick(args.center, file.center, 5.0)),
            width: echo.put("width", pick(args.width, file.width, 0.5)),
            amplitude: echo.put("amplitude", pick(args.amplitude, file.amplitude, 1.0)),
        },
        "periodic" | "perturbed-periodic" => {
            let a = echo.put("A", pick(args.a, file.a, 1.0));
            let b = echo.put("B", pick(args.b, file.b, 0.0));
            let root = solve_dispersion(params, DEFAULT_TOL)?;
            let spec = PeriodicModeSpec::new(root, a, b);
            if initial_kind == "periodic" {
                InitialData::Periodic(spec)
            } else {
                let eps_text = pick(args.epsilon, file.epsilon.clone(), "0.001".to_string());
                let eps: f64 = eps_text.trim().parse().map_err(|_| {
                    Error::Validation(format!("--epsilon: not a number: \"{eps_text}\""))
                })?;
                echo.put("epsilon", eps);
                InitialData::PerturbedPeriodic(spec, eps)
            }
        }
        other => {
            return Err(Error::Validation(format!(
                "initial data must be \"gaussian\", \"periodic\" or \"perturbed-periodic\", \
                 got \"{other}\""
            )))
        }
    };
    let out = out_dir(&args.common, &file, &mut echo)?;

    let grid = GridSpec::new(l, nz, dt, t_end, lambda)?;
    let spec = DecayExperimentSpec {
        bottom,
        mode: params,
        initial,
        r,
        grid,
        gamma,
    };
    let verdict = run_decay(&spec)?;

    let csv_path = out.join("decay_series.csv");
    write_series_csv(&csv_path, &echo.header(), &verdict.series)?;
    let record = serde_json::json!({
        "experiment": "decay",
        "config": echo.entries.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
        "ratio_end": verdict.ratio_end,
        "classification": verdict.classification.to_string(),
        "series_csv": csv_path.display().to_string(),
    });
    let json_path = out.join("decay_verdict.json");
    fs::write(&json_path, format!("{:#}\n", record))?;
    println!(
        "decay: {} (ratio_end = {}) -> {}",
        verdict.classification,
        verdict.ratio_end,
        json_path.display()
    );
    Ok(match verdict.classification {
        DecayClass::Inconclusive { .. } => 3,
        _ => 0,
    })
}

fn cmd_stability(args: StabilityArgs) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    init_jobs(&args.common, &file);
    let mut echo = Echo::new();
    echo.put("subcommand", "stability");
    let nu = echo.put("nu", pick(args.nu, file.nu, 1.0));
    let mode_text = pick(args.mode, file.mode.clone(), "1,1".to_string());
    let (m, n) = parse_mode(&mode_text)?;
    echo.put("mode", format!("{m},{n}"));
    let lambda = (m as f64).powi(2) + (n as f64).powi(2);
    echo.put("lambda", lambda);
    let a = echo.put("A", pick(args.a, file.a, 1.0));
    let b = echo.put("B", pick(args.b, file.b, 0.0));
    let eps_text = pick(args.epsilon, file.epsilon.clone(), "0.001,0.01".to_string());
    let epsilons = parse_f64_list(&eps_text, "--epsilon")?;
    echo.put("epsilon", &eps_text);
    let gamma = echo.put("gamma", pick(args.gamma, file.gamma, 0.0));
    let l = echo.put("L", pick(args.l, file.l, 150.0));
    let nz = echo.put("nz", pick(args.nz, file.nz, 7_500));
    let dt = echo.put("dt", pick(args.dt, file.dt, 0.016));
    let periods = echo.put("periods", pick(args.periods, file.periods, 10.0));
    let out = out_dir(&args.common, &file, &mut echo)?;

    let params = CouplingParams::new(nu, lambda)?;
    let root = solve_dispersion(params, DEFAULT_TOL)?;
    let spec = PeriodicModeSpec::new(root, a, b);
    let horizon = periods * spec.period();
    let grid = GridSpec::new(l, nz, dt, horizon, lambda)?;

    use rayon::prelude::*;
    let reports = epsilons
        .par_iter()
        .map(|&eps| stability_probe(&spec, eps, &grid, horizon, gamma).map(|r| (eps, r)))
        .collect::<Result<Vec<_>>>()?;

    let path = out.join("stability.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    w.write_all(echo.header().as_bytes())?;
    writeln!(
        w,
        "epsilon,max_deviation,deviation_over_epsilon,diff_energy_drift"
    )?;
    for (eps, report) in &reports {
        let ratio = if *eps > 0.0 {
            report.max_deviation / eps
        } else {
            0.0
        };
        writeln!(
            w,
            "{eps},{},{ratio},{}",
            report.max_deviation, report.diff_energy_drift
        )?;
        println!(
            "epsilon = {eps}: max deviation {} (deviation/epsilon {ratio}), \
             difference-energy drift {}",
            report.max_deviation, report.diff_energy_drift
        );
    }
    w.flush()?;
    println!("stability: -> {}", path.display());
    Ok(0)
}

fn cmd_export_field(args: ExportFieldArgs) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    init_jobs(&args.common, &file);
    let mut echo = Echo::new();
    echo.put("subcommand", "export-field");
    let nu = echo.put("nu", pick(args.nu, file.nu, 1.0));
    let modes_text = pick(
        args.modes.map(toml::Value::String),
        file.modes.clone(),
        toml::Value::String("1,1".to_string()),
    );
    let modes_text = match modes_text {
        toml::Value::String(s) => s,
        other => {
            return Err(Error::Validation(format!(
                "modes must be a string like \"1,1;1,2\", got {other}"
            )))
        }
    };
    echo.put("modes", &modes_text);
    let a = echo.put("A", pick(args.a, file.a, 1.0));
    let b = echo.put("B", pick(args.b, file.b, 0.0));
    let t = echo.put("t", pick(args.t, file.t, 0.0));
    let plate_text = pick(
        args.plate_grid,
        file.plate_grid.clone(),
        "33,33".to_string(),
    );
    let (n1, n2) = parse_mode(&plate_text).map_err(|_| {
        Error::Validation(format!(
            "plate grid must be \"n1,n2\", got \"{plate_text}\""
        ))
    })?;
    echo.put("plate_grid", format!("{n1},{n2}"));
    let z_text = pick(args.z, file.z.clone(), "0,0.5,1,2,5".to_string());
    let z_samples = parse_f64_list(&z_text, "--z")?;
    echo.put("z", &z_text);
    let out = out_dir(&args.common, &file, &mut echo)?;

    let mut modes = Vec::new();
    for part in modes_text.split(';') {
        let (m, n) = parse_mode(part)?;
        let pair = rectangle_pair(m, n);
        let params = CouplingParams::new(nu, pair.lambda)?;
        let root = solve_dispersion(params, DEFAULT_TOL)?;
        modes.push((
            pair,
            ModalSource::Periodic(PeriodicModeSpec::new(root, a, b)),
        ));
    }
    let snap = assemble(&modes, t, (n1 as usize, n2 as usize), &z_samples, None)?;
    let stem = out.join("field");
    export_snapshot(&snap, &stem)?;
    println!(
        "export-field: {} modes -> {}.plate.csv / {}.gas.csv",
        modes.len(),
        stem.display(),
        stem.display()
    );
    Ok(0)
}

/// Parses the process arguments, runs the selected subcommand and returns
/// the process exit code.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dispersion(args) => cmd_dispersion(args),
        Command::PeriodicCheck(args) => cmd_periodic_check(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Decay(args) => cmd_decay(args),
        Command::Stability(args) => cmd_stability(args),
        Command::ExportField(args) => cmd_export_field(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
