//! Local-energy decay and non-decay experiments, plus the Lyapunov
//! stability probe.
//!
//! With a rigid bottom the local gas energy over `[0, R]` decays as the
//! Klein-Gordon dispersion spreads the data; with an elastic bottom the
//! periodic solutions keep the local energy oscillating about a positive
//! mean. Classification uses fixed, documented thresholds: the underlying
//! statements are asymptotic and finite-horizon experiments need explicit
//! cutoffs, with an explicit inconclusive band in between rather than a
//! silent pick.

use crate::dispersion::CouplingParams;
use crate::energy;
use crate::error::{Error, Result};
use crate::periodic::{initial_data, PeriodicModeSpec};
use crate::simulator::{
    causal_horizon, run, BottomCondition, GridSpec, ModeState, ProbeSet, TimeSeries,
};

/// Initial-data tail cutoff used for the causal support radius.
const TAIL_CUTOFF: f64 = 1e-12;

/// Decay classification: ratio_end <= this and final-quarter max below
/// [`DECAY_MAX_FRACTION`].
pub const DECAY_RATIO_THRESHOLD: f64 = 0.1;
pub const DECAY_MAX_FRACTION: f64 = 0.2;
/// Non-decay: final-quarter time average at least this fraction of the
/// initial local energy.
pub const NONDECAY_MEAN_FRACTION: f64 = 0.5;

/// Initial data for a decay experiment.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// Gaussian bump in `phi`, `phi_t = 0`, plate at rest.
    Localized {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Exact periodic mode solution at `t = 0`.
    Periodic(PeriodicModeSpec),
    /// Periodic data with every field scaled by `1 + epsilon`.
    PerturbedPeriodic(PeriodicModeSpec, f64),
}

impl InitialData {
    /// Radius beyond which the data falls below [`TAIL_CUTOFF`].
    pub fn support_radius(&self) -> f64 {
        match *self {
            InitialData::Localized {
                center,
                width,
                amplitude,
            } => {
                let a = amplitude.abs();
                if a <= TAIL_CUTOFF {
                    return center;
                }
                center + width * (2.0 * (a / TAIL_CUTOFF).ln()).sqrt()
            }
            InitialData::Periodic(spec) => exp_tail_radius(&spec, 0.0),
            InitialData::PerturbedPeriodic(spec, eps) => exp_tail_radius(&spec, eps),
        }
    }
}

fn exp_tail_radius(spec: &PeriodicModeSpec, eps: f64) -> f64 {
    let amp = (1.0 + eps) * (spec.amplitude_a().abs() + spec.amplitude_b().abs());
    if amp <= TAIL_CUTOFF {
        return 0.0;
    }
    (amp / TAIL_CUTOFF).ln() / spec.root().alpha()
}

/// Specification of one decay experiment.
#[derive(Debug, Clone)]
pub struct DecayExperimentSpec {
    pub bottom: BottomCondition,
    pub mode: CouplingParams,
    pub initial: InitialData,
    /// Local-energy window radius.
    pub r: f64,
    pub grid: GridSpec,
    pub gamma: f64,
}

impl DecayExperimentSpec {
    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || self.r >= self.grid.l() {
            return Err(Error::Domain(format!(
                "window radius R = {} must satisfy 0 < R < L = {}",
                self.r,
                self.grid.l()
            )));
        }
        let support = self.initial.support_radius();
        let horizon = causal_horizon(&self.grid, support.min(self.grid.l()));
        if self.grid.t_end() > horizon {
            return Err(Error::Validation(format!(
                "t_end = {} exceeds the causal horizon {horizon} for initial data \
                 with support radius {support}; enlarge L or shorten the run",
                self.grid.t_end()
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::Validation(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    fn initial_state(&self) -> ModeState {
        let mut state = match &self.initial {
            InitialData::Localized {
                center,
                width,
                amplitude,
            } => {
                let mut s = ModeState::zero(self.mode, self.gamma, &self.grid);
                for j in 0..self.grid.nodes() {
                    let z = self.grid.z(j);
                    let arg = (z - center) / width;
                    s.phi[j] = amplitude * (-0.5 * arg * arg).exp();
                }
                s
            }
            InitialData::Periodic(spec) => initial_data(spec, &self.grid),
            InitialData::PerturbedPeriodic(spec, eps) => {
                initial_data(spec, &self.grid).scaled(1.0 + eps)
            }
        };
        state.gamma = self.gamma;
        state
    }
}

/// Decay classification of a finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    Decaying,
    NonDecaying,
    /// Between the thresholds; carries the measured end ratio.
    Inconclusive {
        ratio: f64,
    },
}

impl std::fmt::Display for DecayClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecayClass::Decaying => write!(f, "Decaying"),
            DecayClass::NonDecaying => write!(f, "NonDecaying"),
            DecayClass::Inconclusive { ratio } => write!(f, "Inconclusive(ratio={ratio})"),
        }
    }
}

/// Outcome of a decay experiment.
#[derive(Debug, Clone)]
pub struct DecayVerdict {
    pub series: TimeSeries,
    pub ratio_end: f64,
    pub classification: DecayClass,
}

/// Runs the experiment and classifies the local-energy history.
pub fn run_decay(spec: &DecayExperimentSpec) -> Result<DecayVerdict> {
    spec.validate()?;
    let probes = ProbeSet::new(probe_stride(&spec.grid), vec![spec.r]);
    let series = run(spec.initial_state(), &spec.grid, spec.bottom, &probes)?;
    let local = series
        .column(&format!("E_local_{}", spec.r))
        .expect("probe column present");
    let e0 = local.first().map(|&(_, e)| e).unwrap_or(0.0);
    if e0 <= f64::MIN_POSITIVE {
        // Zero initial local energy: trivially decaying, 0/0 guarded.
        return Ok(DecayVerdict {
            series,
            ratio_end: 0.0,
            classification: DecayClass::Decaying,
        });
    }
    let e_end = local.last().expect("nonempty series").1;
    let ratio_end = e_end / e0;
    let t_quarter = 0.75 * spec.grid.t_end();
    let final_quarter: Vec<f64> = local
        .iter()
        .filter(|&&(t, _)| t >= t_quarter)
        .map(|&(_, e)| e)
        .collect();
    let fq_max = final_quarter.iter().cloned().fold(0.0, f64::max);
    let fq_mean = final_quarter.iter().sum::<f64>() / final_quarter.len().max(1) as f64;

    let classification = if ratio_end <= DECAY_RATIO_THRESHOLD && fq_max <= DECAY_MAX_FRACTION * e0
    {
        DecayClass::Decaying
    } else if fq_mean >= NONDECAY_MEAN_FRACTION * e0 {
        DecayClass::NonDecaying
    } else {
        DecayClass::Inconclusive { ratio: ratio_end }
    };
    Ok(DecayVerdict {
        series,
        ratio_end,
        classification,
    })
}

fn probe_stride(grid: &GridSpec) -> usize {
    let n_steps = (grid.t_end() / grid.dt()).round() as usize;
    (n_steps / 400).max(1)
}

/// Stability probe outcome.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Sup over probe times of the energy-norm distance between the
    /// baseline and perturbed trajectories, `sqrt(E[difference])`.
    pub max_deviation: f64,
    /// `(t, deviation)` samples.
    pub deviations: Vec<(f64, f64)>,
    /// Max relative drift of the difference-trajectory energy; by
    /// linearity this energy is itself conserved when `gamma = 0`.
    pub diff_energy_drift: f64,
}

/// Runs the periodic solution and a copy with all fields scaled by
/// `1 + epsilon` in lockstep, measuring the energy-norm distance over
/// `[0, horizon]`.
pub fn stability_probe(
    spec: &PeriodicModeSpec,
    epsilon: f64,
    grid: &GridSpec,
    horizon: f64,
    gamma: f64,
) -> Result<StabilityReport> {
    let amp = spec.amplitude_a().abs() + spec.amplitude_b().abs();
    if epsilon < 0.0 || epsilon > 0.1 * amp {
        return Err(Error::Validation(format!(
            "epsilon = {epsilon} must lie in [0, 0.1 (|A| + |B|)] = [0, {}]",
            0.1 * amp
        )));
    }
    let support = exp_tail_radius(spec, epsilon);
    let max_horizon = causal_horizon(grid, support.min(grid.l()));
    if horizon > max_horizon {
        return Err(Error::Validation(format!(
            "horizon = {horizon} exceeds the causal horizon {max_horizon}"
        )));
    }
    let run_grid = grid.with_t_end(horizon);
    let mut base = initial_data(spec, &run_grid);
    base.gamma = gamma;
    let mut pert = base.scaled(1.0 + epsilon);
    let n_steps = (horizon / run_grid.dt()).round() as usize;
    let stride = probe_stride(&run_grid);

    let mut deviations = Vec::new();
    let mut diff_e0 = None;
    let mut drift = 0.0_f64;
    let mut accel = vec![0.0; run_grid.nodes()];
    let mut measure = |base: &ModeState, pert: &ModeState| -> Result<()> {
        let mut diff = pert.clone();
        for j in 0..diff.phi.len() {
            diff.phi[j] -= base.phi[j];
            diff.phi_t[j] -= base.phi_t[j];
        }
        diff.u -= base.u;
        diff.u_dot -= base.u_dot;
        let e = energy::modal_energy(&diff, &run_grid, &[])?.e_total;
        deviations.push((base.t, e.sqrt()));
        match diff_e0 {
            None => diff_e0 = Some(e),
            Some(e0) if e0 > 0.0 => drift = drift.max((e - e0).abs() / e0),
            Some(_) => {}
        }
        Ok(())
    };
    measure(&base, &pert)?;
    for step_idx in 1..=n_steps {
        crate::simulator::advance(&mut base, &run_grid, BottomCondition::Elastic, &mut accel)?;
        crate::simulator::advance(&mut pert, &run_grid, BottomCondition::Elastic, &mut accel)?;
        if step_idx % stride == 0 || step_idx == n_steps {
            measure(&base, &pert)?;
        }
    }
    let max_deviation = deviations.iter().map(|&(_, d)| d).fold(0.0, f64::max);
    Ok(StabilityReport {
        max_deviation,
        deviations,
        diff_energy_drift: drift,
    })
}
