//! Time-domain integration of one gas mode coupled to its plate oscillator.
//!
//! The gas mode obeys a 1D Klein-Gordon equation on the half-line,
//! `phi_tt = phi_zz - lambda phi`, discretized with the standard 3-point
//! Laplacian. The bottom boundary is either rigid (Neumann, ghost node
//! `phi[-1] = phi[1]`) or elastic (`phi_z(0) = u_dot` via the ghost node
//! `phi[-1] = phi[1] - 2 h u_dot`, with the plate equation
//! `u_ddot = -lambda^2 u - gamma u_dot + nu phi_t(0)` active).
//!
//! Time stepping is velocity-Verlet: positions advance with the old
//! acceleration, velocities with the average of old and new accelerations.
//! The new boundary acceleration depends on the new plate velocity and the
//! new plate acceleration on the new boundary gas velocity, so those two
//! scalars are obtained from an exact 2x2 linear solve. With `gamma = 0`
//! the one-step map is self-adjoint, which gives leapfrog-quality energy
//! behavior and exact time reversibility up to round-off.
//!
//! The half-line is truncated at `z = L` with a wall placed beyond the
//! domain of influence (unit wave speed), so the truncated dynamics is
//! exact in the observed window up to the initial-data tail cut.

use crate::dispersion::CouplingParams;
use crate::energy;
use crate::error::{Error, Result};

/// Blow-up tripwire on `max |phi|`.
const INSTABILITY_THRESHOLD: f64 = 1e12;

/// Spatial/temporal discretization of the truncated half-line.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    l: f64,
    nz: usize,
    dt: f64,
    t_end: f64,
}

impl GridSpec {
    /// Validates the CFL bound `dt <= 0.9 h` and the plate-oscillator
    /// bound `dt <= 0.5 / lambda` for the target eigenvalue.
    pub fn new(l: f64, nz: usize, dt: f64, t_end: f64, lambda: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Validation(format!("L must be > 0, got {l}")));
        }
        if nz == 0 {
            return Err(Error::Validation("nz must be >= 1".into()));
        }
        if !(dt > 0.0) || !(t_end > 0.0) {
            return Err(Error::Validation(format!(
                "dt and t_end must be > 0, got dt={dt}, t_end={t_end}"
            )));
        }
        let h = l / nz as f64;
        if dt > 0.9 * h * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "CFL violation: dt={dt} exceeds 0.9 h = {}",
                0.9 * h
            )));
        }
        if !(lambda > 0.0) {
            return Err(Error::Validation(format!(
                "target lambda must be > 0, got {lambda}"
            )));
        }
        if dt > 0.5 / lambda * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "plate stability: dt={dt} exceeds 0.5/lambda = {}",
                0.5 / lambda
            )));
        }
        Ok(GridSpec { l, nz, dt, t_end })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn h(&self) -> f64 {
        self.l / self.nz as f64
    }

    /// Number of grid nodes, `nz + 1`.
    pub fn nodes(&self) -> usize {
        self.nz + 1
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    /// Copy with a different end time.
    pub fn with_t_end(&self, t_end: f64) -> GridSpec {
        GridSpec { t_end, ..*self }
    }
}

/// Bottom boundary condition of the tube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BottomCondition {
    /// Plate ODE active, `phi_z(0) = u_dot`.
    Elastic,
    /// Pure wave problem, `phi_z(0) = 0`; plate state is frozen.
    Rigid,
}

/// One gas mode plus its plate scalars at a single time.
#[derive(Debug, Clone)]
pub struct ModeState {
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub u: f64,
    pub u_dot: f64,
    pub t: f64,
    pub params: CouplingParams,
    /// Plate damping coefficient; 0 in the undamped model.
    pub gamma: f64,
}

impl ModeState {
    pub fn zero(params: CouplingParams, gamma: f64, grid: &GridSpec) -> ModeState {
        ModeState {
            phi: vec![0.0; grid.nodes()],
            phi_t: vec![0.0; grid.nodes()],
            u: 0.0,
            u_dot: 0.0,
            t: 0.0,
            params,
            gamma,
        }
    }

    /// All dynamic fields scaled by `factor` (linearity probe helper).
    pub fn scaled(&self, factor: f64) -> ModeState {
        ModeState {
            phi: self.phi.iter().map(|v| v * factor).collect(),
            phi_t: self.phi_t.iter().map(|v| v * factor).collect(),
            u: self.u * factor,
            u_dot: self.u_dot * factor,
            ..self.clone()
        }
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.phi.len() != grid.nodes() || self.phi_t.len() != grid.nodes() {
            return Err(Error::Validation(format!(
                "state arrays ({} nodes) do not match grid ({} nodes)",
                self.phi.len(),
                grid.nodes()
            )));
        }
        Ok(())
    }
}

/// Gas acceleration `phi_zz - lambda phi` at every node. `u_dot` enters
/// only the bottom node and only when `elastic`.
fn acceleration(phi: &[f64], u_dot: f64, h: f64, lambda: f64, elastic: bool, out: &mut [f64]) {
    let n = phi.len();
    let inv_h2 = 1.0 / (h * h);
    out[0] = (2.0 * phi[1] - 2.0 * phi[0]) * inv_h2 - lambda * phi[0];
    if elastic {
        out[0] -= 2.0 * u_dot / h;
    }
    for j in 1..n - 1 {
        out[j] = (phi[j - 1] - 2.0 * phi[j] + phi[j + 1]) * inv_h2 - lambda * phi[j];
    }
    out[n - 1] = (2.0 * phi[n - 2] - 2.0 * phi[n - 1]) * inv_h2 - lambda * phi[n - 1];
}

/// Advances `state` by one `dt` in place. `accel` is scratch of node length.
pub(crate) fn advance(
    state: &mut ModeState,
    grid: &GridSpec,
    bottom: BottomCondition,
    accel: &mut [f64],
) -> Result<()> {
    let h = grid.h();
    let dt = grid.dt();
    let lambda = state.params.lambda();
    let nu = state.params.nu();
    let gamma = state.gamma;
    let elastic = bottom == BottomCondition::Elastic;

    // Old accelerations.
    acceleration(&state.phi, state.u_dot, h, lambda, elastic, accel);
    let a_u = if elastic {
        -lambda * lambda * state.u - gamma * state.u_dot + nu * state.phi_t[0]
    } else {
        0.0
    };

    // Position update plus explicit half kick.
    let mut max_abs = 0.0_f64;
    for ((phi, phi_t), a) in state
        .phi
        .iter_mut()
        .zip(state.phi_t.iter_mut())
        .zip(accel.iter())
    {
        *phi += dt * *phi_t + 0.5 * dt * dt * a;
        *phi_t += 0.5 * dt * a;
        max_abs = max_abs.max(phi.abs());
    }
    if elastic {
        state.u += dt * state.u_dot + 0.5 * dt * dt * a_u;
        state.u_dot += 0.5 * dt * a_u;
    }

    // New accelerations; the u_dot contribution at the bottom node is left
    // out here and folded into the implicit boundary solve below.
    acceleration(&state.phi, 0.0, h, lambda, false, accel);
    for (phi_t, a) in state.phi_t[1..].iter_mut().zip(accel[1..].iter()) {
        *phi_t += 0.5 * dt * a;
    }
    if elastic {
        // Implicit half kick for the coupled pair (phi_t[0], u_dot):
        //   p = P - (2c/h) w,  w = W + c (-gamma w + nu p),  c = dt/2.
        let c = 0.5 * dt;
        let p_partial = state.phi_t[0] + c * accel[0];
        let w_partial = state.u_dot - c * lambda * lambda * state.u;
        let w = (w_partial + c * nu * p_partial) / (1.0 + c * gamma + 2.0 * c * c * nu / h);
        state.phi_t[0] = p_partial - 2.0 * c / h * w;
        state.u_dot = w;
    } else {
        state.phi_t[0] += 0.5 * dt * accel[0];
    }

    state.t += dt;
    if !max_abs.is_finite() || max_abs > INSTABILITY_THRESHOLD {
        return Err(Error::Instability {
            t: state.t,
            message: format!("max |phi| = {max_abs} exceeds {INSTABILITY_THRESHOLD}"),
        });
    }
    Ok(())
}

/// Advances one time step, returning the new state.
pub fn step(state: &ModeState, grid: &GridSpec, bottom: BottomCondition) -> Result<ModeState> {
    state.check_grid(grid)?;
    let mut next = state.clone();
    let mut accel = vec![0.0; grid.nodes()];
    advance(&mut next, grid, bottom, &mut accel)?;
    Ok(next)
}

/// Which quantities to sample along a run, and how often.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    /// Sample every `stride` steps (the initial and final states are
    /// always sampled).
    pub stride: usize,
    /// Local-energy window radii; each must be < L.
    pub r_values: Vec<f64>,
}

impl ProbeSet {
    pub fn new(stride: usize, r_values: Vec<f64>) -> ProbeSet {
        ProbeSet {
            stride: stride.max(1),
            r_values,
        }
    }

    fn column_names(&self) -> Vec<String> {
        let mut cols = vec!["E_total".into(), "E_gas".into(), "E_plate".into()];
        for r in &self.r_values {
            cols.push(format!("E_local_{r}"));
        }
        cols.extend(["u".into(), "u_dot".into(), "phi0".into(), "phi_t0".into()]);
        cols
    }
}

/// Time-stamped probe records from one run.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    /// Column names, excluding the leading `t`.
    pub columns: Vec<String>,
    pub records: Vec<(f64, Vec<f64>)>,
}

impl TimeSeries {
    /// Values of the named column over time.
    pub fn column(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.records.iter().map(|(t, v)| (*t, v[idx])).collect())
    }
}

fn sample(state: &ModeState, grid: &GridSpec, probes: &ProbeSet) -> Result<Vec<f64>> {
    let report = energy::modal_energy(state, grid, &probes.r_values)?;
    let mut row = vec![report.e_total, report.e_gas, report.e_plate];
    row.extend(report.e_local.iter().map(|(_, e)| *e));
    row.extend([state.u, state.u_dot, state.phi[0], state.phi_t[0]]);
    Ok(row)
}

/// Steps `initial` to `t_end`, sampling probes at the configured stride.
pub fn run(
    initial: ModeState,
    grid: &GridSpec,
    bottom: BottomCondition,
    probes: &ProbeSet,
) -> Result<TimeSeries> {
    initial.check_grid(grid)?;
    for &r in &probes.r_values {
        if r >= grid.l() {
            return Err(Error::Domain(format!(
                "probe radius R = {r} must be < L = {}",
                grid.l()
            )));
        }
    }
    let n_steps = (grid.t_end() / grid.dt()).round() as usize;
    let mut state = initial;
    let mut accel = vec![0.0; grid.nodes()];
    let mut records = Vec::with_capacity(n_steps / probes.stride + 2);
    records.push((state.t, sample(&state, grid, probes)?));
    for step_idx in 1..=n_steps {
        advance(&mut state, grid, bottom, &mut accel).map_err(|e| match e {
            Error::Instability { t, message } => Error::Instability {
                t,
                message: format!("at step {step_idx}: {message}"),
            },
            other => other,
        })?;
        if step_idx % probes.stride == 0 || step_idx == n_steps {
            records.push((state.t, sample(&state, grid, probes)?));
        }
    }
    Ok(TimeSeries {
        columns: probes.column_names(),
        records,
    })
}

/// Latest time at which the far wall cannot yet have influenced the window
/// `[0, support_radius]`: the wave speed is 1, so `L - support_radius`.
pub fn causal_horizon(grid: &GridSpec, support_radius: f64) -> f64 {
    debug_assert!(support_radius >= 0.0 && support_radius <= grid.l());
    grid.l() - support_radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{solve_dispersion, CouplingParams, DEFAULT_TOL};
    use crate::periodic::{initial_data, PeriodicModeSpec};

    fn params(nu: f64, lambda: f64) -> CouplingParams {
        CouplingParams::new(nu, lambda).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(10.0, 100, 0.08, 1.0, 2.0).is_ok());
        // CFL: h = 0.1, 0.9h = 0.09
        assert!(GridSpec::new(10.0, 100, 0.095, 1.0, 2.0).is_err());
        // plate bound: 0.5 / 20 = 0.025
        assert!(GridSpec::new(10.0, 100, 0.05, 1.0, 20.0).is_err());
        assert!(GridSpec::new(0.0, 100, 0.01, 1.0, 2.0).is_err());
        assert!(GridSpec::new(10.0, 0, 0.01, 1.0, 2.0).is_err());
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let grid = GridSpec::new(10.0, 200, 0.04, 1.0, 2.0).unwrap();
        let state = ModeState::zero(params(1.0, 2.0), 0.0, &grid);
        for bottom in [BottomCondition::Elastic, BottomCondition::Rigid] {
            let next = step(&state, &grid, bottom).unwrap();
            assert!(next.phi.iter().all(|&v| v == 0.0));
            assert!(next.phi_t.iter().all(|&v| v == 0.0));
            assert_eq!(next.u, 0.0);
            assert_eq!(next.u_dot, 0.0);
        }
    }

    #[test]
    fn causal_horizon_trivia() {
        let grid = GridSpec::new(100.0, 1000, 0.05, 1.0, 2.0).unwrap();
        assert_eq!(causal_horizon(&grid, 10.0), 90.0);
        let grid2 = GridSpec::new(40.0, 400, 0.05, 1.0, 2.0).unwrap();
        assert_eq!(causal_horizon(&grid2, 40.0), 0.0);
    }

    #[test]
    fn causal_horizon_exponential_tail() {
        // e^(-alpha z) = 1e-12 at z = ln(1e12)/alpha; alpha = 0.75 gives
        // z ~ 36.8, horizon ~ 163.
        let grid = GridSpec::new(200.0, 2000, 0.05, 1.0, 2.0).unwrap();
        let z = (1e12f64).ln() / 0.75;
        let horizon = causal_horizon(&grid, z);
        assert!((horizon - 163.0).abs() < 1.0, "horizon {horizon}");
    }

    /// With a zero plate and zero coupling force the elastic update must
    /// reproduce the rigid update exactly, node for node.
    #[test]
    fn decoupled_elastic_matches_rigid_bitwise() {
        let lambda = 2.0;
        let grid = GridSpec::new(20.0, 400, 0.04, 2.0, lambda).unwrap();
        let p = CouplingParams::decoupled_for_tests(lambda);
        let mut elastic = ModeState::zero(p, 0.0, &grid);
        for (j, v) in elastic.phi.iter_mut().enumerate() {
            let z = grid.z(j);
            *v = (-(z - 5.0) * (z - 5.0)).exp();
        }
        let mut rigid = elastic.clone();
        let mut accel = vec![0.0; grid.nodes()];
        for _ in 0..50 {
            advance(&mut elastic, &grid, BottomCondition::Elastic, &mut accel).unwrap();
            advance(&mut rigid, &grid, BottomCondition::Rigid, &mut accel).unwrap();
        }
        assert_eq!(elastic.phi, rigid.phi);
        assert_eq!(elastic.phi_t, rigid.phi_t);
        assert_eq!(elastic.u, 0.0);
        assert_eq!(elastic.u_dot, 0.0);
    }

    /// Leapfrog reversibility. The reversing involution for this coupled
    /// system negates `phi_t` and `u` while keeping `phi` and `u_dot`
    /// (see the periodic solutions: phi ~ cos(wt), u ~ sin(wt), so under
    /// t -> -t the plate position flips sign, not its velocity). Forward
    /// n steps, apply the involution, forward n steps, apply it again;
    /// must recover the initial state to round-off.
    #[test]
    fn time_reversibility() {
        let p = params(1.0, 2.0);
        let root = solve_dispersion(p, DEFAULT_TOL).unwrap();
        let spec = PeriodicModeSpec::new(root, 1.0, 0.3);
        let grid = GridSpec::new(60.0, 1200, 0.04, 1.0, 2.0).unwrap();
        let initial = initial_data(&spec, &grid);
        let mut state = initial.clone();
        let mut accel = vec![0.0; grid.nodes()];
        let n = 500;
        for _ in 0..n {
            advance(&mut state, &grid, BottomCondition::Elastic, &mut accel).unwrap();
        }
        state.phi_t.iter_mut().for_each(|v| *v = -*v);
        state.u = -state.u;
        for _ in 0..n {
            advance(&mut state, &grid, BottomCondition::Elastic, &mut accel).unwrap();
        }
        state.phi_t.iter_mut().for_each(|v| *v = -*v);
        state.u = -state.u;
        let mut worst: f64 = 0.0;
        for j in 0..grid.nodes() {
            worst = worst.max((state.phi[j] - initial.phi[j]).abs());
            worst = worst.max((state.phi_t[j] - initial.phi_t[j]).abs());
        }
        worst = worst.max((state.u - initial.u).abs());
        worst = worst.max((state.u_dot - initial.u_dot).abs());
        assert!(worst <= 1e-8, "reversibility defect {worst}");
    }

    /// With gamma > 0 the sampled total energy never increases.
    #[test]
    fn damping_monotonicity() {
        let p = params(1.0, 2.0);
        let root = solve_dispersion(p, DEFAULT_TOL).unwrap();
        let spec = PeriodicModeSpec::new(root, 1.0, 0.0);
        let grid = GridSpec::new(80.0, 1600, 0.04, 20.0, 2.0).unwrap();
        let mut initial = initial_data(&spec, &grid);
        initial.gamma = 0.1;
        let series = run(
            initial,
            &grid,
            BottomCondition::Elastic,
            &ProbeSet::new(25, vec![]),
        )
        .unwrap();
        let e = series.column("E_total").unwrap();
        for w in e.windows(2) {
            assert!(
                w[1].1 <= w[0].1 * (1.0 + 1e-12),
                "energy increased: {} -> {} at t = {}",
                w[0].1,
                w[1].1,
                w[1].0
            );
        }
    }

    #[test]
    fn instability_tripwire() {
        let grid = GridSpec::new(10.0, 100, 0.08, 1.0, 2.0).unwrap();
        let mut state = ModeState::zero(params(1.0, 2.0), 0.0, &grid);
        state.phi.iter_mut().for_each(|v| *v = 1e13);
        match step(&state, &grid, BottomCondition::Rigid) {
            Err(Error::Instability { .. }) => {}
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn run_rejects_probe_beyond_domain() {
        let grid = GridSpec::new(10.0, 100, 0.08, 1.0, 2.0).unwrap();
        let state = ModeState::zero(params(1.0, 2.0), 0.0, &grid);
        let res = run(
            state,
            &grid,
            BottomCondition::Rigid,
            &ProbeSet::new(10, vec![10.0]),
        );
        assert!(matches!(res, Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_state_rejected() {
        let grid = GridSpec::new(10.0, 100, 0.08, 1.0, 2.0).unwrap();
        let other = GridSpec::new(10.0, 50, 0.08, 1.0, 2.0).unwrap();
        let state = ModeState::zero(params(1.0, 2.0), 0.0, &other);
        assert!(step(&state, &grid, BottomCondition::Rigid).is_err());
    }
}
