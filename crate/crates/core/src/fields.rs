//! Assembly of the 3D fields from modal data.
//!
//! The plate displacement and the gas potential are finite superpositions
//! `u = sum u_k e_k(x1, x2)` and `phi = sum phi_k(t, z) e_k(x1, x2)` over
//! an explicit mode list. Periodic entries are evaluated analytically;
//! simulated entries are linearly interpolated in `z`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::eigenbasis::{eigenfunction_eval, Eigenpair};
use crate::error::{Error, Result};
use crate::periodic::{eval_gas_mode, eval_plate_mode, PeriodicModeSpec};
use crate::simulator::ModeState;

/// Modal contribution: either a simulated snapshot or an analytic
/// periodic mode.
#[derive(Debug, Clone)]
pub enum ModalSource {
    Simulated(ModeState),
    Periodic(PeriodicModeSpec),
}

impl ModalSource {
    fn nu(&self) -> f64 {
        match self {
            ModalSource::Simulated(state) => state.params.nu(),
            ModalSource::Periodic(spec) => spec.root().params().nu(),
        }
    }
}

/// Sampled multi-mode fields at one time.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    /// Plate displacement over the `(x1, x2)` grid.
    pub plate: Array2<f64>,
    /// Gas potential over `(x1, x2, z)`.
    pub gas: Array3<f64>,
    pub t: f64,
    /// 1-based indices of the contributing modes.
    pub mode_indices: Vec<usize>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub z: Vec<f64>,
}

fn interpolate(state: &ModeState, h: f64, z: f64) -> Result<f64> {
    let n = state.phi.len();
    let l = (n - 1) as f64 * h;
    if !(0.0..=l).contains(&z) {
        return Err(Error::Domain(format!(
            "z sample {z} outside the simulated range [0, {l}]"
        )));
    }
    let pos = z / h;
    let j = (pos.floor() as usize).min(n - 2);
    let frac = pos - j as f64;
    Ok(state.phi[j] * (1.0 - frac) + state.phi[j + 1] * frac)
}

/// Superposes modal profiles weighted by eigenfunction values onto a
/// plate grid `(n1, n2)` over `(0, pi)^2` and the given `z` samples.
/// Simulated entries need `grid_h`, the z spacing of their arrays.
pub fn assemble(
    modes: &[(Eigenpair, ModalSource)],
    t: f64,
    plate_grid: (usize, usize),
    z_samples: &[f64],
    grid_h: Option<f64>,
) -> Result<FieldSnapshot> {
    let (n1, n2) = plate_grid;
    if n1 < 2 || n2 < 2 {
        return Err(Error::Validation(format!(
            "plate grid must be at least 2x2, got {n1}x{n2}"
        )));
    }
    if let Some(first) = modes.first() {
        let nu = first.1.nu();
        if let Some((pair, bad)) = modes.iter().find(|(_, s)| s.nu() != nu) {
            return Err(Error::Validation(format!(
                "inconsistent nu: mode {} has nu = {}, expected {nu}",
                pair.index,
                bad.nu()
            )));
        }
    }

    let pi = std::f64::consts::PI;
    let x1: Vec<f64> = (0..n1).map(|i| i as f64 * pi / (n1 - 1) as f64).collect();
    let x2: Vec<f64> = (0..n2).map(|i| i as f64 * pi / (n2 - 1) as f64).collect();

    let mut plate = Array2::<f64>::zeros((n1, n2));
    let mut gas = Array3::<f64>::zeros((n1, n2, z_samples.len()));
    let mut mode_indices = Vec::with_capacity(modes.len());

    for (pair, source) in modes {
        mode_indices.push(pair.index);
        let (profile, u_value): (Vec<f64>, f64) = match source {
            ModalSource::Periodic(spec) => (
                z_samples
                    .iter()
                    .map(|&z| eval_gas_mode(spec, t, z))
                    .collect(),
                eval_plate_mode(spec, t).0,
            ),
            ModalSource::Simulated(state) => {
                let h = grid_h.ok_or_else(|| {
                    Error::Validation(
                        "grid spacing required to interpolate simulated mode data".into(),
                    )
                })?;
                let profile = z_samples
                    .iter()
                    .map(|&z| interpolate(state, h, z))
                    .collect::<Result<Vec<f64>>>()?;
                (profile, state.u)
            }
        };
        for (i, &a) in x1.iter().enumerate() {
            for (j, &b) in x2.iter().enumerate() {
                let e = eigenfunction_eval(pair, a, b)?;
                plate[(i, j)] += u_value * e;
                for (k, p) in profile.iter().enumerate() {
                    gas[(i, j, k)] += p * e;
                }
            }
        }
    }

    // Enforce the Dirichlet boundary exactly (sin(m pi) is only ~1e-16 in
    // floating point).
    for i in [0, n1 - 1] {
        for j in 0..n2 {
            plate[(i, j)] = 0.0;
            for k in 0..z_samples.len() {
                gas[(i, j, k)] = 0.0;
            }
        }
    }
    for j in [0, n2 - 1] {
        for i in 0..n1 {
            plate[(i, j)] = 0.0;
            for k in 0..z_samples.len() {
                gas[(i, j, k)] = 0.0;
            }
        }
    }

    Ok(FieldSnapshot {
        plate,
        gas,
        t,
        mode_indices,
        x1,
        x2,
        z: z_samples.to_vec(),
    })
}

/// Writes the snapshot as two CSV files sharing `stem`:
/// `{stem}.plate.csv` with header `x1,x2,u` and `{stem}.gas.csv` with
/// header `x1,x2,z,phi`.
pub fn export_snapshot(snap: &FieldSnapshot, stem: &Path) -> Result<()> {
    let with_suffix = |suffix: &str| {
        let mut os = stem.as_os_str().to_owned();
        os.push(suffix);
        std::path::PathBuf::from(os)
    };
    let plate_path = with_suffix(".plate.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&plate_path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", plate_path.display()),
        ))
    })?);
    writeln!(w, "x1,x2,u")?;
    for (i, &a) in snap.x1.iter().enumerate() {
        for (j, &b) in snap.x2.iter().enumerate() {
            writeln!(w, "{a},{b},{}", snap.plate[(i, j)])?;
        }
    }
    w.flush()?;

    let gas_path = with_suffix(".gas.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&gas_path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", gas_path.display()),
        ))
    })?);
    writeln!(w, "x1,x2,z,phi")?;
    for (i, &a) in snap.x1.iter().enumerate() {
        for (j, &b) in snap.x2.iter().enumerate() {
            for (k, &z) in snap.z.iter().enumerate() {
                writeln!(w, "{a},{b},{z},{}", snap.gas[(i, j, k)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
