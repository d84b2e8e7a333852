//! The coupled dispersion system.
//!
//! A mode with eigenvalue `lambda` admits a time-periodic solution with
//! frequency `omega` and spatial decay rate `alpha` exactly when
//!
//! ```text
//! omega^2 = lambda - alpha^2
//! omega^2 = alpha * lambda^2 / (alpha + nu)
//! ```
//!
//! Eliminating `omega^2` gives the cubic
//! `p(alpha) = alpha^3 + nu alpha^2 + alpha (lambda^2 - lambda) - lambda nu`,
//! which has exactly one root in `(0, sqrt(lambda))`: `p(0) = -lambda nu < 0`
//! and `p(sqrt(lambda)) = sqrt(lambda) lambda^2 > 0`, and the combination of
//! signs rules out further crossings on the bracket.

use crate::eigenbasis::EigenSequence;
use crate::error::{Error, Result};

/// Default relative tolerance on both dispersion residuals.
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_BISECTIONS: usize = 200;

/// Gas-plate interaction intensity `nu > 0` together with the mode
/// eigenvalue `lambda > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    nu: f64,
    lambda: f64,
}

impl CouplingParams {
    pub fn new(nu: f64, lambda: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Validation(format!(
                "interaction intensity nu must be > 0, got {nu}"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Validation(format!(
                "eigenvalue lambda must be > 0, got {lambda}"
            )));
        }
        Ok(CouplingParams { nu, lambda })
    }

    /// Bypasses the `nu > 0` check. Only for in-crate tests that exercise
    /// the decoupled `nu = 0` limit.
    #[cfg(test)]
    pub(crate) fn decoupled_for_tests(lambda: f64) -> Self {
        CouplingParams { nu: 0.0, lambda }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// The unique positive solution `(omega, alpha)` of the dispersion system
/// for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRoot {
    alpha: f64,
    omega: f64,
    params: CouplingParams,
}

impl DispersionRoot {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega2(&self) -> f64 {
        self.omega * self.omega
    }

    pub fn params(&self) -> CouplingParams {
        self.params
    }

    /// Diagnostic copy with `alpha` shifted by `delta` while `omega` is
    /// kept. Breaks the dispersion identities on purpose; used to
    /// demonstrate the sensitivity of downstream residual checks.
    pub fn with_alpha_offset(&self, delta: f64) -> DispersionRoot {
        DispersionRoot {
            alpha: self.alpha + delta,
            ..*self
        }
    }
}

fn cubic(lambda: f64, nu: f64, a: f64) -> f64 {
    a * a * a + nu * a * a + a * (lambda * lambda - lambda) - lambda * nu
}

fn cubic_deriv(lambda: f64, nu: f64, a: f64) -> f64 {
    3.0 * a * a + 2.0 * nu * a + (lambda * lambda - lambda)
}

/// Bisection to near machine precision on `(0, sqrt(lambda))` followed by
/// one Newton polish. Does not validate `nu > 0`.
fn solve_cubic(lambda: f64, nu: f64) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = lambda.sqrt();
    let f_lo = cubic(lambda, nu, lo);
    let f_hi = cubic(lambda, nu, hi);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::Solver {
            lo,
            hi,
            message: format!("no sign change: p(lo)={f_lo}, p(hi)={f_hi}"),
        });
    }
    let target = 1e-14 * hi.max(1.0);
    let mut iterations = 0;
    while hi - lo > target {
        iterations += 1;
        if iterations > MAX_BISECTIONS {
            return Err(Error::Solver {
                lo,
                hi,
                message: format!("bisection did not converge in {MAX_BISECTIONS} iterations"),
            });
        }
        let mid = 0.5 * (lo + hi);
        if cubic(lambda, nu, lo) * cubic(lambda, nu, mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    let dp = cubic_deriv(lambda, nu, alpha);
    if dp != 0.0 {
        let polished = alpha - cubic(lambda, nu, alpha) / dp;
        if polished.is_finite() && polished > 0.0 && polished * polished < lambda {
            alpha = polished;
        }
    }
    Ok(alpha)
}

/// Solves the dispersion system for one mode and certifies both residuals.
pub fn solve_dispersion(params: CouplingParams, tol: f64) -> Result<DispersionRoot> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Validation(format!(
            "tolerance must lie in (0, 1e-6], got {tol}"
        )));
    }
    let (lambda, nu) = (params.lambda, params.nu);
    let alpha = solve_cubic(lambda, nu)?;
    let omega2 = lambda - alpha * alpha;
    // Cannot occur for nu > 0 (the root lies strictly inside the bracket),
    // guarded anyway.
    if !(omega2 > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "omega^2 = lambda - alpha^2 = {omega2} <= 0 at alpha = {alpha}"
        )));
    }
    let r1 = 0.0_f64; // omega is defined as sqrt(lambda - alpha^2)
    let r2 = (omega2 - alpha * lambda * lambda / (alpha + nu)).abs() / omega2;
    if r1 > tol || r2 > tol {
        return Err(Error::Solver {
            lo: 0.0,
            hi: lambda.sqrt(),
            message: format!("residuals ({r1:e}, {r2:e}) exceed tolerance {tol:e}"),
        });
    }
    Ok(DispersionRoot {
        alpha,
        omega: omega2.sqrt(),
        params,
    })
}

/// Solves the dispersion system for every eigenvalue of `seq` at the given
/// `nu`, preserving order.
pub fn dispersion_sweep(seq: &EigenSequence, nu: f64, tol: f64) -> Result<Vec<DispersionRoot>> {
    if seq.is_empty() {
        return Err(Error::Validation("eigenvalue sequence is empty".into()));
    }
    seq.iter()
        .map(|pair| {
            let params = CouplingParams::new(nu, pair.lambda)?;
            solve_dispersion(params, tol).map_err(|e| match e {
                Error::Solver { lo, hi, message } => Error::Solver {
                    lo,
                    hi,
                    message: format!("mode {} (lambda = {}): {message}", pair.index, pair.lambda),
                },
                other => other,
            })
        })
        .collect()
}

/// One row of the asymptotics table.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticsRow {
    pub lambda: f64,
    pub omega2_minus_lambda: f64,
    pub alpha_lambda_minus_nu: f64,
}

/// Deviation sequences `omega^2 - lambda` and `alpha lambda - nu`, plus
/// flags reporting whether each deviation magnitude is decreasing over the
/// last half of the sweep.
#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub rows: Vec<AsymptoticsRow>,
    pub omega_dev_decreasing: bool,
    pub alpha_dev_decreasing: bool,
}

pub fn asymptotics_report(roots: &[DispersionRoot]) -> AsymptoticsReport {
    let rows: Vec<AsymptoticsRow> = roots
        .iter()
        .map(|r| AsymptoticsRow {
            lambda: r.params.lambda(),
            omega2_minus_lambda: r.omega2() - r.params.lambda(),
            alpha_lambda_minus_nu: r.alpha() * r.params.lambda() - r.params.nu(),
        })
        .collect();
    let tail = &rows[rows.len() / 2..];
    let non_increasing = |f: &dyn Fn(&AsymptoticsRow) -> f64| -> bool {
        tail.windows(2)
            .all(|w| f(&w[1]) <= f(&w[0]) * (1.0 + 1e-12))
    };
    AsymptoticsReport {
        omega_dev_decreasing: !tail.is_empty()
            && non_increasing(&|r: &AsymptoticsRow| r.omega2_minus_lambda.abs()),
        alpha_dev_decreasing: !tail.is_empty()
            && non_increasing(&|r: &AsymptoticsRow| r.alpha_lambda_minus_nu.abs()),
        rows,
    }
}
