//! Dirichlet-Laplacian eigenvalues and eigenfunctions of the tube
//! cross-section.
//!
//! For the square `(0,pi) x (0,pi)` the spectrum is analytic:
//! `lambda_{mn} = m^2 + n^2` with eigenfunctions
//! `e_{mn}(x1,x2) = (2/pi) sin(m x1) sin(n x2)`, orthonormal in L2.
//! General cross-sections are supported only through externally supplied
//! eigenvalue tables; the modal machinery needs nothing but the sequence
//! of eigenvalues.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// How an eigenvalue was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeDescriptor {
    /// Analytic square mode with wavenumbers `(m, n)`, `m, n >= 1`.
    Rectangle { m: u32, n: u32 },
    /// Entry of a user-supplied table; no eigenfunction formula available.
    External { label: String },
}

impl std::fmt::Display for ModeDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeDescriptor::Rectangle { m, n } => write!(f, "({m},{n})"),
            ModeDescriptor::External { label } => write!(f, "external[{label}]"),
        }
    }
}

/// One Dirichlet-Laplacian eigenvalue with its 1-based index.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub index: usize,
    pub lambda: f64,
    pub descriptor: ModeDescriptor,
}

/// Eigenvalues sorted nondecreasing; duplicates encode multiplicity.
#[derive(Debug, Clone)]
pub struct EigenSequence {
    pairs: Vec<Eigenpair>,
}

impl EigenSequence {
    /// Wraps a list of eigenpairs, checking ordering and positivity.
    pub fn new(pairs: Vec<Eigenpair>) -> Result<Self> {
        for w in pairs.windows(2) {
            if w[1].lambda < w[0].lambda {
                return Err(Error::Validation(format!(
                    "eigenvalues not nondecreasing: {} after {}",
                    w[1].lambda, w[0].lambda
                )));
            }
        }
        if let Some(p) = pairs.iter().find(|p| !(p.lambda > 0.0)) {
            return Err(Error::Validation(format!(
                "eigenvalue {} at index {} is not positive",
                p.lambda, p.index
            )));
        }
        Ok(EigenSequence { pairs })
    }

    pub fn pairs(&self) -> &[Eigenpair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Eigenpair> {
        self.pairs.iter()
    }
}

/// First `count` eigenvalues `m^2 + n^2` of the square, sorted by
/// `(lambda, m, n)` so that equal eigenvalues are indexed deterministically.
pub fn rectangle_eigensequence(count: usize) -> EigenSequence {
    assert!(count >= 1, "count must be >= 1");
    // lambda(m, n) >= m^2, so wavenumbers beyond `count` cannot appear
    // among the first `count` eigenvalues (the pairs (1,1)..(1,count)
    // already give `count` values below (count+1)^2).
    let cap = count as u32;
    let mut modes: Vec<(u64, u32, u32)> = Vec::with_capacity((cap * cap) as usize);
    for m in 1..=cap {
        for n in 1..=cap {
            modes.push(((m as u64).pow(2) + (n as u64).pow(2), m, n));
        }
    }
    modes.sort_unstable();
    modes.truncate(count);
    let pairs = modes
        .into_iter()
        .enumerate()
        .map(|(i, (lam, m, n))| Eigenpair {
            index: i + 1,
            lambda: lam as f64,
            descriptor: ModeDescriptor::Rectangle { m, n },
        })
        .collect();
    EigenSequence::new(pairs).expect("rectangle spectrum is sorted and positive")
}

/// Evaluates the analytic square eigenfunction at `(x1, x2)`.
pub fn eigenfunction_eval(pair: &Eigenpair, x1: f64, x2: f64) -> Result<f64> {
    match pair.descriptor {
        ModeDescriptor::Rectangle { m, n } => {
            Ok(2.0 / PI * (m as f64 * x1).sin() * (n as f64 * x2).sin())
        }
        ModeDescriptor::External { ref label } => Err(Error::UnsupportedEvaluation(format!(
            "external eigenvalue \"{label}\" has no eigenfunction formula"
        ))),
    }
}

/// Parses an external eigenvalue table: one positive decimal per line,
/// blank lines and `#` comments ignored. The result is sorted ascending.
pub fn load_external_eigenvalues(text: &str) -> Result<EigenSequence> {
    let mut rows: Vec<(f64, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let value: f64 = body.parse().map_err(|_| Error::ExternalTable {
            line,
            message: format!("not a number: \"{body}\""),
        })?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::ExternalTable {
                line,
                message: format!("eigenvalue must be positive and finite, got {value}"),
            });
        }
        rows.push((value, line));
    }
    rows.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let pairs = rows
        .into_iter()
        .enumerate()
        .map(|(i, (lambda, line))| Eigenpair {
            index: i + 1,
            lambda,
            descriptor: ModeDescriptor::External {
                label: format!("line {line}"),
            },
        })
        .collect();
    EigenSequence::new(pairs)
}
