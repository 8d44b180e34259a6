//! Numerical tolerances used across the crate.
//!
//! Defaults can be overridden by pointing `LIE_DOUBLES_TOLERANCES` at a JSON
//! file containing any subset of the fields below.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Environment variable naming an optional JSON tolerance file.
pub const TOLERANCE_ENV: &str = "LIE_DOUBLES_TOLERANCES";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// ‖M†M − I‖_F bound for the unitary tag.
    pub unitary: f64,
    /// ‖M − M†‖_F bound for the Hermitian tags.
    pub hermitian: f64,
    /// Pivot threshold (relative to ‖A‖_F) for QR and LU.
    pub pivot: f64,
    /// Smallest admissible Cholesky pivot relative to ‖P‖_F.
    pub positivity: f64,
    /// Minimal eigenvalue gap for regular elements.
    pub regularity: f64,
    /// Largest 1-norm accepted by the matrix exponential.
    pub exp_bound: f64,
    /// Step for first-order central differences.
    pub fd_step: f64,
    /// Step for the differences nested inside the jacobiator.
    pub jacobi_step: f64,
    /// Residual above which RK4 restores group structure.
    pub restore: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitary: 1e-10,
            hermitian: 1e-10,
            pivot: 1e-12,
            positivity: 1e-12,
            regularity: 1e-8,
            exp_bound: 1e3,
            fd_step: 1e-5,
            jacobi_step: 1e-4,
            restore: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

static ACTIVE: OnceLock<Tolerances> = OnceLock::new();

/// Fixes the tolerances for this process before first use. Returns false if
/// they were already read.
pub fn install_tolerances(t: Tolerances) -> bool {
    ACTIVE.set(t).is_ok()
}

/// Tolerances in effect for this process. Reads the override file once.
pub fn tolerances() -> &'static Tolerances {
    ACTIVE.get_or_init(|| {
        std::env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|path| std::fs::read_to_string(path).ok())
            .and_then(|text| Tolerances::from_json(&text).ok())
            .unwrap_or_default()
    })
}
