//! Shared tolerances and estimator quality presets.

use serde::{Deserialize, Serialize};

/// Structural tolerance for det = 1 and trace = 0 checks.
pub const TOL_STRUCT: f64 = 1e-9;

/// Grid residual tolerance for conjugation identities.
pub const TOL_CONJ: f64 = 1e-8;

/// Default verification grid, points per axis.
pub fn default_grid(d: usize) -> usize {
    if d == 1 {
        256
    } else {
        64
    }
}

/// Birkhoff-average quality for rotation number and Lyapunov estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationQuality {
    pub n_iters: u64,
    pub n_phases: u32,
}

impl RotationQuality {
    pub const FAST: RotationQuality = RotationQuality {
        n_iters: 20_000,
        n_phases: 8,
    };
    pub const DEFAULT: RotationQuality = RotationQuality {
        n_iters: 100_000,
        n_phases: 32,
    };
    pub const HIGH: RotationQuality = RotationQuality {
        n_iters: 1_000_000,
        n_phases: 32,
    };
}

impl Default for RotationQuality {
    fn default() -> Self {
        RotationQuality::DEFAULT
    }
}

/// Options for the invariant-cone uniform-hyperbolicity certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UhOptions {
    /// Largest block length tried for the cone condition.
    pub n_max: u32,
    /// Grid points per axis on which the cone condition must hold.
    pub grid_n: usize,
    /// Required norm growth on the cone.
    pub growth: f64,
    /// Abort clearly elliptic-looking cocycles before n_max.
    pub early_exit: bool,
    /// Try winding twists suggested by the rotation number.
    pub twist_search: bool,
}

impl Default for UhOptions {
    fn default() -> Self {
        UhOptions {
            n_max: 256,
            grid_n: 256,
            growth: 2.0,
            early_exit: true,
            twist_search: true,
        }
    }
}

impl UhOptions {
    /// Cheaper settings for dense spectrum scans.
    pub fn scan() -> Self {
        UhOptions {
            n_max: 96,
            grid_n: 128,
            ..Default::default()
        }
    }

    /// Patient settings for verifying weak hyperbolicity near gap edges.
    pub fn patient() -> Self {
        UhOptions {
            n_max: 4096,
            grid_n: 256,
            early_exit: false,
            ..Default::default()
        }
    }
}
