//! Function algebra on the torus: finitely supported Fourier series on T^d
//! and on the doubled torus 2T^d (d ∈ {1,2}), with exact mode-wise algebra,
//! norm estimates, truncation and smoothing.
//!
//! A function is stored as a map from integer mode indices to complex
//! amplitudes. On the doubled torus the stored index n represents the
//! frequency n/2, so that conjugacies with half-integer winding live on the
//! same integer lattice with an `is_double` flag.

mod grid;
mod matrix;
mod scalar;
mod smooth;

pub use grid::{eval_grid, modes_from_grid};
pub use matrix::{exp_sl2_grid, log_sl2_grid, map_on_grid, MatrixTorusFunction};
pub use scalar::ScalarTorusFunction;
pub use smooth::smooth_approximant;

use serde::{Deserialize, Serialize};

/// Integer mode index on the (possibly doubled) frequency lattice.
///
/// Always stored with two components; d = 1 functions keep the second at 0.
/// Ordering is lexicographic, which fixes the serialization order of mode
/// maps and makes golden files reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex(pub [i64; 2]);

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex([0, 0]);

    pub fn one(n: i64) -> Self {
        ModeIndex([n, 0])
    }

    pub fn two(n1: i64, n2: i64) -> Self {
        ModeIndex([n1, n2])
    }

    pub fn from_slice(n: &[i64]) -> Self {
        match n.len() {
            1 => ModeIndex([n[0], 0]),
            2 => ModeIndex([n[0], n[1]]),
            _ => panic!("mode index must have 1 or 2 components"),
        }
    }

    /// Max-norm |n|, the truncation radius convention.
    pub fn norm_max(&self) -> i64 {
        self.0[0].abs().max(self.0[1].abs())
    }

    /// ℓ¹ norm, the weight in analytic majorants.
    pub fn norm_l1(&self) -> i64 {
        self.0[0].abs() + self.0[1].abs()
    }

    pub fn neg(&self) -> Self {
        ModeIndex([-self.0[0], -self.0[1]])
    }

    pub fn add(&self, o: &ModeIndex) -> Self {
        ModeIndex([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0]
    }

    pub fn scale(&self, s: i64) -> Self {
        ModeIndex([self.0[0] * s, self.0[1] * s])
    }

    pub fn components(&self, d: usize) -> &[i64] {
        &self.0[..d]
    }
}

/// Which norm a [`NormEstimate`] value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    /// Coefficient majorant of the sup over the strip |Im θ| < h.
    Analytic(f64),
    /// Grid sup over all partial derivatives of total order ≤ k.
    Ck(u32),
    /// Plain grid sup.
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub kind: NormKind,
    pub value: f64,
}

impl NormEstimate {
    pub fn analytic(h: f64, value: f64) -> Self {
        assert!(h > 0.0, "analytic norm needs a positive strip width");
        NormEstimate {
            kind: NormKind::Analytic(h),
            value,
        }
    }

    pub fn ck(k: u32, value: f64) -> Self {
        NormEstimate {
            kind: NormKind::Ck(k),
            value,
        }
    }
}
