//! Top Lyapunov exponent by renormalized transfer-matrix products.

use super::{phase_point, Cocycle, OrbitEval};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// max(raw, 0); the exponent of an SL(2,ℝ) cocycle is nonnegative.
    pub value: f64,
    /// The averaged (1/n) log‖A_n‖ before clamping.
    pub raw: f64,
    pub spread: f64,
    pub n_iters: u64,
}

/// Averaged (1/n) log‖A_n(θ)‖ over `n_phases` starting points, with periodic
/// renormalization of the running product to avoid overflow.
pub fn lyapunov_exponent(c: &Cocycle, n_iters: u64, n_phases: u32) -> LyapunovEstimate {
    let n = n_iters.max(16);
    let raws: Vec<f64> = (0..n_phases.max(1))
        .into_par_iter()
        .map(|p| {
            let theta0 = phase_point(c.d(), p, 0.711);
            let mut orbit = OrbitEval::new(&c.amap, &theta0, &c.freq);
            let mut prod = crate::mat2::Mat2::identity();
            let mut acc = 0.0f64;
            for t in 0..n {
                prod = orbit.current() * prod;
                if t % 16 == 15 {
                    let s = prod.frobenius_norm();
                    acc += s.ln();
                    prod = prod.scale(1.0 / s);
                }
                orbit.step();
            }
            (acc + prod.op_norm().ln()) / n as f64
        })
        .collect();
    let raw = raws.iter().sum::<f64>() / raws.len() as f64;
    let spread = raws
        .iter()
        .map(|r| (r - raw).abs())
        .fold(0.0, f64::max);
    LyapunovEstimate {
        value: raw.max(0.0),
        raw,
        spread,
        n_iters: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::Frequency;
    use crate::mat2::Mat2;

    #[test]
    fn constant_diagonal() {
        let c = Cocycle::constant(Frequency::golden(), Mat2::diag(2.0, 0.5)).unwrap();
        let est = lyapunov_exponent(&c, 10_000, 4);
        assert!((est.value - 2.0f64.ln()).abs() < 1e-3, "{}", est.value);
    }

    #[test]
    fn rotation_has_zero_exponent() {
        let c = Cocycle::constant(Frequency::golden(), Mat2::rotation_turns(0.3)).unwrap();
        let est = lyapunov_exponent(&c, 10_000, 4);
        assert!(est.value < 1e-6);
    }

    #[test]
    fn hyperbolic_schrodinger_matrix() {
        // S_E with E = 3: top eigenvalue (3+√5)/2
        let c = Cocycle::constant(Frequency::golden(), Mat2::new(3.0, -1.0, 1.0, 0.0)).unwrap();
        let est = lyapunov_exponent(&c, 20_000, 4);
        let want = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        assert!((est.value - want).abs() < 1e-3, "{} vs {want}", est.value);
    }
}
