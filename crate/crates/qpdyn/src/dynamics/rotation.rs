//! Fibered rotation number by averaged lifted angle increments.
//!
//! Two estimators run side by side on every orbit: the plain Birkhoff mean
//! and an exponentially weighted mean that converges super-polynomially on
//! smoothly conjugated orbits. The reported value is whichever shows the
//! smaller spread across initial conditions — parabolic edges favor the
//! plain mean, elliptic interiors the weighted one.

use super::{degree, phase_point, Cocycle, OrbitEval};
use crate::config::RotationQuality;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Representative in [0, 1).
    pub rho: f64,
    pub n_iters: u64,
    /// Observed spread across phases plus the O(1/n) floor.
    pub error_bound: f64,
    /// True if the weighted mean was selected over the plain mean.
    pub weighted: bool,
}

/// Fold a rotation number into the Schrödinger convention [0, 1/2] using the
/// ρ ↔ 1 − ρ symmetry.
pub fn fold_half(rho: f64) -> f64 {
    let r = rho.rem_euclid(1.0);
    r.min(1.0 - r)
}

fn wrap_to_pi(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

struct PhaseResult {
    plain: f64,
    weighted: f64,
}

fn run_phase(c: &Cocycle, theta0: &[f64], angle0: f64, n: u64, weights: &[f64]) -> PhaseResult {
    // short pre-pass estimating the increment cluster center, so the branch
    // window (c₀ − π, c₀ + π] can hold the whole distribution
    let n_pre = n.min(2048);
    let center = {
        let mut orbit = OrbitEval::new(&c.amap, theta0, &c.freq);
        let mut v = [angle0.cos(), angle0.sin()];
        let (mut sx, mut sy) = (0.0f64, 0.0f64);
        for _ in 0..n_pre {
            let m = orbit.current();
            let w = m.apply(v);
            let delta = (w[1] * v[0] - w[0] * v[1]).atan2(w[0] * v[0] + w[1] * v[1]);
            sx += delta.cos();
            sy += delta.sin();
            let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
            v = [w[0] / norm, w[1] / norm];
            orbit.step();
        }
        sy.atan2(sx)
    };

    let mut orbit = OrbitEval::new(&c.amap, theta0, &c.freq);
    let mut v = [angle0.cos(), angle0.sin()];
    let mut sum = 0.0f64;
    let mut wsum = 0.0f64;
    let mut wtot = 0.0f64;
    for t in 0..n {
        let m = orbit.current();
        let w = m.apply(v);
        let raw = (w[1] * v[0] - w[0] * v[1]).atan2(w[0] * v[0] + w[1] * v[1]);
        let delta = center + wrap_to_pi(raw - center);
        sum += delta;
        let wt = weights[t as usize];
        wsum += wt * delta;
        wtot += wt;
        let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
        v = [w[0] / norm, w[1] / norm];
        orbit.step();
    }
    PhaseResult {
        plain: sum / (TAU * n as f64),
        weighted: wsum / (TAU * wtot),
    }
}

fn circular_mean(values: &[f64]) -> f64 {
    let (mut sx, mut sy) = (0.0, 0.0);
    for v in values {
        sx += (TAU * v).cos();
        sy += (TAU * v).sin();
    }
    (sy.atan2(sx) / TAU).rem_euclid(1.0)
}

fn circular_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Birkhoff-averaged fibered rotation number of a degree-zero cocycle.
///
/// Refuses maps not homotopic to the identity; conjugate the degree away
/// first.
pub fn rotation_number(c: &Cocycle, q: &RotationQuality) -> Result<RotationEstimate> {
    let deg = degree(&c.amap)?;
    if deg.iter().any(|&x| x != 0) {
        return Err(Error::NonZeroDegree(deg));
    }
    rotation_number_unchecked(c, q)
}

/// Same estimator without the homotopy-class precondition; for internal use
/// on cocycles whose degree is known to vanish by construction.
pub fn rotation_number_unchecked(c: &Cocycle, q: &RotationQuality) -> Result<RotationEstimate> {
    let n = q.n_iters.max(16);
    // Das–Yorke style bump weights; index t ↦ exp(−1/(s(1−s))), s=(t+1)/(n+1)
    let weights: Vec<f64> = (0..n)
        .map(|t| {
            let s = (t as f64 + 1.0) / (n as f64 + 1.0);
            (-1.0 / (s * (1.0 - s))).exp()
        })
        .collect();
    let results: Vec<PhaseResult> = (0..q.n_phases)
        .into_par_iter()
        .map(|p| {
            let theta0 = phase_point(c.d(), p, 0.377);
            let angle0 = PI * (p as f64 + 0.25) / q.n_phases as f64;
            run_phase(c, &theta0, angle0, n, &weights)
        })
        .collect();

    let plain: Vec<f64> = results.iter().map(|r| r.plain.rem_euclid(1.0)).collect();
    let weighted: Vec<f64> = results.iter().map(|r| r.weighted.rem_euclid(1.0)).collect();
    let mp = circular_mean(&plain);
    let mw = circular_mean(&weighted);
    let sp = plain
        .iter()
        .map(|v| circular_dist(*v, mp))
        .fold(0.0, f64::max);
    let sw = weighted
        .iter()
        .map(|v| circular_dist(*v, mw))
        .fold(0.0, f64::max);
    let use_weighted = sw <= sp;
    let (rho, spread) = if use_weighted { (mw, sw) } else { (mp, sp) };
    Ok(RotationEstimate {
        rho,
        n_iters: n,
        error_bound: spread + 1.0 / n as f64,
        weighted: use_weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::Frequency;
    use crate::mat2::Mat2;

    #[test]
    fn rigid_rotation_measured_exactly() {
        for phi in [0.05, 0.3, 0.62, 0.97] {
            let c = Cocycle::constant(Frequency::golden(), Mat2::rotation_turns(phi)).unwrap();
            let est = rotation_number(&c, &RotationQuality::FAST).unwrap();
            assert!(
                circular_dist(est.rho, phi) < 1e-9,
                "phi={phi}, got {}",
                est.rho
            );
        }
    }

    #[test]
    fn constant_elliptic_schrodinger_matrix() {
        // S_E with V = 0: rho = arccos(E/2)/2π
        for e in [0.0f64, 1.0, -1.3] {
            let m = Mat2::new(e, -1.0, 1.0, 0.0);
            let c = Cocycle::constant(Frequency::golden(), m).unwrap();
            let est = rotation_number(&c, &RotationQuality::FAST).unwrap();
            let want = (e / 2.0).acos() / TAU;
            assert!(
                circular_dist(est.rho, want) < 1e-6,
                "E={e}: got {} want {want}",
                est.rho
            );
        }
    }

    #[test]
    fn parabolic_edges() {
        let top = Cocycle::constant(Frequency::golden(), Mat2::new(2.0, -1.0, 1.0, 0.0)).unwrap();
        let est = rotation_number(&top, &RotationQuality::FAST).unwrap();
        assert!(fold_half(est.rho) < 1e-3, "top edge: {}", est.rho);
        let bottom =
            Cocycle::constant(Frequency::golden(), Mat2::new(-2.0, -1.0, 1.0, 0.0)).unwrap();
        let est = rotation_number(&bottom, &RotationQuality::FAST).unwrap();
        assert!((fold_half(est.rho) - 0.5).abs() < 1e-3, "bottom: {}", est.rho);
    }

    #[test]
    fn error_bound_shrinks_with_iterations() {
        let shear = crate::fourier::ScalarTorusFunction::cosine(
            1,
            crate::fourier::ModeIndex::one(1),
            0.2,
        );
        let one = crate::fourier::ScalarTorusFunction::constant(1, 1.0);
        let zero = crate::fourier::ScalarTorusFunction::zero(1);
        let upper = crate::fourier::MatrixTorusFunction::from_entries(
            one.clone(),
            shear,
            zero,
            one,
        )
        .unwrap();
        let rot =
            crate::fourier::MatrixTorusFunction::constant(1, Mat2::rotation_turns(0.23));
        let c = Cocycle::new(Frequency::golden(), rot.mul(&upper).unwrap()).unwrap();
        let lo = rotation_number(
            &c,
            &RotationQuality {
                n_iters: 2_000,
                n_phases: 8,
            },
        )
        .unwrap();
        let hi = rotation_number(
            &c,
            &RotationQuality {
                n_iters: 64_000,
                n_phases: 8,
            },
        )
        .unwrap();
        assert!(hi.error_bound < lo.error_bound);
        assert!(circular_dist(lo.rho, hi.rho) < lo.error_bound + hi.error_bound);
    }
}
