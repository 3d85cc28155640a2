//! Dense 2×2 real matrices with the closed forms SL(2,ℝ) work keeps needing:
//! exponential/logarithm of trace-free and unimodular matrices, rotation
//! matrices parametrized in turns, elliptic normal forms, spectral
//! classification.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

/// Spectral class of an SL(2,ℝ) matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sl2Class {
    /// |tr| < 2, eigenvalues e^{±2πiρ}; carries the rotation number ρ ∈ (0,1)\{1/2}.
    Elliptic(f64),
    /// tr = ±2 within tolerance; `true` for the +2 branch.
    Parabolic(bool),
    /// |tr| > 2; carries the eigenvalue with |λ| > 1 (sign included).
    Hyperbolic(f64),
}

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Mat2::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Counterclockwise rotation by `phi` turns: R_φ = [[cos 2πφ, −sin 2πφ], [sin 2πφ, cos 2πφ]].
    pub fn rotation_turns(phi: f64) -> Self {
        let (s, c) = (TAU * phi).sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, d)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Adjugate; equals the inverse when det = 1.
    pub fn adjugate(&self) -> Self {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        let adj = self.adjugate();
        Mat2::new(adj.a11 / d, adj.a12 / d, adj.a21 / d, adj.a22 / d)
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22)
            .sqrt()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        let q = self.a11 * self.a11
            + self.a12 * self.a12
            + self.a21 * self.a21
            + self.a22 * self.a22;
        let d = self.det();
        let disc = (q * q - 4.0 * d * d).max(0.0).sqrt();
        (0.5 * (q + disc)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    /// Exponential of a trace-free matrix. With q = −det X one has X² = qI, so
    /// e^X = c(q)·I + m(q)·X with c = cosh√q, m = sinh√q/√q (trig branch for q < 0).
    pub fn exp_sl2(&self) -> Mat2 {
        debug_assert!(
            self.trace().abs() <= 1e-9 * (1.0 + self.max_abs()),
            "exp_sl2 expects a trace-free matrix"
        );
        let q = -self.det();
        let (c, m) = cosh_sinhc(q);
        Mat2::new(
            c + m * self.a11,
            m * self.a12,
            m * self.a21,
            c + m * self.a22,
        )
    }

    /// Principal logarithm of an SL(2,ℝ) matrix with trace > −2.
    ///
    /// Cayley–Hamilton gives (M − sI)² = (s² − 1)I with s = tr/2, so
    /// log M = g(s)·(M − sI) where g = t/sin t (elliptic), t/sinh t
    /// (hyperbolic) or the Taylor series in between. The result is trace-free.
    pub fn log_sl2(&self) -> Result<Mat2> {
        let s = 0.5 * self.trace();
        if s <= -1.0 + 1e-12 {
            return Err(Error::LogBranch(self.trace()));
        }
        let g = if s < 1.0 - 1e-7 {
            // elliptic: t = arccos s in (0, π)
            let t = s.clamp(-1.0, 1.0).acos();
            t / t.sin()
        } else if s > 1.0 + 1e-7 {
            let t = (s + (s * s - 1.0).sqrt()).ln();
            t / ((s * s - 1.0).sqrt())
        } else {
            // near-parabolic: g(s) = 1 + (s-1)/3·(1 + ...) via series of t/sin t at t→0
            let u = s - 1.0;
            1.0 - u / 3.0 + 2.0 * u * u / 15.0
        };
        Ok(Mat2::new(
            g * (self.a11 - s),
            g * self.a12,
            g * self.a21,
            g * (self.a22 - s),
        ))
    }

    /// Spectral classification with tolerance on |tr| − 2.
    pub fn classify(&self, tol: f64) -> Sl2Class {
        let t = self.trace();
        if t.abs() < 2.0 - tol {
            Sl2Class::Elliptic(self.rotation_number())
        } else if t.abs() <= 2.0 + tol {
            Sl2Class::Parabolic(t > 0.0)
        } else {
            let s = 0.5 * t;
            let lam = s + s.signum() * (s * s - 1.0).sqrt();
            Sl2Class::Hyperbolic(lam)
        }
    }

    /// Rotation number of the constant cocycle (θ, v) ↦ (θ+α, Mv), in [0,1).
    ///
    /// Elliptic matrices rotate by ±arccos(tr/2); the sign is the sign of
    /// a21 − a12 (the antisymmetric part, positive for R_φ with φ ∈ (0,1/2)).
    /// Non-elliptic positive-trace matrices give 0, negative trace 1/2.
    pub fn rotation_number(&self) -> f64 {
        let s = 0.5 * self.trace();
        if s.abs() < 1.0 {
            let phi = s.acos() / TAU; // in (0, 1/2)
            if self.a21 - self.a12 >= 0.0 {
                phi
            } else {
                1.0 - phi
            }
        } else if s >= 1.0 {
            0.0
        } else {
            0.5
        }
    }

    /// For elliptic M, a P ∈ SL(2,ℝ) and φ ∈ (0,1) with P M P⁻¹ = R_φ.
    ///
    /// Among the one-parameter family of valid frames, picks the basis point
    /// minimizing ‖P‖‖P⁻¹‖.
    pub fn elliptic_normal_form(&self) -> Result<(Mat2, f64)> {
        let s = 0.5 * self.trace();
        if s.abs() >= 1.0 - 1e-12 {
            return Err(Error::NotElliptic(self.trace().abs()));
        }
        let phi = self.rotation_number(); // in (0,1)\{1/2}
        let sin_t = (TAU * phi).sin(); // carries the rotation sign
        // N = (M - sI)/sin t satisfies N² = -I and is conjugate to J = R_{1/4}.
        let n = Mat2::new(
            (self.a11 - s) / sin_t,
            self.a12 / sin_t,
            self.a21 / sin_t,
            (self.a22 - s) / sin_t,
        );
        // Basis (v, Nv) rescaled to det 1 sends N to J. det(v, Nv) > 0 always
        // (the quadratic form v ∧ Nv is definite for a complex structure with
        // this orientation). Pick v among a few directions for conditioning.
        let mut best: Option<(f64, Mat2)> = None;
        for v in [
            [1.0, 0.0],
            [0.0, 1.0],
            [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
            [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2],
        ] {
            let w = n.apply(v);
            let det = v[0] * w[1] - v[1] * w[0];
            if det <= 1e-14 {
                continue;
            }
            let r = det.sqrt();
            let p_inv = Mat2::new(v[0] / r, w[0] / r, v[1] / r, w[1] / r);
            let p = p_inv.adjugate();
            let cond = p.op_norm() * p_inv.op_norm();
            if best.as_ref().map_or(true, |(c, _)| cond < *c) {
                best = Some((cond, p));
            }
        }
        let (_, p) = best.ok_or_else(|| {
            Error::InconsistentState("elliptic frame search found no positive basis".into())
        })?;
        Ok((p, phi))
    }
}

/// (cosh √q, sinh √q / √q) with the trig branch for q < 0 and a series near 0.
fn cosh_sinhc(q: f64) -> (f64, f64) {
    if q.abs() < 1e-8 {
        (
            1.0 + q / 2.0 + q * q / 24.0,
            1.0 + q / 6.0 + q * q / 120.0,
        )
    } else if q > 0.0 {
        let r = q.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-q).sqrt();
        (r.cos(), r.sin() / r)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + o.a11,
            self.a12 + o.a12,
            self.a21 + o.a21,
            self.a22 + o.a22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 - o.a11,
            self.a12 - o.a12,
            self.a21 - o.a21,
            self.a22 - o.a22,
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exp_of_zero_is_identity() {
        let e = Mat2::zero().exp_sl2();
        assert_abs_diff_eq!(e.a11, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.a12, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.det(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_diag_closed_form() {
        let t = 0.37;
        let e = Mat2::diag(t, -t).exp_sl2();
        assert_abs_diff_eq!(e.a11, t.exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e.a22, (-t).exp(), epsilon = 1e-14);
    }

    #[test]
    fn exp_rotation_generator() {
        let phi = 0.21;
        let x = Mat2::new(0.0, -TAU * phi, TAU * phi, 0.0);
        let e = x.exp_sl2();
        let r = Mat2::rotation_turns(phi);
        assert!((e - r).max_abs() < 1e-14);
    }

    #[test]
    fn log_inverts_exp() {
        let x = Mat2::new(0.3, -0.1, 0.7, -0.3);
        let m = x.exp_sl2();
        let y = m.log_sl2().unwrap();
        assert!((x - y).max_abs() < 1e-12);
    }

    #[test]
    fn log_of_parabolic() {
        let m = Mat2::new(1.0, 0.8, 0.0, 1.0);
        let y = m.log_sl2().unwrap();
        assert!((y - Mat2::new(0.0, 0.8, 0.0, 0.0)).max_abs() < 1e-7);
    }

    #[test]
    fn log_negative_branch_rejected() {
        let m = Mat2::diag(-2.0, -0.5);
        assert!(m.log_sl2().is_err());
    }

    #[test]
    fn rotation_number_of_rotations() {
        for phi in [0.07, 0.25, 0.49, 0.51, 0.93] {
            let r = Mat2::rotation_turns(phi);
            assert_abs_diff_eq!(r.rotation_number(), phi, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(Mat2::diag(2.0, 0.5).rotation_number(), 0.0);
        assert_abs_diff_eq!(Mat2::diag(-2.0, -0.5).rotation_number(), 0.5);
    }

    #[test]
    fn elliptic_normal_form_recovers_rotation() {
        let p0 = Mat2::new(1.3, 0.4, 0.2, (1.0 + 0.4 * 0.2) / 1.3);
        assert_abs_diff_eq!(p0.det(), 1.0, epsilon = 1e-12);
        for phi in [0.11, 0.37, 0.68] {
            let m = p0 * Mat2::rotation_turns(phi) * p0.inverse();
            let (p, phi_out) = m.elliptic_normal_form().unwrap();
            assert_abs_diff_eq!(phi_out, phi, epsilon = 1e-12);
            let r = p * m * p.adjugate();
            assert!((r - Mat2::rotation_turns(phi)).max_abs() < 1e-12);
            assert_abs_diff_eq!(p.det(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn op_norm_matches_svd_cases() {
        assert_abs_diff_eq!(Mat2::diag(3.0, 0.5).op_norm(), 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            Mat2::rotation_turns(0.3).op_norm(),
            1.0,
            epsilon = 1e-13
        );
    }
}
