//! Dynamical quantities of quasi-periodic SL(2,ℝ) cocycles: iteration,
//! fibered rotation number, Lyapunov exponent, topological degree, uniform
//! hyperbolicity certificates, conjugation.

mod degree;
mod lyapunov;
mod rotation;
mod uh;

pub use degree::degree;
pub use lyapunov::{lyapunov_exponent, LyapunovEstimate};
pub use rotation::{fold_half, rotation_number, RotationEstimate};
pub use uh::{is_uniformly_hyperbolic, is_uniformly_hyperbolic_hinted, UhCertificate};

use crate::config::TOL_STRUCT;
use crate::error::Result;
use crate::fourier::MatrixTorusFunction;
use crate::freq::Frequency;
use crate::mat2::Mat2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// A quasi-periodic cocycle (α, A): (θ, v) ↦ (θ + α, A(θ)v) with A an
/// SL(2,ℝ)-valued torus function (constants as the degenerate case).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cocycle {
    pub freq: Frequency,
    pub amap: MatrixTorusFunction,
}

impl Cocycle {
    pub fn new(freq: Frequency, amap: MatrixTorusFunction) -> Result<Self> {
        if freq.d() != amap.d() {
            return Err(crate::Error::DimensionMismatch(freq.d(), amap.d()));
        }
        amap.check_sl2(TOL_STRUCT * (1.0 + amap.coeff_norm().powi(2)))?;
        Ok(Cocycle { freq, amap })
    }

    pub fn constant(freq: Frequency, m: Mat2) -> Result<Self> {
        let d = freq.d();
        Self::new(freq, MatrixTorusFunction::constant(d, m))
    }

    pub fn d(&self) -> usize {
        self.freq.d()
    }

    /// A_n(θ): A(θ+(n−1)α)···A(θ) for n > 0, the inverse-product convention
    /// for n < 0, identity at n = 0.
    pub fn transfer_product(&self, theta: &[f64], n: i64) -> Mat2 {
        let alpha = self.freq.alpha();
        let mut p = Mat2::identity();
        if n >= 0 {
            let mut th: Vec<f64> = theta.to_vec();
            for _ in 0..n {
                p = self.amap.eval(&th) * p;
                for (t, a) in th.iter_mut().zip(alpha) {
                    *t += a;
                }
            }
        } else {
            // A_{-n}(θ) = A_n(θ - nα)^{-1}
            let mut th: Vec<f64> = theta.to_vec();
            for (t, a) in th.iter_mut().zip(alpha) {
                *t += n as f64 * a;
            }
            let back = self.transfer_product(&th, -n);
            p = back.adjugate(); // det = 1
        }
        p
    }

    /// Conjugated cocycle (α, b(θ+α) A(θ) b(θ)⁻¹). The rotation number moves
    /// by ⟨deg b, α⟩/2.
    pub fn conjugate(&self, b: &MatrixTorusFunction) -> Result<Cocycle> {
        b.check_sl2(TOL_STRUCT * (1.0 + b.coeff_norm().powi(2)))?;
        let shifted = b.shift_by_freq(&self.freq);
        let amap = shifted.mul(&self.amap)?.mul(&b.adjugate_sl2())?;
        let amap = amap.try_demote().unwrap_or(amap);
        Ok(Cocycle {
            freq: self.freq.clone(),
            amap,
        })
    }
}

impl MatrixTorusFunction {
    /// Shift by the frequency vector, honoring the torus period of `self`.
    pub fn shift_by_freq(&self, freq: &Frequency) -> Self {
        self.shift(freq.alpha())
    }
}

/// Streams A(θ₀ + tα) along an orbit in O(#modes) per step using per-mode
/// phase accumulators instead of trigonometric evaluation.
pub struct OrbitEval {
    phases: Vec<Complex64>,
    multipliers: Vec<Complex64>,
    terms: [Vec<(usize, Complex64)>; 4],
    t: u64,
}

impl OrbitEval {
    pub fn new(amap: &MatrixTorusFunction, theta0: &[f64], freq: &Frequency) -> Self {
        let s = if amap.is_double() { 0.5 } else { 1.0 };
        let support: Vec<_> = amap.mode_support().into_iter().collect();
        let mut phases = Vec::with_capacity(support.len());
        let mut multipliers = Vec::with_capacity(support.len());
        for m in &support {
            let mut ph0 = m.0[0] as f64 * theta0[0];
            let mut pha = freq.dot(m);
            if theta0.len() == 2 {
                ph0 += m.0[1] as f64 * theta0[1];
            }
            pha *= s;
            ph0 *= s;
            let (i0, r0) = (TAU * ph0).sin_cos();
            let (ia, ra) = (TAU * pha).sin_cos();
            phases.push(Complex64::new(r0, i0));
            multipliers.push(Complex64::new(ra, ia));
        }
        let mk = |f: &crate::fourier::ScalarTorusFunction| {
            support
                .iter()
                .enumerate()
                .filter_map(|(i, m)| {
                    let c = f.coeff(m);
                    (c.norm() > 0.0).then_some((i, c))
                })
                .collect::<Vec<_>>()
        };
        OrbitEval {
            phases,
            multipliers,
            terms: [mk(&amap.a11), mk(&amap.a12), mk(&amap.a21), mk(&amap.a22)],
            t: 0,
        }
    }

    /// A(θ₀ + tα) at the current step t.
    pub fn current(&self) -> Mat2 {
        let entry = |terms: &[(usize, Complex64)]| -> f64 {
            terms
                .iter()
                .map(|(i, c)| (c * self.phases[*i]).re)
                .sum()
        };
        Mat2::new(
            entry(&self.terms[0]),
            entry(&self.terms[1]),
            entry(&self.terms[2]),
            entry(&self.terms[3]),
        )
    }

    pub fn step(&mut self) {
        for (z, w) in self.phases.iter_mut().zip(&self.multipliers) {
            *z *= w;
        }
        self.t += 1;
        // keep |z| = 1 against multiplicative drift
        if self.t % 4096 == 0 {
            for z in self.phases.iter_mut() {
                *z /= z.norm();
            }
        }
    }
}

/// Low-discrepancy points in T^d used for phase averaging; deterministic.
pub(crate) fn phase_point(d: usize, index: u32, seed: f64) -> Vec<f64> {
    // Kronecker sequence driven by plastic-ratio-like irrationals.
    const G1: f64 = 0.754_877_666_246_692_8;
    const G2: f64 = 0.569_840_290_998_053_2;
    let x = (seed + G1 * index as f64).rem_euclid(1.0);
    if d == 1 {
        vec![x]
    } else {
        vec![x, (seed + G2 * index as f64).rem_euclid(1.0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{ModeIndex, ScalarTorusFunction};
    use approx::assert_abs_diff_eq;

    fn small_cocycle() -> Cocycle {
        // rotation composed with a one-mode shear; SL(2,R) exactly
        let shear = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 0.3);
        let one = ScalarTorusFunction::constant(1, 1.0);
        let zero = ScalarTorusFunction::zero(1);
        let upper =
            MatrixTorusFunction::from_entries(one.clone(), shear, zero.clone(), one.clone())
                .unwrap();
        let rot = MatrixTorusFunction::constant(1, Mat2::rotation_turns(0.17));
        let amap = rot.mul(&upper).unwrap();
        Cocycle::new(Frequency::golden(), amap).unwrap()
    }

    #[test]
    fn transfer_product_identity_and_powers() {
        let c = small_cocycle();
        let th = [0.3];
        assert!((c.transfer_product(&th, 0) - Mat2::identity()).max_abs() < 1e-15);
        let k = Mat2::new(1.1, 0.2, 0.3, (1.0 + 0.2 * 0.3) / 1.1);
        let cc = Cocycle::constant(Frequency::golden(), k).unwrap();
        let p5 = cc.transfer_product(&th, 5);
        let direct = k * k * k * k * k;
        assert!((p5 - direct).max_abs() < 1e-12);
    }

    #[test]
    fn transfer_product_matches_naive_loop() {
        let c = small_cocycle();
        let th = [0.3];
        let n = 8;
        let mut naive = Mat2::identity();
        for t in 0..n {
            let tht = [th[0] + t as f64 * c.freq.alpha()[0]];
            naive = c.amap.eval(&tht) * naive;
        }
        assert!((c.transfer_product(&th, n) - naive).max_abs() < 1e-12);
    }

    #[test]
    fn transfer_cocycle_property_and_inverse() {
        let c = small_cocycle();
        let th = [0.12];
        let a = c.freq.alpha()[0];
        let (m, n) = (5i64, 7i64);
        let lhs = c.transfer_product(&th, m + n);
        let rhs = c.transfer_product(&[th[0] + n as f64 * a], m) * c.transfer_product(&th, n);
        assert!((lhs - rhs).max_abs() < 1e-10);
        let fwd = c.transfer_product(&th, 6);
        let bwd = c.transfer_product(&[th[0] + 6.0 * a], -6);
        assert!((bwd * fwd - Mat2::identity()).max_abs() < 1e-10);
    }

    #[test]
    fn orbit_eval_matches_direct_evaluation() {
        let c = small_cocycle();
        let th = [0.41];
        let mut orbit = OrbitEval::new(&c.amap, &th, &c.freq);
        for t in 0..200 {
            let tht = [th[0] + t as f64 * c.freq.alpha()[0]];
            assert!((orbit.current() - c.amap.eval(&tht)).max_abs() < 1e-11);
            orbit.step();
        }
    }

    #[test]
    fn conjugation_by_identity_and_constant() {
        let c = small_cocycle();
        let id = MatrixTorusFunction::identity(1);
        let c2 = c.conjugate(&id).unwrap();
        assert!(c2.amap.sub(&c.amap).unwrap().coeff_norm() < 1e-14);

        let p = Mat2::rotation_turns(0.1);
        let cp = c
            .conjugate(&MatrixTorusFunction::constant(1, p))
            .unwrap();
        for th in [0.0, 0.3, 0.77] {
            let want = p * c.amap.eval(&[th]) * p.adjugate();
            assert_abs_diff_eq!(cp.amap.eval(&[th]).a11, want.a11, epsilon = 1e-12);
        }
    }
}
