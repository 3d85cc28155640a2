//! Topological degree of a torus-valued SL(2,ℝ) map: the winding of the
//! first-column direction along each fundamental cycle.

use crate::error::{Error, Result};
use crate::fourier::MatrixTorusFunction;
use std::f64::consts::{PI, TAU};

const MAX_SAMPLES: usize = 1 << 20;

/// Winding numbers along the d fundamental cycles, by continuous angle
/// tracking with adaptive grid doubling (jump threshold π/4).
pub fn degree(b: &MatrixTorusFunction) -> Result<Vec<i64>> {
    let d = b.d();
    let period = b.a11.period();
    let mut out = Vec::with_capacity(d);
    for axis in 0..d {
        let mut n = 256usize;
        loop {
            match winding_pass(b, axis, n, period, d) {
                Ok(w) => {
                    out.push(w);
                    break;
                }
                Err(Error::WindingUnresolved(_)) if n < MAX_SAMPLES => {
                    n *= 4;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn winding_pass(
    b: &MatrixTorusFunction,
    axis: usize,
    n: usize,
    period: f64,
    d: usize,
) -> Result<i64> {
    let mut theta = vec![0.0f64; d];
    let col_angle = |theta: &[f64]| -> Result<f64> {
        let m = b.eval(theta);
        let (x, y) = (m.a11, m.a21);
        if x.hypot(y) < 1e-13 {
            return Err(Error::DegenerateColumn);
        }
        Ok(y.atan2(x))
    };
    let mut total = 0.0f64;
    let mut prev = col_angle(&theta)?;
    for i in 1..=n {
        theta[axis] = period * i as f64 / n as f64;
        let cur = col_angle(&theta)?;
        let mut jump = cur - prev;
        jump -= TAU * (jump / TAU).round();
        if jump.abs() >= PI / 4.0 {
            return Err(Error::WindingUnresolved(n));
        }
        total += jump;
        prev = cur;
    }
    let w = total / TAU;
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::WindingUnresolved(n));
    }
    Ok(w.round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::ModeIndex;
    use crate::mat2::Mat2;

    #[test]
    fn identity_has_degree_zero() {
        let id = MatrixTorusFunction::identity(1);
        assert_eq!(degree(&id).unwrap(), vec![0]);
    }

    #[test]
    fn full_winding_rotation() {
        for m in [-2i64, 1, 3] {
            let b = MatrixTorusFunction::rotation_full_winding(1, &ModeIndex::one(m));
            assert_eq!(degree(&b).unwrap(), vec![m]);
        }
    }

    #[test]
    fn half_winding_on_doubled_torus() {
        // R_{⟨m,θ⟩/2} winds m times over the doubled cycle
        for m in [1i64, -3] {
            let b = MatrixTorusFunction::rotation_half_winding(1, &ModeIndex::one(m));
            assert_eq!(degree(&b).unwrap(), vec![m]);
        }
    }

    #[test]
    fn additivity_on_products() {
        let b1 = MatrixTorusFunction::rotation_full_winding(1, &ModeIndex::one(2));
        let b2 = MatrixTorusFunction::rotation_full_winding(1, &ModeIndex::one(-5));
        let prod = b1.mul(&b2).unwrap();
        assert_eq!(degree(&prod).unwrap(), vec![-3]);
    }

    #[test]
    fn two_dimensional_winding() {
        let b = MatrixTorusFunction::rotation_full_winding(2, &ModeIndex::two(1, -2));
        assert_eq!(degree(&b).unwrap(), vec![1, -2]);
    }

    #[test]
    fn constant_conjugation_does_not_change_degree() {
        let p = Mat2::new(1.4, 0.3, 0.1, (1.0 + 0.03) / 1.4);
        let b = MatrixTorusFunction::rotation_full_winding(1, &ModeIndex::one(2))
            .conjugate_by_const(p);
        assert_eq!(degree(&b).unwrap(), vec![2]);
    }
}
