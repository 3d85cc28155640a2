use super::{grid, ModeIndex, ScalarTorusFunction};
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// 2×2 matrix-valued torus function; four scalar entries sharing d and the
/// torus flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixTorusFunction {
    pub a11: ScalarTorusFunction,
    pub a12: ScalarTorusFunction,
    pub a21: ScalarTorusFunction,
    pub a22: ScalarTorusFunction,
}

impl MatrixTorusFunction {
    pub fn from_entries(
        a11: ScalarTorusFunction,
        a12: ScalarTorusFunction,
        a21: ScalarTorusFunction,
        a22: ScalarTorusFunction,
    ) -> Result<Self> {
        let d = a11.d();
        for e in [&a12, &a21, &a22] {
            if e.d() != d {
                return Err(Error::DimensionMismatch(d, e.d()));
            }
        }
        let double = a11.is_double() || a12.is_double() || a21.is_double() || a22.is_double();
        let promote = |f: ScalarTorusFunction| {
            if double && !f.is_double() {
                f.promote_to_double()
            } else {
                f
            }
        };
        Ok(MatrixTorusFunction {
            a11: promote(a11),
            a12: promote(a12),
            a21: promote(a21),
            a22: promote(a22),
        })
    }

    pub fn zero(d: usize) -> Self {
        let z = ScalarTorusFunction::zero(d);
        MatrixTorusFunction {
            a11: z.clone(),
            a12: z.clone(),
            a21: z.clone(),
            a22: z,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::constant(d, Mat2::identity())
    }

    pub fn constant(d: usize, m: Mat2) -> Self {
        MatrixTorusFunction {
            a11: ScalarTorusFunction::constant(d, m.a11),
            a12: ScalarTorusFunction::constant(d, m.a12),
            a21: ScalarTorusFunction::constant(d, m.a21),
            a22: ScalarTorusFunction::constant(d, m.a22),
        }
    }

    /// The half-winding rotation θ ↦ R_{⟨m,θ⟩/2}, a doubled-torus map.
    pub fn rotation_half_winding(d: usize, m: &ModeIndex) -> Self {
        let cos = ScalarTorusFunction::from_half_modes(
            d,
            true,
            &[(*m, Complex64::new(0.5, 0.0))],
        );
        let sin = ScalarTorusFunction::from_half_modes(
            d,
            true,
            &[(*m, Complex64::new(0.0, -0.5))],
        );
        MatrixTorusFunction {
            a11: cos.clone(),
            a12: sin.scale(-1.0),
            a21: sin,
            a22: cos,
        }
    }

    /// The full-winding rotation θ ↦ R_{⟨m,θ⟩} on the single torus.
    pub fn rotation_full_winding(d: usize, m: &ModeIndex) -> Self {
        let cos = ScalarTorusFunction::cosine(d, *m, 1.0);
        let sin = ScalarTorusFunction::sine(d, *m, 1.0);
        MatrixTorusFunction {
            a11: cos.clone(),
            a12: sin.scale(-1.0),
            a21: sin,
            a22: cos,
        }
    }

    pub fn d(&self) -> usize {
        self.a11.d()
    }

    pub fn is_double(&self) -> bool {
        self.a11.is_double()
    }

    pub fn entries(&self) -> [&ScalarTorusFunction; 4] {
        [&self.a11, &self.a12, &self.a21, &self.a22]
    }

    pub fn support_radius(&self) -> i64 {
        self.entries()
            .iter()
            .map(|e| e.support_radius())
            .max()
            .unwrap_or(0)
    }

    pub fn promote_to_double(&self) -> Self {
        MatrixTorusFunction {
            a11: self.a11.promote_to_double(),
            a12: self.a12.promote_to_double(),
            a21: self.a21.promote_to_double(),
            a22: self.a22.promote_to_double(),
        }
    }

    pub fn try_demote(&self) -> Option<Self> {
        Some(MatrixTorusFunction {
            a11: self.a11.try_demote()?,
            a12: self.a12.try_demote()?,
            a21: self.a21.try_demote()?,
            a22: self.a22.try_demote()?,
        })
    }

    pub fn eval(&self, theta: &[f64]) -> Mat2 {
        Mat2::new(
            self.a11.eval_real(theta),
            self.a12.eval_real(theta),
            self.a21.eval_real(theta),
            self.a22.eval_real(theta),
        )
    }

    pub fn shift(&self, alpha: &[f64]) -> Self {
        MatrixTorusFunction {
            a11: self.a11.shift(alpha),
            a12: self.a12.shift(alpha),
            a21: self.a21.shift(alpha),
            a22: self.a22.shift(alpha),
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        Ok(MatrixTorusFunction {
            a11: self.a11.add(&o.a11)?,
            a12: self.a12.add(&o.a12)?,
            a21: self.a21.add(&o.a21)?,
            a22: self.a22.add(&o.a22)?,
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        Ok(MatrixTorusFunction {
            a11: self.a11.sub(&o.a11)?,
            a12: self.a12.sub(&o.a12)?,
            a21: self.a21.sub(&o.a21)?,
            a22: self.a22.sub(&o.a22)?,
        })
    }

    /// Pointwise matrix product, exact in mode space.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        Ok(MatrixTorusFunction {
            a11: self.a11.mul(&o.a11)?.add(&self.a12.mul(&o.a21)?)?,
            a12: self.a11.mul(&o.a12)?.add(&self.a12.mul(&o.a22)?)?,
            a21: self.a21.mul(&o.a11)?.add(&self.a22.mul(&o.a21)?)?,
            a22: self.a21.mul(&o.a12)?.add(&self.a22.mul(&o.a22)?)?,
        })
    }

    pub fn mul_const_left(&self, m: Mat2) -> Self {
        MatrixTorusFunction {
            a11: self.a11.scale(m.a11).add(&self.a21.scale(m.a12)).unwrap(),
            a12: self.a12.scale(m.a11).add(&self.a22.scale(m.a12)).unwrap(),
            a21: self.a11.scale(m.a21).add(&self.a21.scale(m.a22)).unwrap(),
            a22: self.a12.scale(m.a21).add(&self.a22.scale(m.a22)).unwrap(),
        }
    }

    pub fn mul_const_right(&self, m: Mat2) -> Self {
        MatrixTorusFunction {
            a11: self.a11.scale(m.a11).add(&self.a12.scale(m.a21)).unwrap(),
            a12: self.a11.scale(m.a12).add(&self.a12.scale(m.a22)).unwrap(),
            a21: self.a21.scale(m.a11).add(&self.a22.scale(m.a21)).unwrap(),
            a22: self.a21.scale(m.a12).add(&self.a22.scale(m.a22)).unwrap(),
        }
    }

    /// P · F · P⁻¹ for constant P with det 1.
    pub fn conjugate_by_const(&self, p: Mat2) -> Self {
        self.mul_const_left(p).mul_const_right(p.adjugate())
    }

    pub fn scale(&self, s: f64) -> Self {
        MatrixTorusFunction {
            a11: self.a11.scale(s),
            a12: self.a12.scale(s),
            a21: self.a21.scale(s),
            a22: self.a22.scale(s),
        }
    }

    /// Pointwise inverse, exact when det = 1.
    pub fn adjugate_sl2(&self) -> Self {
        MatrixTorusFunction {
            a11: self.a22.clone(),
            a12: self.a12.scale(-1.0),
            a21: self.a21.scale(-1.0),
            a22: self.a11.clone(),
        }
    }

    pub fn average(&self) -> Mat2 {
        Mat2::new(
            self.a11.average(),
            self.a12.average(),
            self.a21.average(),
            self.a22.average(),
        )
    }

    pub fn truncate(&self, radius: i64) -> Self {
        MatrixTorusFunction {
            a11: self.a11.truncate(radius),
            a12: self.a12.truncate(radius),
            a21: self.a21.truncate(radius),
            a22: self.a22.truncate(radius),
        }
    }

    pub fn clean(&self, floor: f64) -> Self {
        MatrixTorusFunction {
            a11: self.a11.clean(floor),
            a12: self.a12.clean(floor),
            a21: self.a21.clean(floor),
            a22: self.a22.clean(floor),
        }
    }

    /// Union of the entries' mode supports.
    pub fn mode_support(&self) -> BTreeSet<ModeIndex> {
        let mut s = BTreeSet::new();
        for e in self.entries() {
            s.extend(e.coeffs().keys().copied());
        }
        s
    }

    /// Frobenius norm of the coefficient matrix at mode m.
    pub fn coeff_frobenius(&self, m: &ModeIndex) -> f64 {
        self.entries()
            .iter()
            .map(|e| e.coeff(m).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Σ_n ‖F̂(n)‖_F — the C⁰ coefficient majorant used for step bookkeeping.
    pub fn coeff_norm(&self) -> f64 {
        self.mode_support()
            .iter()
            .map(|m| self.coeff_frobenius(m))
            .sum()
    }

    /// Majorant of the distance to the mean, Σ_{n≠0} ‖F̂(n)‖_F.
    pub fn coeff_norm_nonconst(&self) -> f64 {
        self.mode_support()
            .iter()
            .filter(|m| !m.is_zero())
            .map(|m| self.coeff_frobenius(m))
            .sum()
    }

    /// det − 1 as a torus function; its coefficient majorant bounds the grid sup.
    pub fn det_defect(&self) -> Result<f64> {
        let det = self
            .a11
            .mul(&self.a22)?
            .sub(&self.a12.mul(&self.a21)?)?;
        let one = ScalarTorusFunction::constant(self.d(), 1.0);
        let one = if det.is_double() {
            one.promote_to_double()
        } else {
            one
        };
        Ok(det.sub(&one)?.coeff_norm())
    }

    pub fn check_sl2(&self, tol: f64) -> Result<()> {
        let defect = self.det_defect()?;
        if defect > tol {
            return Err(Error::NotSl2(defect));
        }
        Ok(())
    }

    pub fn trace_defect(&self) -> f64 {
        self.a11.add(&self.a22).map(|t| t.coeff_norm()).unwrap_or(f64::INFINITY)
    }

    pub fn check_traceless(&self, tol: f64) -> Result<()> {
        let defect = self.trace_defect();
        if defect > tol {
            return Err(Error::NotTraceless(defect));
        }
        Ok(())
    }

    /// Sup over a verification grid of ‖F(θ) − M‖ for constant M.
    pub fn sup_distance_to_const(&self, m: Mat2, grid_n: usize) -> f64 {
        let n = ((2 * self.support_radius() + 2).max(grid_n as i64) as usize).next_power_of_two();
        let mut worst = 0.0f64;
        let per = self.a11.period();
        let d = self.d();
        if d == 1 {
            for i in 0..n {
                let th = [per * i as f64 / n as f64];
                worst = worst.max((self.eval(&th) - m).max_abs());
            }
        } else {
            let side = (n as f64).sqrt().ceil() as usize;
            for i in 0..side {
                for j in 0..side {
                    let th = [per * i as f64 / side as f64, per * j as f64 / side as f64];
                    worst = worst.max((self.eval(&th) - m).max_abs());
                }
            }
        }
        worst
    }
}

fn pick_grid(support: i64, requested: Option<usize>, d: usize) -> Result<usize> {
    let min_needed = (4 * (support + 1)) as usize;
    let cap = if d == 1 { 1 << 14 } else { 1 << 9 };
    match requested {
        Some(n) => {
            if (n as i64) < 4 * support.max(1) {
                Err(Error::Aliasing {
                    grid: n,
                    radius: support,
                })
            } else {
                Ok(n.next_power_of_two())
            }
        }
        None => Ok(min_needed.next_power_of_two().clamp(32, cap)),
    }
}

/// Pointwise e^{f(θ)} of a trace-free matrix function via grid evaluation and
/// the closed-form 2×2 exponential; result converted back to modes with
/// truncation radius grid/2.
pub fn exp_sl2_grid(
    f: &MatrixTorusFunction,
    grid_n: Option<usize>,
) -> Result<MatrixTorusFunction> {
    f.check_traceless(1e-9 * (1.0 + f.coeff_norm()))?;
    let n = pick_grid(f.support_radius(), grid_n, f.d())?;
    map_on_grid(f, n, |m| Ok(m.exp_sl2()))
}

/// Pointwise principal log of an SL(2,ℝ)-valued function close to the
/// positive-trace branch.
pub fn log_sl2_grid(
    g: &MatrixTorusFunction,
    grid_n: Option<usize>,
) -> Result<MatrixTorusFunction> {
    let n = pick_grid(g.support_radius(), grid_n, g.d())?;
    map_on_grid(g, n, |m| m.log_sl2())
}

/// Apply a pointwise 2×2 map on an n-per-axis grid and convert back to modes.
pub fn map_on_grid(
    f: &MatrixTorusFunction,
    n: usize,
    op: impl Fn(Mat2) -> Result<Mat2>,
) -> Result<MatrixTorusFunction> {
    let d = f.d();
    let vals11 = grid::eval_grid(&f.a11, n)?;
    let vals12 = grid::eval_grid(&f.a12, n)?;
    let vals21 = grid::eval_grid(&f.a21, n)?;
    let vals22 = grid::eval_grid(&f.a22, n)?;
    let len = vals11.len();
    let mut out = [
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
    ];
    let mut scale = 0.0f64;
    for i in 0..len {
        let m = Mat2::new(vals11[i].re, vals12[i].re, vals21[i].re, vals22[i].re);
        let r = op(m)?;
        out[0].push(Complex64::new(r.a11, 0.0));
        out[1].push(Complex64::new(r.a12, 0.0));
        out[2].push(Complex64::new(r.a21, 0.0));
        out[3].push(Complex64::new(r.a22, 0.0));
        scale = scale.max(r.max_abs());
    }
    let keep = (n as i64) / 2 - 1;
    let floor = super::scalar::CLEAN_REL_FLOOR * (1.0 + scale);
    let mk = |vals: &Vec<Complex64>| {
        ScalarTorusFunction::from_map(
            d,
            f.is_double(),
            true,
            grid::modes_from_grid(vals, d, n, keep, floor),
        )
    };
    Ok(MatrixTorusFunction {
        a11: mk(&out[0]),
        a12: mk(&out[1]),
        a21: mk(&out[2]),
        a22: mk(&out[3]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exp_of_zero_matrix_function() {
        let f = MatrixTorusFunction::zero(1);
        let e = exp_sl2_grid(&f, None).unwrap();
        assert!((e.average() - Mat2::identity()).max_abs() < 1e-14);
        assert_eq!(e.support_radius(), 0);
    }

    #[test]
    fn exp_constant_diag() {
        let t = 0.4;
        let f = MatrixTorusFunction::constant(1, Mat2::diag(t, -t));
        let e = exp_sl2_grid(&f, None).unwrap();
        assert_abs_diff_eq!(e.average().a11, t.exp(), epsilon = 1e-13);
        assert_abs_diff_eq!(e.average().a22, (-t).exp(), epsilon = 1e-13);
    }

    #[test]
    fn exp_matches_taylor_on_grid() {
        // small two-mode sl(2,R) function: e^f vs 12-term Taylor series
        let h = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 0.05);
        let e = ScalarTorusFunction::sine(1, ModeIndex::one(2), 0.03);
        let f = MatrixTorusFunction::from_entries(
            h.clone(),
            e.clone(),
            e.scale(0.5),
            h.scale(-1.0),
        )
        .unwrap();
        let ef = exp_sl2_grid(&f, Some(64)).unwrap();
        for th in [0.0, 0.2, 0.55, 0.81] {
            let x = f.eval(&[th]);
            let mut taylor = Mat2::identity();
            let mut term = Mat2::identity();
            for k in 1..=12 {
                term = term * x.scale(1.0 / k as f64);
                taylor = taylor + term;
            }
            assert!((ef.eval(&[th]) - taylor).max_abs() < 1e-12);
        }
        // det = 1 within structural tolerance
        assert!(ef.det_defect().unwrap() < 1e-9);
    }

    #[test]
    fn exp_refuses_coarse_grid() {
        let f = MatrixTorusFunction::from_entries(
            ScalarTorusFunction::cosine(1, ModeIndex::one(10), 0.1),
            ScalarTorusFunction::zero(1),
            ScalarTorusFunction::zero(1),
            ScalarTorusFunction::cosine(1, ModeIndex::one(10), -0.1),
        )
        .unwrap();
        assert!(exp_sl2_grid(&f, Some(16)).is_err());
    }

    #[test]
    fn exp_times_exp_of_negation_is_identity() {
        let h = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 0.3);
        let e = ScalarTorusFunction::sine(1, ModeIndex::one(1), -0.2);
        let f = MatrixTorusFunction::from_entries(
            h.clone(),
            e.clone(),
            e.clone(),
            h.scale(-1.0),
        )
        .unwrap();
        let a = exp_sl2_grid(&f, None).unwrap();
        let b = exp_sl2_grid(&f.scale(-1.0), None).unwrap();
        let prod = a.mul(&b).unwrap();
        assert!(prod.sup_distance_to_const(Mat2::identity(), 256) < 1e-10);
    }

    #[test]
    fn log_inverts_exp_functionwise() {
        let h = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 0.12);
        let e = ScalarTorusFunction::sine(1, ModeIndex::one(1), 0.2);
        let f = MatrixTorusFunction::from_entries(
            h.clone(),
            e.scale(0.7),
            e.scale(-0.3),
            h.scale(-1.0),
        )
        .unwrap();
        let ef = exp_sl2_grid(&f, None).unwrap();
        let back = log_sl2_grid(&ef, None).unwrap();
        let diff = back.sub(&f).unwrap();
        assert!(diff.coeff_norm() < 1e-11);
    }

    #[test]
    fn half_winding_rotation_has_period_two() {
        let q = MatrixTorusFunction::rotation_half_winding(1, &ModeIndex::one(1));
        // at θ: rotation by πθ (half turn per unit θ)
        let r = q.eval(&[0.5]);
        assert!((r - Mat2::rotation_turns(0.25)).max_abs() < 1e-14);
        let r2 = q.eval(&[1.0]);
        assert!((r2 - Mat2::rotation_turns(0.5)).max_abs() < 1e-14);
        assert!(q.det_defect().unwrap() < 1e-14);
    }

    #[test]
    fn conjugate_by_const_preserves_det() {
        let p = Mat2::new(1.2, 0.3, -0.1, (1.0 - 0.03) / 1.2);
        let f = MatrixTorusFunction::rotation_full_winding(1, &ModeIndex::one(1));
        let g = f.conjugate_by_const(p);
        assert!(g.det_defect().unwrap() < 1e-12 * p.op_norm().powi(4));
    }
}
