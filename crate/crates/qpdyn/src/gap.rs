//! Normal forms at gap-edge energies and the averaged perturbation test for
//! gap opening.
//!
//! A reducible edge energy brings the cocycle to a constant with rotation
//! number 0: the identity (collapsed-gap candidate) or a parabolic matrix
//! [[1, c], [0, 1]]. Averaging the perturbed cocycle in the conjugated frame
//! decides hyperbolicity of S_E^{V+tW}: writing the perturbation as
//! B − tW·B·[[z₁₁z₁₂, z₁₂²],[−z₁₁², −z₁₁z₁₂]], the averaged block has
//! determinant −c·t·[Wz₁₁²] + O(t²), so with c ≠ 0 the gap opens exactly
//! for the sign of t matching c·[Wz₁₁²], at growth rate √(c·t·[Wz₁₁²]);
//! with c = 0 it opens for both signs when
//! d̃ = −[Wz₁₁z₁₂]² + [Wz₁₂²][Wz₁₁²] < 0, at rate √(−d̃)·|t|.

use crate::config::UhOptions;
use crate::dynamics::{is_uniformly_hyperbolic_hinted, Cocycle};
use crate::error::{Error, Result};
use crate::fourier::{MatrixTorusFunction, ScalarTorusFunction};
use crate::freq::Frequency;
use crate::kam::KamState;
use crate::mat2::Mat2;
use crate::spectrum::{schrodinger_cocycle, Potential};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeClass {
    /// Ā = I within structural tolerance: collapsed-gap candidate, c = 0.
    Identity,
    /// Trace 2, nontrivial Jordan block.
    Parabolic,
    /// |tr| > 2: the energy was not in the spectrum.
    Hyperbolic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicNormalForm {
    pub class: EdgeClass,
    /// Off-diagonal entry of the normal form; 0 for the identity class,
    /// meaningless for the hyperbolic class.
    pub c_offdiag: f64,
    /// Conjugacy Z with Z⁻¹(θ+α) S_E(θ) Z(θ) = [[1,c],[0,1]].
    pub z: MatrixTorusFunction,
    /// Grid residual of that identity.
    pub residual: f64,
}

/// Bring the final constant of a rational-branch reduction to the exact form
/// [[1, c], [0, 1]] by an orthonormal similarity, composing it into the
/// conjugacy. The similarity is a rotation, so c's sign is an invariant of
/// the edge (right edge for c > 0, left for c < 0).
pub fn normal_form_at_edge(state: &KamState) -> Result<ParabolicNormalForm> {
    let a = state.a_const;
    let tr = a.trace();
    let tol_id = 1e-7;
    let tol_tr = 1e-6;
    let (class, p_sim, c) = if (a - Mat2::identity()).max_abs() < tol_id {
        (EdgeClass::Identity, Mat2::identity(), 0.0)
    } else if (tr - 2.0).abs() < tol_tr {
        // eigenvector of the Jordan block; (A − I) has rank one
        let n = a - Mat2::identity();
        let v = if n.a12.abs().max((1.0 - a.a11).abs()) > n.a21.abs().max((1.0 - a.a22).abs()) {
            [n.a12, 1.0 - a.a11]
        } else {
            [1.0 - a.a22, n.a21]
        };
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if norm < 1e-12 {
            return Err(Error::InconsistentState(
                "parabolic constant has no resolvable eigenvector".into(),
            ));
        }
        let v1 = [v[0] / norm, v[1] / norm];
        let v2 = [-v1[1], v1[0]];
        // P maps v1 → e1, v2 → e2: rows are v1, v2 (a rotation)
        let p = Mat2::new(v1[0], v1[1], v2[0], v2[1]);
        let b = p * a * p.adjugate();
        // c = ⟨v1, A v2⟩ up to roundoff in b
        (EdgeClass::Parabolic, p, b.a12)
    } else if tr > 2.0 + tol_tr {
        (EdgeClass::Hyperbolic, Mat2::identity(), 0.0)
    } else {
        return Err(Error::InconsistentState(format!(
            "constant with trace {tr:.8} cannot come from a zero-rotation reduction"
        )));
    };

    // Z := (P·b_accum)⁻¹ satisfies Z⁻¹(θ+α) S Z(θ) = P Ā P⁻¹
    let pb = state.b_accum.mul_const_left(p_sim);
    let z = pb.adjugate_sl2();
    let b_target = match class {
        EdgeClass::Identity => Mat2::identity(),
        EdgeClass::Parabolic => Mat2::new(1.0, c, 0.0, 1.0),
        EdgeClass::Hyperbolic => p_sim * a * p_sim.adjugate(),
    };
    // residual of the conjugation identity on a grid
    let residual = {
        let per = z.a11.period();
        let alpha = state.freq().alpha();
        let zs = z.shift(alpha);
        let n = 256;
        let mut worst = 0.0f64;
        for i in 0..n {
            let th = [per * i as f64 / n as f64];
            let m = state.origin().amap.eval(&th);
            let lhs = zs.eval(&th).adjugate() * m * z.eval(&th);
            worst = worst.max((lhs - b_target).max_abs());
        }
        worst
    };
    Ok(ParabolicNormalForm {
        class,
        c_offdiag: c,
        z,
        residual,
    })
}

/// Refine a gap edge past the rotation estimator's resolution by bisecting
/// on the trace of the reduced constant: inside the gap the rational-branch
/// reduction ends hyperbolic (tr > 2), in the spectrum elliptic (tr < 2).
/// Returns the innermost gap-side energy together with its reduction, whose
/// constant is parabolic up to the bracket width.
pub fn refine_edge_by_normal_form(
    pot: &Potential,
    freq: &Frequency,
    sched: &crate::kam::KamSchedule,
    m0: crate::fourier::ModeIndex,
    e_inside: f64,
    e_outside: f64,
    tol_e: f64,
) -> Result<(f64, crate::kam::ReduceOutcome)> {
    use crate::kam::{reduce_full, RhoClass};
    let reduce_at = |e: f64| -> Result<crate::kam::ReduceOutcome> {
        let c = schrodinger_cocycle(pot, freq, e)?;
        reduce_full(&c, sched, RhoClass::Rational { m0 })
    };
    let mut inside = e_inside;
    let mut outside = e_outside;
    let mut best = reduce_at(inside)?;
    if best.state.a_const.trace() < 2.0 {
        return Err(Error::InconsistentState(format!(
            "bracket start {e_inside} is not on the gap side (trace {:.12})",
            best.state.a_const.trace()
        )));
    }
    while (inside - outside).abs() > tol_e {
        let mid = 0.5 * (inside + outside);
        let out = reduce_at(mid)?;
        if out.state.a_const.trace() >= 2.0 {
            inside = mid;
            best = out;
        } else {
            outside = mid;
        }
    }
    Ok((inside, best))
}

/// The averaged quantities of the opening test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MoserPoschelData {
    /// [W z₁₁²]
    pub a1: f64,
    /// [W z₁₁ z₁₂]
    pub a2: f64,
    /// [W z₁₂²]
    pub a3: f64,
    /// d̃ = −a₂² + a₃·a₁ (the c = 0 discriminant).
    pub d_tilde: f64,
    /// Averages of y₁ = (z₁₁²+z₁₂²)/2, y₂ = (z₁₁²−z₁₂²)/2, y₃ = z₁₁z₁₂.
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    /// [W y_i], reused by the generic-condition check.
    pub wy1: f64,
    pub wy2: f64,
    pub wy3: f64,
}

/// Exact mode-algebra products and torus averages of the opening test.
pub fn mp_averages(nf: &ParabolicNormalForm, w: &ScalarTorusFunction) -> Result<MoserPoschelData> {
    let z11 = &nf.z.a11;
    let z12 = &nf.z.a12;
    let z11sq = z11.mul(z11)?;
    let z12sq = z12.mul(z12)?;
    let z1112 = z11.mul(z12)?;
    let a1 = w.mul(&z11sq)?.average();
    let a2 = w.mul(&z1112)?.average();
    let a3 = w.mul(&z12sq)?.average();
    let y1 = z11sq.add(&z12sq)?.scale(0.5);
    let y2 = z11sq.sub(&z12sq)?.scale(0.5);
    let y3 = z1112;
    Ok(MoserPoschelData {
        a1,
        a2,
        a3,
        d_tilde: -a2 * a2 + a3 * a1,
        y1: y1.average(),
        y2: y2.average(),
        y3: y3.average(),
        wy1: w.mul(&y1)?.average(),
        wy2: w.mul(&y2)?.average(),
        wy3: w.mul(&y3)?.average(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OpeningPrediction {
    /// Gap opens for t of this sign (c ≠ 0 case, sign = sign(c·a₁)).
    OpensForSign(i8),
    /// Collapsed gap opens for both small |t| (c = 0, d̃ < 0).
    OpensBoth,
    /// No conclusion from the averaged data.
    Degenerate,
}

pub fn predict_opening(data: &MoserPoschelData, c: f64) -> OpeningPrediction {
    let tol = 1e-12;
    if c.abs() > tol {
        if data.a1.abs() > tol {
            let s = if c * data.a1 > 0.0 { 1 } else { -1 };
            OpeningPrediction::OpensForSign(s)
        } else {
            OpeningPrediction::Degenerate
        }
    } else if data.d_tilde < -tol {
        OpeningPrediction::OpensBoth
    } else {
        OpeningPrediction::Degenerate
    }
}

/// Predicted Lyapunov growth rate √(c·t·a₁) of the opened cocycle.
pub fn opening_rate(c: f64, a1: f64, t: f64) -> f64 {
    (c * t * a1).max(0.0).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpeningVerdict {
    pub t: f64,
    pub uh: bool,
    /// What the prediction says this t should do, when it says anything.
    pub expected_uh: Option<bool>,
    pub consistent: bool,
}

/// Build S_E^{V+tW} and test hyperbolicity for each t, against a prediction.
pub fn verify_opening(
    pot: &Potential,
    freq: &Frequency,
    e: f64,
    w: &ScalarTorusFunction,
    t_list: &[f64],
    prediction: OpeningPrediction,
    uh: &UhOptions,
) -> Result<Vec<OpeningVerdict>> {
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let v_new = pot.effective().add(&w.scale(t))?;
        let perturbed = Potential::new(v_new, 1.0)?;
        let c = schrodinger_cocycle(&perturbed, freq, e)?;
        let cert = is_uniformly_hyperbolic_hinted(&c, uh, Some(0.0))?;
        let expected_uh = match prediction {
            OpeningPrediction::OpensForSign(s) => Some(t.signum() as i8 == s),
            OpeningPrediction::OpensBoth => Some(t != 0.0),
            OpeningPrediction::Degenerate => None,
        };
        let consistent = expected_uh.map_or(true, |e| e == cert.uh);
        out.push(OpeningVerdict {
            t,
            uh: cert.uh,
            expected_uh,
            consistent,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericOpening {
    /// E' = −[W y₁]/[y₁], the energy renormalization of the perturbation.
    pub e_prime: f64,
    /// Degeneracy witnesses −[Wy₁][y₂]+[Wy₂][y₁] and −[Wy₁][y₃]+[Wy₃][y₁].
    pub g2: f64,
    pub g3: f64,
    pub opens: bool,
}

/// The c = 0 genericity test: E' + W opens the collapsed gap unless both
/// degeneracy equalities hold.
pub fn generic_condition_check(
    data: &MoserPoschelData,
    margin: f64,
) -> Result<GenericOpening> {
    if data.y1.abs() < 1e-14 {
        return Err(Error::Degenerate(
            "[y1] = 0 contradicts a nondegenerate conjugacy".into(),
        ));
    }
    let e_prime = -data.wy1 / data.y1;
    let g2 = -data.wy1 * data.y2 + data.wy2 * data.y1;
    let g3 = -data.wy1 * data.y3 + data.wy3 * data.y1;
    Ok(GenericOpening {
        e_prime,
        g2,
        g3,
        opens: g2.abs().max(g3.abs()) > margin,
    })
}

/// Synthetic cocycle at a c = 0 normal form: A_t = I + t·W(θ)·P(θ) with
/// P = [[z₁₁z₁₂, z₁₂²], [−z₁₁², −z₁₁z₁₂]]. P is pointwise rank one and
/// trace-free, so det A_t ≡ 1 exactly.
pub fn synthetic_c0_cocycle(
    z: &MatrixTorusFunction,
    w: &ScalarTorusFunction,
    t: f64,
    freq: &Frequency,
) -> Result<Cocycle> {
    let z11 = &z.a11;
    let z12 = &z.a12;
    let p = MatrixTorusFunction::from_entries(
        z11.mul(z12)?,
        z12.mul(z12)?,
        z11.mul(z11)?.scale(-1.0),
        z11.mul(z12)?.scale(-1.0),
    )?;
    let tw = w.scale(t);
    let pert = MatrixTorusFunction {
        a11: p.a11.mul(&tw)?,
        a12: p.a12.mul(&tw)?,
        a21: p.a21.mul(&tw)?,
        a22: p.a22.mul(&tw)?,
    };
    let amap = MatrixTorusFunction::identity(z.d()).add(&pert)?;
    let amap = amap.try_demote().unwrap_or(amap);
    Cocycle::new(freq.clone(), amap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::ModeIndex;
    use approx::assert_abs_diff_eq;

    fn identity_form_with_z(z: MatrixTorusFunction) -> ParabolicNormalForm {
        ParabolicNormalForm {
            class: EdgeClass::Identity,
            c_offdiag: 0.0,
            z,
            residual: 0.0,
        }
    }

    #[test]
    fn averages_with_identity_conjugacy() {
        let nf = identity_form_with_z(MatrixTorusFunction::identity(1));
        // W = 1: a1 = [z11²] = 1, a2 = 0, a3 = 0
        let w = ScalarTorusFunction::constant(1, 1.0);
        let d = mp_averages(&nf, &w).unwrap();
        assert_abs_diff_eq!(d.a1, 1.0);
        assert_abs_diff_eq!(d.a2, 0.0);
        assert_abs_diff_eq!(d.a3, 0.0);
        assert_abs_diff_eq!(d.d_tilde, 0.0);
        // zero-mean W kills every average
        let w = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 1.0);
        let d = mp_averages(&nf, &w).unwrap();
        assert_abs_diff_eq!(d.a1, 0.0);
        assert_abs_diff_eq!(d.a3, 0.0);
    }

    #[test]
    fn averages_with_half_winding_conjugacy() {
        // Z = R_{⟨1,θ⟩/2}: z11 = cos πθ, z12 = −sin πθ
        let z = MatrixTorusFunction::rotation_half_winding(1, &ModeIndex::one(1));
        let nf = identity_form_with_z(z);
        let w = ScalarTorusFunction::constant(1, 1.0);
        let d = mp_averages(&nf, &w).unwrap();
        assert_abs_diff_eq!(d.a1, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d.a3, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d.a2, 0.0, epsilon = 1e-14);
        // d̃ = 1/4 > 0: the both-signs condition fails for W = 1
        assert_abs_diff_eq!(d.d_tilde, 0.25, epsilon = 1e-14);
        assert_eq!(predict_opening(&d, 0.0), OpeningPrediction::Degenerate);
    }

    #[test]
    fn prediction_sign_rules() {
        let mk = |a1: f64, d_tilde: f64| MoserPoschelData {
            a1,
            a2: 0.0,
            a3: 0.0,
            d_tilde,
            y1: 0.5,
            y2: 0.0,
            y3: 0.0,
            wy1: 0.0,
            wy2: 0.0,
            wy3: 0.0,
        };
        assert_eq!(
            predict_opening(&mk(1.0, 0.0), 1.0),
            OpeningPrediction::OpensForSign(1)
        );
        assert_eq!(
            predict_opening(&mk(-2.0, 0.0), 1.0),
            OpeningPrediction::OpensForSign(-1)
        );
        assert_eq!(
            predict_opening(&mk(0.0, -0.1), 0.0),
            OpeningPrediction::OpensBoth
        );
        assert_eq!(
            predict_opening(&mk(0.0, 0.0), 0.0),
            OpeningPrediction::Degenerate
        );
    }

    #[test]
    fn generic_condition_constant_w() {
        // Z = identity: y1 = 1/2, y2 = 1/2, y3 = 0; W = 1: E' = -[Wy1]/[y1] = -1
        let nf = identity_form_with_z(MatrixTorusFunction::identity(1));
        let w = ScalarTorusFunction::constant(1, 1.0);
        let d = mp_averages(&nf, &w).unwrap();
        let g = generic_condition_check(&d, 1e-10).unwrap();
        assert_abs_diff_eq!(g.e_prime, -1.0, epsilon = 1e-14);
        // W=1, Z=Id: g2 = -[Wy1][y2] + [Wy2][y1] = -(1/2)(1/2)+(1/2)(1/2) = 0
        assert_abs_diff_eq!(g.g2, 0.0, epsilon = 1e-14);
        assert!(!g.opens);
    }

    #[test]
    fn synthetic_cocycle_is_unimodular() {
        let z = MatrixTorusFunction::rotation_half_winding(1, &ModeIndex::one(1));
        let w = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 1.0);
        let c = synthetic_c0_cocycle(&z, &w, 1e-3, &Frequency::golden()).unwrap();
        assert!(c.amap.det_defect().unwrap() < 1e-12);
    }

    #[test]
    fn normal_form_of_free_edge_constant() {
        // S_2^0 = [[2,-1],[1,0]] is parabolic with a nontrivial Jordan block
        let freq = Frequency::golden();
        let m = Mat2::new(2.0, -1.0, 1.0, 0.0);
        let st = KamState::from_parts(freq, m, MatrixTorusFunction::zero(1)).unwrap();
        let nf = normal_form_at_edge(&st).unwrap();
        assert_eq!(nf.class, EdgeClass::Parabolic);
        assert!(nf.c_offdiag.abs() > 0.5, "c = {}", nf.c_offdiag);
        assert!(nf.residual < 1e-10);
    }
}
