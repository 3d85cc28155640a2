//! One KAM step: truncate, decide resonance, solve, conjugate, and collect
//! the exact quadratic remainder.

use super::schedule::KamSchedule;
use super::solve::solve_cohomological;
use crate::config::default_grid;
use crate::dynamics::Cocycle;
use crate::error::{Error, Result};
use crate::fourier::{exp_sl2_grid, map_on_grid, MatrixTorusFunction, ModeIndex};
use crate::freq::{dist_to_int, Frequency};
use crate::mat2::{Mat2, Sl2Class};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Per-step record: current constant, perturbation, accumulated conjugacy and
/// degree, with the original cocycle kept for conjugation-identity checks.
#[derive(Debug, Clone)]
pub struct KamState {
    pub a_const: Mat2,
    /// sl(2,ℝ)-valued perturbation: the cocycle is conjugate to (α, A e^{f}).
    pub f_pert: MatrixTorusFunction,
    /// Accumulated conjugacy, possibly on the doubled torus.
    pub b_accum: MatrixTorusFunction,
    /// Sum of resonant sites handled so far. The winding of `b_accum` is its
    /// negative, and the rotation bookkeeping reads
    /// ρ(original) − ⟨deg_accum, α⟩/2 ≡ ρ(current) (mod 1).
    pub deg_accum: ModeIndex,
    pub step_index: u32,
    pub eps_history: Vec<f64>,
    /// Measured rotation number of the original cocycle, when the driver
    /// knows it. While the perturbation is large, ρ(A_j) is displaced from
    /// the true rotation number by O(‖f‖); resonance detection measures
    /// distances against both.
    pub rho_orig: Option<f64>,
    origin: Cocycle,
}

impl KamState {
    /// Split a cocycle into a constant and a perturbation: A₀ = the SL(2,ℝ)
    /// projection of the average, f = log(A₀⁻¹ A(θ)).
    pub fn from_cocycle(c: &Cocycle) -> Result<KamState> {
        let avg = c.amap.average();
        let det = avg.det();
        if det <= 0.0 {
            return Err(Error::Degenerate(
                "average of the map has nonpositive determinant".into(),
            ));
        }
        let a0 = avg.scale(1.0 / det.sqrt());
        let a0_inv = a0.adjugate();
        let prod = c.amap.mul_const_left(a0_inv);
        let n = ((4 * (prod.support_radius() + 1)) as usize).next_power_of_two();
        let f = map_on_grid(&prod, n.clamp(32, 1 << 14), |m| m.log_sl2())?;
        Ok(KamState {
            a_const: a0,
            f_pert: f,
            b_accum: MatrixTorusFunction::identity(c.d()),
            deg_accum: ModeIndex::ZERO,
            step_index: 0,
            eps_history: Vec::new(),
            rho_orig: None,
            origin: c.clone(),
        })
    }

    /// Start from explicit parts (α, A e^{f}).
    pub fn from_parts(freq: Frequency, a: Mat2, f: MatrixTorusFunction) -> Result<KamState> {
        f.check_traceless(1e-8 * (1.0 + f.coeff_norm()))?;
        let ef = exp_sl2_grid(&f, None)?;
        let amap = ef.mul_const_left(a);
        let origin = Cocycle::new(freq, amap)?;
        Ok(KamState {
            a_const: a,
            f_pert: f,
            b_accum: MatrixTorusFunction::identity(origin.d()),
            deg_accum: ModeIndex::ZERO,
            step_index: 0,
            eps_history: Vec::new(),
            rho_orig: None,
            origin,
        })
    }

    pub fn origin(&self) -> &Cocycle {
        &self.origin
    }

    pub fn freq(&self) -> &Frequency {
        &self.origin.freq
    }

    pub fn eps(&self) -> f64 {
        self.f_pert.coeff_norm()
    }

    /// Sup over a grid of ‖b(θ+α)·M(θ)·b(θ)⁻¹ − A e^{f(θ)}‖, the defining
    /// conjugation identity.
    pub fn verify_conjugation(&self, grid_n: usize) -> f64 {
        let d = self.origin.d();
        let per = self.b_accum.a11.period();
        let alpha = self.origin.freq.alpha();
        let b_shift = self.b_accum.shift(alpha);
        let n = grid_n.max(default_grid(d));
        let pts: Vec<Vec<f64>> = if d == 1 {
            (0..n).map(|i| vec![per * i as f64 / n as f64]).collect()
        } else {
            let side = (n as f64).sqrt().ceil() as usize;
            (0..side * side)
                .map(|k| {
                    vec![
                        per * (k / side) as f64 / side as f64,
                        per * (k % side) as f64 / side as f64,
                    ]
                })
                .collect()
        };
        let mut worst = 0.0f64;
        for th in pts {
            let m = self.origin.amap.eval(&th);
            let b = self.b_accum.eval(&th);
            let bs = b_shift.eval(&th);
            let lhs = bs * m * b.adjugate();
            let rhs = self.a_const * self.f_pert.eval(&th).exp_sl2();
            worst = worst.max((lhs - rhs).max_abs());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HaltReason {
    /// ‖f⁺‖ exceeded ‖f‖^{5/4}: the step left the contraction regime.
    ContractionFailure { eps_in: f64, eps_out: f64 },
    /// A frequency-lattice divisor (diagonal channel) bit below budget.
    SmallDivisor { mode: Vec<i64>, divisor: f64 },
    /// A resonant site on the half-lattice of the doubled torus.
    OddResonance(Vec<i64>),
    /// A second resonance inside one step.
    RepeatedResonance(Vec<i64>),
    /// Pointwise matrix logarithm left the principal branch.
    LogBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    NonResonant,
    Resonant(ModeIndex),
    Halted(HaltReason),
}

/// Telemetry line for one step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: u32,
    pub kind: String,
    pub site: Option<Vec<i64>>,
    pub eps_in: f64,
    pub eps_out: f64,
    pub deg_accum: Vec<i64>,
    pub conj_norm: f64,
    pub n_trunc: i64,
    pub max_inv_denominator: f64,
    pub post_resonance_dist: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KamStepOutcome {
    pub kind: StepKind,
    pub step_conj: MatrixTorusFunction,
    pub state: KamState,
    pub record: StepRecord,
}

/// The smallest-|m| mode with ‖2ρ(A) − ⟨m,α⟩‖ < ε^σ, scanning shells
/// 0 < |m| ≤ n_radius in lexicographic order; σ = 1/10.
pub fn detect_resonance(
    a: Mat2,
    freq: &Frequency,
    eps: f64,
    n_radius: i64,
) -> Option<ModeIndex> {
    let threshold = eps.powf(0.1);
    let two_rho = 2.0 * a.rotation_number();
    freq.modes_up_to(n_radius)
        .into_iter()
        .find(|m| dist_to_int(two_rho - freq.dot(m)) < threshold)
}

/// Resonance decision inside a step.
///
/// A mode of g is resonant when its off-diagonal divisor would amplify its
/// coefficient past the Y-budget AND the divisor reflects a genuine lattice
/// hit ‖2ρ − ⟨m,α⟩‖ below the absolute cap; moderate distances with large
/// coefficients are the ordinary small-divisor regime, left to the
/// contraction guard. Returns the site on the g-lattice with the sign chosen
/// so 2ρ ≈ +⟨m,α⟩ (mod ℤ).
enum Decision {
    Clear,
    Resonant(ModeIndex, f64),
    FrequencyCollision(ModeIndex, f64),
}

fn decide_resonance(
    g: &MatrixTorusFunction,
    a: Mat2,
    two_rho_hint: Option<f64>,
    freq: &Frequency,
    budget: f64,
    dist_cap: f64,
) -> Decision {
    let class = a.classify(1e-12);
    // rotation-number candidates: the constant's, plus the driver's
    // bookkept value when the perturbation still displaces them
    let mut two_rhos = vec![2.0 * a.rotation_number()];
    if let Some(tr) = two_rho_hint {
        two_rhos.push(tr);
    }
    let s = if g.is_double() { 0.5 } else { 1.0 };
    let elliptic = matches!(class, Sl2Class::Elliptic(_));
    let mut resonant: Option<(f64, ModeIndex)> = None;
    let mut collision: Option<(f64, ModeIndex)> = None;
    for n in g.mode_support() {
        if n.is_zero() {
            continue;
        }
        let coeff = g.coeff_frobenius(&n);
        if coeff == 0.0 {
            continue;
        }
        let x = s * freq.dot(&n);
        if elliptic {
            for &two_rho in &two_rhos {
                let dist_off = dist_to_int(x + two_rho).min(dist_to_int(x - two_rho));
                let ratio = coeff / (std::f64::consts::TAU * dist_off).max(1e-300);
                if ratio > budget
                    && dist_off < dist_cap
                    && resonant.as_ref().map_or(true, |(r, _)| ratio > *r)
                {
                    let m = if dist_to_int(two_rho - x) <= dist_to_int(two_rho + x) {
                        n
                    } else {
                        n.neg()
                    };
                    resonant = Some((ratio, m));
                }
            }
        }
        let dist_diag = dist_to_int(x);
        let ratio_d = coeff / (std::f64::consts::TAU * dist_diag).max(1e-300);
        if ratio_d > budget
            && dist_diag < dist_cap
            && collision.as_ref().map_or(true, |(r, _)| ratio_d > *r)
        {
            collision = Some((ratio_d, n));
        }
    }
    if let Some((ratio, m)) = resonant {
        Decision::Resonant(m, ratio)
    } else if let Some((ratio, n)) = collision {
        Decision::FrequencyCollision(n, ratio)
    } else {
        Decision::Clear
    }
}

fn halt(state: &KamState, reason: HaltReason, eps_in: f64, n_trunc: i64) -> KamStepOutcome {
    let record = StepRecord {
        step_index: state.step_index + 1,
        kind: format!("halted: {reason:?}"),
        site: None,
        eps_in,
        eps_out: eps_in,
        deg_accum: state.deg_accum.0[..state.origin.d()].to_vec(),
        conj_norm: state.b_accum.coeff_norm(),
        n_trunc,
        max_inv_denominator: f64::NAN,
        post_resonance_dist: None,
    };
    KamStepOutcome {
        kind: StepKind::Halted(reason),
        step_conj: MatrixTorusFunction::identity(state.origin.d()),
        state: state.clone(),
        record,
    }
}

/// The exact remainder f⁺ = log(A'⁻¹ · e^{−Y(θ+α)} · A e^{f(θ)} · e^{Y(θ)}),
/// computed pointwise on a grid large enough for the combined support.
fn exact_remainder(
    a_prime: Mat2,
    exp_neg_y: &MatrixTorusFunction,
    a: Mat2,
    f_full: &MatrixTorusFunction,
    freq: &Frequency,
) -> Result<MatrixTorusFunction> {
    let exp_neg_y_shift = exp_neg_y.shift_by_freq(freq);
    let exp_y = exp_neg_y.adjugate_sl2();
    let radius = exp_neg_y
        .support_radius()
        .max(f_full.support_radius())
        .max(1);
    let d = f_full.d();
    let cap = if d == 1 { 1 << 14 } else { 1 << 9 };
    let n = ((4 * (radius + 1)) as usize).next_power_of_two().clamp(64, cap);
    let a_prime_inv = a_prime.adjugate();

    // sample the three factors on the common grid
    let to_grid = |mf: &MatrixTorusFunction| -> Result<Vec<Mat2>> {
        let g11 = crate::fourier::eval_grid(&mf.a11, n)?;
        let g12 = crate::fourier::eval_grid(&mf.a12, n)?;
        let g21 = crate::fourier::eval_grid(&mf.a21, n)?;
        let g22 = crate::fourier::eval_grid(&mf.a22, n)?;
        Ok((0..g11.len())
            .map(|i| Mat2::new(g11[i].re, g12[i].re, g21[i].re, g22[i].re))
            .collect())
    };
    let ens = to_grid(&exp_neg_y_shift)?;
    let ey = to_grid(&exp_y)?;
    let ff = to_grid(f_full)?;
    let mut vals: [Vec<num_complex::Complex64>; 4] = Default::default();
    let mut scale = 0.0f64;
    for i in 0..ens.len() {
        let m = a_prime_inv * ens[i] * a * ff[i].exp_sl2() * ey[i];
        let l = m.log_sl2()?;
        vals[0].push(num_complex::Complex64::new(l.a11, 0.0));
        vals[1].push(num_complex::Complex64::new(l.a12, 0.0));
        vals[2].push(num_complex::Complex64::new(l.a21, 0.0));
        vals[3].push(num_complex::Complex64::new(l.a22, 0.0));
        scale = scale.max(l.max_abs());
    }
    let keep = (n as i64) / 2 - 1;
    let floor = 1e-17 * (1.0 + scale);
    let mk = |v: &Vec<num_complex::Complex64>| {
        crate::fourier::ScalarTorusFunction::from_map(
            d,
            f_full.is_double(),
            true,
            crate::fourier::modes_from_grid(v, d, n, keep, floor),
        )
    };
    Ok(MatrixTorusFunction {
        a11: mk(&vals[0]),
        a12: mk(&vals[1]),
        a21: mk(&vals[2]),
        a22: mk(&vals[3]),
    })
}

/// Trace-free projection of the average of f (a constant sl(2,ℝ) matrix).
fn sl2_mean(f: &MatrixTorusFunction) -> Mat2 {
    let m = f.average();
    let half_tr = 0.5 * m.trace();
    Mat2::new(m.a11 - half_tr, m.a12, m.a21, m.a22 - half_tr)
}

/// One KAM step. Resonances and halts are reported as outcomes, not errors;
/// `Err` is reserved for malformed inputs.
pub fn kam_step(state: &KamState, sched: &KamSchedule) -> Result<KamStepOutcome> {
    let freq = state.origin.freq.clone();
    let d = state.origin.d();
    let j = state.step_index + 1;
    let eps_in = state.f_pert.coeff_norm();
    let n_trunc = sched.trunc_radius(j);

    if eps_in < f64::MIN_POSITIVE {
        let mut new_state = state.clone();
        new_state.step_index += 1;
        new_state.eps_history.push(0.0);
        let record = StepRecord {
            step_index: j,
            kind: "nonresonant".into(),
            site: None,
            eps_in,
            eps_out: 0.0,
            deg_accum: state.deg_accum.0[..d].to_vec(),
            conj_norm: state.b_accum.coeff_norm(),
            n_trunc,
            max_inv_denominator: 0.0,
            post_resonance_dist: None,
        };
        return Ok(KamStepOutcome {
            kind: StepKind::NonResonant,
            step_conj: MatrixTorusFunction::identity(d),
            state: new_state,
            record,
        });
    }

    let f_t = state.f_pert.truncate(n_trunc);
    let budget = sched.y_budget * eps_in.powf(sched.budget_exp);

    let mut a = state.a_const;
    let mut f_full = state.f_pert.clone();
    let mut pre_conj: Option<MatrixTorusFunction> = None;
    let mut site: Option<ModeIndex> = None;
    let mut post_res_dist = None;

    let mean0 = sl2_mean(&f_t);
    let g0 = f_t.sub(&MatrixTorusFunction::constant(d, mean0))?;

    // true rotation number of the current conjugated cocycle from the
    // driver's measurement: ρ_cur = ρ_orig − ⟨deg,α⟩/2 (mod 1)
    let hint_for = |deg: &ModeIndex| -> Option<f64> {
        state
            .rho_orig
            .map(|r| (2.0 * r - freq.dot(deg)).rem_euclid(1.0))
    };

    match decide_resonance(&g0, a, hint_for(&state.deg_accum), &freq, budget, sched.res_dist_cap) {
        Decision::Clear => {}
        Decision::FrequencyCollision(n, _ratio) => {
            let s = if g0.is_double() { 0.5 } else { 1.0 };
            return Ok(halt(
                state,
                HaltReason::SmallDivisor {
                    mode: n.0[..d].to_vec(),
                    divisor: dist_to_int(s * freq.dot(&n)),
                },
                eps_in,
                n_trunc,
            ));
        }
        Decision::Resonant(m_raw, _ratio) => {
            // translate a doubled-lattice mode into an integer site
            let m = if state.f_pert.is_double() {
                if m_raw.0.iter().any(|x| x % 2 != 0) {
                    return Ok(halt(
                        state,
                        HaltReason::OddResonance(m_raw.0[..d].to_vec()),
                        eps_in,
                        n_trunc,
                    ));
                }
                ModeIndex([m_raw.0[0] / 2, m_raw.0[1] / 2])
            } else {
                m_raw
            };
            let (p, phi) = match a.elliptic_normal_form() {
                Ok(v) => v,
                Err(_) => {
                    return Ok(halt(
                        state,
                        HaltReason::SmallDivisor {
                            mode: m.0[..d].to_vec(),
                            divisor: dist_to_int(2.0 * a.rotation_number() - freq.dot(&m)),
                        },
                        eps_in,
                        n_trunc,
                    ))
                }
            };
            // unwind: conjugate by Q(θ)·P with Q = R_{−⟨m,θ⟩/2};
            // the constant becomes R_{φ − ⟨m,α⟩/2} exactly
            let q = MatrixTorusFunction::rotation_half_winding(d, &m.neg());
            let phi_new = (phi - freq.dot(&m) / 2.0).rem_euclid(1.0);
            a = Mat2::rotation_turns(phi_new);
            let f1 = f_full.conjugate_by_const(p);
            let f2 = q.mul(&f1)?.mul(&q.adjugate_sl2())?;
            f_full = f2.try_demote().unwrap_or(f2);
            f_full = f_full.clean(1e-17 * (1.0 + f_full.coeff_norm()));
            pre_conj = Some(q.mul_const_right(p));
            site = Some(m);
            post_res_dist = Some(dist_to_int(2.0 * phi_new));
        }
    }

    // non-resonant solve on the (possibly unwound) perturbation
    let f_t = f_full.truncate(n_trunc);
    let mean = sl2_mean(&f_t);
    let g = f_t.sub(&MatrixTorusFunction::constant(d, mean))?;
    if let Some(m) = site {
        let deg_next = state.deg_accum.add(&m);
        if let Decision::Resonant(m2, _) | Decision::FrequencyCollision(m2, _) =
            decide_resonance(&g, a, hint_for(&deg_next), &freq, budget, sched.res_dist_cap)
        {
            return Ok(halt(
                state,
                HaltReason::RepeatedResonance(m2.0[..d].to_vec()),
                eps_in,
                n_trunc,
            ));
        }
    }
    let sol = solve_cohomological(a, &g, &freq, n_trunc, &BTreeSet::new(), 0.0)?;
    let a_prime = a * mean.exp_sl2();
    let exp_neg_y = exp_sl2_grid(&sol.y.scale(-1.0), None)?;
    let f_plus = match exact_remainder(a_prime, &exp_neg_y, a, &f_full, &freq) {
        Ok(f) => f,
        Err(Error::LogBranch(_)) => {
            return Ok(halt(state, HaltReason::LogBranch, eps_in, n_trunc))
        }
        Err(e) => return Err(e),
    };
    let eps_out = f_plus.coeff_norm();

    // contraction guard; resonant steps may legitimately inflate by the
    // normal-form conditioning, so the strict exponent applies only to
    // non-resonant steps
    let roundoff_floor = 1e-13 * (1.0 + a_prime.op_norm());
    let diverged = if site.is_none() {
        eps_out > eps_in.powf(1.25).max(roundoff_floor)
            && eps_out > 0.8 * eps_in
            && eps_out > sched.target_eps
    } else {
        eps_out > (10.0 * eps_in).max(roundoff_floor)
    };
    if diverged {
        return Ok(halt(
            state,
            HaltReason::ContractionFailure { eps_in, eps_out },
            eps_in,
            n_trunc,
        ));
    }

    let step_conj = match &pre_conj {
        Some(qp) => exp_neg_y.mul(qp)?,
        None => exp_neg_y,
    };
    let b_accum = step_conj.mul(&state.b_accum)?;
    let b_accum = b_accum.clean(1e-17 * (1.0 + b_accum.coeff_norm()));
    let deg_accum = match site {
        Some(m) => state.deg_accum.add(&m),
        None => state.deg_accum,
    };
    let mut eps_history = state.eps_history.clone();
    eps_history.push(eps_out);
    let record = StepRecord {
        step_index: j,
        kind: if site.is_some() {
            "resonant".into()
        } else {
            "nonresonant".into()
        },
        site: site.map(|m| m.0[..d].to_vec()),
        eps_in,
        eps_out,
        deg_accum: deg_accum.0[..d].to_vec(),
        conj_norm: b_accum.coeff_norm(),
        n_trunc,
        max_inv_denominator: sol.max_inv_denominator,
        post_resonance_dist: post_res_dist,
    };
    let new_state = KamState {
        a_const: a_prime,
        f_pert: f_plus,
        b_accum,
        deg_accum,
        step_index: j,
        eps_history,
        rho_orig: state.rho_orig,
        origin: state.origin.clone(),
    };
    Ok(KamStepOutcome {
        kind: match site {
            Some(m) => StepKind::Resonant(m),
            None => StepKind::NonResonant,
        },
        step_conj,
        state: new_state,
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::ScalarTorusFunction;

    fn schedule() -> KamSchedule {
        KamSchedule::with_norm(2.0)
    }

    fn small_sl2(amp: f64, modes: i64) -> MatrixTorusFunction {
        let mut h = ScalarTorusFunction::zero(1);
        let mut e12 = ScalarTorusFunction::zero(1);
        let mut e21 = ScalarTorusFunction::zero(1);
        for n in 1..=modes {
            let a = amp / n as f64;
            h = h.add(&ScalarTorusFunction::cosine(1, ModeIndex::one(n), a)).unwrap();
            e12 = e12
                .add(&ScalarTorusFunction::sine(1, ModeIndex::one(n), 0.7 * a))
                .unwrap();
            e21 = e21
                .add(&ScalarTorusFunction::cosine(1, ModeIndex::one(n), -0.4 * a))
                .unwrap();
        }
        MatrixTorusFunction::from_entries(h.clone(), e12, e21, h.scale(-1.0)).unwrap()
    }

    #[test]
    fn zero_perturbation_is_a_fixed_point() {
        let st = KamState::from_parts(
            Frequency::golden(),
            Mat2::rotation_turns(0.3),
            MatrixTorusFunction::zero(1),
        )
        .unwrap();
        let out = kam_step(&st, &schedule()).unwrap();
        assert_eq!(out.kind, StepKind::NonResonant);
        assert_eq!(out.state.eps(), 0.0);
        assert!(out.step_conj.sub(&MatrixTorusFunction::identity(1)).unwrap().coeff_norm() < 1e-15);
    }

    #[test]
    fn nonresonant_step_contracts_quadratically() {
        let f = small_sl2(1e-6, 3);
        let st = KamState::from_parts(Frequency::golden(), Mat2::rotation_turns(0.17), f).unwrap();
        let eps_in = st.eps();
        let out = kam_step(&st, &schedule()).unwrap();
        assert_eq!(out.kind, StepKind::NonResonant);
        let eps_out = out.state.eps();
        assert!(
            eps_out < eps_in.powf(1.5),
            "eps {eps_in:.3e} -> {eps_out:.3e}"
        );
        // conjugation identity preserved
        assert!(out.state.verify_conjugation(256) < 1e-10);
    }

    #[test]
    fn resonant_step_unwinds_and_tracks_degree() {
        let freq = Frequency::golden();
        let m = ModeIndex::one(2);
        let phi = freq.dot(&m) / 2.0 + 1e-7;
        let f = small_sl2(1e-8, 4);
        let st = KamState::from_parts(freq.clone(), Mat2::rotation_turns(phi), f).unwrap();
        let out = kam_step(&st, &schedule()).unwrap();
        match out.kind {
            StepKind::Resonant(site) => assert_eq!(site, m),
            ref k => panic!("expected resonant step, got {k:?}"),
        }
        assert_eq!(out.state.deg_accum, m);
        // post-step constant has 2ρ near 0
        let dist = dist_to_int(2.0 * out.state.a_const.rotation_number());
        assert!(dist < 1e-4, "2ρ distance {dist}");
        assert!(out.state.verify_conjugation(256) < 1e-10);
        // winding of the accumulated conjugacy is minus the site sum
        let deg = crate::dynamics::degree(&out.state.b_accum).unwrap();
        assert_eq!(deg, vec![-m.0[0]]);
    }

    #[test]
    fn detect_resonance_matches_spec_semantics() {
        let freq = Frequency::golden();
        // exact resonance at m = 3: at tight eps only the exact hit violates
        let rho = freq.dot(&ModeIndex::one(3)) / 2.0;
        let a = Mat2::rotation_turns(rho);
        assert_eq!(
            detect_resonance(a, &freq, 1e-12, 10),
            Some(ModeIndex::one(3))
        );
        // at loose thresholds nearer small-|m| sites win under the
        // smallest-|m| rule
        assert!(detect_resonance(a, &freq, 1e-1, 10).is_some());
        // none exactly when every distance clears the eps^{1/10} threshold
        let a = Mat2::rotation_turns(0.245);
        let min_dist = freq
            .modes_up_to(10)
            .into_iter()
            .map(|m| dist_to_int(2.0 * a.rotation_number() - freq.dot(&m)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(
            detect_resonance(a, &freq, (0.9 * min_dist).powi(10), 10),
            None
        );
        assert!(detect_resonance(a, &freq, (1.1 * min_dist).powi(10), 10).is_some());
        // ρ = 0 with Diophantine α: no site up to radius 10 at tiny eps
        let a = Mat2::new(1.0, 0.3, 0.0, 1.0);
        assert_eq!(detect_resonance(a, &freq, 1e-14, 10), None);
    }
}
