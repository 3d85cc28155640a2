//! Chain drivers: iterate KAM steps to a reducibility target.

use super::schedule::KamSchedule;
use super::step::{kam_step, KamState, StepKind, StepRecord};
use crate::config::RotationQuality;
use crate::dynamics::{rotation_number, Cocycle};
use crate::error::{Error, Result};
use crate::fourier::{MatrixTorusFunction, ModeIndex};
use crate::freq::{dist_to_int, rho_diophantine_check};
use crate::mat2::Mat2;
use serde::{Deserialize, Serialize};

/// Arithmetic regime of a resonance-free chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainMode {
    /// 2ρ ∈ DC_α(γ, τ): every step is non-resonant by the arithmetic.
    DiophantineRho { gamma: f64, tau: f64 },
    /// ρ = 0 (mod ℤ): non-resonance comes from the frequency's own condition.
    ZeroRho,
}

/// Arithmetic class of the rotation number for the full driver.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoClass {
    Diophantine { gamma: f64, tau: f64 },
    /// 2ρ ≡ ⟨m₀, α⟩ (mod ℤ).
    Rational { m0: ModeIndex },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReduceReport {
    pub branch: String,
    pub records: Vec<StepRecord>,
    pub steps: u32,
    pub final_eps: f64,
    pub deg_accum: Vec<i64>,
    /// Grid sup of the defining conjugation identity at the end.
    pub conj_residual: f64,
    /// Sup distance of the accumulated conjugacy to its average.
    pub b_dist_to_const: f64,
    /// Rotation number of the final constant.
    pub final_rotation: f64,
    /// Step at which the full driver handed off to the resonance-free chain.
    pub switch_step: Option<u32>,
    /// Echo of the schedule used.
    pub schedule: KamSchedule,
}

#[derive(Debug, Clone)]
pub struct ReduceOutcome {
    pub state: KamState,
    pub report: ReduceReport,
}

fn finish_report(
    state: &KamState,
    branch: &str,
    records: Vec<StepRecord>,
    switch_step: Option<u32>,
    sched: &KamSchedule,
) -> ReduceReport {
    let b_avg = state.b_accum.average();
    ReduceReport {
        branch: branch.into(),
        steps: state.step_index,
        final_eps: state.eps(),
        deg_accum: state.deg_accum.0[..state.origin().d()].to_vec(),
        conj_residual: state.verify_conjugation(256),
        b_dist_to_const: state.b_accum.sup_distance_to_const(b_avg, 256),
        final_rotation: state.a_const.rotation_number(),
        switch_step,
        records,
        schedule: sched.clone(),
    }
}

fn run_chain_from(
    mut state: KamState,
    sched: &KamSchedule,
    records: &mut Vec<StepRecord>,
) -> Result<KamState> {
    while state.eps() >= sched.target_eps {
        if state.step_index >= sched.max_steps {
            return Err(Error::NoConvergence {
                steps: state.step_index,
                eps: state.eps(),
            });
        }
        let out = kam_step(&state, sched)?;
        records.push(out.record.clone());
        match out.kind {
            StepKind::NonResonant => state = out.state,
            StepKind::Resonant(m) => return Err(Error::ResonanceInChain(m)),
            StepKind::Halted(reason) => {
                return Err(Error::Halted(format!("{reason:?}")));
            }
        }
    }
    Ok(state)
}

/// Resonance-free KAM chain in a fixed arithmetic regime. A resonant outcome
/// is a mode violation, reported as an error rather than handled.
pub fn reduce_chain(c: &Cocycle, sched: &KamSchedule, mode: ChainMode) -> Result<ReduceOutcome> {
    sched.validate()?;
    let rho = rotation_number(c, &RotationQuality::DEFAULT)?;
    match mode {
        ChainMode::DiophantineRho { gamma, tau } => {
            let radius = sched.trunc_radius(1).min(1_000);
            let check = rho_diophantine_check(&c.freq, rho.rho, gamma, tau, radius);
            if !check.passes {
                return Err(Error::ArithmeticPrecondition(format!(
                    "2ρ fails DC_α({gamma}, {tau}) at mode {:?} (value {:.3e})",
                    check.worst_mode, check.worst_value
                )));
            }
        }
        ChainMode::ZeroRho => {
            let dist = dist_to_int(rho.rho);
            if dist > (rho.error_bound * 4.0).max(1e-2) {
                return Err(Error::ArithmeticPrecondition(format!(
                    "rotation number {:.6} is not 0 (mod 1)",
                    rho.rho
                )));
            }
        }
    }
    let mut state = KamState::from_cocycle(c)?;
    state.rho_orig = Some(rho.rho);
    let mut records = Vec::new();
    let state = run_chain_from(state, sched, &mut records)?;
    let report = finish_report(&state, "chain", records, None, sched);
    Ok(ReduceOutcome { state, report })
}

/// Absorb a constant similarity into the state, turning an elliptic constant
/// into a rigid rotation.
fn normalize_to_rotation(state: &mut KamState) -> Result<()> {
    let (p, phi) = state.a_const.elliptic_normal_form()?;
    state.a_const = Mat2::rotation_turns(phi);
    state.f_pert = state.f_pert.conjugate_by_const(p);
    state.b_accum = state.b_accum.mul_const_left(p);
    Ok(())
}

/// Quantitative reducibility driver, both branches.
///
/// Diophantine branch: resonant steps are allowed until the measured
/// perturbation enters the regime where the rotation number, shifted by the
/// accumulated degree, is Diophantine enough for a resonance-free chain
/// (threshold ε² ≤ T(τ)·γ'¹¹·ε₀' with γ' = γ(1+|deg|)^{−τ}, or an explicit
/// arithmetic re-check once ε is small); the final constant is a rigid
/// rotation. Rational branch: after the resonances have unwound 2ρ ≡ ⟨m₀,α⟩
/// to zero — forced through a diagonalize-and-rotate conjugation if they did
/// not fire naturally — a zero-ρ chain drives the perturbation to the target;
/// the final constant has rotation number 0.
pub fn reduce_full(c: &Cocycle, sched: &KamSchedule, rho_class: RhoClass) -> Result<ReduceOutcome> {
    sched.validate()?;
    let mut records = Vec::new();
    match rho_class {
        RhoClass::Diophantine { gamma, tau } => {
            let measured = rotation_number(c, &RotationQuality::DEFAULT)?;
            let mut state = KamState::from_cocycle(c)?;
            state.rho_orig = Some(measured.rho);
            let mut switch_step = None;
            while state.eps() >= sched.target_eps {
                if state.step_index >= sched.max_steps {
                    return Err(Error::NoConvergence {
                        steps: state.step_index,
                        eps: state.eps(),
                    });
                }
                // switchover: the chain's precondition with the degree-
                // penalized constant
                let deg_norm = state.deg_accum.norm_max() as f64;
                let gamma_eff = gamma * (1.0 + deg_norm).powf(-tau);
                let eps = state.eps();
                let threshold_ok = eps * eps <= sched.chain_threshold(gamma_eff);
                let arithmetic_ok = eps <= 1e-5
                    && rho_diophantine_check(
                        &c.freq,
                        state.a_const.rotation_number(),
                        gamma_eff,
                        tau,
                        sched.trunc_radius(state.step_index + 1).min(1_000),
                    )
                    .passes;
                if threshold_ok || arithmetic_ok {
                    switch_step = Some(state.step_index);
                    state = run_chain_from(state, sched, &mut records)?;
                    break;
                }
                let out = kam_step(&state, sched)?;
                records.push(out.record.clone());
                match out.kind {
                    StepKind::Halted(reason) => {
                        return Err(Error::Halted(format!("{reason:?}")))
                    }
                    _ => state = out.state,
                }
            }
            normalize_to_rotation(&mut state).map_err(|_| {
                Error::InconsistentState(
                    "Diophantine branch ended on a non-elliptic constant".into(),
                )
            })?;
            let report = finish_report(&state, "diophantine", records, switch_step, sched);
            Ok(ReduceOutcome { state, report })
        }
        RhoClass::Rational { m0 } => {
            let measured = rotation_number(c, &RotationQuality::DEFAULT)?;
            let mut state = KamState::from_cocycle(c)?;
            state.rho_orig = Some(measured.rho);
            let force_eps = sched.target_eps.max(1e-7);
            while state.eps() >= force_eps && state.step_index < sched.max_steps {
                if state.deg_accum == m0
                    && dist_to_int(2.0 * state.a_const.rotation_number()) < 1e-3
                {
                    break;
                }
                let out = kam_step(&state, sched)?;
                records.push(out.record.clone());
                match out.kind {
                    StepKind::Halted(reason) => {
                        return Err(Error::Halted(format!("{reason:?}")))
                    }
                    _ => state = out.state,
                }
            }
            let mut switch_step = None;
            let residual_site = ModeIndex([
                m0.0[0] - state.deg_accum.0[0],
                m0.0[1] - state.deg_accum.0[1],
            ]);
            if !residual_site.is_zero() {
                // diagonalize and rotate: P brings the elliptic constant to a
                // rigid rotation, Q = R_{−⟨r,θ⟩/2} moves 2ρ to 0
                let (p, phi) = state.a_const.elliptic_normal_form().map_err(|_| {
                    Error::InconsistentState(format!(
                        "rational branch needs an elliptic constant to unwind {:?}",
                        residual_site
                    ))
                })?;
                let site = if dist_to_int(2.0 * phi - c.freq.dot(&residual_site))
                    <= dist_to_int(2.0 * phi + c.freq.dot(&residual_site))
                {
                    residual_site
                } else {
                    residual_site.neg()
                };
                let q = MatrixTorusFunction::rotation_half_winding(c.d(), &site.neg());
                let phi_new = (phi - c.freq.dot(&site) / 2.0).rem_euclid(1.0);
                state.a_const = Mat2::rotation_turns(phi_new);
                let f1 = state.f_pert.conjugate_by_const(p);
                let f2 = q.mul(&f1)?.mul(&q.adjugate_sl2())?;
                state.f_pert = f2.try_demote().unwrap_or(f2);
                state.b_accum = q.mul_const_right(p).mul(&state.b_accum)?;
                state.deg_accum = state.deg_accum.add(&site);
                switch_step = Some(state.step_index);
            }
            state = run_chain_from(state, sched, &mut records)?;
            let report = finish_report(&state, "rational", records, switch_step, sched);
            Ok(ReduceOutcome { state, report })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::ScalarTorusFunction;

    #[test]
    fn trivial_chain_on_zero_perturbation() {
        let c = Cocycle::constant(crate::Frequency::golden(), Mat2::rotation_turns(0.13)).unwrap();
        let sched = KamSchedule::with_norm(1.0);
        let out = reduce_chain(
            &c,
            &sched,
            ChainMode::DiophantineRho {
                gamma: 0.05,
                tau: 2.0,
            },
        )
        .unwrap();
        assert_eq!(out.report.steps, 0);
        assert!(out.report.final_eps < 1e-15);
        assert!(out.report.b_dist_to_const < 1e-12);
    }

    #[test]
    fn chain_reduces_small_perturbation() {
        // rotation far from resonances, small two-mode perturbation
        let freq = crate::Frequency::golden();
        let h = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 4e-3);
        let e = ScalarTorusFunction::sine(1, ModeIndex::one(2), 3e-3);
        let f = MatrixTorusFunction::from_entries(
            h.clone(),
            e.clone(),
            e.scale(-0.5),
            h.scale(-1.0),
        )
        .unwrap();
        let a = Mat2::rotation_turns(0.13); // 2ρ = 0.26, comfortably nonresonant
        let state = KamState::from_parts(freq.clone(), a, f).unwrap();
        let c = state.origin().clone();
        let sched = KamSchedule::with_norm(1.0);
        let out = reduce_chain(
            &c,
            &sched,
            ChainMode::DiophantineRho {
                gamma: 0.05,
                tau: 2.0,
            },
        )
        .unwrap();
        assert!(out.report.final_eps < sched.target_eps);
        assert!(out.report.conj_residual < 1e-9, "residual {}", out.report.conj_residual);
        // quadratic-type contraction after the first step
        for w in out.report.records.windows(2) {
            let (prev, next) = (&w[0], &w[1]);
            if next.eps_out > sched.target_eps {
                assert!(
                    next.eps_out <= prev.eps_out.powf(1.4) * 1.0001,
                    "step {}: {:.3e} -> {:.3e}",
                    next.step_index,
                    prev.eps_out,
                    next.eps_out
                );
            }
        }
    }

    #[test]
    fn full_driver_trivial_constant() {
        let c = Cocycle::constant(crate::Frequency::golden(), Mat2::rotation_turns(0.13)).unwrap();
        let sched = KamSchedule::with_norm(1.0);
        let out = reduce_full(
            &c,
            &sched,
            RhoClass::Diophantine {
                gamma: 0.05,
                tau: 2.0,
            },
        )
        .unwrap();
        assert_eq!(out.report.deg_accum, vec![0]);
        // final constant is a rigid rotation
        let a = out.state.a_const;
        assert!((a - Mat2::rotation_turns(a.rotation_number())).max_abs() < 1e-12);
    }
}
