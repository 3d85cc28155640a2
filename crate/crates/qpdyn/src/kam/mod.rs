//! KAM reducibility engine for cocycles close to constants.
//!
//! One step conjugates (α, A e^{f}) by e^{−Y} with Y solving the linearized
//! (cohomological) equation, absorbing the average of f into the constant and
//! collecting the exact quadratic remainder by a pointwise matrix logarithm.
//! When the constant's rotation number is anomalously close to a lattice
//! frequency ⟨m,α⟩/2, the step first unwinds the resonance with a half-lattice
//! rotation, which changes the accumulated degree by m.
//!
//! Chains (`reduce_chain`) forbid resonances — the Diophantine-ρ and zero-ρ
//! regimes — while the full driver (`reduce_full`) allows them and hands off
//! to a chain once the arithmetic precondition is met.

mod reduce;
mod schedule;
mod solve;
mod step;

pub use reduce::{reduce_chain, reduce_full, ChainMode, ReduceOutcome, ReduceReport, RhoClass};
pub use schedule::KamSchedule;
pub use solve::{solve_cohomological, CohomologySolution};
pub use step::{
    detect_resonance, kam_step, HaltReason, KamState, KamStepOutcome, StepKind, StepRecord,
};
