//! Numerics for quasi-periodic SL(2,ℝ) cocycles over torus translations.
//!
//! The library covers the constructive side of the reducibility theory of
//! cocycles (θ, v) ↦ (θ+α, A(θ)v) with A taking values in SL(2,ℝ) and α a
//! Diophantine frequency vector on T^d, d ∈ {1,2}:
//!
//! - [`fourier`] — finitely supported Fourier series on T^d and 2T^d, the
//!   function algebra everything else is built on (norms, truncation,
//!   smoothing multipliers, pointwise 2×2 exp/log via grid transforms).
//! - [`dynamics`] — fibered rotation number, Lyapunov exponent, topological
//!   degree, invariant-cone uniform hyperbolicity certificates, conjugation.
//! - [`kam`] — the KAM reducibility engine: cohomological solver, one
//!   quadratic step with resonance handling, non-resonant chains and the
//!   full two-branch driver (Diophantine / rational rotation number).
//! - [`spectrum`] — Schrödinger cocycles, integrated density of states,
//!   spectrum/gap scanning and gap labeling.
//! - [`duality`] — long-range dual operators, extraction of polynomially
//!   localized eigenfunctions from reduced cocycles, decay certificates.
//! - [`gap`] — parabolic normal forms at gap edges and the averaged
//!   perturbation test deciding whether a potential perturbation opens a gap.
//! - [`selftest`] — the end-to-end verification suite used by the CLI and
//!   the acceptance tests.

pub mod config;
pub mod duality;
pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod freq;
pub mod gap;
pub mod kam;
pub mod mat2;
pub mod selftest;
pub mod spectrum;

pub use error::{Error, Result};
pub use freq::Frequency;
pub use mat2::Mat2;
