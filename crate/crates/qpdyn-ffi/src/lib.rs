//! C ABI over the qpdyn pipelines.
//!
//! Frequencies and potentials are opaque handles created and freed here;
//! every computation returns a [`QpStatus`] and writes results through out
//! pointers. The last error message per thread is retrievable with
//! [`qp_last_error_message`]. The generated header lands in
//! `include/qpdyn.h`.

use libc::{c_char, size_t};
use qpdyn::config::{RotationQuality, UhOptions};
use qpdyn::dynamics::{fold_half, is_uniformly_hyperbolic, lyapunov_exponent, rotation_number};
use qpdyn::kam::{reduce_full, KamSchedule, RhoClass};
use qpdyn::spectrum::{scan_spectrum, schrodinger_cocycle, Potential, ScanQuality};
use qpdyn::Frequency;
use std::cell::RefCell;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    QpOk = 0,
    /// A verification check failed (certificates, bounds).
    QpCheckFailure = 1,
    /// Bad argument or configuration.
    QpInvalidArgument = 2,
    /// The iteration halted (small divisor, contraction failure, ...).
    QpNumericalHalt = 3,
    QpNullPointer = 4,
    QpIoError = 5,
}

/// Opaque frequency vector handle.
pub struct QpFrequency(Frequency);

/// Opaque potential handle.
pub struct QpPotential(Potential);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &qpdyn::Error) -> QpStatus {
    use qpdyn::Error::*;
    match err {
        Halted(_) | NoConvergence { .. } | SmallDivisor { .. } | ResonanceInChain(_) => {
            QpStatus::QpNumericalHalt
        }
        Io(_) => QpStatus::QpIoError,
        _ => QpStatus::QpInvalidArgument,
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn qp_last_error_message(buf: *mut c_char, len: size_t) -> size_t {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// The golden mean frequency (√5 − 1)/2.
#[no_mangle]
pub extern "C" fn qp_frequency_golden() -> *mut QpFrequency {
    Box::into_raw(Box::new(QpFrequency(Frequency::golden())))
}

/// A frequency vector from `d` components (d ∈ {1,2}); null on failure.
///
/// # Safety
/// `components` must point to `d` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn qp_frequency_new(
    components: *const f64,
    d: size_t,
) -> *mut QpFrequency {
    if components.is_null() || d == 0 || d > 2 {
        set_error("frequency needs 1 or 2 components");
        return std::ptr::null_mut();
    }
    let slice = std::slice::from_raw_parts(components, d);
    match Frequency::new(slice.to_vec()) {
        Ok(f) => Box::into_raw(Box::new(QpFrequency(f))),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `f` must come from a `qp_frequency_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qp_frequency_free(f: *mut QpFrequency) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Exhaustive Diophantine scan: writes 1 into `out` when
/// dist(⟨n,α⟩, ℤ) > κ/|n|^τ for all 0 < |n| ≤ radius.
///
/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qp_frequency_is_diophantine(
    f: *const QpFrequency,
    kappa: f64,
    tau: f64,
    radius: i64,
    out: *mut bool,
) -> QpStatus {
    if f.is_null() || out.is_null() {
        set_error("null pointer");
        return QpStatus::QpNullPointer;
    }
    let check = (*f).0.is_diophantine(kappa, tau, radius.max(1));
    *out = check.passes;
    QpStatus::QpOk
}

/// The zero potential on T^d.
#[no_mangle]
pub extern "C" fn qp_potential_zero(d: size_t) -> *mut QpPotential {
    if d == 0 || d > 2 {
        set_error("dimension must be 1 or 2");
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(QpPotential(Potential::zero(d))))
}

/// The almost Mathieu potential 2λ cos 2πθ.
#[no_mangle]
pub extern "C" fn qp_potential_almost_mathieu(lambda: f64) -> *mut QpPotential {
    Box::into_raw(Box::new(QpPotential(Potential::almost_mathieu(lambda))))
}

/// A d = 1 potential from cosine amplitudes: V(θ) = Σ_k amps[k-1]·cos 2πkθ,
/// scaled by `coupling`.
///
/// # Safety
/// `amps` must point to `n_amps` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn qp_potential_from_cosines(
    amps: *const f64,
    n_amps: size_t,
    coupling: f64,
) -> *mut QpPotential {
    if amps.is_null() && n_amps > 0 {
        set_error("null amplitude array");
        return std::ptr::null_mut();
    }
    let slice = std::slice::from_raw_parts(amps, n_amps);
    let mut v = qpdyn::fourier::ScalarTorusFunction::zero(1);
    for (k, a) in slice.iter().enumerate() {
        let mode = qpdyn::fourier::ScalarTorusFunction::cosine(
            1,
            qpdyn::fourier::ModeIndex::one(k as i64 + 1),
            *a,
        );
        v = match v.add(&mode) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return std::ptr::null_mut();
            }
        };
    }
    match Potential::new(v, coupling) {
        Ok(p) => Box::into_raw(Box::new(QpPotential(p))),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `p` must come from a `qp_potential_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qp_potential_free(p: *mut QpPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn run_guarded<T>(
    out: *mut T,
    body: impl FnOnce() -> Result<T, qpdyn::Error> + std::panic::UnwindSafe,
) -> QpStatus {
    if out.is_null() {
        set_error("null output pointer");
        return QpStatus::QpNullPointer;
    }
    match catch_unwind(body) {
        Ok(Ok(v)) => {
            *out = v;
            QpStatus::QpOk
        }
        Ok(Err(e)) => {
            let status = status_of(&e);
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic");
            QpStatus::QpNumericalHalt
        }
    }
}

/// Fibered rotation number of the Schrödinger cocycle at `energy`, folded to
/// [0, 1/2]; the estimator spread lands in `err_out` when non-null.
///
/// # Safety
/// Handles must be valid; `rho_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_rotation_number(
    pot: *const QpPotential,
    freq: *const QpFrequency,
    energy: f64,
    n_iters: u64,
    n_phases: u32,
    rho_out: *mut f64,
    err_out: *mut f64,
) -> QpStatus {
    if pot.is_null() || freq.is_null() {
        set_error("null handle");
        return QpStatus::QpNullPointer;
    }
    let pot = &(*pot).0;
    let freq = &(*freq).0;
    let mut err_val = 0.0f64;
    let status = run_guarded(rho_out, AssertUnwindSafe(|| {
        let c = schrodinger_cocycle(pot, freq, energy)?;
        let q = RotationQuality {
            n_iters: n_iters.max(1_000),
            n_phases: n_phases.max(1),
        };
        let est = rotation_number(&c, &q)?;
        err_val = est.error_bound;
        Ok(fold_half(est.rho))
    }));
    if status == QpStatus::QpOk && !err_out.is_null() {
        *err_out = err_val;
    }
    status
}

/// Top Lyapunov exponent at `energy` (clamped at 0).
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_lyapunov_exponent(
    pot: *const QpPotential,
    freq: *const QpFrequency,
    energy: f64,
    n_iters: u64,
    n_phases: u32,
    out: *mut f64,
) -> QpStatus {
    if pot.is_null() || freq.is_null() {
        set_error("null handle");
        return QpStatus::QpNullPointer;
    }
    let pot = &(*pot).0;
    let freq = &(*freq).0;
    run_guarded(out, AssertUnwindSafe(|| {
        let c = schrodinger_cocycle(pot, freq, energy)?;
        Ok(lyapunov_exponent(&c, n_iters.max(1_000), n_phases.max(1)).value)
    }))
}

/// Integrated density of states N(E) = 1 − 2ρ(E).
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_ids(
    pot: *const QpPotential,
    freq: *const QpFrequency,
    energy: f64,
    n_iters: u64,
    n_phases: u32,
    out: *mut f64,
) -> QpStatus {
    let mut rho = 0.0f64;
    let status = qp_rotation_number(
        pot,
        freq,
        energy,
        n_iters,
        n_phases,
        &mut rho as *mut f64,
        std::ptr::null_mut(),
    );
    if status == QpStatus::QpOk && !out.is_null() {
        *out = 1.0 - 2.0 * rho;
    }
    status
}

/// Invariant-cone hyperbolicity certificate at `energy`; writes 1 when
/// certified. A 0 only means not detected at this resolution.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_is_uniformly_hyperbolic(
    pot: *const QpPotential,
    freq: *const QpFrequency,
    energy: f64,
    n_max: u32,
    grid_n: size_t,
    out: *mut bool,
) -> QpStatus {
    if pot.is_null() || freq.is_null() {
        set_error("null handle");
        return QpStatus::QpNullPointer;
    }
    let pot = &(*pot).0;
    let freq = &(*freq).0;
    run_guarded(out, AssertUnwindSafe(|| {
        let c = schrodinger_cocycle(pot, freq, energy)?;
        let opts = UhOptions {
            n_max: n_max.max(4),
            grid_n: grid_n.max(16),
            ..UhOptions::default()
        };
        Ok(is_uniformly_hyperbolic(&c, &opts)?.uh)
    }))
}

/// Scan `[e0, e1]` on `n_grid` points and write the per-energy CSV
/// (E, rho, lyap, uh, gap_id, label) to `path`.
///
/// # Safety
/// Handles must be valid; `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn qp_scan_to_csv(
    pot: *const QpPotential,
    freq: *const QpFrequency,
    e0: f64,
    e1: f64,
    n_grid: size_t,
    path: *const c_char,
) -> QpStatus {
    if pot.is_null() || freq.is_null() || path.is_null() {
        set_error("null handle or path");
        return QpStatus::QpNullPointer;
    }
    let pot = &(*pot).0;
    let freq = &(*freq).0;
    let path = match std::ffi::CStr::from_ptr(path).to_str() {
        Ok(s) => s.to_string(),
        Err(_) => {
            set_error("path is not valid UTF-8");
            return QpStatus::QpInvalidArgument;
        }
    };
    let mut ok = false;
    let status = run_guarded(&mut ok as *mut bool, AssertUnwindSafe(|| {
        let scan = scan_spectrum(pot, freq, (e0, e1), n_grid.max(16), &ScanQuality::default())?;
        std::fs::write(&path, scan.to_csv())?;
        Ok(true)
    }));
    status
}

/// Summary of a Diophantine-branch KAM reduction at `energy`: final
/// perturbation size, conjugation residual and accumulated degree.
///
/// # Safety
/// Handles must be valid; out pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn qp_reduce_diophantine(
    pot: *const QpPotential,
    freq: *const QpFrequency,
    energy: f64,
    gamma: f64,
    tau: f64,
    final_eps_out: *mut f64,
    residual_out: *mut f64,
    degree_out: *mut i64,
) -> QpStatus {
    if pot.is_null() || freq.is_null() {
        set_error("null handle");
        return QpStatus::QpNullPointer;
    }
    let pot = &(*pot).0;
    let freq = &(*freq).0;
    let mut results = (0.0f64, 0.0f64, 0i64);
    let status = run_guarded(&mut results as *mut (f64, f64, i64), AssertUnwindSafe(|| {
        let c = schrodinger_cocycle(pot, freq, energy)?;
        let sched = KamSchedule::with_norm(c.amap.average().op_norm());
        let out = reduce_full(&c, &sched, RhoClass::Diophantine { gamma, tau })?;
        Ok((
            out.report.final_eps,
            out.report.conj_residual,
            out.report.deg_accum[0],
        ))
    }));
    if status == QpStatus::QpOk {
        if !final_eps_out.is_null() {
            *final_eps_out = results.0;
        }
        if !residual_out.is_null() {
            *residual_out = results.1;
        }
        if !degree_out.is_null() {
            *degree_out = results.2;
        }
    }
    status
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_through_the_c_abi() {
        let freq = qp_frequency_golden();
        let pot = qp_potential_zero(1);
        let mut rho = 0.0f64;
        let mut err = 0.0f64;
        let status = unsafe {
            qp_rotation_number(pot, freq, 0.0, 20_000, 8, &mut rho, &mut err)
        };
        assert_eq!(status, QpStatus::QpOk);
        assert!((rho - 0.25).abs() < 1e-6, "rho {rho}");
        unsafe {
            qp_potential_free(pot);
            qp_frequency_free(freq);
        }
    }

    #[test]
    fn null_pointers_are_rejected_with_message() {
        let mut rho = 0.0f64;
        let status = unsafe {
            qp_rotation_number(
                std::ptr::null(),
                std::ptr::null(),
                0.0,
                1000,
                1,
                &mut rho,
                std::ptr::null_mut(),
            )
        };
        assert_eq!(status, QpStatus::QpNullPointer);
        let mut buf = vec![0u8; 64];
        let n = unsafe { qp_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
        assert!(n > 0);
    }

    #[test]
    fn diophantine_check_through_abi() {
        let freq = qp_frequency_golden();
        let mut ok = false;
        let status =
            unsafe { qp_frequency_is_diophantine(freq, 0.2, 1.5, 1_000, &mut ok) };
        assert_eq!(status, QpStatus::QpOk);
        assert!(ok);
        // a rational frequency fails
        let comps = [1.0 / 3.0];
        let bad = unsafe { qp_frequency_new(comps.as_ptr(), 1) };
        let status = unsafe { qp_frequency_is_diophantine(bad, 0.2, 1.5, 100, &mut ok) };
        assert_eq!(status, QpStatus::QpOk);
        assert!(!ok);
        unsafe {
            qp_frequency_free(freq);
            qp_frequency_free(bad);
        }
    }

    #[test]
    fn hyperbolicity_flag_through_abi() {
        let freq = qp_frequency_golden();
        let pot = qp_potential_zero(1);
        let mut uh = false;
        let status =
            unsafe { qp_is_uniformly_hyperbolic(pot, freq, 2.5, 64, 64, &mut uh) };
        assert_eq!(status, QpStatus::QpOk);
        assert!(uh);
        let status =
            unsafe { qp_is_uniformly_hyperbolic(pot, freq, 0.3, 64, 64, &mut uh) };
        assert_eq!(status, QpStatus::QpOk);
        assert!(!uh);
        unsafe {
            qp_potential_free(pot);
            qp_frequency_free(freq);
        }
    }
}
