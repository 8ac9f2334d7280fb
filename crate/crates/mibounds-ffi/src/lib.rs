//! C ABI for the mibounds library.
//!
//! Conventions:
//! - Every fallible function returns an `MbStatus` code and writes results
//!   through out-pointers; `MB_STATUS_OK` (0) means all out-params are set.
//! - Handles (`MbModel`, `MbPrior`) are opaque; create with `*_new`, release
//!   with the matching `*_free`. Freeing a null pointer is a no-op.
//! - Structured results (certificates, experiment tables) are returned as
//!   heap-allocated JSON C strings; release them with `mb_string_free`.
//! - On failure, `mb_last_error_message` returns a human-readable
//!   description of the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mibounds::assumptions::{certify_assumption2_gaussian, certify_assumption3_gaussian};
use mibounds::bounds::{
    bound_gaussian_l2, bound_mle, bound_pacbayes_expectation, bound_thm31_general,
    bound_thm31_opt, bound_thm32_prob, bound_thm_main,
};
use mibounds::experiments::{
    meta_json, run_contraction_experiment, verify_mi_bound, ExperimentConfig,
};
use mibounds::models::{GaussianMeanModel, ModelSpec};
use mibounds::posteriors::{mutual_information_gaussian, GaussianMeasure};
use mibounds::Error;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OutOfDomain = 4,
    CertificationFailed = 5,
    Unsupported = 6,
    Utf8 = 7,
    Internal = 8,
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> MbStatus {
    match err {
        Error::DimensionMismatch { .. } => MbStatus::DimensionMismatch,
        Error::OutOfDomain { .. } => MbStatus::OutOfDomain,
        Error::AlphaOutOfRange(_)
        | Error::EmptySample
        | Error::InvalidModel(_)
        | Error::InvalidConfig(_)
        | Error::NonPositiveValue(_)
        | Error::NetTooLarge(_) => MbStatus::InvalidArgument,
        Error::CertificationFailed(_) => MbStatus::CertificationFailed,
        Error::Unsupported(_) => MbStatus::Unsupported,
        Error::Io(_) | Error::Json(_) => MbStatus::Internal,
    }
}

fn fail(err: Error) -> MbStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Runs `body`, converting panics and errors into status codes.
fn guarded(body: impl FnOnce() -> Result<(), MbStatus>) -> MbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MbStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            MbStatus::Internal
        }
    }
}

macro_rules! require_ptr {
    ($p:expr) => {
        if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return Err(MbStatus::NullPointer);
        }
    };
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], MbStatus> {
    if ptr.is_null() {
        set_error("null array pointer");
        return Err(MbStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn into_json_out(value: serde_json::Value, out: *mut *mut c_char) -> Result<(), MbStatus> {
    let text = serde_json::to_string_pretty(&value).map_err(|e| fail(Error::Json(e)))?;
    let c = CString::new(text).map_err(|_| {
        set_error("JSON contained an interior NUL byte");
        MbStatus::Internal
    })?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Opaque handle: Gaussian location model.
pub struct MbModel(GaussianMeanModel);
/// Opaque handle: diagonal Gaussian prior.
pub struct MbPrior(GaussianMeasure);

/// Copies the most recent error message on this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length.
#[no_mangle]
pub extern "C" fn mb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len() - 1
    })
}

/// Frees a string returned by this library.
#[no_mangle]
pub extern "C" fn mb_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

/// Creates a Gaussian location model with isotropic noise.
#[no_mangle]
pub extern "C" fn mb_model_gaussian_new(
    dim: usize,
    noise_sd: f64,
    out: *mut *mut MbModel,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out);
        let m = GaussianMeanModel::new(dim, noise_sd).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(MbModel(m))) };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn mb_model_free(model: *mut MbModel) {
    if !model.is_null() {
        unsafe { drop(Box::from_raw(model)) };
    }
}

/// Creates a centered isotropic Gaussian prior.
#[no_mangle]
pub extern "C" fn mb_prior_isotropic_new(
    dim: usize,
    sigma: f64,
    out: *mut *mut MbPrior,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out);
        let p = GaussianMeasure::isotropic(dim, sigma).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(MbPrior(p))) };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn mb_prior_free(prior: *mut MbPrior) {
    if !prior.is_null() {
        unsafe { drop(Box::from_raw(prior)) };
    }
}

/// RHS of the in-expectation mutual-information bound: mi / (n (1 - alpha)).
#[no_mangle]
pub extern "C" fn mb_bound_main(mi: f64, n: usize, alpha: f64, out_rhs: *mut f64) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        let r = bound_thm_main(mi, n, alpha).map_err(fail)?;
        unsafe { *out_rhs = r.rhs };
        Ok(())
    })
}

/// General localized contraction bound at inverse temperature beta.
/// `out_valid` is 0 when beta violates the admissibility window (the RHS is
/// then +inf).
#[no_mangle]
pub extern "C" fn mb_bound_localized_general(
    c: f64,
    d_pi: f64,
    kappa: f64,
    beta: f64,
    alpha: f64,
    n: usize,
    out_rhs: *mut f64,
    out_valid: *mut i32,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        require_ptr!(out_valid);
        let r = bound_thm31_general(c, d_pi, kappa, beta, alpha, n);
        unsafe {
            *out_rhs = r.rhs;
            *out_valid = r.valid as i32;
        }
        Ok(())
    })
}

/// Optimized localized contraction bound: alpha (2c/(1-alpha))^(1+kappa)
/// d_pi / n^kappa.
#[no_mangle]
pub extern "C" fn mb_bound_localized_opt(
    c: f64,
    d_pi: f64,
    kappa: f64,
    alpha: f64,
    n: usize,
    out_rhs: *mut f64,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        let r = bound_thm31_opt(c, d_pi, kappa, alpha, n).map_err(fail)?;
        unsafe { *out_rhs = r.rhs };
        Ok(())
    })
}

/// Squared-distance contraction bound for the Gaussian location model.
#[no_mangle]
pub extern "C" fn mb_bound_gaussian_l2(
    dim: usize,
    theta0_norm_sq: f64,
    sigma_sq: f64,
    v_sq: f64,
    alpha: f64,
    n: usize,
    out_rhs: *mut f64,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        let r = bound_gaussian_l2(dim, theta0_norm_sq, sigma_sq, v_sq, alpha, n).map_err(fail)?;
        unsafe { *out_rhs = r.rhs };
        Ok(())
    })
}

/// High-probability contraction bound at confidence 1 - delta - eta.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn mb_bound_highprob(
    c: f64,
    d_pi: f64,
    d_pi_prime: f64,
    kappa: f64,
    alpha: f64,
    n: usize,
    delta: f64,
    eta: f64,
    out_rhs: *mut f64,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        let r = bound_thm32_prob(c, d_pi, d_pi_prime, kappa, alpha, n, delta, eta).map_err(fail)?;
        unsafe { *out_rhs = r.rhs };
        Ok(())
    })
}

/// PAC-Bayes style in-expectation bound from the empirical ingredients.
#[no_mangle]
pub extern "C" fn mb_bound_pacbayes(
    alpha: f64,
    n: usize,
    exp_rn: f64,
    kl_rho_pi: f64,
    out_rhs: *mut f64,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        let r = bound_pacbayes_expectation(alpha, n, exp_rn, kl_rho_pi).map_err(fail)?;
        unsafe { *out_rhs = r.rhs };
        Ok(())
    })
}

/// Covering-net risk bound for the box-constrained MLE.
#[no_mangle]
pub extern "C" fn mb_bound_mle(
    m_lower: f64,
    lipschitz: f64,
    log_cover: f64,
    alpha: f64,
    n: usize,
    out_rhs: *mut f64,
) -> MbStatus {
    guarded(|| {
        require_ptr!(out_rhs);
        let r = bound_mle(m_lower, lipschitz, log_cover, alpha, n).map_err(fail)?;
        unsafe { *out_rhs = r.rhs };
        Ok(())
    })
}

/// Closed-form mutual information between the fractional posterior draw and
/// the sample, conjugate Gaussian case.
#[no_mangle]
pub extern "C" fn mb_mutual_information(
    model: *const MbModel,
    prior: *const MbPrior,
    alpha: f64,
    n: usize,
    theta0: *const f64,
    theta0_len: usize,
    out_mi: *mut f64,
) -> MbStatus {
    guarded(|| {
        require_ptr!(model);
        require_ptr!(prior);
        require_ptr!(out_mi);
        let t0 = unsafe { slice_arg(theta0, theta0_len)? };
        let (m, p) = unsafe { (&(*model).0, &(*prior).0) };
        let mi = mutual_information_gaussian(m, p, alpha, n, t0).map_err(fail)?;
        unsafe { *out_mi = mi };
        Ok(())
    })
}

/// Dimension certificate for the Gaussian prior-model pair as a JSON string
/// (assumption = 2 for the KL moment, 3 to include the variance moment).
#[no_mangle]
pub extern "C" fn mb_certify_gaussian(
    model: *const MbModel,
    prior: *const MbPrior,
    theta0: *const f64,
    theta0_len: usize,
    assumption: u32,
    out_json: *mut *mut c_char,
) -> MbStatus {
    guarded(|| {
        require_ptr!(model);
        require_ptr!(prior);
        require_ptr!(out_json);
        let t0 = unsafe { slice_arg(theta0, theta0_len)? };
        let (m, p) = unsafe { (&(*model).0, &(*prior).0) };
        let cert = match assumption {
            2 => certify_assumption2_gaussian(m, p, t0).map_err(fail)?,
            3 => certify_assumption3_gaussian(m, p, t0).map_err(fail)?,
            k => {
                return Err(fail(Error::Unsupported(format!(
                    "assumption {k} (expected 2 or 3)"
                ))))
            }
        };
        let value = serde_json::to_value(&cert).map_err(|e| fail(Error::Json(e)))?;
        into_json_out(value, out_json)
    })
}

/// Runs the Gaussian contraction experiment and returns the per-n results
/// plus metadata as a JSON string. `bound_id` selects the reference bound:
/// "thm31_opt" (KL loss) or "gaussian_l2" (squared-distance loss).
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn mb_run_contraction(
    model: *const MbModel,
    prior: *const MbPrior,
    theta0: *const f64,
    theta0_len: usize,
    alpha: f64,
    n_grid: *const usize,
    n_grid_len: usize,
    replicates: usize,
    seed: u64,
    bound_id: *const c_char,
    out_json: *mut *mut c_char,
) -> MbStatus {
    guarded(|| {
        require_ptr!(model);
        require_ptr!(prior);
        require_ptr!(out_json);
        require_ptr!(bound_id);
        if n_grid.is_null() {
            set_error("null n_grid pointer");
            return Err(MbStatus::NullPointer);
        }
        let t0 = unsafe { slice_arg(theta0, theta0_len)? };
        let grid = unsafe { std::slice::from_raw_parts(n_grid, n_grid_len) };
        let bound = unsafe { CStr::from_ptr(bound_id) }
            .to_str()
            .map_err(|_| {
                set_error("bound_id is not valid UTF-8");
                MbStatus::Utf8
            })?;
        let (m, p) = unsafe { ((*model).0.clone(), (*prior).0.clone()) };
        let cfg = ExperimentConfig {
            model: ModelSpec::GaussianMean(m),
            prior: p,
            theta0: t0.to_vec(),
            alpha,
            n_grid: grid.to_vec(),
            replicates,
            seed,
            bound_id: bound.to_string(),
            use_variational: false,
        };
        let res = run_contraction_experiment(&cfg).map_err(fail)?;
        let mut value = meta_json(cfg.describe(), &res);
        value["points"] = serde_json::to_value(&res.points).map_err(|e| fail(Error::Json(e)))?;
        into_json_out(value, out_json)
    })
}

/// Verifies the in-expectation mutual-information bound by Monte Carlo and
/// returns the report as a JSON string.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn mb_verify_mi_bound(
    model: *const MbModel,
    prior: *const MbPrior,
    alpha: f64,
    n: usize,
    theta0: *const f64,
    theta0_len: usize,
    replicates: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> MbStatus {
    guarded(|| {
        require_ptr!(model);
        require_ptr!(prior);
        require_ptr!(out_json);
        let t0 = unsafe { slice_arg(theta0, theta0_len)? };
        let (m, p) = unsafe { (&(*model).0, &(*prior).0) };
        let rep = verify_mi_bound(m, p, alpha, n, t0, replicates, seed).map_err(fail)?;
        let value = serde_json::to_value(&rep).map_err(|e| fail(Error::Json(e)))?;
        into_json_out(value, out_json)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn scalar_bounds_round_trip() {
        let mut rhs = 0.0;
        assert_eq!(
            mb_bound_localized_opt(2.0, 1.0, 1.0, 0.5, 100, &mut rhs),
            MbStatus::Ok
        );
        assert!((rhs - 0.32).abs() < 1e-15);
        assert_eq!(
            mb_bound_main(0.202733, 1, 0.5, &mut rhs),
            MbStatus::Ok
        );
        assert!((rhs - 0.405466).abs() < 1e-12);
        let mut valid = 1;
        assert_eq!(
            mb_bound_localized_general(2.0, 1.0, 1.0, 1e9, 0.5, 100, &mut rhs, &mut valid),
            MbStatus::Ok
        );
        assert_eq!(valid, 0);
        assert!(rhs.is_infinite());
    }

    #[test]
    fn error_paths_set_messages() {
        let mut rhs = 0.0;
        assert_eq!(
            mb_bound_main(0.2, 1, 1.5, &mut rhs),
            MbStatus::InvalidArgument
        );
        let mut buf = [0i8; 128];
        let n = mb_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len());
        assert!(n > 0);
        assert_eq!(
            mb_bound_main(0.2, 1, 0.5, ptr::null_mut()),
            MbStatus::NullPointer
        );
    }

    #[test]
    fn handles_and_json_returns() {
        let mut model: *mut MbModel = ptr::null_mut();
        let mut prior: *mut MbPrior = ptr::null_mut();
        assert_eq!(mb_model_gaussian_new(1, 1.0, &mut model), MbStatus::Ok);
        assert_eq!(mb_prior_isotropic_new(1, 1.0, &mut prior), MbStatus::Ok);
        let theta0 = [0.0f64];

        let mut mi = 0.0;
        assert_eq!(
            mb_mutual_information(model, prior, 1.0, 1, theta0.as_ptr(), 1, &mut mi),
            MbStatus::Ok
        );
        assert!((mi - 0.5 * 1.5f64.ln()).abs() < 1e-15);

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(
            mb_certify_gaussian(model, prior, theta0.as_ptr(), 1, 2, &mut json),
            MbStatus::Ok
        );
        let parsed: serde_json::Value =
            serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
        assert_eq!(parsed["d_pi"], 0.5);
        mb_string_free(json);

        let grid = [50usize, 100];
        let bound = CString::new("thm31_opt").unwrap();
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(
            mb_run_contraction(
                model,
                prior,
                theta0.as_ptr(),
                1,
                0.5,
                grid.as_ptr(),
                2,
                200,
                7,
                bound.as_ptr(),
                &mut json
            ),
            MbStatus::Ok
        );
        let parsed: serde_json::Value =
            serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
        assert_eq!(parsed["schema"], 1);
        assert_eq!(parsed["points"].as_array().unwrap().len(), 2);
        mb_string_free(json);

        // Dimension mismatch surfaces as a status, not a panic.
        let bad = [0.0f64, 0.0];
        assert_eq!(
            mb_mutual_information(model, prior, 0.5, 1, bad.as_ptr(), 2, &mut mi),
            MbStatus::DimensionMismatch
        );

        mb_model_free(model);
        mb_prior_free(prior);
        mb_model_free(ptr::null_mut());
    }
}
