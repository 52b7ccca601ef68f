//! C ABI for the wavefront-kdv toolkit.
//!
//! Conventions:
//! - Every fallible call returns a [`WkStatus`]; `WK_STATUS_OK` is 0.
//! - On failure the call stores a message retrievable with
//!   [`wk_last_error`]; the pointer stays valid until the next failing
//!   call on the same thread.
//! - Handles ([`WkConfig`]) are opaque; free them with the matching
//!   `*_free` function exactly once.  Passing NULL to a `*_free` is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wavefront_kdv::config::RunConfig;
use wavefront_kdv::detector::{
    calibrate_threshold, sweep_ii, Classification, PhasePoint, SweepConfig,
};
use wavefront_kdv::characteristics::{trace, CharSpec};
use wavefront_kdv::Error;

/// Status codes returned by every fallible API call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WkStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument was malformed (bad UTF-8, non-finite number, ...).
    InvalidArgument = 2,
    /// Configuration text failed to parse or validate.
    Config = 3,
    /// A numerical operation failed (instability, lost resolution, ...).
    Numeric = 4,
}

/// Regular / singular verdict for a phase-space point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WkClass {
    Regular = 0,
    Singular = 1,
    Indeterminate = 2,
}

/// Result of a detector sweep at one phase-space point.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WkDetectResult {
    /// Fitted decay exponent of |W u| against the packet scale.
    pub exponent: f64,
    /// Coefficient of determination of the log-log fit.
    pub r2: f64,
    /// Threshold separating regular from singular exponents.
    pub n_thr: f64,
    /// Dead band around the threshold mapped to `Indeterminate`.
    pub margin: f64,
    pub classification: WkClass,
}

/// Opaque run configuration handle.
pub struct WkConfig {
    inner: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn fail(status: WkStatus, msg: &str) -> WkStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> WkStatus {
    match err {
        Error::Config(_) => WkStatus::Config,
        Error::InvalidGrid(_) | Error::ZeroNonlinearity => WkStatus::InvalidArgument,
        _ => WkStatus::Numeric,
    }
}

fn fail_err(err: &Error) -> WkStatus {
    fail(status_of(err), &err.to_string())
}

/// Shield the C boundary from panics.
fn guarded(body: impl FnOnce() -> WkStatus) -> WkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(WkStatus::Numeric, "internal panic"),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread.
///
/// Valid until the next failing call on the same thread.  Never NULL.
#[no_mangle]
pub extern "C" fn wk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a configuration with library defaults.
#[no_mangle]
pub extern "C" fn wk_config_default(out: *mut *mut WkConfig) -> WkStatus {
    guarded(|| {
        if out.is_null() {
            return fail(WkStatus::NullPointer, "out is NULL");
        }
        let handle = Box::new(WkConfig {
            inner: RunConfig::default(),
        });
        unsafe { *out = Box::into_raw(handle) };
        WkStatus::Ok
    })
}

/// Parse `key = value` configuration text over the defaults.
///
/// `text` must be NUL-terminated UTF-8.  On success `*out` owns a new
/// handle; free it with [`wk_config_free`].
#[no_mangle]
pub extern "C" fn wk_config_parse(text: *const c_char, out: *mut *mut WkConfig) -> WkStatus {
    guarded(|| {
        if text.is_null() || out.is_null() {
            return fail(WkStatus::NullPointer, "text/out is NULL");
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail(WkStatus::InvalidArgument, "config text is not UTF-8"),
        };
        match RunConfig::parse(text) {
            Ok(cfg) => {
                let handle = Box::new(WkConfig { inner: cfg });
                unsafe { *out = Box::into_raw(handle) };
                WkStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Release a configuration handle.  NULL is ignored.
#[no_mangle]
pub extern "C" fn wk_config_free(cfg: *mut WkConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Copy the configuration's hex SHA-256 digest (64 chars + NUL) into `buf`.
///
/// `len` must be at least 65.
#[no_mangle]
pub extern "C" fn wk_config_digest(
    cfg: *const WkConfig,
    buf: *mut c_char,
    len: usize,
) -> WkStatus {
    guarded(|| {
        if cfg.is_null() || buf.is_null() {
            return fail(WkStatus::NullPointer, "cfg/buf is NULL");
        }
        let digest = unsafe { &*cfg }.inner.digest().as_bytes();
        if len < digest.len() + 1 {
            return fail(WkStatus::InvalidArgument, "digest buffer needs 65 bytes");
        }
        unsafe {
            std::ptr::copy_nonoverlapping(digest.as_ptr() as *const c_char, buf, digest.len());
            *buf.add(digest.len()) = 0;
        }
        WkStatus::Ok
    })
}

fn resolved_sweep(cfg: &RunConfig) -> Result<SweepConfig, Error> {
    let mut sweep = cfg.sweep();
    if cfg.needs_calibration() {
        let (n_thr, margin) = calibrate_threshold(&sweep)?;
        sweep.n_thr = n_thr;
        sweep.margin = margin;
    }
    Ok(sweep)
}

/// Run the initial-data detector sweep at the configured phase-space point
/// (`detector.x`, `detector.xi`, `detector.t0`) and classify it.
///
/// If `detector.n_thr` is negative the threshold is first calibrated from
/// reference smooth and jump data on the same sweep.
#[no_mangle]
pub extern "C" fn wk_detect(cfg: *const WkConfig, out: *mut WkDetectResult) -> WkStatus {
    guarded(|| {
        if cfg.is_null() || out.is_null() {
            return fail(WkStatus::NullPointer, "cfg/out is NULL");
        }
        let cfg = &unsafe { &*cfg }.inner;
        let result = (|| -> Result<WkDetectResult, Error> {
            let sweep = resolved_sweep(cfg)?;
            let p = PhasePoint::new(cfg.detector_x, cfg.detector_xi)?;
            let coeff = cfg.coefficient()?;
            let u0 = cfg.data_source();
            let fit = sweep_ii(&u0, &coeff, cfg.detector_t0, p, &sweep)?;
            Ok(WkDetectResult {
                exponent: fit.exponent,
                r2: fit.r2,
                n_thr: sweep.n_thr,
                margin: sweep.margin,
                classification: match fit.classification {
                    Classification::Regular => WkClass::Regular,
                    Classification::Singular => WkClass::Singular,
                    Classification::Indeterminate => WkClass::Indeterminate,
                },
            })
        })();
        match result {
            Ok(r) => {
                unsafe { *out = r };
                WkStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Trace the bicharacteristic through (`trace.x0`, `trace.t0`) with
/// direction `trace.xi` and scale `trace.lambda` back to time 0; writes the
/// foot point into `*x_at_zero`.
#[no_mangle]
pub extern "C" fn wk_trace(cfg: *const WkConfig, x_at_zero: *mut f64) -> WkStatus {
    guarded(|| {
        if cfg.is_null() || x_at_zero.is_null() {
            return fail(WkStatus::NullPointer, "cfg/x_at_zero is NULL");
        }
        let cfg = &unsafe { &*cfg }.inner;
        let result = (|| -> Result<f64, Error> {
            let coeff = cfg.coefficient()?;
            let spec = CharSpec::new(
                cfg.trace_x0,
                cfg.trace_t0,
                cfg.trace_xi,
                cfg.trace_lambda,
                coeff,
            );
            Ok(trace(&spec)?.x_at_zero)
        })();
        match result {
            Ok(x) => {
                unsafe { *x_at_zero = x };
                WkStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn parse(text: &str) -> *mut WkConfig {
        let c = CString::new(text).unwrap();
        let mut handle: *mut WkConfig = ptr::null_mut();
        assert_eq!(wk_config_parse(c.as_ptr(), &mut handle), WkStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    fn last_error_string() -> String {
        unsafe { CStr::from_ptr(wk_last_error()) }
            .to_str()
            .unwrap()
            .to_string()
    }

    #[test]
    fn version_is_a_static_string() {
        let v = unsafe { CStr::from_ptr(wk_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn default_config_round_trips_a_digest() {
        let mut handle: *mut WkConfig = ptr::null_mut();
        assert_eq!(wk_config_default(&mut handle), WkStatus::Ok);
        let mut buf = [0 as c_char; 65];
        assert_eq!(wk_config_digest(handle, buf.as_mut_ptr(), 65), WkStatus::Ok);
        let digest = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
        assert_eq!(digest.len(), 64);
        assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
        // too-small buffer is rejected, not truncated
        assert_eq!(
            wk_config_digest(handle, buf.as_mut_ptr(), 64),
            WkStatus::InvalidArgument
        );
        wk_config_free(handle);
    }

    #[test]
    fn bad_key_is_a_config_error_naming_the_key() {
        let c = CString::new("detector.bogus = 1\n").unwrap();
        let mut handle: *mut WkConfig = ptr::null_mut();
        assert_eq!(wk_config_parse(c.as_ptr(), &mut handle), WkStatus::Config);
        assert!(handle.is_null());
        assert!(last_error_string().contains("detector.bogus"));
    }

    #[test]
    fn null_pointers_are_rejected() {
        assert_eq!(
            wk_config_parse(ptr::null(), ptr::null_mut()),
            WkStatus::NullPointer
        );
        assert_eq!(wk_detect(ptr::null(), ptr::null_mut()), WkStatus::NullPointer);
        assert_eq!(wk_trace(ptr::null(), ptr::null_mut()), WkStatus::NullPointer);
        wk_config_free(ptr::null_mut()); // no-op, must not crash
    }

    #[test]
    fn trace_reproduces_the_free_drift() {
        let handle = parse(
            "coefficient.kind = zero\n\
             trace.x0 = 0\n\
             trace.t0 = 0.5\n\
             trace.xi = 1\n\
             trace.lambda = 8\n",
        );
        let mut x = f64::NAN;
        assert_eq!(wk_trace(handle, &mut x), WkStatus::Ok);
        // x(0) = x0 + 3 lambda^2 xi^2 t0 = 96 for free flow
        assert!((x - 96.0).abs() < 1e-6, "x_at_zero = {x}");
        wk_config_free(handle);
    }

    #[test]
    fn detect_flags_the_jump_and_clears_the_smooth_point() {
        let handle = parse(
            "coefficient.kind = zero\n\
             data.kind = jump_gaussian\n\
             detector.t0 = 0\n\
             detector.x = 0\n\
             detector.xi = 1\n",
        );
        let mut r = WkDetectResult {
            exponent: 0.0,
            r2: 0.0,
            n_thr: 0.0,
            margin: 0.0,
            classification: WkClass::Indeterminate,
        };
        assert_eq!(wk_detect(handle, &mut r), WkStatus::Ok);
        assert_eq!(r.classification, WkClass::Singular);
        assert!(r.n_thr > 0.0 && r.margin > 0.0);
        wk_config_free(handle);

        let handle = parse(
            "coefficient.kind = zero\n\
             data.kind = jump_gaussian\n\
             detector.t0 = 0\n\
             detector.x = -3\n\
             detector.xi = 1\n",
        );
        assert_eq!(wk_detect(handle, &mut r), WkStatus::Ok);
        assert_eq!(r.classification, WkClass::Regular);
        wk_config_free(handle);
    }
}
