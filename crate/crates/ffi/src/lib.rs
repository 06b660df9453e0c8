//! C ABI over `exprk`.
//!
//! Schemes and problems are opaque handles created by `*_new` and released by
//! `*_free`. Every fallible call returns an [`ExprkStatus`]; the message for
//! the most recent failure on the calling thread is available through
//! [`exprk_last_error`]. Matrices are dense and row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use exprk::conditions::{check_scheme, CheckMode, CheckOptions};
use exprk::integrator::{integrate, ExecMode, PhiBackend};
use exprk::linalg::{Matrix, Vector};
use exprk::phi::{phi_all_dense, PhiMethod};
use exprk::problems::{self, error_at, SemilinearProblem};
use exprk::tableaus::Scheme;
use exprk::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExprkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownScheme = 3,
    UnknownProblem = 4,
    Divergence = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque scheme handle.
pub struct ExprkScheme(Scheme);

/// Opaque problem handle.
pub struct ExprkProblem(Box<dyn SemilinearProblem>);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> ExprkStatus {
    match e {
        Error::UnknownScheme(_) => ExprkStatus::UnknownScheme,
        Error::UnknownProblem(_) => ExprkStatus::UnknownProblem,
        Error::Divergence { .. } => ExprkStatus::Divergence,
        Error::InvalidArgument(_)
        | Error::NotSquare { .. }
        | Error::DimensionMismatch { .. }
        | Error::MissingExact => ExprkStatus::InvalidArgument,
        _ => ExprkStatus::Numerical,
    }
}

struct Failure(ExprkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ExprkStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ExprkStatus::InvalidArgument, msg.into())
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ExprkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ExprkStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            ExprkStatus::Panic
        }
    }
}

unsafe fn name_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

/// Creates a scheme by name: `exprk6s15`, `exprk6s16`, `expeuler` or `expk2`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exprk_scheme_new(
    name: *const c_char,
    out: *mut *mut ExprkScheme,
) -> ExprkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let scheme = Scheme::by_name(name_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(ExprkScheme(scheme)));
        Ok(())
    })
}

/// # Safety
/// `scheme` must come from [`exprk_scheme_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn exprk_scheme_free(scheme: *mut ExprkScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Number of stages, or 0 for a null handle.
///
/// # Safety
/// `scheme` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn exprk_scheme_stages(scheme: *const ExprkScheme) -> usize {
    scheme.as_ref().map_or(0, |s| s.0.s)
}

/// Audits the order conditions up to `order` with a random model of
/// dimension 4. Residuals are written in condition order; `count` receives
/// the number of conditions even when `capacity` is too small.
///
/// # Safety
/// `residuals` must hold `capacity` doubles; `count` and `all_pass` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn exprk_scheme_check(
    scheme: *const ExprkScheme,
    order: u32,
    weak17: bool,
    seed: u64,
    residuals: *mut f64,
    capacity: usize,
    count: *mut usize,
    all_pass: *mut bool,
) -> ExprkStatus {
    guard(|| {
        let scheme = scheme.as_ref().ok_or_else(|| null("scheme"))?;
        if count.is_null() || all_pass.is_null() {
            return Err(null("count or all_pass"));
        }
        if order > 6 {
            return Err(invalid("order must be at most 6"));
        }
        let opts = CheckOptions {
            order: order as usize,
            mode: if weak17 {
                CheckMode::Weak17
            } else {
                CheckMode::Strong
            },
            seeds: vec![seed],
            ..CheckOptions::default()
        };
        let report = check_scheme(&scheme.0, &opts)?;
        *count = report.rows.len();
        *all_pass = report.all_pass();
        if capacity < report.rows.len() {
            return Err(Failure(
                ExprkStatus::BufferTooSmall,
                format!("need {} residual slots", report.rows.len()),
            ));
        }
        let out = slice_out(residuals, capacity, "residuals")?;
        for (o, r) in out.iter_mut().zip(&report.rows) {
            *o = r.residual;
        }
        Ok(())
    })
}

/// Creates a benchmark problem by name (`heat1d`, `linear-decay`) on `n`
/// interior grid points.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exprk_problem_new(
    name: *const c_char,
    n: usize,
    out: *mut *mut ExprkProblem,
) -> ExprkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let problem = problems::by_name(name_arg(name, "name")?, n)?;
        *out = Box::into_raw(Box::new(ExprkProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`exprk_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn exprk_problem_free(problem: *mut ExprkProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn exprk_problem_dim(problem: *const ExprkProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.dim())
}

/// Integrates from the problem's initial data to `t_end` with constant step
/// `h` and writes the final state.
///
/// # Safety
/// Handles must be live; `state` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn exprk_integrate(
    scheme: *const ExprkScheme,
    problem: *const ExprkProblem,
    t_end: f64,
    h: f64,
    concurrent: bool,
    state: *mut f64,
    len: usize,
) -> ExprkStatus {
    guard(|| {
        let scheme = scheme.as_ref().ok_or_else(|| null("scheme"))?;
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        let out = slice_out(state, len, "state")?;
        if len != problem.0.dim() {
            return Err(invalid(format!(
                "state length {len} differs from problem dimension {}",
                problem.0.dim()
            )));
        }
        let mode = if concurrent {
            ExecMode::Concurrent
        } else {
            ExecMode::Sequential
        };
        let run = integrate(
            &scheme.0,
            problem.0.as_ref(),
            problem.0.t0(),
            t_end,
            h,
            mode,
            PhiBackend::Dense(PhiMethod::Auto),
        )?;
        out.copy_from_slice(run.state.as_slice().expect("contiguous"));
        Ok(())
    })
}

/// Discrete L2 distance between `state` and the exact solution at `t`.
///
/// # Safety
/// `problem` must be live, `state` must hold `len` doubles, `error` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn exprk_error_at(
    problem: *const ExprkProblem,
    state: *const f64,
    len: usize,
    t: f64,
    error: *mut f64,
) -> ExprkStatus {
    guard(|| {
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        if error.is_null() {
            return Err(null("error"));
        }
        let v = Vector::from(slice_arg(state, len, "state")?.to_vec());
        *error = error_at(problem.0.as_ref(), &v.view(), t)?;
        Ok(())
    })
}

/// `φ_0(A), …, φ_kmax(A)` for an `n x n` matrix, written consecutively to
/// `out`, which must hold `(kmax + 1) n^2` doubles.
///
/// # Safety
/// `a` must hold `n * n` doubles and `out` `(kmax + 1) * n * n`.
#[no_mangle]
pub unsafe extern "C" fn exprk_phi(
    a: *const f64,
    n: usize,
    kmax: usize,
    out: *mut f64,
) -> ExprkStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        let nn = n.checked_mul(n).ok_or_else(|| invalid("n too large"))?;
        let total = nn
            .checked_mul(kmax + 1)
            .ok_or_else(|| invalid("kmax too large"))?;
        let m = Matrix::from_shape_vec((n, n), slice_arg(a, nn, "a")?.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        let out = slice_out(out, total, "out")?;
        for (k, p) in phi_all_dense(&m.view(), kmax)?.iter().enumerate() {
            for (o, x) in out[k * nn..(k + 1) * nn].iter_mut().zip(p.iter()) {
                *o = *x;
            }
        }
        Ok(())
    })
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `capacity > 0`) and returns the full length
/// including the terminator.
///
/// # Safety
/// `buf` must be null or hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn exprk_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn exprk_status_string(status: ExprkStatus) -> *const c_char {
    let s: &'static CStr = match status {
        ExprkStatus::Ok => c"ok",
        ExprkStatus::NullPointer => c"null pointer",
        ExprkStatus::InvalidArgument => c"invalid argument",
        ExprkStatus::UnknownScheme => c"unknown scheme",
        ExprkStatus::UnknownProblem => c"unknown problem",
        ExprkStatus::Divergence => c"divergence",
        ExprkStatus::Numerical => c"numerical failure",
        ExprkStatus::BufferTooSmall => c"buffer too small",
        ExprkStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn exprk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
