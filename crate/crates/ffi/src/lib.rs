//! C interface to the linearized KdV solver.
//!
//! Every function returns a [`KdvStatus`]. On failure the message is kept
//! per thread and can be read with [`kdv_last_error_message`]. Handles are
//! opaque and must be released with [`kdv_solver_free`]. A handle must not
//! be used from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use kdv_core::error::KdvError;
use kdv_core::harness::config::{ExperimentConfig, InitialCondition};
use kdv_core::stepper::{AdvectionField, Discretization, Solver, SpectralState};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NumericalError = 4,
    IoError = 5,
    SupportViolation = 6,
    NotInitialized = 7,
    Finished = 8,
    Panic = 9,
}

/// Advection coefficient families accepted by [`kdv_solver_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvAdvection {
    /// `params[0]` is the constant.
    Constant = 0,
    /// `params` are ascending polynomial coefficients.
    Polynomial = 1,
    /// Three Gaussian bumps minus 1/2; no parameters.
    Gauss3 = 2,
}

/// Opaque solver handle.
pub struct KdvSolver {
    solver: Solver,
    state: Option<SpectralState>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &KdvError) -> KdvStatus {
    match e {
        KdvError::AtStage { source, .. } => match status_of(source) {
            KdvStatus::InvalidArgument => KdvStatus::NumericalError,
            s => s,
        },
        KdvError::Config { .. } | KdvError::NonConstantAdvection => KdvStatus::ConfigError,
        KdvError::InvalidArgument(_) | KdvError::LengthMismatch { .. } => KdvStatus::InvalidArgument,
        KdvError::SupportViolation { .. } => KdvStatus::SupportViolation,
        KdvError::Io { .. } => KdvStatus::IoError,
        _ => KdvStatus::NumericalError,
    }
}

fn fail(status: KdvStatus, msg: impl Into<String>) -> KdvStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), KdvStatus>>(f: F) -> KdvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            KdvStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(KdvStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lift<T>(r: kdv_core::error::Result<T>) -> Result<T, KdvStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn handle<'a>(p: *mut KdvSolver) -> Result<&'a mut KdvSolver, KdvStatus> {
    p.as_mut().ok_or_else(|| fail(KdvStatus::NullPointer, "null solver handle"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], KdvStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(KdvStatus::NullPointer, format!("null {what}")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], KdvStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(KdvStatus::NullPointer, format!("null {what}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Caller has checked `out` for null.
unsafe fn publish(solver: Solver, state: Option<SpectralState>, out: *mut *mut KdvSolver) {
    *out = Box::into_raw(Box::new(KdvSolver { solver, state }));
}

/// Creates a solver on `(a, b)` with `n` modes and `m` steps up to `t_final`.
///
/// # Safety
/// `params` must point to `n_params` doubles (or be null when `n_params` is
/// 0); `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_new(
    a: f64,
    b: f64,
    n: usize,
    m: usize,
    t_final: f64,
    advection: KdvAdvection,
    params: *const f64,
    n_params: usize,
    out: *mut *mut KdvSolver,
) -> KdvStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(KdvStatus::NullPointer, "null output handle"));
        }
        let params = slice(params, n_params, "params")?;
        let disc = lift(Discretization::new(a, b, n, m, t_final))?;
        let field = match advection {
            KdvAdvection::Constant => match params {
                [c] => AdvectionField::constant(*c, a, b),
                _ => return Err(fail(KdvStatus::InvalidArgument, "constant advection takes one parameter")),
            },
            KdvAdvection::Polynomial if !params.is_empty() => AdvectionField::polynomial(params, a, b),
            KdvAdvection::Polynomial => {
                return Err(fail(KdvStatus::InvalidArgument, "polynomial advection needs coefficients"))
            }
            KdvAdvection::Gauss3 if params.is_empty() => AdvectionField::gauss3(a, b),
            KdvAdvection::Gauss3 => return Err(fail(KdvStatus::InvalidArgument, "gauss3 takes no parameters")),
        };
        publish(lift(Solver::new(disc, field))?, None, out);
        Ok(())
    })
}

/// Creates a solver from a configuration file and projects its initial
/// value, so the handle is ready to step.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_from_config(path: *const c_char, out: *mut *mut KdvSolver) -> KdvStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(fail(KdvStatus::NullPointer, "null path or output handle"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(KdvStatus::InvalidArgument, "path is not UTF-8"))?;
        let cfg = lift(ExperimentConfig::load(Path::new(path)))?;
        let solver = lift(Solver::new(lift(cfg.discretization())?, lift(cfg.field())?))?;
        let ic = cfg.initial;
        let state = lift(solver.initialize(&|x| ic.eval(x)))?;
        publish(solver, Some(state), out);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `solver` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_free(solver: *mut KdvSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Projects `exp(-((x - center) / width)^2)` and resets the step counter.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_initialize_gaussian(solver: *mut KdvSolver, center: f64, width: f64) -> KdvStatus {
    guard(|| {
        let h = handle(solver)?;
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(fail(KdvStatus::InvalidArgument, "width must be positive and finite"));
        }
        let ic = InitialCondition::Gaussian { center, width };
        h.state = Some(lift(h.solver.initialize(&|x| ic.eval(x)))?);
        Ok(())
    })
}

/// Advances up to `steps` steps. Returns `Finished` if the final step was
/// already reached before the call.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_advance(solver: *mut KdvSolver, steps: usize) -> KdvStatus {
    let mut finished = false;
    let status = guard(|| {
        let h = handle(solver)?;
        let total = h.solver.discretization().m;
        let state = h
            .state
            .as_mut()
            .ok_or_else(|| fail(KdvStatus::NotInitialized, "solver has no initial value"))?;
        if state.m >= total && steps > 0 {
            finished = true;
            return Ok(());
        }
        for _ in 0..steps.min(total - state.m) {
            lift(h.solver.step(state))?;
        }
        Ok(())
    });
    if finished {
        return fail(KdvStatus::Finished, "all steps already taken");
    }
    status
}

/// Current step index and time.
///
/// # Safety
/// `solver` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_position(solver: *mut KdvSolver, step: *mut usize, time: *mut f64) -> KdvStatus {
    guard(|| {
        let h = handle(solver)?;
        let state = h
            .state
            .as_ref()
            .ok_or_else(|| fail(KdvStatus::NotInitialized, "solver has no initial value"))?;
        if !step.is_null() {
            *step = state.m;
        }
        if !time.is_null() {
            *time = state.m as f64 * h.solver.discretization().tau();
        }
        Ok(())
    })
}

/// Evaluates the `order`-th x-derivative (0..=3) of the current solution at
/// `n_points` points inside `[a, b]`.
///
/// # Safety
/// `points` and `values` must each hold `n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_evaluate(
    solver: *mut KdvSolver,
    points: *const f64,
    n_points: usize,
    order: u32,
    values: *mut f64,
) -> KdvStatus {
    guard(|| {
        let h = handle(solver)?;
        let xs = slice(points, n_points, "points")?;
        let out = slice_mut(values, n_points, "values")?;
        let state = h
            .state
            .as_ref()
            .ok_or_else(|| fail(KdvStatus::NotInitialized, "solver has no initial value"))?;
        if order > 3 {
            return Err(fail(KdvStatus::InvalidArgument, "derivative order must be at most 3"));
        }
        let d = h.solver.discretization();
        if let Some(x) = xs.iter().find(|x| !(d.a..=d.b).contains(*x)) {
            return Err(fail(KdvStatus::InvalidArgument, format!("point {x} outside [{}, {}]", d.a, d.b)));
        }
        out.copy_from_slice(&h.solver.reconstruct(state, xs, order as usize));
        Ok(())
    })
}

/// Boundary traces `u(a)`, `u_x(a)`, `u(b)` at the current step.
///
/// # Safety
/// `solver` must be a live handle; `traces` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_traces(solver: *mut KdvSolver, traces: *mut f64) -> KdvStatus {
    guard(|| {
        let h = handle(solver)?;
        let out = slice_mut(traces, 3, "traces")?;
        let s = h
            .state
            .as_ref()
            .ok_or_else(|| fail(KdvStatus::NotInitialized, "solver has no initial value"))?;
        out.copy_from_slice(&[s.u_a[s.m], s.ux_a[s.m], s.u_b[s.m]]);
        Ok(())
    })
}

/// `tau * max |(g*)'| / 4` over the interval; values below 1 satisfy the
/// stability guard.
///
/// # Safety
/// `solver` must be a live handle; `ratio` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kdv_solver_stability_ratio(solver: *mut KdvSolver, ratio: *mut f64) -> KdvStatus {
    guard(|| {
        let h = handle(solver)?;
        if ratio.is_null() {
            return Err(fail(KdvStatus::NullPointer, "null ratio"));
        }
        *ratio = h.solver.stability_ratio();
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length without
/// the terminator; pass a null buffer to query it.
///
/// # Safety
/// `buf` must hold `len` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn kdv_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kdv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
