//! C ABI for the `duhem` toolkit.
//!
//! Every entry point returns a [`DuhemStatus`]. On failure a message is kept
//! per thread and can be read with [`duhem_last_error_message`]. Systems and
//! trajectories are opaque handles released with their `_free` functions;
//! strings returned through `char **` are released with
//! [`duhem_string_free`]. States are passed as `double[3]` in the order
//! `x, z, v`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use duhem::analysis::{check_terminal_relation, verify_trajectory};
use duhem::config::SystemSpec;
use duhem::equilibria::{dist_to_exz, predict_limit};
use duhem::io::{create_file, write_trajectory_csv};
use duhem::lyapunov::{energy, energy_rate};
use duhem::{
    integrate, BoucWenParams, ConvergenceTolerances, DuhemError, DuhemSystem, IntegratorConfig, Method, State,
    Trajectory, ValidationGrid, ValidationReport,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DuhemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    InvalidParams = 4,
    /// The system has not passed validation, or is not class I.
    NotValidated = 5,
    /// A report was produced and it failed.
    VerificationFailed = 6,
    /// Non-finite evaluation, step underflow, quadrature, inversion or
    /// bracketing failure.
    Numeric = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DuhemMethod {
    Rk45Adaptive = 0,
    Rk4Fixed = 1,
}

/// Bouc-Wen parameters in the original model coordinates.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuhemBoucWenParams {
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: f64,
    pub alpha: f64,
    pub k: f64,
    pub d: f64,
    pub m: f64,
    pub b: f64,
}

/// Integrator settings. `h_init <= 0` lets the adaptive method pick its
/// first step; for `DUHEM_METHOD_RK4_FIXED` it is the step length.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuhemIntegratorOptions {
    pub method: DuhemMethod,
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub t_end: f64,
    pub max_steps: usize,
}

pub struct DuhemSystemHandle {
    sys: DuhemSystem,
    boucwen: Option<BoucWenParams>,
    validation: Option<ValidationReport>,
}

pub struct DuhemTrajectoryHandle {
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DuhemStatus, String);

impl From<DuhemError> for Failure {
    fn from(e: DuhemError) -> Self {
        let status = match &e {
            DuhemError::NonFiniteEvaluation { .. }
            | DuhemError::StepSizeUnderflow { .. }
            | DuhemError::QuadratureFailure { .. }
            | DuhemError::InversionFailure { .. }
            | DuhemError::BracketFailure { .. } => DuhemStatus::Numeric,
            DuhemError::InvalidParams(_) => DuhemStatus::InvalidParams,
            DuhemError::EmptyGrid => DuhemStatus::InvalidArgument,
            DuhemError::NotValidated(_) => DuhemStatus::NotValidated,
            DuhemError::VerificationFailure(_) => DuhemStatus::VerificationFailed,
            DuhemError::Config(_) => DuhemStatus::Config,
            DuhemError::Io(_) => DuhemStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DuhemStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DuhemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DuhemStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            DuhemStatus::Panic
        }
    }
}

unsafe fn system<'a>(h: *const DuhemSystemHandle) -> Result<&'a DuhemSystemHandle, Failure> {
    h.as_ref().ok_or_else(|| null("system handle"))
}

unsafe fn read_state(p: *const f64) -> Result<State, Failure> {
    if p.is_null() {
        return Err(null("state"));
    }
    let s = std::slice::from_raw_parts(p, 3);
    State::try_new(s[0], s[1], s[2]).map_err(Failure::from)
}

unsafe fn write_state(p: *mut f64, s: &State) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null("output state"));
    }
    ptr::copy_nonoverlapping(s.as_array().as_ptr(), p, 3);
    Ok(())
}

unsafe fn write_out<T>(p: *mut T, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null("output pointer"));
    }
    p.write(value);
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DuhemStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

unsafe fn integrator_config(opts: *const DuhemIntegratorOptions) -> Result<IntegratorConfig, Failure> {
    let Some(o) = opts.as_ref() else {
        return Ok(IntegratorConfig::default());
    };
    let cfg = IntegratorConfig {
        method: match o.method {
            DuhemMethod::Rk45Adaptive => Method::Rk45Adaptive,
            DuhemMethod::Rk4Fixed => Method::Rk4Fixed,
        },
        rtol: o.rtol,
        atol: o.atol,
        h_init: (o.h_init > 0.0).then_some(o.h_init),
        h_max: o.h_max,
        t_end: o.t_end,
        max_steps: o.max_steps,
    };
    cfg.check()?;
    Ok(cfg)
}

fn new_handle(sys: DuhemSystem, boucwen: Option<BoucWenParams>) -> *mut DuhemSystemHandle {
    Box::into_raw(Box::new(DuhemSystemHandle {
        sys,
        boucwen,
        validation: None,
    }))
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn duhem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The message of the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn duhem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default integrator settings (adaptive, `t_end = 1e4`).
#[no_mangle]
pub extern "C" fn duhem_integrator_defaults() -> DuhemIntegratorOptions {
    let c = IntegratorConfig::default();
    DuhemIntegratorOptions {
        method: DuhemMethod::Rk45Adaptive,
        rtol: c.rtol,
        atol: c.atol,
        h_init: 0.0,
        h_max: c.h_max,
        t_end: c.t_end,
        max_steps: c.max_steps,
    }
}

/// Builds the rescaled Duhem system for Bouc-Wen parameters.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn duhem_system_boucwen(
    params: *const DuhemBoucWenParams,
    out: *mut *mut DuhemSystemHandle,
) -> DuhemStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let p = BoucWenParams {
            a: p.a,
            beta: p.beta,
            gamma: p.gamma,
            n: p.n,
            alpha: p.alpha,
            k: p.k,
            d: p.d,
            m: p.m,
            b: p.b,
        };
        let sys = p.to_duhem()?;
        write_out(out, new_handle(sys, Some(p)))
    })
}

/// Builds a system from a JSON system description, the `system` object of
/// an experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_system_from_json(json: *const c_char, out: *mut *mut DuhemSystemHandle) -> DuhemStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let spec: SystemSpec = serde_json::from_str(text).map_err(|e| Failure(DuhemStatus::Config, e.to_string()))?;
        let sys = spec.build()?;
        write_out(out, new_handle(sys, spec.boucwen().cloned()))
    })
}

/// # Safety
/// `h` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn duhem_system_free(h: *mut DuhemSystemHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs structural validation on the default grid and marks the handle as
/// validated when it passes. `valid` receives the outcome.
///
/// # Safety
/// `h` must be a live handle and `valid` writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_system_validate(h: *mut DuhemSystemHandle, valid: *mut bool) -> DuhemStatus {
    guard(|| {
        let h = h.as_mut().ok_or_else(|| null("system handle"))?;
        let (sys, report) = h.sys.clone().validated(&ValidationGrid::default());
        h.sys = sys;
        let ok = report.is_valid();
        h.validation = Some(report);
        write_out(valid, ok)
    })
}

/// The last validation report as JSON. Fails with `NOT_VALIDATED` if
/// validation has not been run.
///
/// # Safety
/// `h` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_system_validation_json(
    h: *const DuhemSystemHandle,
    json: *mut *mut c_char,
) -> DuhemStatus {
    guard(|| {
        let h = system(h)?;
        let report = h
            .validation
            .as_ref()
            .ok_or_else(|| Failure(DuhemStatus::NotValidated, "validation has not been run".into()))?;
        let text = serde_json::to_string(report).map_err(|e| Failure(DuhemStatus::Io, e.to_string()))?;
        write_out(json, to_c_string(text))
    })
}

/// Writes `(ẋ, ż, v̇)` at `state` into `out`.
///
/// # Safety
/// `state` and `out` must point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn duhem_rhs(h: *const DuhemSystemHandle, state: *const f64, out: *mut f64) -> DuhemStatus {
    guard(|| {
        let d = system(h)?.sys.rhs(&read_state(state)?)?;
        write_state(out, &d)
    })
}

/// The stored energy `V` at `state`.
///
/// # Safety
/// `state` must point to three doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_energy(h: *const DuhemSystemHandle, state: *const f64, out: *mut f64) -> DuhemStatus {
    guard(|| {
        let v = energy(&system(h)?.sys, &read_state(state)?)?;
        write_out(out, v)
    })
}

/// The rate `V̇` along the vector field at `state`.
///
/// # Safety
/// `state` must point to three doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_energy_rate(
    h: *const DuhemSystemHandle,
    state: *const f64,
    out: *mut f64,
) -> DuhemStatus {
    guard(|| {
        let v = energy_rate(&system(h)?.sys, &read_state(state)?)?;
        write_out(out, v)
    })
}

/// Integrates from `init`. `opts` may be NULL for the defaults.
///
/// # Safety
/// `init` must point to three doubles, `opts` be NULL or valid, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_integrate(
    h: *const DuhemSystemHandle,
    init: *const f64,
    opts: *const DuhemIntegratorOptions,
    out: *mut *mut DuhemTrajectoryHandle,
) -> DuhemStatus {
    guard(|| {
        let sys = &system(h)?.sys;
        let traj = integrate(sys, read_state(init)?, &integrator_config(opts)?)?;
        write_out(out, Box::into_raw(Box::new(DuhemTrajectoryHandle { traj })))
    })
}

/// Number of stored samples, 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn duhem_trajectory_len(t: *const DuhemTrajectoryHandle) -> usize {
    t.as_ref().map_or(0, |t| t.traj.len())
}

/// Copies the sample times into `times[capacity]` and the states, row-major
/// `x, z, v`, into `states[3 * capacity]`. Either buffer may be NULL.
///
/// # Safety
/// Non-NULL buffers must hold at least the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn duhem_trajectory_copy(
    t: *const DuhemTrajectoryHandle,
    times: *mut f64,
    states: *mut f64,
    capacity: usize,
) -> DuhemStatus {
    guard(|| {
        let traj = &t.as_ref().ok_or_else(|| null("trajectory handle"))?.traj;
        if capacity < traj.len() {
            return Err(Failure(
                DuhemStatus::InvalidArgument,
                format!("capacity {capacity} is below trajectory length {}", traj.len()),
            ));
        }
        if !times.is_null() {
            ptr::copy_nonoverlapping(traj.times().as_ptr(), times, traj.len());
        }
        if !states.is_null() {
            for (i, s) in traj.states().iter().enumerate() {
                ptr::copy_nonoverlapping(s.as_array().as_ptr(), states.add(3 * i), 3);
            }
        }
        Ok(())
    })
}

/// Writes the trajectory CSV (`t,x,z,v[,z_orig],V,Vdot`) to `path`.
///
/// # Safety
/// Handles must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn duhem_trajectory_write_csv(
    h: *const DuhemSystemHandle,
    t: *const DuhemTrajectoryHandle,
    path: *const c_char,
) -> DuhemStatus {
    guard(|| {
        let h = system(h)?;
        let traj = &t.as_ref().ok_or_else(|| null("trajectory handle"))?.traj;
        let path = Path::new(read_str(path, "path")?);
        write_trajectory_csv(create_file(path)?, &h.sys, traj, h.boucwen.as_ref())?;
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn duhem_trajectory_free(t: *mut DuhemTrajectoryHandle) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// The rest point `(a, a + L, 0)` on the line `z = x + L`.
///
/// # Safety
/// `out` must point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn duhem_predict_limit(h: *const DuhemSystemHandle, l: f64, out: *mut f64) -> DuhemStatus {
    guard(|| {
        let p = predict_limit(&system(h)?.sys, l)?;
        write_state(out, &p.state)
    })
}

/// Euclidean distance from `(x, z)` to the equilibrium curve. `argmin` may
/// be NULL or point to two doubles receiving the nearest curve point.
///
/// # Safety
/// `distance` must be writable; `argmin` NULL or two doubles.
#[no_mangle]
pub unsafe extern "C" fn duhem_distance(
    h: *const DuhemSystemHandle,
    x: f64,
    z: f64,
    distance: *mut f64,
    argmin: *mut f64,
) -> DuhemStatus {
    guard(|| {
        let d = dist_to_exz(&system(h)?.sys, x, z)?;
        write_out(distance, d.distance)?;
        if !argmin.is_null() {
            argmin.write(d.argmin.0);
            argmin.add(1).write(d.argmin.1);
        }
        Ok(())
    })
}

/// Integrates from `init` and verifies convergence, with the terminal
/// relation for Bouc-Wen systems. Requires a validated handle. When a
/// report is produced it is written to `report_json` (if non-NULL) whether
/// or not it passed; the status is `OK` or `VERIFICATION_FAILED`.
///
/// # Safety
/// `init` must point to three doubles, `opts` be NULL or valid,
/// `report_json` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn duhem_verify(
    h: *const DuhemSystemHandle,
    init: *const f64,
    opts: *const DuhemIntegratorOptions,
    report_json: *mut *mut c_char,
) -> DuhemStatus {
    guard(|| {
        let h = system(h)?;
        if !report_json.is_null() {
            report_json.write(ptr::null_mut());
        }
        if let Some(why) = h.boucwen.as_ref().and_then(|p| p.class_i_violation()) {
            return Err(DuhemError::NotValidated(why).into());
        }
        if !h.sys.is_validated() {
            return Err(DuhemError::NotValidated(format!("system `{}` has not passed validation", h.sys.id())).into());
        }
        let tol = ConvergenceTolerances::default();
        let traj = integrate(&h.sys, read_state(init)?, &integrator_config(opts)?)?;
        let mut r = verify_trajectory(&h.sys, &traj, &tol)?;
        if let Some(p) = &h.boucwen {
            check_terminal_relation(p, &mut r, &tol);
        }
        if !report_json.is_null() {
            let text = serde_json::to_string(&r).map_err(|e| Failure(DuhemStatus::Io, e.to_string()))?;
            report_json.write(to_c_string(text));
        }
        if r.passed() {
            Ok(())
        } else {
            Err(Failure(
                DuhemStatus::VerificationFailed,
                format!("verification failed: {}", r.failures.join("; ")),
            ))
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn duhem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
