//! C ABI over the qstat library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`QstatStatus`]; on failure `qstat_last_error` gives a message
//! for the calling thread. Results are written through out-pointers.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qstat::analytics::{compare, general_work};
use qstat::dynamics::{run_cycle, PropagatorConfig};
use qstat::fermi::{fermi_work, FermiEnsemble};
use qstat::protocols::{harmonic_system, CouplingSchedule, EngineParams, ExternalSystem, Statistics};
use qstat::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QstatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    ResourceLimit = 4,
    NumericalFailure = 5,
    TruncationLeakage = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Particle statistics of an engine ensemble.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QstatStatistics {
    Bose = 0,
    Distinguishable = 1,
}

impl From<QstatStatistics> for Statistics {
    fn from(s: QstatStatistics) -> Self {
        match s {
            QstatStatistics::Bose => Statistics::Bose,
            QstatStatistics::Distinguishable => Statistics::Distinguishable,
        }
    }
}

/// Opaque engine parameters.
pub struct QstatEngine(EngineParams);

/// Opaque coupling schedule.
pub struct QstatSchedule(CouplingSchedule);

/// Opaque driven system.
pub struct QstatSystem(ExternalSystem);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QstatStatus {
    match e {
        Error::InvalidArgument(_) | Error::InvalidSpace(_) | Error::InvalidVariant(_) => QstatStatus::InvalidArgument,
        Error::Domain(_) | Error::DegenerateHamiltonian(_) | Error::PerturbationBreakdown(_) => QstatStatus::Domain,
        Error::InequalityViolation { .. } => QstatStatus::Domain,
        Error::ResourceLimit { .. } => QstatStatus::ResourceLimit,
        Error::NumericalFailure(_) => QstatStatus::NumericalFailure,
        Error::TruncationLeakage { .. } => QstatStatus::TruncationLeakage,
        Error::Config(_) => QstatStatus::Config,
        Error::Io(_) => QstatStatus::Io,
    }
}

struct Null;

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<Result<(), Error>, Null>) -> QstatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(Ok(()))) => QstatStatus::Ok,
        Ok(Ok(Err(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Null)) => {
            set_error("null pointer argument".into());
            QstatStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QstatStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Null> {
    p.as_ref().ok_or(Null)
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Null> {
    if out.is_null() {
        return Err(Null);
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qstat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qstat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Engine with bath temperatures set through β_c·E_0 and β_h·E_{T/2}.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qstat_engine_new(
    n: u32,
    omega0: f64,
    delta: f64,
    v: f64,
    period: f64,
    beta_c_e0: f64,
    beta_h_ehalf: f64,
    statistics: QstatStatistics,
    out: *mut *mut QstatEngine,
) -> QstatStatus {
    guard(|| {
        let p = EngineParams::with_bath_products(n, omega0, delta, v, period, beta_c_e0, beta_h_ehalf, statistics.into())
            .and_then(|p| p.validate().map(|()| p));
        match p {
            Ok(p) => put(out, boxed(QstatEngine(p))).map(Ok),
            Err(e) => Ok(Err(e)),
        }
    })
}

/// # Safety
/// `engine` must come from [`qstat_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qstat_engine_free(engine: *mut QstatEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Instantaneous kick of area `g` at time `t1`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qstat_schedule_impulse(g: f64, t1: f64, out: *mut *mut QstatSchedule) -> QstatStatus {
    guard(|| put(out, boxed(QstatSchedule(CouplingSchedule::Impulse { g, t1 }))).map(Ok))
}

/// Smooth plateau of total area `g`, duty fraction `delta_t` and edge rate
/// `alpha`, fitted to an engine period.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qstat_schedule_plateau(
    g: f64,
    delta_t: f64,
    alpha: f64,
    period: f64,
    out: *mut *mut QstatSchedule,
) -> QstatStatus {
    guard(|| match CouplingSchedule::smooth_plateau(g, delta_t, alpha, period) {
        Ok(s) => put(out, boxed(QstatSchedule(s))).map(Ok),
        Err(e) => Ok(Err(e)),
    })
}

/// # Safety
/// `schedule` must come from a `qstat_schedule_*` constructor and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qstat_schedule_free(schedule: *mut QstatSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Harmonic oscillator of frequency `omega` truncated to `dim` levels.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qstat_system_harmonic(omega: f64, dim: usize, out: *mut *mut QstatSystem) -> QstatStatus {
    guard(|| match harmonic_system(omega, dim) {
        Ok(s) => put(out, boxed(QstatSystem(s))).map(Ok),
        Err(e) => Ok(Err(e)),
    })
}

/// # Safety
/// `system` must come from a `qstat_system_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn qstat_system_free(system: *mut QstatSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Leading-order average work for one statistics.
///
/// # Safety
/// Handles must be live; `work` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qstat_analytic_work(
    engine: *const QstatEngine,
    schedule: *const QstatSchedule,
    system: *const QstatSystem,
    statistics: QstatStatistics,
    work: *mut f64,
) -> QstatStatus {
    guard(|| {
        let (e, s, sys) = (get(engine)?, get(schedule)?, get(system)?);
        let mut p = e.0.clone();
        p.statistics = statistics.into();
        match general_work(&p, &s.0, &sys.0, statistics.into()) {
            Ok(r) => put(work, r.avg_work).map(Ok),
            Err(e) => Ok(Err(e)),
        }
    })
}

/// Leading-order work of both statistics and their ratio.
///
/// # Safety
/// Handles must be live; the three out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qstat_compare(
    engine: *const QstatEngine,
    schedule: *const QstatSchedule,
    system: *const QstatSystem,
    work_indist: *mut f64,
    work_dist: *mut f64,
    ratio: *mut f64,
) -> QstatStatus {
    guard(|| {
        let (e, s, sys) = (get(engine)?, get(schedule)?, get(system)?);
        if work_indist.is_null() || work_dist.is_null() || ratio.is_null() {
            return Err(Null);
        }
        match compare(&e.0, &s.0, &sys.0) {
            Ok(c) => {
                put(work_indist, c.indist.avg_work)?;
                put(work_dist, c.dist.avg_work)?;
                put(ratio, c.ratio).map(Ok)
            }
            Err(e) => Ok(Err(e)),
        }
    })
}

/// Exact propagation over one cycle. `dt <= 0` selects the default step.
/// `unitarity_drift` may be null.
///
/// # Safety
/// Handles must be live; `work` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qstat_run_cycle(
    engine: *const QstatEngine,
    schedule: *const QstatSchedule,
    system: *const QstatSystem,
    statistics: QstatStatistics,
    dt: f64,
    work: *mut f64,
    unitarity_drift: *mut f64,
) -> QstatStatus {
    guard(|| {
        let (e, s, sys) = (get(engine)?, get(schedule)?, get(system)?);
        if work.is_null() {
            return Err(Null);
        }
        let cfg = PropagatorConfig {
            dt: (dt > 0.0).then_some(dt),
            ..Default::default()
        };
        let mut p = e.0.clone();
        p.statistics = statistics.into();
        match run_cycle(&p, &s.0, &sys.0, statistics.into(), &cfg) {
            Ok(r) => {
                if !unitarity_drift.is_null() {
                    put(unitarity_drift, r.diagnostics.unitarity_drift)?;
                }
                put(work, r.work.avg_work).map(Ok)
            }
            Err(e) => Ok(Err(e)),
        }
    })
}

/// Fermionic work ratio λ for `n` atoms in a trap at β_COM·ω_trap =
/// `beta_com_omega`, using the engine's internal parameters.
///
/// # Safety
/// `engine` must be live; `lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qstat_fermi_lambda(
    engine: *const QstatEngine,
    n: u32,
    beta_com_omega: f64,
    lambda: *mut f64,
) -> QstatStatus {
    guard(|| {
        let e = get(engine)?;
        let r = FermiEnsemble::new(n, 1.0, beta_com_omega, e.0.clone()).and_then(|ens| fermi_work(&ens));
        match r {
            Ok(r) => put(lambda, r.enhancement_ratio.unwrap_or(f64::NAN)).map(Ok),
            Err(e) => Ok(Err(e)),
        }
    })
}
