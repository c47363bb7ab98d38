//! C ABI over `muskat-core`.
//!
//! Objects are opaque heap handles created by `*_new` functions and released
//! by the matching `*_free`. Every fallible function returns a
//! [`MuskatStatus`]; on failure a message is kept per thread and can be read
//! with [`muskat_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use muskat_core::evolution::{Stepper, StepperConfig, Termination};
use muskat_core::experiments::config::RunConfig;
use muskat_core::geometry::{from_htheta, init_profile, Grid1D, InterfaceState, PhysicalParams};
use muskat_core::kernels::{eval_d0, eval_p, KernelArgs, KernelId};
use muskat_core::norms::{self, NormReport};
use muskat_core::MuskatError;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuskatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Collision = 3,
    ResolutionLoss = 4,
    WidthCollapse = 5,
    NonFinite = 6,
    Shape = 7,
    Config = 8,
    /// The simulation already reached its horizon or a stop condition.
    Finished = 9,
    Panic = 10,
    Other = 11,
}

/// Which of the four interaction kernels to evaluate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuskatKernel {
    P11 = 0,
    P12 = 1,
    P21 = 2,
    P22 = 3,
}

/// Arguments of a kernel evaluation at the pair `(x, x1)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MuskatKernelArgs {
    pub dx: f64,
    pub f_x: f64,
    pub f_x1: f64,
    pub g_x: f64,
    pub g_x1: f64,
    pub df_x1: f64,
    pub dg_x1: f64,
    pub sigma: f64,
}

/// Opaque physical parameters.
pub struct MuskatParams(PhysicalParams);

/// Opaque periodic grid.
pub struct MuskatGrid(Grid1D);

/// Opaque running simulation.
pub struct MuskatSimulation {
    stepper: Stepper,
    stopped: Option<Termination>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &MuskatError) -> MuskatStatus {
    match e {
        MuskatError::InvalidParameter(_) => MuskatStatus::InvalidParameter,
        MuskatError::Collision { .. } => MuskatStatus::Collision,
        MuskatError::TailNotDecayed { .. } | MuskatError::ResolutionLoss(_) => {
            MuskatStatus::ResolutionLoss
        }
        MuskatError::WidthCollapse(_) => MuskatStatus::WidthCollapse,
        MuskatError::NonFinite(_) => MuskatStatus::NonFinite,
        MuskatError::Shape(_) => MuskatStatus::Shape,
        MuskatError::Config(_) | MuskatError::Parse { .. } => MuskatStatus::Config,
        _ => MuskatStatus::Other,
    }
}

fn termination_status(t: Termination) -> MuskatStatus {
    match t {
        Termination::Horizon => MuskatStatus::Finished,
        Termination::ResolutionLoss => MuskatStatus::ResolutionLoss,
        Termination::Collision => MuskatStatus::Collision,
        Termination::WidthCollapse => MuskatStatus::WidthCollapse,
        Termination::NonFinite => MuskatStatus::NonFinite,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guarded(body: impl FnOnce() -> Result<(), (MuskatStatus, String)>) -> MuskatStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MuskatStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MuskatStatus::Panic
        }
    }
}

fn lift(e: MuskatError) -> (MuskatStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MuskatStatus, String) {
    (MuskatStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MuskatStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (MuskatStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn muskat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn muskat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates parameters from the three densities and the gap.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn muskat_params_new(
    rho0: f64,
    rho1: f64,
    rho2: f64,
    sigma: f64,
    out: *mut *mut MuskatParams,
) -> MuskatStatus {
    guarded(|| {
        let p = PhysicalParams::new(rho0, rho1, rho2, sigma).map_err(lift)?;
        write_out(out, Box::into_raw(Box::new(MuskatParams(p))), "out")
    })
}

/// Writes `delta_rho`, `mu1`, `mu2` of the parameters.
///
/// # Safety
/// `params` must come from [`muskat_params_new`]; outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn muskat_params_derived(
    params: *const MuskatParams,
    delta_rho: *mut f64,
    mu1: *mut f64,
    mu2: *mut f64,
) -> MuskatStatus {
    guarded(|| {
        let p = &deref(params, "params")?.0;
        for (ptr, v) in [(delta_rho, p.delta_rho), (mu1, p.mu1), (mu2, p.mu2)] {
            if !ptr.is_null() {
                ptr.write(v);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`muskat_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn muskat_params_free(params: *mut MuskatParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Creates a grid with half-length `half_length` and `n` nodes (a power of two).
///
/// # Safety
/// `out` must be valid for one handle write.
#[no_mangle]
pub unsafe extern "C" fn muskat_grid_new(
    half_length: f64,
    n: usize,
    out: *mut *mut MuskatGrid,
) -> MuskatStatus {
    guarded(|| {
        let g = Grid1D::new(half_length, n).map_err(lift)?;
        write_out(out, Box::into_raw(Box::new(MuskatGrid(g))), "out")
    })
}

/// # Safety
/// `grid` must come from [`muskat_grid_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn muskat_grid_free(grid: *mut MuskatGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Evaluates one interaction kernel.
///
/// # Safety
/// `args` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn muskat_kernel_p(
    which: MuskatKernel,
    args: *const MuskatKernelArgs,
    out: *mut f64,
) -> MuskatStatus {
    guarded(|| {
        let a = deref(args, "args")?;
        let id = match which {
            MuskatKernel::P11 => KernelId::P11,
            MuskatKernel::P12 => KernelId::P12,
            MuskatKernel::P21 => KernelId::P21,
            MuskatKernel::P22 => KernelId::P22,
        };
        let ka = KernelArgs {
            dx: a.dx,
            f_x: a.f_x,
            f_x1: a.f_x1,
            g_x: a.g_x,
            g_x1: a.g_x1,
            df_x1: a.df_x1,
            dg_x1: a.dg_x1,
            sigma: a.sigma,
        };
        write_out(out, eval_p(id, &ka).map_err(lift)?, "out")
    })
}

/// Unperturbed dissipation kernels at separation `dx`.
///
/// # Safety
/// `params`, `d11` and `d22` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn muskat_kernel_d0(
    params: *const MuskatParams,
    dx: f64,
    d11: *mut f64,
    d22: *mut f64,
) -> MuskatStatus {
    guarded(|| {
        let p = &deref(params, "params")?.0;
        let (a, b) = eval_d0(dx, p).map_err(lift)?;
        write_out(d11, a, "d11")?;
        write_out(d22, b, "d22")
    })
}

/// Squared `H^k_gamma` norm of a field of `len` samples on `grid`.
///
/// # Safety
/// `field` must point to `len` readable doubles; `grid` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn muskat_hk_norm_sq(
    grid: *const MuskatGrid,
    field: *const f64,
    len: usize,
    k: u32,
    gamma: f64,
    out: *mut f64,
) -> MuskatStatus {
    guarded(|| {
        let g = &deref(grid, "grid")?.0;
        if field.is_null() {
            return Err(null("field"));
        }
        let v = std::slice::from_raw_parts(field, len);
        write_out(out, norms::hk_gamma_norm_sq(v, k, gamma, g).map_err(lift)?, "out")
    })
}

fn simulation_from(cfg: &RunConfig) -> Result<MuskatSimulation, MuskatError> {
    let params = cfg.params.physical()?;
    let grid = cfg.grid.build(params.sigma)?;
    let (initial, _) = init_profile(&cfg.profile, &grid, &params, cfg.stepper.k)?;
    Ok(MuskatSimulation {
        stepper: Stepper::new(&initial, &params, &grid, &cfg.stepper)?,
        stopped: None,
    })
}

/// Builds a simulation from a JSON run configuration (NUL-terminated UTF-8).
///
/// # Safety
/// `json` must be a valid C string and `out` valid for one handle write.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_from_config_json(
    json: *const c_char,
    out: *mut *mut MuskatSimulation,
) -> MuskatStatus {
    guarded(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (MuskatStatus::Config, format!("config is not UTF-8: {e}")))?;
        let cfg = RunConfig::from_json(text).map_err(lift)?;
        let sim = simulation_from(&cfg).map_err(lift)?;
        write_out(out, Box::into_raw(Box::new(sim)), "out")
    })
}

/// Builds a simulation from sampled interfaces `f`, `g` on `grid`, with
/// initial width `gamma0`, horizon `horizon` and default stepping.
///
/// # Safety
/// `f` and `g` must point to `len` doubles each; handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_new(
    params: *const MuskatParams,
    grid: *const MuskatGrid,
    f: *const f64,
    g: *const f64,
    len: usize,
    gamma0: f64,
    horizon: f64,
    out: *mut *mut MuskatSimulation,
) -> MuskatStatus {
    guarded(|| {
        let p = &deref(params, "params")?.0;
        let gr = &deref(grid, "grid")?.0;
        if f.is_null() || g.is_null() {
            return Err(null("f or g"));
        }
        let initial = InterfaceState {
            f: std::slice::from_raw_parts(f, len).to_vec(),
            g: std::slice::from_raw_parts(g, len).to_vec(),
            gamma: gamma0,
            t: 0.0,
        };
        if !(gamma0 > 0.0) {
            return Err((MuskatStatus::InvalidParameter, format!("gamma0 must be positive (got {gamma0})")));
        }
        muskat_core::geometry::check_separation(&initial.f, &initial.g, p.sigma, gr).map_err(lift)?;
        let stepper = Stepper::new(&initial, p, gr, &StepperConfig::new(horizon)).map_err(lift)?;
        write_out(
            out,
            Box::into_raw(Box::new(MuskatSimulation {
                stepper,
                stopped: None,
            })),
            "out",
        )
    })
}

unsafe fn sim_mut<'a>(p: *mut MuskatSimulation) -> Result<&'a mut MuskatSimulation, (MuskatStatus, String)> {
    p.as_mut().ok_or_else(|| null("simulation"))
}

fn advance(sim: &mut MuskatSimulation) -> Result<(), (MuskatStatus, String)> {
    if let Some(t) = sim.stopped.or_else(|| sim.stepper.check()) {
        sim.stopped = Some(t);
        return Err((termination_status(t), format!("simulation stopped: {}", t.as_str())));
    }
    if let Err(e) = sim.stepper.step() {
        if let Some(t) = Termination::from_error(&e) {
            sim.stopped = Some(t);
        }
        return Err(lift(e));
    }
    Ok(())
}

/// Advances one time step. Returns `Finished` or the stop reason once the
/// run cannot continue.
///
/// # Safety
/// `sim` must be a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_step(sim: *mut MuskatSimulation) -> MuskatStatus {
    guarded(|| advance(sim_mut(sim)?))
}

/// Steps until the horizon or a stop condition. Returns `Ok` on reaching the
/// horizon, otherwise the stop reason.
///
/// # Safety
/// `sim` must be a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_run(sim: *mut MuskatSimulation) -> MuskatStatus {
    guarded(|| {
        let s = sim_mut(sim)?;
        loop {
            match advance(s) {
                Ok(()) => {}
                Err((MuskatStatus::Finished, _)) => return Ok(()),
                Err(e) => return Err(e),
            }
        }
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be a live simulation handle or null.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_time(sim: *const MuskatSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.stepper.state().t)
}

/// Current strip width, or NaN for a null handle.
///
/// # Safety
/// `sim` must be a live simulation handle or null.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_gamma(sim: *const MuskatSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.stepper.state().gamma)
}

/// Number of grid nodes, or 0 for a null handle.
///
/// # Safety
/// `sim` must be a live simulation handle or null.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_len(sim: *const MuskatSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.stepper.grid().n())
}

/// Copies the current interfaces into `f` and `g`, each of capacity `len`.
///
/// # Safety
/// `f` and `g` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_copy_fg(
    sim: *const MuskatSimulation,
    f: *mut f64,
    g: *mut f64,
    len: usize,
) -> MuskatStatus {
    guarded(|| {
        let s = deref(sim, "simulation")?;
        if f.is_null() || g.is_null() {
            return Err(null("f or g"));
        }
        let n = s.stepper.grid().n();
        if len < n {
            return Err((MuskatStatus::Shape, format!("buffers hold {len} values, need {n}")));
        }
        let iface = from_htheta(s.stepper.state(), s.stepper.params());
        std::ptr::copy_nonoverlapping(iface.f.as_ptr(), f, n);
        std::ptr::copy_nonoverlapping(iface.g.as_ptr(), g, n);
        Ok(())
    })
}

/// Energy of the current state.
///
/// # Safety
/// `sim` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_energy(
    sim: *const MuskatSimulation,
    out: *mut f64,
) -> MuskatStatus {
    guarded(|| {
        let s = deref(sim, "simulation")?;
        let r: NormReport = s.stepper.report().map_err(lift)?;
        write_out(out, r.energy, "out")
    })
}

/// # Safety
/// `sim` must come from a constructor here and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn muskat_simulation_free(sim: *mut MuskatSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
