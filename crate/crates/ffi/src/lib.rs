#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! C interface to pdmplab.
//!
//! Every function returns a [`PdmplabStatus`]; on failure the message is
//! available from [`pdmplab_last_error`] on the same thread. Objects are
//! exposed as opaque handles that the caller releases with the matching
//! `_free` function. Panics never cross the boundary: they are reported as
//! `PDMPLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pdmplab::config::{load_config, Overrides, Scenario};
use pdmplab::error::Error;
use pdmplab::gene::{equilibrium_moments, global_noise, moments_at_phase, mrna_poisson_parameter, GeneParams};
use pdmplab::pdmp::{simulate_pdmp, PdmpModel, RateMatrix, Trajectory};
use pdmplab::rng::RngStream;
use pdmplab::switched::{lyapunov_exponent, moment_feynman_kac, moment_growth_rate, PlanarSwitched};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdmplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Precondition = 5,
    ModelViolation = 6,
    Overflow = 7,
    Io = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> PdmplabStatus {
    match e {
        Error::Domain(_) | Error::Reducible(_) | Error::Empty(_) => PdmplabStatus::InvalidArgument,
        Error::Config(_) => PdmplabStatus::Config,
        Error::Numerical(_) | Error::LeftRegion { .. } => PdmplabStatus::Numerical,
        Error::Precondition(_) => PdmplabStatus::Precondition,
        Error::MajorantViolated { .. } | Error::ModelViolation(_) | Error::Extinct(_) => PdmplabStatus::ModelViolation,
        Error::PopulationOverflow { .. } | Error::CountOverflow { .. } => PdmplabStatus::Overflow,
        Error::Io(_) => PdmplabStatus::Io,
    }
}

struct Fail(PdmplabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PdmplabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PdmplabStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PdmplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PdmplabStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PdmplabStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out_slice<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn write<T>(ptr: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(v);
    Ok(())
}

unsafe fn string<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn pdmplab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdmplab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque generator of a continuous-time Markov chain.
pub struct PdmplabRateMatrix(RateMatrix);

/// Build a generator from `n * n` row-major entries.
///
/// # Safety
/// `rows` must point to `n * n` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_rate_matrix_new(
    rows: *const f64,
    n: usize,
    out: *mut *mut PdmplabRateMatrix,
) -> PdmplabStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("generator needs at least one state"));
        }
        let flat = slice(rows, n * n, "rows")?;
        let q = RateMatrix::new(flat.chunks(n).map(<[f64]>::to_vec).collect())?;
        write(out, Box::into_raw(Box::new(PdmplabRateMatrix(q))), "out")
    })
}

/// # Safety
/// `q` must be NULL or a handle from [`pdmplab_rate_matrix_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_rate_matrix_free(q: *mut PdmplabRateMatrix) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// # Safety
/// `q` must be a live handle; `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_rate_matrix_n_states(q: *const PdmplabRateMatrix, out: *mut usize) -> PdmplabStatus {
    guard(|| {
        let q = q.as_ref().ok_or_else(|| null("q"))?;
        write(out, q.0.n_states(), "out")
    })
}

/// Stationary distribution into `out[0..n]`; `n` must equal the number of states.
///
/// # Safety
/// `q` must be a live handle; `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_stationary_distribution(
    q: *const PdmplabRateMatrix,
    out: *mut f64,
    n: usize,
) -> PdmplabStatus {
    guard(|| {
        let q = q.as_ref().ok_or_else(|| null("q"))?;
        if n != q.0.n_states() {
            return Err(invalid(format!("buffer length {n} does not match {} states", q.0.n_states())));
        }
        out_slice(out, n, "out")?.copy_from_slice(&q.0.stationary_distribution()?);
        Ok(())
    })
}

unsafe fn rates<'a>(q: *const PdmplabRateMatrix, a: *const f64, n: usize) -> Result<(&'a RateMatrix, &'a [f64]), Fail> {
    let q = q.as_ref().ok_or_else(|| null("q"))?;
    if n != q.0.n_states() {
        return Err(invalid(format!("{n} rates for {} states", q.0.n_states())));
    }
    Ok((&q.0, slice(a, n, "a")?))
}

/// Perron eigenvalue λ_p of `Q + p diag(a)`.
///
/// # Safety
/// `q` must be a live handle, `a` must hold `n` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_moment_growth_rate(
    q: *const PdmplabRateMatrix,
    a: *const f64,
    n: usize,
    p: f64,
    out: *mut f64,
) -> PdmplabStatus {
    guard(|| {
        let (q, a) = rates(q, a, n)?;
        write(out, moment_growth_rate(q, a, p)?.eigenvalue, "out")
    })
}

/// E[X_t^p] / E[X_0^p] with the environment started from `mu0`.
///
/// # Safety
/// `q` must be a live handle, `a` and `mu0` must hold `n` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_moment_feynman_kac(
    q: *const PdmplabRateMatrix,
    a: *const f64,
    mu0: *const f64,
    n: usize,
    p: f64,
    t: f64,
    out: *mut f64,
) -> PdmplabStatus {
    guard(|| {
        let (q, a) = rates(q, a, n)?;
        let mu0 = slice(mu0, n, "mu0")?;
        write(out, moment_feynman_kac(q, a, p, t, mu0)?, "out")
    })
}

/// π*(y) = π(y)α(y) / Σ π α into `out[0..n]`.
///
/// # Safety
/// `pi`, `alpha` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_pi_star(pi: *const f64, alpha: *const f64, n: usize, out: *mut f64) -> PdmplabStatus {
    guard(|| {
        let v = pdmplab::ifire::pi_star(slice(pi, n, "pi")?, slice(alpha, n, "alpha")?)?;
        out_slice(out, n, "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Lyapunov exponent estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdmplabLyapunov {
    pub chi: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub se: f64,
}

/// χ of the canonical planar pair switching at rate `lambda_switch`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_planar_lyapunov(
    lambda_switch: f64,
    horizon: f64,
    n_rep: u64,
    seed: u64,
    out: *mut PdmplabLyapunov,
) -> PdmplabStatus {
    guard(|| {
        let sys = PlanarSwitched::canonical(lambda_switch)?.linear();
        let e = lyapunov_exponent(&sys, horizon, &RngStream::new(seed, 0), n_rep, None)?;
        write(out, PdmplabLyapunov { chi: e.chi, ci_lo: e.ci_lo, ci_hi: e.ci_hi, se: e.se }, "out")
    })
}

/// Opaque recorded trajectory.
pub struct PdmplabTrajectory(Trajectory);

/// Simulate the canonical planar pair from `(x0[0], x0[1])` in environment
/// `y0`, recording every `grid` time units and at every switch.
///
/// # Safety
/// `x0` must hold 2 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_planar_trajectory(
    lambda_switch: f64,
    x0: *const f64,
    y0: usize,
    horizon: f64,
    grid: f64,
    seed: u64,
    out: *mut *mut PdmplabTrajectory,
) -> PdmplabStatus {
    guard(|| {
        let x0 = slice(x0, 2, "x0")?;
        if !(grid > 0.0) {
            return Err(invalid("grid must be positive"));
        }
        let sys = PlanarSwitched::canonical(lambda_switch)?.system();
        if y0 >= 2 {
            return Err(invalid(format!("initial environment {y0} out of range")));
        }
        let model = PdmpModel::new(sys).with_recording(pdmplab::pdmp::Recording { env_jumps: true, grid: Some(grid) });
        let tr = simulate_pdmp(&model, x0, y0, horizon, &RngStream::new(seed, 0))?;
        write(out, Box::into_raw(Box::new(PdmplabTrajectory(tr))), "out")
    })
}

/// # Safety
/// `tr` must be NULL or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_trajectory_free(tr: *mut PdmplabTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of rows and state dimension.
///
/// # Safety
/// `tr` must be a live handle; `len` and `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_trajectory_shape(
    tr: *const PdmplabTrajectory,
    len: *mut usize,
    dim: *mut usize,
) -> PdmplabStatus {
    guard(|| {
        let tr = tr.as_ref().ok_or_else(|| null("tr"))?;
        write(len, tr.0.len(), "len")?;
        write(dim, tr.0.dim, "dim")
    })
}

/// Copy times (`len` doubles), row-major states (`len * dim` doubles) and
/// environment labels (`len` entries). Any output pointer may be NULL to skip it.
///
/// # Safety
/// `tr` must be a live handle; non-NULL buffers must have the sizes above.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_trajectory_copy(
    tr: *const PdmplabTrajectory,
    times: *mut f64,
    states: *mut f64,
    env: *mut usize,
    len: usize,
) -> PdmplabStatus {
    guard(|| {
        let tr = &tr.as_ref().ok_or_else(|| null("tr"))?.0;
        if len != tr.len() {
            return Err(invalid(format!("buffer length {len} does not match {} rows", tr.len())));
        }
        if !times.is_null() {
            out_slice(times, len, "times")?.copy_from_slice(&tr.times);
        }
        if !states.is_null() {
            let buf = out_slice(states, len * tr.dim, "states")?;
            for (row, x) in buf.chunks_mut(tr.dim.max(1)).zip(&tr.states) {
                row.copy_from_slice(x);
            }
        }
        if !env.is_null() {
            std::slice::from_raw_parts_mut(env, len).copy_from_slice(&tr.env);
        }
        Ok(())
    })
}

/// Opaque gene expression parameter set.
pub struct PdmplabGene(GeneParams);

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_gene_new(
    lambda1: f64,
    sigma1: f64,
    lambda2: f64,
    tau_r: f64,
    tau_d: f64,
    v0: f64,
    out: *mut *mut PdmplabGene,
) -> PdmplabStatus {
    guard(|| {
        let p = GeneParams::new(lambda1, sigma1, lambda2, tau_r, tau_d, v0)?;
        write(out, Box::into_raw(Box::new(PdmplabGene(p))), "out")
    })
}

/// # Safety
/// `g` must be NULL or a live gene handle.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_gene_free(g: *mut PdmplabGene) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Poisson parameter of the mRNA count at cycle phase `s`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_gene_mrna_mean(g: *const PdmplabGene, s: f64, out: *mut f64) -> PdmplabStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("g"))?;
        write(out, mrna_poisson_parameter(&g.0, s)?, "out")
    })
}

/// Equilibrium moments at phase `s` in the order
/// (E M, E P, Var M, Var P, Cov(M, P)).
///
/// # Safety
/// `g` must be a live handle and `out` must hold 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_gene_moments(g: *const PdmplabGene, s: f64, out: *mut f64) -> PdmplabStatus {
    guard(|| {
        let g = &g.as_ref().ok_or_else(|| null("g"))?.0;
        if !(0.0..g.tau_d).contains(&s) {
            return Err(invalid(format!("phase {s} outside [0, tauD)")));
        }
        let m = moments_at_phase(g, &equilibrium_moments(g)?, s);
        out_slice(out, 5, "out")?.copy_from_slice(&m.to_array());
        Ok(())
    })
}

/// Mean protein concentration and its squared coefficient of variation
/// over the cycle, on `n_phases` phase points.
///
/// # Safety
/// `g` must be a live handle; `mean` and `cv2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_gene_global_noise(
    g: *const PdmplabGene,
    n_phases: usize,
    mean: *mut f64,
    cv2: *mut f64,
) -> PdmplabStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("g"))?;
        let (mu, c) = global_noise(&g.0, n_phases)?;
        write(mean, mu, "mean")?;
        write(cv2, c, "cv2")
    })
}

/// Run a scenario from a configuration file into `out_dir`, as the CLI does.
///
/// # Safety
/// All strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pdmplab_run_scenario(
    scenario: *const c_char,
    config_path: *const c_char,
    seed: u64,
    out_dir: *const c_char,
) -> PdmplabStatus {
    guard(|| {
        let name = string(scenario, "scenario")?;
        let sc = Scenario::from_name(name).ok_or_else(|| invalid(format!("unknown scenario {name:?}")))?;
        let cfg = load_config(
            Path::new(string(config_path, "config_path")?),
            Some(sc),
            Overrides { seed, ..Default::default() },
        )
        .map_err(|e| Fail(PdmplabStatus::Config, e.to_string()))?;
        pdmplab::runner::run_scenario(&cfg, Path::new(string(out_dir, "out_dir")?))?;
        Ok(())
    })
}
