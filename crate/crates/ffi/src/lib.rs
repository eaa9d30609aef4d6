//! C interface to `percolab`.
//!
//! Every fallible function returns a `PercolabStatus` and writes its result
//! through an out-pointer, which is left untouched on failure. The message
//! of the last failure on the calling thread is available from
//! `percolab_last_error_message`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use percolab::combinatorics::{a_n_closed, a_n_direct};
use percolab::error::Error;
use percolab::estimators::{estimate_alpha, estimate_tau, AlphaConfig, McConfig};
use percolab::inversion::{estimate_pc_direct, estimate_pc_via_alpha, AlphaRouteConfig, BisectionConfig, DirectRouteConfig, PcStatus};
use percolab::lattice::Lattice;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercolabStatus {
    Ok = 0,
    NullPointer = 1,
    Encoding = 2,
    Domain = 3,
    Resource = 4,
    Config = 5,
    Undecided = 6,
    Io = 7,
    Panic = 8,
}

/// Route used by `percolab_pc`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercolabPcMethod {
    Alpha = 0,
    Direct = 1,
}

/// Opaque handle to a lattice T_d x Z.
pub struct PercolabLattice {
    inner: Lattice,
}

/// Monte Carlo settings. Zero fields take the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PercolabMc {
    pub trials: u64,
    pub seed: u64,
    pub site_budget: u64,
}

/// A point estimate with its 95% interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PercolabEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

/// Bracket for the critical probability.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PercolabPcResult {
    pub low: f64,
    pub high: f64,
    pub converged: bool,
    pub probes: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PercolabStatus {
    match e {
        Error::Encoding(_) => PercolabStatus::Encoding,
        Error::Domain(_) => PercolabStatus::Domain,
        Error::Resource(_) => PercolabStatus::Resource,
        Error::Config(_) => PercolabStatus::Config,
        Error::Undecided(_) => PercolabStatus::Undecided,
        Error::Io(_) => PercolabStatus::Io,
    }
}

fn guard<T>(out: *mut T, f: impl FnOnce() -> percolab::error::Result<T>) -> PercolabStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return PercolabStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            unsafe { out.write(v) };
            PercolabStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PercolabStatus::Panic
        }
    }
}

fn mc_config(mc: *const PercolabMc) -> McConfig {
    let mut cfg = McConfig::default();
    if let Some(m) = unsafe { mc.as_ref() } {
        if m.trials > 0 {
            cfg.trials = m.trials;
        }
        if m.seed > 0 {
            cfg.seed = m.seed;
        }
        if m.site_budget > 0 {
            cfg.site_budget = usize::try_from(m.site_budget).unwrap_or(usize::MAX);
        }
    }
    cfg
}

/// Message of the last failure on this thread, or NULL. The string stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn percolab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a lattice for tree degree `d >= 3`.
#[no_mangle]
pub unsafe extern "C" fn percolab_lattice_new(d: u32, out: *mut *mut PercolabLattice) -> PercolabStatus {
    guard(out, || Ok(Box::into_raw(Box::new(PercolabLattice { inner: Lattice::new(d)? }))))
}

/// Releases a lattice; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn percolab_lattice_free(lattice: *mut PercolabLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Tree degree of a lattice, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn percolab_lattice_degree(lattice: *const PercolabLattice) -> u32 {
    lattice.as_ref().map_or(0, |l| l.inner.d())
}

/// Level of the tree vertex reached from the root by `len` branch choices.
/// The first choice ranges over `0..d`, later ones over `0..d-1`; branch 0
/// follows the canonical ray.
#[no_mangle]
pub unsafe extern "C" fn percolab_level(lattice: *const PercolabLattice, branches: *const u32, len: usize, out: *mut i64) -> PercolabStatus {
    let Some(l) = lattice.as_ref() else {
        set_error("null lattice".into());
        return PercolabStatus::NullPointer;
    };
    if branches.is_null() && len > 0 {
        set_error("null branch array".into());
        return PercolabStatus::NullPointer;
    }
    let path: &[u32] = if len == 0 { &[] } else { std::slice::from_raw_parts(branches, len) };
    guard(out, || Ok(l.inner.level(&l.inner.from_branches(path)?)))
}

/// a_n(z) for branching number `b = d - 1`, by the closed form.
#[no_mangle]
pub extern "C" fn percolab_a_n(n: u32, z: f64, b: u32, out: *mut f64) -> PercolabStatus {
    guard(out, || a_n_closed(n, z, b))
}

/// a_n(z) summed over the sphere directly.
#[no_mangle]
pub extern "C" fn percolab_a_n_direct(n: u32, z: f64, b: u32, out: *mut f64) -> PercolabStatus {
    guard(out, || a_n_direct(n, z, b))
}

/// tau(o, (v_n, 0)) inside the product ball of radius `k`. `mc` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn percolab_tau(
    lattice: *const PercolabLattice,
    n: u32,
    p: f64,
    k: u32,
    mc: *const PercolabMc,
    out: *mut PercolabEstimate,
) -> PercolabStatus {
    let Some(l) = lattice.as_ref() else {
        set_error("null lattice".into());
        return PercolabStatus::NullPointer;
    };
    let cfg = mc_config(mc);
    guard(out, || {
        let e = estimate_tau(l.inner, n, p, k, &cfg)?;
        Ok(PercolabEstimate { mean: e.mean, ci_low: e.ci_low, ci_high: e.ci_high, trials: e.trials })
    })
}

/// The horizontal rate alpha(p) from fibers up to depth `n_max`; `mean`
/// is the fitted rate and the interval its band.
#[no_mangle]
pub unsafe extern "C" fn percolab_alpha(
    lattice: *const PercolabLattice,
    p: f64,
    n_max: u32,
    mc: *const PercolabMc,
    out: *mut PercolabEstimate,
) -> PercolabStatus {
    let Some(l) = lattice.as_ref() else {
        set_error("null lattice".into());
        return PercolabStatus::NullPointer;
    };
    let cfg = mc_config(mc);
    guard(out, || {
        let acfg = AlphaConfig { n_max, ..AlphaConfig::default() };
        let r = estimate_alpha(l.inner, p, &acfg, &cfg)?;
        Ok(PercolabEstimate { mean: r.slope_fit, ci_low: r.ci_lower(), ci_high: r.ci_upper(), trials: r.trials })
    })
}

/// Brackets p_c for degree `d` to width `tol`. An undecided bisection
/// still fills `out` (with `converged = false`) and returns
/// `PERCOLAB_STATUS_UNDECIDED`.
#[no_mangle]
pub unsafe extern "C" fn percolab_pc(
    d: u32,
    method: PercolabPcMethod,
    tol: f64,
    mc: *const PercolabMc,
    out: *mut PercolabPcResult,
) -> PercolabStatus {
    let cfg = mc_config(mc);
    let mut converged = true;
    let status = guard(out, || {
        let bis = BisectionConfig { tol, ..BisectionConfig::default() };
        let report = match method {
            PercolabPcMethod::Alpha => estimate_pc_via_alpha(d, &bis, &AlphaRouteConfig::default(), &cfg)?,
            PercolabPcMethod::Direct => estimate_pc_direct(d, &bis, &DirectRouteConfig::default(), &cfg)?,
        };
        converged = report.status == PcStatus::Converged;
        Ok(PercolabPcResult { low: report.interval[0], high: report.interval[1], converged, probes: report.probes.len() as u64 })
    });
    if status == PercolabStatus::Ok && !converged {
        set_error("bisection did not converge within the escalation budget".into());
        return PercolabStatus::Undecided;
    }
    status
}
