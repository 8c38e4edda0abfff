//! C interface to `hetnet`.
//!
//! Every function returns a [`HetnetStatus`]. On failure the message is kept
//! per thread and can be copied out with [`hetnet_last_error`]. Parameter sets
//! are opaque handles created by [`hetnet_params_new`] and released with
//! [`hetnet_params_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hetnet::analytic::{self, TheoryOptions};
use hetnet::montecarlo::{self, SimOptions};
use hetnet::specfun;
use hetnet::{NetworkParams, Topology, Variant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    Numeric = 4,
    Simulation = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetnetTopology {
    Coverage = 0,
    Capacity = 1,
}

impl From<HetnetTopology> for Topology {
    fn from(t: HetnetTopology) -> Self {
        match t {
            HetnetTopology::Coverage => Topology::CoverageAided,
            HetnetTopology::Capacity => Topology::CapacityAided,
        }
    }
}

/// Parameter set bound to a deployment topology.
pub struct HetnetParams {
    params: NetworkParams,
    topology: Topology,
}

/// Average delivery rates of the three curves.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HetnetRates {
    pub mu: f64,
    pub su_no_cache: f64,
    pub su: f64,
}

/// Simulated rates with 95% confidence half-widths.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HetnetSimRates {
    pub mean: HetnetRates,
    pub ci_half_width: HetnetRates,
    pub realizations: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (HetnetStatus, String)>) -> HetnetStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HetnetStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HetnetStatus::Panic
        }
    }
}

fn null(what: &str) -> (HetnetStatus, String) {
    (HetnetStatus::NullPointer, format!("{what} is null"))
}

unsafe fn name_arg<'a>(name: *const c_char) -> Result<&'a str, (HetnetStatus, String)> {
    if name.is_null() {
        return Err(null("name"));
    }
    CStr::from_ptr(name)
        .to_str()
        .map_err(|_| (HetnetStatus::InvalidArgument, "name is not UTF-8".into()))
}

unsafe fn params_arg<'a>(p: *const HetnetParams) -> Result<&'a HetnetParams, (HetnetStatus, String)> {
    p.as_ref().ok_or_else(|| null("params"))
}

/// Copies the last error of this thread into `buf` (NUL-terminated, truncated
/// to `len`) and returns the full message length without the NUL. Returns 0
/// when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hetnet_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hetnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a parameter set holding the reference values of `topology`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_params_new(topology: HetnetTopology, out: *mut *mut HetnetParams) -> HetnetStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let t = Topology::from(topology);
        *out = Box::into_raw(Box::new(HetnetParams {
            params: NetworkParams::reference(t),
            topology: t,
        }));
        Ok(())
    })
}

/// Releases a parameter set. Null is ignored.
///
/// # Safety
/// `p` must come from [`hetnet_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hetnet_params_free(p: *mut HetnetParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Sets a parameter by name (`gamma`, `F_sc`, `lambda_mc`, ...).
///
/// # Safety
/// `p` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hetnet_params_set(p: *mut HetnetParams, name: *const c_char, value: f64) -> HetnetStatus {
    guard(|| {
        let p = p.as_mut().ok_or_else(|| null("params"))?;
        let name = name_arg(name)?;
        p.params
            .set(name, value)
            .map_err(|e| (HetnetStatus::InvalidArgument, e.to_string()))
    })
}

/// Reads a parameter by name.
///
/// # Safety
/// `p` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_params_get(p: *const HetnetParams, name: *const c_char, out: *mut f64) -> HetnetStatus {
    guard(|| {
        let p = params_arg(p)?;
        let name = name_arg(name)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.params.get(name).map_err(|e| (HetnetStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Checks the parameter set against the constraints of its topology.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetnet_params_validate(p: *const HetnetParams) -> HetnetStatus {
    guard(|| {
        let p = params_arg(p)?;
        p.params
            .check(p.topology)
            .map_err(|e| (HetnetStatus::InvalidParams, e.to_string()))
    })
}

/// Analytic average delivery rates with default options.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_theory_rates(p: *const HetnetParams, out: *mut HetnetRates) -> HetnetStatus {
    guard(|| {
        let p = params_arg(p)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        p.params
            .check(p.topology)
            .map_err(|e| (HetnetStatus::InvalidParams, e.to_string()))?;
        let opts = TheoryOptions::default();
        let num = |e: analytic::AnalyticError| (HetnetStatus::Numeric, e.to_string());
        let mu = analytic::avg_rate_mu(p.topology, &p.params, &opts).map_err(num)?;
        let c1 = analytic::factor_c1(p.topology, &p.params, &opts).map_err(num)?;
        let su_nc = analytic::su_from_c1(p.topology, &p.params, &opts, Variant::NoCache, c1);
        let su = analytic::su_from_c1(p.topology, &p.params, &opts, Variant::WithCache, c1);
        *out = HetnetRates {
            mu: mu.avg_rate,
            su_no_cache: su_nc.avg_rate,
            su: su.avg_rate,
        };
        Ok(())
    })
}

/// Monte-Carlo average delivery rates from `realizations` independent
/// deployments. Identical inputs give identical outputs.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_rates(
    p: *const HetnetParams,
    realizations: u64,
    seed: u64,
    out: *mut HetnetSimRates,
) -> HetnetStatus {
    guard(|| {
        let p = params_arg(p)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = usize::try_from(realizations).map_err(|_| (HetnetStatus::InvalidArgument, "too many realizations".into()))?;
        let est = montecarlo::estimate_avg_rates(&p.params, p.topology, n, seed, &SimOptions::default()).map_err(|e| {
            let status = match e {
                montecarlo::SimError::Params(_) => HetnetStatus::InvalidParams,
                montecarlo::SimError::TooFewRealizations(_) => HetnetStatus::InvalidArgument,
                _ => HetnetStatus::Simulation,
            };
            (status, e.to_string())
        })?;
        *out = HetnetSimRates {
            mean: HetnetRates {
                mu: est.mu.mean,
                su_no_cache: est.su_no_cache.mean,
                su: est.su.mean,
            },
            ci_half_width: HetnetRates {
                mu: est.mu.ci_half_width,
                su_no_cache: est.su_no_cache.ci_half_width,
                su: est.su.ci_half_width,
            },
            realizations: est.mu.n_samples as u64,
        };
        Ok(())
    })
}

/// `2F1(1, b; b + 1; x)` for `0 < b < 1` and `x <= 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_hyp2f1(b: f64, x: f64, out: *mut f64) -> HetnetStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = specfun::hyp2f1_neg(b, b + 1.0, x).map_err(|e| (HetnetStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
