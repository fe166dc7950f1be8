//! C interface to the `bitree` pricing engine.
//!
//! Functions return a [`BitreeStatus`] code and write results through out
//! pointers. Enumerations are passed as `uint32_t` so that an out-of-range
//! value from C is rejected rather than being undefined behaviour. After a
//! failure, [`bitree_last_error`] returns a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bitree::{
    ClampPolicy, ContractSpec, Error, Exercise, LatticeConfig, McConfig, McScheme, Method,
    ModelParams, OptionKind,
};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitreeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NonFinite = 3,
    Internal = 4,
}

pub const BITREE_METHOD_ACZ: u32 = 0;
pub const BITREE_METHOD_WEI: u32 = 1;
pub const BITREE_METHOD_HST: u32 = 2;

pub const BITREE_PUT: u32 = 0;
pub const BITREE_CALL: u32 = 1;

pub const BITREE_EUROPEAN: u32 = 0;
pub const BITREE_AMERICAN: u32 = 1;

pub const BITREE_CLAMP_AND_COUNT: u32 = 0;
pub const BITREE_UNPROJECTED: u32 = 1;

pub const BITREE_SCHEME_WEAK_SECOND_ORDER: u32 = 0;
pub const BITREE_SCHEME_FULL_TRUNCATION_EULER: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BitreeParams {
    pub s0: f64,
    pub sigma_s: f64,
    pub r0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma_r: f64,
    pub rho: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BitreeContract {
    pub strike: f64,
    pub maturity: f64,
    /// `BITREE_PUT` or `BITREE_CALL`.
    pub kind: u32,
    /// `BITREE_EUROPEAN` or `BITREE_AMERICAN`.
    pub exercise: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BitreeLatticeOptions {
    pub steps: usize,
    /// Near-zero threshold; zero or NaN selects the default.
    pub theta_star: f64,
    /// `BITREE_CLAMP_AND_COUNT` or `BITREE_UNPROJECTED`.
    pub clamp_policy: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BitreeMcOptions {
    pub n_paths: u64,
    pub steps: usize,
    pub seed: u64,
    /// `BITREE_SCHEME_*`.
    pub scheme: u32,
}

/// Output of a pricing call. `std_error` is zero for tree prices, and the
/// clamp and near-zero counters are zero for Monte Carlo prices.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BitreeResult {
    pub price: f64,
    pub std_error: f64,
    pub clamp_count: u64,
    pub near_zero_count: u64,
    pub wall_time_secs: f64,
}

/// Opaque handle holding model parameters and lattice options.
pub struct BitreePricer {
    params: ModelParams,
    options: BitreeLatticeOptions,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(BitreeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NonFinite { .. } => BitreeStatus::NonFinite,
            Error::SingularDrift | Error::DegenerateBranch { .. } | Error::IndexOutOfRange { .. } => {
                BitreeStatus::Internal
            }
            _ => BitreeStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(BitreeStatus::InvalidInput, msg.into())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BitreeStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BitreeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BitreeStatus::Internal
        }
    }
}

fn require<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    // SAFETY: callers pass either null or a pointer to a live, aligned value.
    unsafe { p.as_ref() }.ok_or_else(|| Fail(BitreeStatus::NullPointer, format!("{name} is null")))
}

fn require_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: as for `require`, and the caller does not alias the target.
    unsafe { p.as_mut() }.ok_or_else(|| Fail(BitreeStatus::NullPointer, format!("{name} is null")))
}

impl From<&BitreeParams> for ModelParams {
    fn from(p: &BitreeParams) -> Self {
        ModelParams {
            s0: p.s0,
            sigma_s: p.sigma_s,
            r0: p.r0,
            kappa: p.kappa,
            theta: p.theta,
            sigma_r: p.sigma_r,
            rho: p.rho,
        }
    }
}

fn contract(c: &BitreeContract) -> Result<ContractSpec, Fail> {
    let kind = match c.kind {
        BITREE_PUT => OptionKind::Put,
        BITREE_CALL => OptionKind::Call,
        other => return Err(invalid(format!("unknown option kind {other}"))),
    };
    let exercise = match c.exercise {
        BITREE_EUROPEAN => Exercise::European,
        BITREE_AMERICAN => Exercise::American,
        other => return Err(invalid(format!("unknown exercise style {other}"))),
    };
    Ok(ContractSpec::new(c.strike, c.maturity, kind, exercise))
}

fn lattice(params: &ModelParams, o: &BitreeLatticeOptions) -> Result<LatticeConfig, Fail> {
    let policy = match o.clamp_policy {
        BITREE_CLAMP_AND_COUNT => ClampPolicy::ClampAndCount,
        BITREE_UNPROJECTED => ClampPolicy::Unprojected,
        other => return Err(invalid(format!("unknown clamp policy {other}"))),
    };
    let mut cfg = LatticeConfig::new(o.steps, params).with_clamp_policy(policy);
    if o.theta_star != 0.0 && !o.theta_star.is_nan() {
        cfg = cfg.with_theta_star(o.theta_star);
    }
    Ok(cfg)
}

fn method(m: u32) -> Result<Method, Fail> {
    match m {
        BITREE_METHOD_ACZ => Ok(Method::Acz),
        BITREE_METHOD_WEI => Ok(Method::Wei),
        BITREE_METHOD_HST => Ok(Method::Hst),
        other => Err(invalid(format!("unknown method {other}"))),
    }
}

/// Reference model: `S0 = 100`, `σ_S = 0.25`, `r0 = 0.06`, `κ = 0.5`,
/// `θ = 0.1`, `ρ = -0.25` and the given rate volatility.
#[no_mangle]
pub extern "C" fn bitree_params_reference(sigma_r: f64) -> BitreeParams {
    let p = ModelParams::reference(sigma_r);
    BitreeParams {
        s0: p.s0,
        sigma_s: p.sigma_s,
        r0: p.r0,
        kappa: p.kappa,
        theta: p.theta,
        sigma_r: p.sigma_r,
        rho: p.rho,
    }
}

/// Creates a pricer. Returns null and sets `*status` on failure; `status`
/// may be null.
///
/// # Safety
/// `params` and `options` must be null or point to valid structs, and
/// `status` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bitree_pricer_new(
    params: *const BitreeParams,
    options: *const BitreeLatticeOptions,
    status: *mut BitreeStatus,
) -> *mut BitreePricer {
    let mut handle = std::ptr::null_mut();
    let code = guard(|| {
        let params: ModelParams = require(params, "params")?.into();
        let options = *require(options, "options")?;
        params.validate()?;
        lattice(&params, &options)?;
        handle = Box::into_raw(Box::new(BitreePricer { params, options }));
        Ok(())
    });
    if let Some(s) = status.as_mut() {
        *s = code;
    }
    handle
}

/// Prices a contract with one of the tree methods.
///
/// # Safety
/// `pricer` must come from [`bitree_pricer_new`] and not be freed;
/// `contract` must be null or valid and `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bitree_pricer_price(
    pricer: *const BitreePricer,
    method_id: u32,
    contract_in: *const BitreeContract,
    out: *mut BitreeResult,
) -> BitreeStatus {
    guard(|| {
        let pricer = require(pricer, "pricer")?;
        let c = contract(require(contract_in, "contract")?)?;
        let out = require_mut(out, "out")?;
        let m = method(method_id)?;
        let cfg = lattice(&pricer.params, &pricer.options)?;
        let r = bitree::price(m, &pricer.params, &c, &cfg)?;
        *out = BitreeResult {
            price: r.price,
            std_error: 0.0,
            clamp_count: r.diagnostics.clamp_count(),
            near_zero_count: r.diagnostics.near_zero_nodes,
            wall_time_secs: r.diagnostics.wall_time_secs,
        };
        if r.is_finite() {
            Ok(())
        } else {
            Err(Fail(BitreeStatus::NonFinite, "price is not finite".into()))
        }
    })
}

/// Releases a pricer. Null is accepted and ignored.
///
/// # Safety
/// `pricer` must be null or come from [`bitree_pricer_new`], and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bitree_pricer_free(pricer: *mut BitreePricer) {
    if !pricer.is_null() {
        drop(Box::from_raw(pricer));
    }
}

/// Monte Carlo price of a European contract.
///
/// # Safety
/// Pointers must be null or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bitree_mc_price(
    params: *const BitreeParams,
    contract_in: *const BitreeContract,
    options: *const BitreeMcOptions,
    out: *mut BitreeResult,
) -> BitreeStatus {
    guard(|| {
        let params: ModelParams = require(params, "params")?.into();
        let c = contract(require(contract_in, "contract")?)?;
        let o = require(options, "options")?;
        let out = require_mut(out, "out")?;
        let scheme = match o.scheme {
            BITREE_SCHEME_WEAK_SECOND_ORDER => McScheme::WeakSecondOrder,
            BITREE_SCHEME_FULL_TRUNCATION_EULER => McScheme::FullTruncationEuler,
            other => return Err(invalid(format!("unknown scheme {other}"))),
        };
        let cfg = McConfig {
            n_paths: o.n_paths,
            steps: o.steps,
            seed: o.seed,
            scheme,
        };
        let start = std::time::Instant::now();
        let r = bitree::mc_price(&params, &c, &cfg)?;
        *out = BitreeResult {
            price: r.price,
            std_error: r.std_error,
            clamp_count: 0,
            near_zero_count: 0,
            wall_time_secs: start.elapsed().as_secs_f64(),
        };
        if r.price.is_finite() {
            Ok(())
        } else {
            Err(Fail(BitreeStatus::NonFinite, "price is not finite".into()))
        }
    })
}

/// Static description of a status code; unknown codes are reported as such.
#[no_mangle]
pub extern "C" fn bitree_status_message(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer argument",
        2 => c"invalid input",
        3 => c"non-finite result",
        4 => c"internal error",
        _ => c"unknown status",
    };
    s.as_ptr()
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on the same
/// thread.
#[no_mangle]
pub extern "C" fn bitree_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version string.
#[no_mangle]
pub extern "C" fn bitree_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}
