//! C ABI over `lolab`.
//!
//! Objects cross the boundary as opaque handles created by a `*_new`
//! function and released by the matching `*_free`. Every call returns a
//! [`LolabStatus`]; on failure [`lolab_last_error`] describes what went wrong.
//! Strings handed out by the library are owned by the caller and must be
//! released with [`lolab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lolab::inverse_engine::{invert, InvertOptions};
use lolab::rational;
use lolab::walks::rho;
use lolab::{EtaSpec, Gap, StepMultiset};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LolabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    PreconditionFailed = 4,
    BudgetExceeded = 5,
    Failed = 6,
    Panic = 7,
}

/// Opaque step multiset.
pub struct LolabMultiset {
    inner: StepMultiset,
}

/// Opaque integer GAP.
pub struct LolabGap {
    inner: Gap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &lolab::Error) -> LolabStatus {
    match e.root() {
        lolab::Error::InvalidInput(_) => LolabStatus::InvalidInput,
        lolab::Error::PreconditionFailed(_) | lolab::Error::HypothesisViolated(_) => {
            LolabStatus::PreconditionFailed
        }
        _ if e.is_budget() => LolabStatus::BudgetExceeded,
        _ => LolabStatus::Failed,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Lib(lolab::Error),
}

impl From<lolab::Error> for Fail {
    fn from(e: lolab::Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LolabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LolabStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("{what} is null"));
            LolabStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8");
            LolabStatus::InvalidUtf8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            LolabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

unsafe fn slice_arg<'a>(p: *const i64, len: usize, what: &'static str) -> Result<&'a [i64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lolab_version() -> *const c_char {
    static V: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    V.as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn lolab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lolab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `values` must point to `len` readable integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lolab_multiset_new(
    values: *const i64,
    len: usize,
    out: *mut *mut LolabMultiset,
) -> LolabStatus {
    guard(|| {
        let v = slice_arg(values, len, "values")?;
        let m = StepMultiset::new(v.iter().copied())?;
        put(out, Box::into_raw(Box::new(LolabMultiset { inner: m })), "out")
    })
}

/// # Safety
/// `m` must come from [`lolab_multiset_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lolab_multiset_free(m: *mut LolabMultiset) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lolab_multiset_len(m: *const LolabMultiset, out: *mut usize) -> LolabStatus {
    guard(|| {
        let m = m.as_ref().ok_or(Fail::Null("multiset"))?;
        put(out, m.inner.len(), "out")
    })
}

/// Exact `rho` as JSON `{"rho": "a/b", "argmax": x, "rho_decimal": f}`.
/// A null `eta_json` means Bernoulli steps.
///
/// # Safety
/// `m` must be a live handle, `eta_json` null or a NUL-terminated string,
/// `out_json` writable. Free the result with [`lolab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn lolab_rho(
    m: *const LolabMultiset,
    eta_json: *const c_char,
    out_json: *mut *mut c_char,
) -> LolabStatus {
    guard(|| {
        let m = m.as_ref().ok_or(Fail::Null("multiset"))?;
        let eta = if eta_json.is_null() {
            EtaSpec::bernoulli()
        } else {
            serde_json::from_str(str_arg(eta_json, "eta_json")?)
                .map_err(|e| lolab::Error::InvalidInput(format!("eta: {e}")))?
        };
        let r = rho(&m.inner, &eta)?;
        let v = serde_json::json!({
            "rho": rational::format(&r.rho),
            "rho_decimal": rational::to_f64(&r.rho),
            "argmax": r.argmax,
        });
        put(out_json, owned_string(v.to_string()), "out_json")
    })
}

/// Runs the inverse pipeline with the pinned constants and returns the full
/// report as JSON.
///
/// # Safety
/// `m` must be a live handle, `epsilon` a NUL-terminated rational such as
/// `"1/10"`, `out_json` writable. Free the result with [`lolab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn lolab_invert(
    m: *const LolabMultiset,
    epsilon: *const c_char,
    c: f64,
    out_json: *mut *mut c_char,
) -> LolabStatus {
    guard(|| {
        let m = m.as_ref().ok_or(Fail::Null("multiset"))?;
        let eps = rational::parse(str_arg(epsilon, "epsilon")?)?;
        let report = invert(&m.inner, &eps, &InvertOptions::new(c))?;
        let s = serde_json::to_string(&report).expect("reports serialize");
        put(out_json, owned_string(s), "out_json")
    })
}

/// `{sum x_i g_i : |x_i| <= bounds_i}` in the integers.
///
/// # Safety
/// `generators` and `bounds` must each point to `rank` readable integers;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lolab_gap_symmetric(
    generators: *const i64,
    bounds: *const i64,
    rank: usize,
    out: *mut *mut LolabGap,
) -> LolabStatus {
    guard(|| {
        let g = slice_arg(generators, rank, "generators")?;
        let b = slice_arg(bounds, rank, "bounds")?;
        let gap = Gap::symmetric(g, b)?;
        put(out, Box::into_raw(Box::new(LolabGap { inner: gap })), "out")
    })
}

/// # Safety
/// `g` must come from [`lolab_gap_symmetric`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lolab_gap_free(g: *mut LolabGap) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Coefficient-box cardinality, saturating at `UINT64_MAX`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lolab_gap_volume(g: *const LolabGap, out: *mut u64) -> LolabStatus {
    guard(|| {
        let g = g.as_ref().ok_or(Fail::Null("gap"))?;
        put(out, u64::try_from(g.inner.volume()).unwrap_or(u64::MAX), "out")
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lolab_gap_contains(g: *const LolabGap, x: i64, out: *mut bool) -> LolabStatus {
    guard(|| {
        let g = g.as_ref().ok_or(Fail::Null("gap"))?;
        put(out, g.inner.contains_scalar(x)?, "out")
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lolab_gap_is_proper(g: *const LolabGap, out: *mut bool) -> LolabStatus {
    guard(|| {
        let g = g.as_ref().ok_or(Fail::Null("gap"))?;
        put(out, g.inner.is_proper(1, lolab::gap_core::DEFAULT_CAP)?, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last() -> String {
        unsafe { CStr::from_ptr(lolab_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&lolab::Error::InvalidInput("x".into())), LolabStatus::InvalidInput);
        let budget = lolab::Error::BudgetExceeded {
            what: "t",
            needed: 2,
            budget: 1,
        };
        assert_eq!(status_of(&budget), LolabStatus::BudgetExceeded);
        assert_eq!(status_of(&lolab::Error::FitFailed("x".into())), LolabStatus::Failed);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, LolabStatus::Panic);
        assert_eq!(last(), "internal panic");
        assert_eq!(guard(|| Ok(())), LolabStatus::Ok);
        assert_eq!(last(), "");
    }
}
