//! C ABI for the branched-renorm engine.
//!
//! Forests live behind the opaque handle `BrnForest`, created by
//! [`brn_forest_parse`] or [`brn_forest_concat`] and released with
//! [`brn_forest_free`]. Every fallible call returns a [`BrnStatus`]; on failure
//! [`brn_last_error`] describes the problem until the next call on the same
//! thread. Strings handed out by the library must be released with
//! [`brn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use branched_renorm::forest::{concat, parse_forest, serialize, ParseMode};
use branched_renorm::oracle::{closed_form, quad_tree, NumericAssignment, QuadConfig};
use branched_renorm::renorm::{is_similar, regularize, renormalize, renormalize_checked};
use branched_renorm::{DecoratedForest, Error, InnerProduct};

/// Result codes of every fallible entry point.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BrnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Locality = 4,
    Numeric = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// A decorated forest together with its inner product.
pub struct BrnForest {
    forest: DecoratedForest,
    q: InnerProduct,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> BrnStatus {
    match e {
        Error::Parse { .. } | Error::NonPositiveWeight { .. } | Error::InvalidInnerProduct(_) => BrnStatus::Parse,
        Error::NotProperlyDecorated(_) | Error::LocalityViolation(_) | Error::SingularGram => BrnStatus::Locality,
        Error::IndexOutOfRange(_) | Error::TruncationTooLow { .. } | Error::VariableMismatch => {
            BrnStatus::InvalidArgument
        }
        _ => BrnStatus::Numeric,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (BrnStatus, String)>) -> BrnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BrnStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BrnStatus::Panic
        }
    }
}

fn fail(e: Error) -> (BrnStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (BrnStatus, String) {
    (BrnStatus::NullPointer, format!("{name} is null"))
}

unsafe fn forest_ref<'a>(p: *const BrnForest, name: &str) -> Result<&'a BrnForest, (BrnStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> Result<(), (BrnStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(text).map_err(|_| (BrnStatus::Numeric, "interior NUL in output".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Parses forest text. `explicit_mode` selects vector decorations with a `Q=`
/// header; otherwise the format is detected from the text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brn_forest_parse(
    text: *const c_char,
    explicit_mode: bool,
    out: *mut *mut BrnForest,
) -> BrnStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|_| (BrnStatus::InvalidUtf8, "text is not UTF-8".to_string()))?;
        let mode = if explicit_mode { ParseMode::Explicit } else { ParseMode::Auto };
        let (forest, q) = parse_forest(s, mode).map_err(fail)?;
        *out = Box::into_raw(Box::new(BrnForest { forest, q }));
        Ok(())
    })
}

/// Releases a forest. Null is accepted.
///
/// # Safety
/// `forest` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brn_forest_free(forest: *mut BrnForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `forest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn brn_forest_degree(forest: *const BrnForest) -> usize {
    forest.as_ref().map_or(0, |f| f.forest.degree())
}

/// Weight text of a forest whose decorations are orthogonal basis directions.
///
/// # Safety
/// `forest` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brn_forest_serialize(forest: *const BrnForest, out: *mut *mut c_char) -> BrnStatus {
    guard(|| {
        let f = forest_ref(forest, "forest")?;
        let text = serialize(&f.forest, &f.q).map_err(fail)?;
        write_string(out, text)
    })
}

/// Product of two forests placed on disjoint coordinates, so that they are
/// automatically independent.
///
/// # Safety
/// `a`, `b` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brn_forest_concat(
    a: *const BrnForest,
    b: *const BrnForest,
    out: *mut *mut BrnForest,
) -> BrnStatus {
    guard(|| {
        let (fa, fb) = (forest_ref(a, "a")?, forest_ref(b, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let offset = fa.q.indices().iter().max().map_or(0, |m| m + 1);
        let q = fa.q.direct_sum(&fb.q.reindexed(offset)).map_err(fail)?;
        let forest = concat(&fa.forest, &fb.forest.reindexed(offset), &q).map_err(fail)?;
        *out = Box::into_raw(Box::new(BrnForest { forest, q }));
        Ok(())
    })
}

/// Renormalized value. `trunc = 0` selects the default truncation. On success
/// `out_exact` receives the exact polynomial in `pi^2` (release with
/// [`brn_string_free`]) and `out_value` its numeric value; either may be null.
///
/// # Safety
/// `forest` must be a live handle; outputs must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn brn_renormalize(
    forest: *const BrnForest,
    trunc: u32,
    out_exact: *mut *mut c_char,
    out_value: *mut f64,
) -> BrnStatus {
    guard(|| {
        let f = forest_ref(forest, "forest")?;
        let value = if trunc == 0 { renormalize(&f.forest, &f.q) } else { renormalize_checked(&f.forest, &f.q, trunc) }
            .map_err(fail)?;
        if !out_exact.is_null() {
            write_string(out_exact, value.exact.to_string())?;
        }
        if !out_value.is_null() {
            *out_value = value.to_f64();
        }
        Ok(())
    })
}

/// Closed form of the regularized integral as text.
///
/// # Safety
/// `forest` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brn_regularize(forest: *const BrnForest, out: *mut *mut c_char) -> BrnStatus {
    guard(|| {
        let f = forest_ref(forest, "forest")?;
        let r = regularize(&f.forest, &f.q).map_err(fail)?;
        write_string(out, r.to_string())
    })
}

/// Whether two forests are similar (same shape, proportional weights).
///
/// # Safety
/// `a`, `b` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brn_is_similar(a: *const BrnForest, b: *const BrnForest, out: *mut bool) -> BrnStatus {
    guard(|| {
        let (fa, fb) = (forest_ref(a, "a")?, forest_ref(b, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = is_similar(&fa.forest, &fa.q, &fb.forest, &fb.q);
        Ok(())
    })
}

/// Largest relative deviation between nested quadrature and the closed form
/// over `samples` random admissible assignments at `x = 1`.
///
/// # Safety
/// `forest` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brn_quad_check(forest: *const BrnForest, samples: u32, seed: u64, out: *mut f64) -> BrnStatus {
    guard(|| {
        let f = forest_ref(forest, "forest")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = QuadConfig::default();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let assign = NumericAssignment::random_admissible(&f.forest, 0.1, 0.9, &mut rng).map_err(fail)?;
            let quad = quad_tree(&f.forest, &assign, 1.0, &cfg).map_err(fail)?;
            let exact = closed_form(&f.forest, &f.q, &assign, 1.0).map_err(fail)?;
            worst = worst.max((quad - exact).abs() / exact.abs());
        }
        *out = worst;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn brn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn brn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
