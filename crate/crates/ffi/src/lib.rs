//! C ABI over the cleaning, scoring, sampling and retrieval functions.
//!
//! Conventions:
//! * every fallible function returns an [`RbStatus`] and writes its result
//!   through an out pointer;
//! * strings cross the boundary as NUL-terminated UTF-8;
//! * strings returned to the caller are owned by the caller and released
//!   with [`rb_string_free`];
//! * the message for the most recent failure on the calling thread is
//!   available from [`rb_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use repairbench::analysis::{cohen_kappa, sample_size};
use repairbench::cleaner::clean;
use repairbench::metrics::codebleu::{codebleu_sample, MetricConfig};
use repairbench::metrics::{bleu4, exact_match};
use repairbench::retrieval::TfidfIndex;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// A Rust panic was caught at the boundary.
    Internal = 4,
}

#[derive(Debug, thiserror::Error)]
enum FfiError {
    #[error("null pointer passed for `{0}`")]
    Null(&'static str),
    #[error("`{0}` is not valid UTF-8")]
    Utf8(&'static str),
    #[error("{0}")]
    Invalid(String),
}

impl FfiError {
    fn status(&self) -> RbStatus {
        match self {
            FfiError::Null(_) => RbStatus::NullPointer,
            FfiError::Utf8(_) => RbStatus::InvalidUtf8,
            FfiError::Invalid(_) => RbStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> RbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RbStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            e.status()
        }
        Err(_) => {
            set_error("internal error");
            RbStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(name))
}

unsafe fn text_array<'a>(p: *const *const c_char, n: usize, name: &'static str) -> Result<Vec<&'a str>, FfiError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    std::slice::from_raw_parts(p, n).iter().map(|&s| text(s, name)).collect()
}

unsafe fn put<T>(out: *mut T, value: T, name: &'static str) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null(name));
    }
    out.write(value);
    Ok(())
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn rb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Clean raw model output into bare code.
///
/// # Safety
/// `raw` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_clean(raw: *const c_char, out: *mut *mut c_char) -> RbStatus {
    guard(|| {
        let raw = text(raw, "raw")?;
        put(out, owned(clean(raw).0), "out")
    })
}

/// Writes 1 when `prediction` equals `target` after whitespace
/// normalisation, else 0.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_exact_match(prediction: *const c_char, target: *const c_char, out: *mut i32) -> RbStatus {
    guard(|| {
        let m = exact_match(text(prediction, "prediction")?, text(target, "target")?);
        put(out, i32::from(m), "out")
    })
}

/// Corpus BLEU-4 in percent over `n` aligned hypothesis/reference pairs.
///
/// # Safety
/// `hypotheses` and `references` must each point to `n` NUL-terminated
/// strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_bleu4(
    hypotheses: *const *const c_char,
    references: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> RbStatus {
    guard(|| {
        let h = text_array(hypotheses, n, "hypotheses")?;
        let r = text_array(references, n, "references")?;
        put(out, bleu4(&h, &r), "out")
    })
}

/// CodeBLEU in percent for one hypothesis against one reference, with the
/// default weights. `parse_failed` receives 1 when the hypothesis did not
/// parse and its syntax components were scored as zero; it may be null.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_codebleu(
    hypothesis: *const c_char,
    reference: *const c_char,
    out: *mut f64,
    parse_failed: *mut i32,
) -> RbStatus {
    guard(|| {
        let s =
            codebleu_sample(text(hypothesis, "hypothesis")?, text(reference, "reference")?, &MetricConfig::default());
        if !parse_failed.is_null() {
            parse_failed.write(i32::from(s.hyp_parse_failed));
        }
        put(out, 100.0 * s.codebleu, "out")
    })
}

/// Sample size for a proportion estimate with finite-population correction.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_sample_size(population: u64, confidence: f64, margin: f64, out: *mut u64) -> RbStatus {
    guard(|| {
        let n = sample_size(population, confidence, margin).map_err(|e| FfiError::Invalid(e.to_string()))?;
        put(out, n, "out")
    })
}

/// Cohen's kappa over two aligned arrays of 0/1 ratings.
///
/// # Safety
/// `a` and `b` must each point to `n` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_cohen_kappa(a: *const u8, b: *const u8, n: usize, out: *mut f64) -> RbStatus {
    guard(|| {
        if n > 0 && (a.is_null() || b.is_null()) {
            return Err(FfiError::Null(if a.is_null() { "a" } else { "b" }));
        }
        let (a, b) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(a, n), std::slice::from_raw_parts(b, n))
        };
        let k = cohen_kappa(a, b).map_err(|e| FfiError::Invalid(e.to_string()))?;
        put(out, k, "out")
    })
}

/// Opaque review index.
pub struct RbTfidfIndex(TfidfIndex);

/// Build an index over `n` (id, review) pairs.
///
/// # Safety
/// `ids` and `reviews` must each point to `n` NUL-terminated strings; `out`
/// must be writable. Release the index with [`rb_index_free`].
#[no_mangle]
pub unsafe extern "C" fn rb_index_new(
    ids: *const *const c_char,
    reviews: *const *const c_char,
    n: usize,
    out: *mut *mut RbTfidfIndex,
) -> RbStatus {
    guard(|| {
        let ids = text_array(ids, n, "ids")?;
        let reviews = text_array(reviews, n, "reviews")?;
        let index = TfidfIndex::build(ids.into_iter().zip(reviews)).map_err(|e| FfiError::Invalid(e.to_string()))?;
        put(out, Box::into_raw(Box::new(RbTfidfIndex(index))), "out")
    })
}

/// The `k` most similar reviews to `query` as a JSON array of
/// `[id, cosine]` pairs, best first.
///
/// # Safety
/// `index` must come from [`rb_index_new`]; `query` must be NUL-terminated;
/// `out` must be writable. Free the result with [`rb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rb_index_top_k(
    index: *const RbTfidfIndex,
    query: *const c_char,
    k: usize,
    out: *mut *mut c_char,
) -> RbStatus {
    guard(|| {
        let index = index.as_ref().ok_or(FfiError::Null("index"))?;
        let hits = index.0.top_k_similar(text(query, "query")?, k);
        let json = serde_json::to_string(&hits).map_err(|e| FfiError::Invalid(e.to_string()))?;
        put(out, owned(json), "out")
    })
}

/// Release an index. Null is ignored.
///
/// # Safety
/// `index` must come from [`rb_index_new`] and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rb_index_free(index: *mut RbTfidfIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}
