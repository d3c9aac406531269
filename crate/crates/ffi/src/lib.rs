//! C ABI over `tifa-core`.
//!
//! Every fallible call returns a [`TifaStatus`] and writes its result through
//! an out-pointer. On failure, [`tifa_last_error_message`] describes the most
//! recent error on the calling thread. Strings handed to the caller are owned
//! by the library and must be released with [`tifa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use serde_json::{json, Value};
use tifa_core::benchmark::{benchmark_stats, load_benchmark, Benchmark};
use tifa_core::questions::parse_generation_output;
use tifa_core::stats::{self, AnnotationMatrix, PairedSamples, Scale, StatsError};
use tifa_core::text;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TifaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Input is well-formed but the statistic is undefined for it.
    Degenerate = 4,
    Io = 5,
    Data = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TifaScale {
    Nominal = 0,
    Ordinal = 1,
}

/// Opaque handle to a loaded benchmark.
pub struct TifaBenchmark {
    inner: Benchmark,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TifaStatus, String);

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        let status = match e {
            StatsError::DegenerateSample(_) | StatsError::TooFewSamples(_) | StatsError::InsufficientOverlap => {
                TifaStatus::Degenerate
            }
            _ => TifaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    // Interior NULs cannot cross the boundary; drop them rather than the message.
    let msg = CString::new(msg.replace('\0', "")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TifaStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TifaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TifaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TifaStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TifaStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(TifaStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(TifaStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(TifaStatus::InvalidArgument, "result contains NUL".into()))?;
    write_out(out, c.into_raw())
}

fn paired(xs: &[f64], ys: &[f64]) -> Result<PairedSamples, Failure> {
    Ok(PairedSamples::new(xs.to_vec(), ys.to_vec())?)
}

/// Message for the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call into this library on the
/// same thread; do not free it.
#[no_mangle]
pub extern "C" fn tifa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tifa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tifa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Answer normalization: lowercase, strip punctuation, articles and extra
/// whitespace.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_normalize_answer(text: *const c_char, out: *mut *mut c_char) -> TifaStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        write_string(out, text::normalize_answer(text))
    })
}

/// Token-level F1 between normalized answers.
///
/// # Safety
/// `prediction` and `gold` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_token_f1(prediction: *const c_char, gold: *const c_char, out: *mut f64) -> TifaStatus {
    guard(|| {
        let prediction = str_arg(prediction, "prediction")?;
        let gold = str_arg(gold, "gold")?;
        write_out(out, text::token_f1(prediction, gold))
    })
}

/// Spearman rank correlation of two equal-length samples.
///
/// # Safety
/// `xs` and `ys` must each point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_spearman_rho(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> TifaStatus {
    guard(|| {
        let s = paired(slice_arg(xs, len, "xs")?, slice_arg(ys, len, "ys")?)?;
        write_out(out, stats::spearman_rho(&s)?)
    })
}

/// Kendall tau-b of two equal-length samples.
///
/// # Safety
/// `xs` and `ys` must each point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_kendall_tau(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> TifaStatus {
    guard(|| {
        let s = paired(slice_arg(xs, len, "xs")?, slice_arg(ys, len, "ys")?)?;
        write_out(out, stats::kendall_tau(&s)?)
    })
}

/// Krippendorff's alpha. `rows_json` is a JSON array with one array per item
/// and one entry per annotator; entries are strings, numbers or null.
///
/// # Safety
/// `rows_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_krippendorff_alpha(
    rows_json: *const c_char,
    scale: TifaScale,
    out: *mut f64,
) -> TifaStatus {
    guard(|| {
        let text = str_arg(rows_json, "rows_json")?;
        let rows = parse_rows(text)?;
        let scale = match scale {
            TifaScale::Nominal => Scale::Nominal,
            TifaScale::Ordinal => Scale::Ordinal,
        };
        let m = AnnotationMatrix::new(rows, scale)?;
        write_out(out, stats::krippendorff_alpha(&m)?)
    })
}

fn parse_rows(text: &str) -> Result<Vec<Vec<Option<String>>>, Failure> {
    let bad = |msg: String| Failure(TifaStatus::InvalidArgument, msg);
    let value: Value = serde_json::from_str(text).map_err(|e| bad(format!("rows_json: {e}")))?;
    let Value::Array(rows) = value else {
        return Err(bad("rows_json must be an array of arrays".into()));
    };
    rows.into_iter()
        .map(|row| match row {
            Value::Array(cells) => cells
                .into_iter()
                .map(|c| match c {
                    Value::Null => Ok(None),
                    Value::String(s) => Ok(Some(s)),
                    Value::Number(n) => Ok(Some(n.to_string())),
                    other => Err(bad(format!("unsupported annotation {other}"))),
                })
                .collect(),
            _ => Err(bad("rows_json must be an array of arrays".into())),
        })
        .collect()
}

/// Human rating rubric: `n` elements with `x` missed (a multiple of 0.5),
/// `none_correct` when none of the major objects appear. Writes 1..=5.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_likert_rubric(n: u32, x: f64, none_correct: bool, out: *mut u8) -> TifaStatus {
    guard(|| write_out(out, stats::likert_rubric(n, x, none_correct)?))
}

/// Parses a question-generation completion into JSON
/// `{"elements": [...], "tuples": [...], "warnings": [...]}`.
///
/// # Safety
/// `completion` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_parse_generation_output(completion: *const c_char, out: *mut *mut c_char) -> TifaStatus {
    guard(|| {
        let parsed = parse_generation_output(str_arg(completion, "completion")?);
        let elements: Vec<Value> = parsed
            .elements
            .iter()
            .map(|e| json!({"text": e.text, "category": e.category}))
            .collect();
        let doc = json!({"elements": elements, "tuples": parsed.tuples, "warnings": parsed.warnings});
        write_string(out, doc.to_string())
    })
}

/// Loads a benchmark JSONL file. On success `*out` owns a handle that must be
/// released with [`tifa_benchmark_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_benchmark_load(path: *const c_char, out: *mut *mut TifaBenchmark) -> TifaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(TifaStatus::NullPointer, "output pointer is null".into()));
        }
        let path = str_arg(path, "path")?;
        let inner = load_benchmark(Path::new(path)).map_err(|e| {
            let status = match e {
                tifa_core::benchmark::BenchmarkError::Io { .. } => TifaStatus::Io,
                _ => TifaStatus::Data,
            };
            Failure(status, e.to_string())
        })?;
        write_out(out, Box::into_raw(Box::new(TifaBenchmark { inner })))
    })
}

/// # Safety
/// `b` must be null or a handle from [`tifa_benchmark_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tifa_benchmark_free(b: *mut TifaBenchmark) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

unsafe fn handle<'a>(b: *const TifaBenchmark) -> Result<&'a Benchmark, Failure> {
    b.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| Failure(TifaStatus::NullPointer, "benchmark handle is null".into()))
}

/// # Safety
/// `b` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_benchmark_prompt_count(b: *const TifaBenchmark, out: *mut usize) -> TifaStatus {
    guard(|| write_out(out, handle(b)?.prompts.len()))
}

/// # Safety
/// `b` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_benchmark_question_count(b: *const TifaBenchmark, out: *mut usize) -> TifaStatus {
    guard(|| write_out(out, handle(b)?.tuples.len()))
}

/// Benchmark statistics as a JSON object.
///
/// # Safety
/// `b` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tifa_benchmark_stats_json(b: *const TifaBenchmark, out: *mut *mut c_char) -> TifaStatus {
    guard(|| {
        let summary = benchmark_stats(handle(b)?);
        let text = serde_json::to_string(&summary).map_err(|e| Failure(TifaStatus::Data, e.to_string()))?;
        write_string(out, text)
    })
}
