//! C interface to hsdlab.
//!
//! Every fallible function returns an [`HsdStatus`]. When it is not
//! `HSD_STATUS_OK`, a description of the failure can be read on the same
//! thread with [`hsd_last_error`]. Objects are opaque handles released with
//! their `_free` function; strings allocated by the library are released
//! with [`hsd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hsdlab::cli::LoadedRun;
use hsdlab::corpus::{kfold_split, Label};
use hsdlab::error::{Error, ErrorKind};
use hsdlab::eval::score_labels;
use hsdlab::preprocess::Preprocessor;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Data = 4,
    Config = 5,
    Argument = 6,
    Checkpoint = 7,
    Runtime = 8,
    Panic = 9,
}

/// Scores for one evaluation. Label codes are 0 for HOF and 1 for NOT.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HsdMetrics {
    pub hof_precision: f64,
    pub hof_recall: f64,
    pub hof_f1: f64,
    pub not_precision: f64,
    pub not_recall: f64,
    pub not_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub n: u64,
}

/// Text cleaner with the bundled emoji and unigram tables.
pub struct HsdPreprocessor(Preprocessor);

/// A trained run directory loaded for inference.
pub struct HsdModel(LoadedRun);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HsdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Io => HsdStatus::Io,
            ErrorKind::Data => HsdStatus::Data,
            ErrorKind::Config => HsdStatus::Config,
            ErrorKind::Argument => HsdStatus::Argument,
            ErrorKind::Checkpoint => HsdStatus::Checkpoint,
            ErrorKind::Runtime => HsdStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HsdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HsdStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HsdStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(HsdStatus::NullPointer, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be NULL or a NUL-terminated string.
unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HsdStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hsd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hsd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hsd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a cleaner with all cleaning steps enabled.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hsd_preprocessor_new(out: *mut *mut HsdPreprocessor) -> HsdStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(HsdPreprocessor(Preprocessor::bundled())));
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`hsd_preprocessor_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hsd_preprocessor_free(p: *mut HsdPreprocessor) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Cleans `text` and writes the tokens as a JSON array of strings to `out`.
///
/// # Safety
/// `p` must be a live preprocessor handle, `text` a NUL-terminated string and
/// `out` writable. The string stored in `out` must be freed with
/// [`hsd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn hsd_clean(p: *const HsdPreprocessor, text: *const c_char, out: *mut *mut c_char) -> HsdStatus {
    guard(|| {
        non_null(p, "preprocessor")?;
        non_null(out, "out")?;
        let text = utf8(text, "text")?;
        let tokens = (*p).0.clean(text);
        *out = to_c_string(serde_json::to_string(&tokens).expect("tokens serialize"));
        Ok(())
    })
}

/// Loads a directory written by `hsdlab train`.
///
/// # Safety
/// `run_dir` must be a NUL-terminated path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hsd_model_open(run_dir: *const c_char, out: *mut *mut HsdModel) -> HsdStatus {
    guard(|| {
        non_null(out, "out")?;
        let dir = utf8(run_dir, "run_dir")?;
        let run = LoadedRun::open(Path::new(dir))?;
        *out = Box::into_raw(Box::new(HsdModel(run)));
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`hsd_model_open`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hsd_model_free(m: *mut HsdModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of fold models in the ensemble; 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn hsd_model_num_folds(m: *const HsdModel) -> usize {
    if m.is_null() {
        0
    } else {
        (*m).0.checkpoints.len()
    }
}

/// Classifies one raw post. `out_prob` receives the mean NOT probability and
/// `out_label` the label code (0 HOF, 1 NOT; NOT when prob ≥ threshold).
///
/// # Safety
/// `m` must be a live model handle, `text` NUL-terminated and both output
/// pointers writable.
#[no_mangle]
pub unsafe extern "C" fn hsd_model_predict(
    m: *const HsdModel,
    text: *const c_char,
    threshold: f64,
    out_prob: *mut f64,
    out_label: *mut i32,
) -> HsdStatus {
    guard(|| {
        non_null(m, "model")?;
        non_null(out_prob, "out_prob")?;
        non_null(out_label, "out_label")?;
        let text = utf8(text, "text")?;
        let (prob, label) = (*m).0.predict_texts(&[text], threshold)?[0];
        *out_prob = prob;
        *out_label = i32::from(label.code());
        Ok(())
    })
}

/// Writes the fold index of each of `n` samples into `out_fold_of`.
///
/// # Safety
/// `out_fold_of` must point to `n` writable `uint32_t` values.
#[no_mangle]
pub unsafe extern "C" fn hsd_kfold_split(n: usize, k: usize, seed: u64, out_fold_of: *mut u32) -> HsdStatus {
    guard(|| {
        non_null(out_fold_of, "out_fold_of")?;
        let folds = kfold_split(n, k, seed)?;
        let out = std::slice::from_raw_parts_mut(out_fold_of, n);
        for (slot, &f) in out.iter_mut().zip(&folds.fold_of) {
            *slot = f as u32;
        }
        Ok(())
    })
}

/// Scores `n` predicted label codes against gold codes.
///
/// # Safety
/// `preds` and `golds` must each point to `n` readable bytes; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hsd_score(preds: *const u8, golds: *const u8, n: usize, out: *mut HsdMetrics) -> HsdStatus {
    guard(|| {
        non_null(preds, "preds")?;
        non_null(golds, "golds")?;
        non_null(out, "out")?;
        let decode = |codes: &[u8], what: &str| -> Result<Vec<Label>, Failure> {
            codes
                .iter()
                .map(|&c| Label::from_code(c).ok_or_else(|| Failure(HsdStatus::Argument, format!("{what}: label code {c} is not 0 or 1"))))
                .collect()
        };
        let p = decode(std::slice::from_raw_parts(preds, n), "preds")?;
        let g = decode(std::slice::from_raw_parts(golds, n), "golds")?;
        let m = score_labels(&p, &g)?;
        *out = HsdMetrics {
            hof_precision: m.hof.precision,
            hof_recall: m.hof.recall,
            hof_f1: m.hof.f1,
            not_precision: m.not.precision,
            not_recall: m.not.recall,
            not_f1: m.not.f1,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            macro_f1: m.macro_f1,
            accuracy: m.accuracy,
            n: m.n,
        };
        Ok(())
    })
}
