//! C ABI over the gptaudit library.
//!
//! Every fallible call returns a [`GaStatus`]; on failure the message is kept
//! per thread and read back with [`ga_last_error_message`]. Strings handed
//! out by the library must be released with [`ga_string_free`]; handles with
//! their matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gptaudit::analysis::{self, AnalysisError, ReportFormat};
use gptaudit::audit;
use gptaudit::model::{self, GizmoId, GptClass, GptMetadata};
use gptaudit::store::{self, Snapshot, SnapshotDiff, StoreError};
use url::Url;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    NotFound = 4,
    Corrupt = 5,
    Io = 6,
    Inconsistent = 7,
    OutOfRange = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaClass {
    PromptBased = 0,
    KnowledgeBased = 1,
    ActionBased = 2,
}

impl From<GptClass> for GaClass {
    fn from(c: GptClass) -> Self {
        match c {
            GptClass::PromptBased => GaClass::PromptBased,
            GptClass::KnowledgeBased => GaClass::KnowledgeBased,
            GptClass::ActionBased => GaClass::ActionBased,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaReportFormat {
    Csv = 0,
    Json = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaAuditDistribution {
    pub accessible: u64,
    pub broken: u64,
    pub homepage: u64,
    pub timeout: u64,
    pub server_error: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaDomainBuckets {
    pub zero: u64,
    pub one: u64,
    pub two_plus: u64,
}

/// Opaque loaded snapshot.
pub struct GaSnapshot {
    inner: Snapshot,
}

/// Opaque diff result; events are rendered as JSON on creation.
pub struct GaDiff {
    lines: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: GaStatus, msg: impl Into<String>) -> GaStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into [`GaStatus::Panic`].
fn guard(f: impl FnOnce() -> GaStatus) -> GaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(GaStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, GaStatus> {
    if p.is_null() {
        return Err(fail(GaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(GaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> GaStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            GaStatus::Ok
        }
        Err(_) => fail(GaStatus::InvalidInput, "result contains a NUL byte"),
    }
}

fn store_status(e: &StoreError) -> GaStatus {
    let status = match e {
        StoreError::NotFound(_) => GaStatus::NotFound,
        StoreError::CorruptManifest(_) | StoreError::Malformed { .. } => GaStatus::Corrupt,
        StoreError::IoFailure(_) => GaStatus::Io,
        StoreError::DuplicateSnapshotId(_) | StoreError::Invalid(_) => GaStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:literal) => {
        if $p.is_null() {
            return fail(GaStatus::NullArgument, concat!($what, " is null"));
        }
    };
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn ga_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ga_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `id` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ga_validate_gizmo_id(id: *const c_char) -> GaStatus {
    guard(|| {
        let id = try_ffi!(read_str(id, "id"));
        match model::validate_gizmo_id(id) {
            Ok(_) => GaStatus::Ok,
            Err(e) => fail(GaStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Writes `{base}/g/g-{id}` to `out`. A null `base` means the public store.
///
/// # Safety
/// `base` may be null; `id` must be a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_build_access_url(
    base: *const c_char,
    id: *const c_char,
    out: *mut *mut c_char,
) -> GaStatus {
    guard(|| {
        non_null!(out, "out");
        let base = if base.is_null() {
            model::DEFAULT_STORE_BASE
        } else {
            try_ffi!(read_str(base, "base"))
        };
        let id = try_ffi!(read_str(id, "id"));
        let id = match GizmoId::parse(id) {
            Ok(id) => id,
            Err(e) => return fail(GaStatus::InvalidInput, e.to_string()),
        };
        write_string(out, model::build_access_url(base, &id))
    })
}

/// Classifies one metadata record given as JSON.
///
/// # Safety
/// `json` must be a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_classify_json(json: *const c_char, out: *mut GaClass) -> GaStatus {
    guard(|| {
        non_null!(out, "out");
        let json = try_ffi!(read_str(json, "json"));
        match serde_json::from_str::<GptMetadata>(json) {
            Ok(meta) => {
                *out = model::classify(&meta).into();
                GaStatus::Ok
            }
            Err(e) => fail(GaStatus::InvalidInput, e.to_string()),
        }
    })
}

unsafe fn url_predicate(url: *const c_char, out: *mut bool, pred: fn(&Url) -> bool) -> GaStatus {
    guard(|| {
        non_null!(out, "out");
        let raw = try_ffi!(read_str(url, "url"));
        match Url::parse(raw) {
            Ok(u) => {
                *out = pred(&u);
                GaStatus::Ok
            }
            Err(e) => fail(GaStatus::InvalidInput, format!("{raw:?}: {e}")),
        }
    })
}

/// # Safety
/// `url` must be a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_is_placeholder(url: *const c_char, out: *mut bool) -> GaStatus {
    url_predicate(url, out, audit::is_placeholder)
}

/// # Safety
/// `url` must be a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_is_homepage_only(url: *const c_char, out: *mut bool) -> GaStatus {
    url_predicate(url, out, audit::is_homepage_only)
}

/// Visible text of an HTML document, whitespace collapsed.
///
/// # Safety
/// `html` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_extract_text(
    html: *const u8,
    len: usize,
    out: *mut *mut c_char,
) -> GaStatus {
    guard(|| {
        non_null!(out, "out");
        let bytes = if len == 0 {
            &[][..]
        } else {
            non_null!(html, "html");
            std::slice::from_raw_parts(html, len)
        };
        write_string(out, audit::extract_text(bytes))
    })
}

/// Loads and verifies snapshot `id` under `root`.
///
/// # Safety
/// `root` and `id` must be valid strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_snapshot_load(
    root: *const c_char,
    id: *const c_char,
    out: *mut *mut GaSnapshot,
) -> GaStatus {
    guard(|| {
        non_null!(out, "out");
        let root = try_ffi!(read_str(root, "root"));
        let id = try_ffi!(read_str(id, "id"));
        match store::load_snapshot(Path::new(root), id) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GaSnapshot { inner }));
                GaStatus::Ok
            }
            Err(e) => store_status(&e),
        }
    })
}

/// # Safety
/// `s` must come from [`ga_snapshot_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ga_snapshot_free(s: *mut GaSnapshot) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live snapshot handle.
#[no_mangle]
pub unsafe extern "C" fn ga_snapshot_app_count(s: *const GaSnapshot) -> u64 {
    s.as_ref().map_or(0, |s| s.inner.apps.len() as u64)
}

/// # Safety
/// `s` must be a live snapshot handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_snapshot_audit_distribution(
    s: *const GaSnapshot,
    out: *mut GaAuditDistribution,
) -> GaStatus {
    guard(|| {
        non_null!(s, "snapshot");
        non_null!(out, "out");
        let d = analysis::audit_distribution(&(*s).inner.audits);
        *out = GaAuditDistribution {
            accessible: d.accessible as u64,
            broken: d.broken as u64,
            homepage: d.homepage as u64,
            timeout: d.timeout as u64,
            server_error: d.server_error as u64,
        };
        GaStatus::Ok
    })
}

/// # Safety
/// `s` must be a live snapshot handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_snapshot_domain_buckets(
    s: *const GaSnapshot,
    out: *mut GaDomainBuckets,
) -> GaStatus {
    guard(|| {
        non_null!(s, "snapshot");
        non_null!(out, "out");
        let d = analysis::domain_count_distribution(&(*s).inner);
        *out = GaDomainBuckets {
            zero: d.zero as u64,
            one: d.one as u64,
            two_plus: d.two_plus as u64,
        };
        GaStatus::Ok
    })
}

/// Writes the report tables into `dir`.
///
/// # Safety
/// `s` must be a live snapshot handle; `dir` must be a valid string.
#[no_mangle]
pub unsafe extern "C" fn ga_snapshot_export_report(
    s: *const GaSnapshot,
    format: GaReportFormat,
    dir: *const c_char,
) -> GaStatus {
    guard(|| {
        non_null!(s, "snapshot");
        let dir = try_ffi!(read_str(dir, "dir"));
        let format = match format {
            GaReportFormat::Csv => ReportFormat::Csv,
            GaReportFormat::Json => ReportFormat::Json,
        };
        match analysis::export_report(&(*s).inner, format, Path::new(dir)) {
            Ok(_) => GaStatus::Ok,
            Err(e @ AnalysisError::InconsistentSnapshot(_)) => {
                fail(GaStatus::Inconsistent, e.to_string())
            }
            Err(e @ AnalysisError::IoFailure(_)) => fail(GaStatus::Io, e.to_string()),
        }
    })
}

/// Change events from `a` to `b`.
///
/// # Safety
/// `a` and `b` must be live snapshot handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_diff_new(
    a: *const GaSnapshot,
    b: *const GaSnapshot,
    out: *mut *mut GaDiff,
) -> GaStatus {
    guard(|| {
        non_null!(a, "a");
        non_null!(b, "b");
        non_null!(out, "out");
        let diff: SnapshotDiff = store::diff_snapshots(&(*a).inner, &(*b).inner);
        let lines = diff
            .events
            .iter()
            .map(|e| {
                CString::new(serde_json::to_string(e).expect("event serializes"))
                    .expect("json has no NUL")
            })
            .collect();
        *out = Box::into_raw(Box::new(GaDiff { lines }));
        GaStatus::Ok
    })
}

/// # Safety
/// `d` must be a live diff handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_diff_len(d: *const GaDiff) -> u64 {
    d.as_ref().map_or(0, |d| d.lines.len() as u64)
}

/// JSON of event `index`. The pointer stays valid while the handle lives.
///
/// # Safety
/// `d` must be a live diff handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_diff_event_json(
    d: *const GaDiff,
    index: u64,
    out: *mut *const c_char,
) -> GaStatus {
    guard(|| {
        non_null!(d, "diff");
        non_null!(out, "out");
        let d = &*d;
        match usize::try_from(index).ok().and_then(|i| d.lines.get(i)) {
            Some(line) => {
                *out = line.as_ptr();
                GaStatus::Ok
            }
            None => fail(GaStatus::OutOfRange, format!("event {index} out of range")),
        }
    })
}

/// # Safety
/// `d` must come from [`ga_diff_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ga_diff_free(d: *mut GaDiff) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}
