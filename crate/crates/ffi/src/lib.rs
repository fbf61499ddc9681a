//! C ABI over the influx trackers.
//!
//! Every handle is opaque and owned by the caller once returned; free it
//! with the matching `*_free`. Fallible calls return an [`InfluxStatus`];
//! on failure `influx_last_error_message` describes the most recent error
//! on the calling thread. No call unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use influx::immax::ImTracker;
use influx::topk::TopKTracker;
use influx::{EpsDelta, Error, Graph, Sign, SizingMode, UpdateEvent};

/// Result codes shared by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluxStatus {
    Ok = 0,
    NullPointer = 1,
    /// A parameter is out of range (eps, delta, k, ...).
    InvalidArgument = 2,
    /// Graph or stream text is malformed.
    ParseError = 3,
    /// The input is well formed but inconsistent, e.g. an update that would
    /// drive a weight negative.
    DataError = 4,
    IoError = 5,
    InvariantViolation = 6,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluxSizingMode {
    Practical = 0,
    Theoretical = 1,
}

/// One weight update: `sign` is +1 to increase, -1 to decrease.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct InfluxUpdate {
    pub u: u32,
    pub v: u32,
    pub sign: i32,
    pub delta: f64,
    pub t: u64,
}

pub struct InfluxGraph {
    inner: Graph,
}

pub struct InfluxTopK {
    inner: TopKTracker,
}

pub struct InfluxIm {
    inner: ImTracker,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs stripped"));
}

fn status_of(e: &Error) -> InfluxStatus {
    match e {
        Error::Domain(_) => InfluxStatus::InvalidArgument,
        Error::Parse { .. } => InfluxStatus::ParseError,
        Error::Io(_) => InfluxStatus::IoError,
        Error::Invariant(_) => InfluxStatus::InvariantViolation,
        _ => InfluxStatus::DataError,
    }
}

// runs `f`, recording any error or panic for influx_last_error_message
fn guard<F: FnOnce() -> Result<(), InfluxStatus>>(f: F) -> InfluxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InfluxStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            InfluxStatus::Panic
        }
    }
}

fn fail(e: Error) -> InfluxStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> InfluxStatus {
    set_error(format!("{what} is NULL"));
    InfluxStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, InfluxStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        InfluxStatus::InvalidArgument
    })
}

fn event_of(e: &InfluxUpdate) -> Result<UpdateEvent, InfluxStatus> {
    let sign = match e.sign {
        1 => Sign::Plus,
        -1 => Sign::Minus,
        s => {
            set_error(format!("sign must be +1 or -1, got {s}"));
            return Err(InfluxStatus::InvalidArgument);
        }
    };
    Ok(UpdateEvent { u: e.u, v: e.v, sign, delta: e.delta, t: e.t })
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn influx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn influx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a graph from text (`n m MODEL` header, then `u v w` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn influx_graph_from_text(text: *const c_char, out: *mut *mut InfluxGraph) -> InfluxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let g = Graph::from_text(text).map_err(fail)?;
        write_out(out, InfluxGraph { inner: g });
        Ok(())
    })
}

/// Reads a graph file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn influx_graph_from_file(path: *const c_char, out: *mut *mut InfluxGraph) -> InfluxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let file = File::open(path).map_err(|e| fail(e.into()))?;
        let g = Graph::parse(BufReader::new(file)).map_err(fail)?;
        write_out(out, InfluxGraph { inner: g });
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a graph returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn influx_graph_free(g: *mut InfluxGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn influx_graph_num_vertices(g: *const InfluxGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.n())
}

/// Edge count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn influx_graph_num_edges(g: *const InfluxGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.m())
}

/// Creates a top-k tracker over a copy of `g`.
///
/// # Safety
/// `g` must be a live graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn influx_topk_new(
    g: *const InfluxGraph,
    k: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    out: *mut *mut InfluxTopK,
) -> InfluxStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = EpsDelta::new(eps, delta).map_err(fail)?;
        let t = TopKTracker::new(g.inner.clone(), k, cfg, seed).map_err(fail)?;
        write_out(out, InfluxTopK { inner: t });
        Ok(())
    })
}

/// Applies one update. A rejected update leaves the tracker unchanged.
///
/// # Safety
/// `t` must be a live tracker handle and `e` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn influx_topk_process(t: *mut InfluxTopK, e: *const InfluxUpdate) -> InfluxStatus {
    guard(|| {
        let t = t.as_mut().ok_or_else(|| null("tracker"))?;
        let e = event_of(e.as_ref().ok_or_else(|| null("update"))?)?;
        t.inner.process(&e).map_err(fail)?;
        Ok(())
    })
}

/// Writes the current answer, highest estimate first. `written` receives
/// the answer length; when it exceeds `capacity` nothing else is written
/// and `BUFFER_TOO_SMALL` is returned. `estimates` may be NULL.
///
/// # Safety
/// `vertices` (and `estimates` if non-NULL) must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn influx_topk_query(
    t: *const InfluxTopK,
    vertices: *mut u32,
    estimates: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> InfluxStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tracker"))?;
        if written.is_null() {
            return Err(null("written"));
        }
        let a = t.inner.query();
        *written = a.vertices.len();
        if a.vertices.len() > capacity {
            set_error(format!("answer has {} vertices, buffer holds {capacity}", a.vertices.len()));
            return Err(InfluxStatus::BufferTooSmall);
        }
        if !a.vertices.is_empty() {
            if vertices.is_null() {
                return Err(null("vertices"));
            }
            ptr::copy_nonoverlapping(a.vertices.as_ptr(), vertices, a.vertices.len());
            if !estimates.is_null() {
                ptr::copy_nonoverlapping(a.estimates.as_ptr(), estimates, a.estimates.len());
            }
        }
        Ok(())
    })
}

/// The query threshold on degrees; NaN for NULL.
///
/// # Safety
/// `t` must be NULL or a live tracker handle.
#[no_mangle]
pub unsafe extern "C" fn influx_topk_threshold(t: *const InfluxTopK) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.inner.threshold())
}

/// # Safety
/// `t` must be NULL or a tracker returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn influx_topk_free(t: *mut InfluxTopK) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Creates an influence-maximization tracker over a copy of `g`.
///
/// # Safety
/// `g` must be a live graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn influx_im_new(
    g: *const InfluxGraph,
    k_max: usize,
    eps: f64,
    delta: f64,
    mode: InfluxSizingMode,
    seed: u64,
    out: *mut *mut InfluxIm,
) -> InfluxStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = EpsDelta::new(eps, delta).map_err(fail)?;
        let mode = match mode {
            InfluxSizingMode::Practical => SizingMode::Practical,
            InfluxSizingMode::Theoretical => SizingMode::Theoretical,
        };
        let t = ImTracker::new(g.inner.clone(), k_max, cfg, mode, seed).map_err(fail)?;
        write_out(out, InfluxIm { inner: t });
        Ok(())
    })
}

/// # Safety
/// `t` must be a live tracker handle and `e` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn influx_im_process(t: *mut InfluxIm, e: *const InfluxUpdate) -> InfluxStatus {
    guard(|| {
        let t = t.as_mut().ok_or_else(|| null("tracker"))?;
        let e = event_of(e.as_ref().ok_or_else(|| null("update"))?)?;
        t.inner.process(&e).map_err(fail)?;
        Ok(())
    })
}

/// Selects up to `k` seeds into `seeds` (capacity `k`), writing the count
/// to `written` and the influence estimate to `estimate` (may be NULL).
///
/// # Safety
/// `seeds` must hold `k` elements.
#[no_mangle]
pub unsafe extern "C" fn influx_im_query(
    t: *const InfluxIm,
    k: usize,
    seeds: *mut u32,
    written: *mut usize,
    estimate: *mut f64,
) -> InfluxStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tracker"))?;
        if seeds.is_null() {
            return Err(null("seeds"));
        }
        if written.is_null() {
            return Err(null("written"));
        }
        let a = t.inner.query(k).map_err(fail)?;
        ptr::copy_nonoverlapping(a.seeds.as_ptr(), seeds, a.seeds.len());
        *written = a.seeds.len();
        if !estimate.is_null() {
            *estimate = a.estimate;
        }
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a tracker returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn influx_im_free(t: *mut InfluxIm) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}
