//! C interface to `lienf`.
//!
//! Objects cross the boundary as opaque handles created by `lienf_*_new` or
//! `lienf_run_*` and released with the matching `_free`. Every fallible call
//! returns a [`LienfStatus`]; the message of the last failure on the calling
//! thread is available from [`lienf_last_error`]. Strings are copied into
//! caller buffers: those functions return the size needed including the
//! terminating NUL and write only when the buffer is large enough.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lienf::groupoid::{check_axioms, Group, GroupAction, LieGroupoid};
use lienf::linalg::{Matrix, Vector};
use lienf::manifold::Manifold;
use lienf::map::FnMap;
use lienf::scenario::{self, Overrides, RunReport, Scenario};
use lienf::{Error, Report};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LienfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    UnknownName = 4,
    ConfigParse = 5,
    NotComposable = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

/// A Lie groupoid.
pub struct LienfGroupoid(LieGroupoid);

/// A verification report.
pub struct LienfReport(Report);

/// The result of a scenario run.
pub struct LienfRun(RunReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> LienfStatus {
    match e {
        Error::ConfigParseError { .. } => LienfStatus::ConfigParse,
        Error::UnknownBuilder(_) => LienfStatus::UnknownName,
        Error::NotComposable(_) => LienfStatus::NotComposable,
        Error::Io(_) => LienfStatus::Io,
        Error::InvalidParams(_) | Error::DimensionMismatch { .. } => LienfStatus::InvalidArgument,
        _ => LienfStatus::Numerical,
    }
}

fn fail(status: LienfStatus, msg: impl Into<String>) -> LienfStatus {
    set_error(msg);
    status
}

fn from_lib(e: Error) -> LienfStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into [`LienfStatus::Panic`].
fn guard(f: impl FnOnce() -> LienfStatus) -> LienfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(LienfStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, LienfStatus> {
    if p.is_null() {
        return Err(fail(LienfStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LienfStatus::InvalidUtf8, "string is not UTF-8"))
}

/// Copies `s` with a terminating NUL when it fits; returns the size needed.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize) -> usize {
    let need = s.len() + 1;
    if !buf.is_null() && len >= need {
        std::ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
        *buf.add(s.len()) = 0;
    }
    need
}

unsafe fn read_vec(p: *const f64, n: usize) -> Result<Vector, LienfStatus> {
    if p.is_null() {
        return Err(fail(LienfStatus::NullPointer, "null coordinate array"));
    }
    Ok(Vector::from_column_slice(std::slice::from_raw_parts(p, n)))
}

unsafe fn write_vec(v: &Vector, out: *mut f64) -> LienfStatus {
    if out.is_null() {
        return fail(LienfStatus::NullPointer, "null output array");
    }
    std::ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    LienfStatus::Ok
}

fn builtin_groupoid(name: &str) -> Result<LieGroupoid, Error> {
    let linear = |group: Group, space: Manifold| GroupAction::linear(group, space).and_then(LieGroupoid::action);
    match name {
        "unit-plane" => Ok(LieGroupoid::unit(Manifold::euclidean(2))),
        "pair-plane" => Ok(LieGroupoid::pair(Manifold::euclidean(2))),
        "pair-sphere" => Ok(LieGroupoid::pair(Manifold::sphere(2))),
        "pr-plane" => {
            let pr = FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref();
            LieGroupoid::submersion(Manifold::euclidean(2), Manifold::euclidean(1), pr, false)
        }
        "cylinder" => scenario::cylinder().map(|(g, _)| g),
        "so2-plane" => linear(Group::special_orthogonal(2), Manifold::euclidean(2)),
        "so3-sphere" => linear(Group::special_orthogonal(3), Manifold::sphere(2)),
        "z2-line" => linear(Group::z2(), Manifold::euclidean(1)),
        other => Err(Error::UnknownBuilder(other.to_string())),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lienf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lienf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| write_str(e.borrow().to_str().unwrap_or(""), buf, len))
}

/// Builds a named groupoid: `unit-plane`, `pair-plane`, `pair-sphere`,
/// `pr-plane`, `cylinder`, `so2-plane`, `so3-sphere` or `z2-line`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lienf_groupoid_new(name: *const c_char, out: *mut *mut LienfGroupoid) -> LienfStatus {
    guard(|| {
        if out.is_null() {
            return fail(LienfStatus::NullPointer, "null output handle");
        }
        let name = match read_str(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match builtin_groupoid(name) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(LienfGroupoid(g)));
                LienfStatus::Ok
            }
            Err(e) => from_lib(e),
        }
    })
}

/// # Safety
/// `g` must be null or a handle from [`lienf_groupoid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lienf_groupoid_free(g: *mut LienfGroupoid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Ambient dimensions of objects and arrows; arrays passed to the structure
/// maps have these lengths.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lienf_groupoid_dims(g: *const LienfGroupoid, objects: *mut usize, arrows: *mut usize) -> LienfStatus {
    guard(|| {
        if g.is_null() || objects.is_null() || arrows.is_null() {
            return fail(LienfStatus::NullPointer, "null argument");
        }
        let g = &(*g).0;
        *objects = g.objects().ambient_dim();
        *arrows = g.arrows().ambient_dim();
        LienfStatus::Ok
    })
}

unsafe fn structure_map(g: *const LienfGroupoid, arrow: *const f64, out: *mut f64, target: bool) -> LienfStatus {
    guard(|| {
        if g.is_null() {
            return fail(LienfStatus::NullPointer, "null groupoid");
        }
        let g = &(*g).0;
        let a = match read_vec(arrow, g.arrows().ambient_dim()) {
            Ok(a) => a,
            Err(s) => return s,
        };
        write_vec(&if target { g.t(&a) } else { g.s(&a) }, out)
    })
}

/// Source of an arrow.
///
/// # Safety
/// `arrow` must hold the arrow dimension and `out` the object dimension.
#[no_mangle]
pub unsafe extern "C" fn lienf_groupoid_source(g: *const LienfGroupoid, arrow: *const f64, out: *mut f64) -> LienfStatus {
    structure_map(g, arrow, out, false)
}

/// Target of an arrow.
///
/// # Safety
/// As for [`lienf_groupoid_source`].
#[no_mangle]
pub unsafe extern "C" fn lienf_groupoid_target(g: *const LienfGroupoid, arrow: *const f64, out: *mut f64) -> LienfStatus {
    structure_map(g, arrow, out, true)
}

/// `a·b`, defined when the source of `a` is the target of `b`.
///
/// # Safety
/// `a`, `b` and `out` must each hold the arrow dimension.
#[no_mangle]
pub unsafe extern "C" fn lienf_groupoid_multiply(g: *const LienfGroupoid, a: *const f64, b: *const f64, out: *mut f64) -> LienfStatus {
    guard(|| {
        if g.is_null() {
            return fail(LienfStatus::NullPointer, "null groupoid");
        }
        let g = &(*g).0;
        let n = g.arrows().ambient_dim();
        let (a, b) = match (read_vec(a, n), read_vec(b, n)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match g.multiply(&a, &b) {
            Ok(ab) => write_vec(&ab, out),
            Err(e) => from_lib(e),
        }
    })
}

/// Samples `samples` composable triples and checks the groupoid axioms.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lienf_check_axioms(g: *const LienfGroupoid, samples: usize, tol: f64, seed: u64, out: *mut *mut LienfReport) -> LienfStatus {
    guard(|| {
        if g.is_null() || out.is_null() {
            return fail(LienfStatus::NullPointer, "null argument");
        }
        if !(tol > 0.0) {
            return fail(LienfStatus::InvalidArgument, "tolerance must be positive");
        }
        match check_axioms(&(*g).0, samples, tol, seed) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(LienfReport(r)));
                LienfStatus::Ok
            }
            Err(e) => from_lib(e),
        }
    })
}

/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lienf_report_pass(r: *const LienfReport) -> bool {
    !r.is_null() && (*r).0.pass
}

/// Largest sampled defect; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lienf_report_max_defect(r: *const LienfReport) -> f64 {
    if r.is_null() {
        f64::NAN
    } else {
        (*r).0.max_defect
    }
}

/// The report as JSON.
///
/// # Safety
/// `r` must be a live report handle; `buf` null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lienf_report_json(r: *const LienfReport, buf: *mut c_char, len: usize) -> usize {
    if r.is_null() {
        return 0;
    }
    write_str(&(*r).0.to_json(), buf, len)
}

/// # Safety
/// `r` must be null or a report handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lienf_report_free(r: *mut LienfReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Runs a scenario file, or a built-in scenario when `config` names one.
/// Outputs are written to `out_dir` unless it is null. A negative `tol`, zero
/// `samples` or negative `seed` keeps the scenario's value.
///
/// # Safety
/// `config` must be a NUL-terminated string, `out_dir` null or one, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lienf_run_scenario(
    config: *const c_char,
    out_dir: *const c_char,
    tol: f64,
    samples: usize,
    seed: i64,
    out: *mut *mut LienfRun,
) -> LienfStatus {
    guard(|| {
        if out.is_null() {
            return fail(LienfStatus::NullPointer, "null output handle");
        }
        let config = match read_str(config) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let dir = if out_dir.is_null() {
            None
        } else {
            match read_str(out_dir) {
                Ok(s) => Some(Path::new(s)),
                Err(s) => return s,
            }
        };
        let path = Path::new(config);
        let sc = if path.exists() { Scenario::load(path) } else { Scenario::builtin(config) };
        let ov = Overrides {
            tol: (tol > 0.0).then_some(tol),
            samples: (samples > 0).then_some(samples),
            seed: (seed >= 0).then_some(seed as u64),
        };
        let result = sc.and_then(|sc| scenario::run(&sc, &ov)).and_then(|r| {
            if let Some(d) = dir {
                scenario::write_outputs(&r, d)?;
            }
            Ok(r)
        });
        match result {
            Ok(r) => {
                *out = Box::into_raw(Box::new(LienfRun(r)));
                LienfStatus::Ok
            }
            Err(e) => from_lib(e),
        }
    })
}

/// # Safety
/// `r` must be a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lienf_run_pass(r: *const LienfRun) -> bool {
    !r.is_null() && (*r).0.pass
}

/// Hex SHA-256 of the run, stable across runs with the same seed.
///
/// # Safety
/// `r` must be a live run handle; `buf` null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lienf_run_hash(r: *const LienfRun, buf: *mut c_char, len: usize) -> usize {
    if r.is_null() {
        return 0;
    }
    write_str(&(*r).0.hash, buf, len)
}

/// The run report as JSON, as written to `report.json`.
///
/// # Safety
/// `r` must be a live run handle; `buf` null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lienf_run_json(r: *const LienfRun, buf: *mut c_char, len: usize) -> usize {
    if r.is_null() {
        return 0;
    }
    write_str(&(*r).0.to_json(), buf, len)
}

/// # Safety
/// `r` must be null or a run handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lienf_run_free(r: *mut LienfRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
