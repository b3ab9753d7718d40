//! C ABI over the barylab library.
//!
//! Objects are opaque handles created by `*_new`/`*_from_json` functions
//! and released with the matching `*_free`. Every fallible function returns
//! a status code (`BARYLAB_OK` on success) and writes results through out
//! pointers. After a failure, `barylab_last_error_message` describes it.
//!
//! Points cross the boundary as row-major `double` arrays: `n` entries for
//! a point of `R^n`, `n * n` entries for an `n x n` SPD matrix.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use barylab::barycenters::{karcher_residual, BarycentricMap};
use barylab::cli::{self, ExperimentConfig};
use barylab::geometry::{Geometry, Point, Space};
use barylab::ldp::relative_entropy;
use barylab::measures::{wasserstein, DiscreteMeasure};
use barylab::Error;

pub const BARYLAB_OK: c_int = 0;
pub const BARYLAB_ERR_INPUT: c_int = 1;
pub const BARYLAB_ERR_DOMAIN: c_int = 2;
pub const BARYLAB_ERR_UNSUPPORTED: c_int = 3;
pub const BARYLAB_ERR_CONVERGENCE: c_int = 4;
pub const BARYLAB_ERR_CAPACITY: c_int = 5;
pub const BARYLAB_ERR_NULL_POINTER: c_int = 6;
pub const BARYLAB_ERR_PANIC: c_int = 7;

/// A metric space.
pub struct BarylabSpace(Space);

/// A finitely supported probability measure.
pub struct BarylabMeasure(DiscreteMeasure);

/// A barycentric map.
pub struct BarylabMap(BarycentricMap);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn code(e: &Error) -> c_int {
    match e {
        Error::Input(_) => BARYLAB_ERR_INPUT,
        Error::Domain(_) => BARYLAB_ERR_DOMAIN,
        Error::Unsupported(_) => BARYLAB_ERR_UNSUPPORTED,
        Error::Convergence { .. } => BARYLAB_ERR_CONVERGENCE,
        Error::Capacity(_) => BARYLAB_ERR_CAPACITY,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BARYLAB_OK
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            code(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            BARYLAB_ERR_NULL_POINTER
        }
        Err(_) => {
            set_error("internal panic");
            BARYLAB_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(input_error(format!("{what} is not UTF-8"))))
}

fn input_error(msg: String) -> Error {
    Error::Input(msg)
}

fn json_error(e: serde_json::Error) -> Failure {
    Failure::Lib(input_error(format!("invalid JSON: {e}")))
}

/// Number of doubles per point of `space`.
fn point_len(space: &Space) -> usize {
    match space.geometry() {
        Geometry::Euclidean(n) => n,
        Geometry::SpdTrace(n) | Geometry::SpdThompson(n) => n * n,
    }
}

fn point_from(space: &Space, data: &[f64]) -> Result<Point, Error> {
    let len = point_len(space);
    if data.len() != len {
        return Err(input_error(format!("expected {len} coordinates, got {}", data.len())));
    }
    let p = match space.geometry() {
        Geometry::Euclidean(_) => Point::vector(data.to_vec())?,
        Geometry::SpdTrace(n) | Geometry::SpdThompson(n) => {
            Point::spd_from_rows(&data.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>())?
        }
    };
    space.contains(&p)?;
    Ok(p)
}

fn write_point(p: &Point, dst: &mut [f64]) -> Result<(), Error> {
    let v = p.to_row_major();
    if v.len() != dst.len() {
        return Err(input_error(format!("output buffer holds {} values, point has {}", dst.len(), v.len())));
    }
    dst.copy_from_slice(&v);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn barylab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn barylab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a space descriptor such as `{"geometry":"spd_trace","dim":3}`.
#[no_mangle]
pub unsafe extern "C" fn barylab_space_from_json(json: *const c_char, space_out: *mut *mut BarylabSpace) -> c_int {
    guard(|| {
        let text = string(json, "json")?;
        let slot = out(space_out, "space_out")?;
        let space: Space = serde_json::from_str(text).map_err(json_error)?;
        *slot = Box::into_raw(Box::new(BarylabSpace(space)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn barylab_space_free(space: *mut BarylabSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of doubles in one point of `space`, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn barylab_space_point_len(space: *const BarylabSpace) -> usize {
    space.as_ref().map_or(0, |s| point_len(&s.0))
}

#[no_mangle]
pub unsafe extern "C" fn barylab_dist(
    space: *const BarylabSpace,
    x: *const f64,
    y: *const f64,
    len: usize,
    dist_out: *mut f64,
) -> c_int {
    guard(|| {
        let s = &deref(space, "space")?.0;
        let px = point_from(s, slice(x, len, "x")?)?;
        let py = point_from(s, slice(y, len, "y")?)?;
        *out(dist_out, "dist_out")? = s.dist(&px, &py)?;
        Ok(())
    })
}

/// Writes the point at parameter `t` of the geodesic from `x` to `y`.
#[no_mangle]
pub unsafe extern "C" fn barylab_geodesic(
    space: *const BarylabSpace,
    x: *const f64,
    y: *const f64,
    len: usize,
    t: f64,
    point_out: *mut f64,
) -> c_int {
    guard(|| {
        let s = &deref(space, "space")?.0;
        let px = point_from(s, slice(x, len, "x")?)?;
        let py = point_from(s, slice(y, len, "y")?)?;
        if point_out.is_null() {
            return Err(Failure::Null("point_out"));
        }
        let z = s.geodesic(&px, &py, t)?;
        write_point(&z, std::slice::from_raw_parts_mut(point_out, len))?;
        Ok(())
    })
}

/// Builds a measure from `n_atoms` points stored back to back in `points`
/// and their weights (which must sum to 1).
#[no_mangle]
pub unsafe extern "C" fn barylab_measure_new(
    space: *const BarylabSpace,
    points: *const f64,
    weights: *const f64,
    n_atoms: usize,
    measure_out: *mut *mut BarylabMeasure,
) -> c_int {
    guard(|| {
        let s = deref(space, "space")?.0;
        let len = point_len(&s);
        let data = slice(points, n_atoms * len, "points")?;
        let w = slice(weights, n_atoms, "weights")?;
        let slot = out(measure_out, "measure_out")?;
        let atoms = data
            .chunks(len.max(1))
            .zip(w)
            .map(|(c, &wt)| Ok((point_from(&s, c)?, wt)))
            .collect::<Result<Vec<_>, Error>>()?;
        let mu = DiscreteMeasure::new(s, atoms)?;
        *slot = Box::into_raw(Box::new(BarylabMeasure(mu)));
        Ok(())
    })
}

/// Parses `{"space": ..., "atoms": [{"point": ..., "weight": w}, ...]}`.
#[no_mangle]
pub unsafe extern "C" fn barylab_measure_from_json(
    json: *const c_char,
    measure_out: *mut *mut BarylabMeasure,
) -> c_int {
    guard(|| {
        let text = string(json, "json")?;
        let slot = out(measure_out, "measure_out")?;
        let mu: DiscreteMeasure = serde_json::from_str(text).map_err(json_error)?;
        *slot = Box::into_raw(Box::new(BarylabMeasure(mu)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn barylab_measure_free(measure: *mut BarylabMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Number of atoms, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn barylab_measure_len(measure: *const BarylabMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.len())
}

/// Exact `W_p(mu, nu)`.
#[no_mangle]
pub unsafe extern "C" fn barylab_wasserstein(
    mu: *const BarylabMeasure,
    nu: *const BarylabMeasure,
    p: f64,
    dist_out: *mut f64,
) -> c_int {
    guard(|| {
        let a = &deref(mu, "mu")?.0;
        let b = &deref(nu, "nu")?.0;
        let slot = out(dist_out, "dist_out")?;
        *slot = wasserstein(p, a, b)?.0;
        Ok(())
    })
}

/// Parses a map descriptor such as `{"type":"karcher"}`.
#[no_mangle]
pub unsafe extern "C" fn barylab_map_from_json(json: *const c_char, map_out: *mut *mut BarylabMap) -> c_int {
    guard(|| {
        let text = string(json, "json")?;
        let slot = out(map_out, "map_out")?;
        let map: BarycentricMap = serde_json::from_str(text).map_err(json_error)?;
        map.validate()?;
        *slot = Box::into_raw(Box::new(BarylabMap(map)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn barylab_map_free(map: *mut BarylabMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Evaluates `map` at `mu`, writing `len` doubles to `point_out`.
#[no_mangle]
pub unsafe extern "C" fn barylab_map_evaluate(
    map: *const BarylabMap,
    mu: *const BarylabMeasure,
    point_out: *mut f64,
    len: usize,
) -> c_int {
    guard(|| {
        let m = &deref(map, "map")?.0;
        let a = &deref(mu, "mu")?.0;
        if point_out.is_null() {
            return Err(Failure::Null("point_out"));
        }
        let x = m.evaluate(a)?;
        write_point(&x, std::slice::from_raw_parts_mut(point_out, len))?;
        Ok(())
    })
}

/// Frobenius norm of `Σ w_j log(X^{-1/2} A_j X^{-1/2})`.
#[no_mangle]
pub unsafe extern "C" fn barylab_karcher_residual(
    mu: *const BarylabMeasure,
    x: *const f64,
    len: usize,
    residual_out: *mut f64,
) -> c_int {
    guard(|| {
        let a = &deref(mu, "mu")?.0;
        let px = point_from(a.space(), slice(x, len, "x")?)?;
        *out(residual_out, "residual_out")? = karcher_residual(&px, a)?;
        Ok(())
    })
}

/// `Σ p_j ln(p_j / w_j)`; may be `+inf`.
#[no_mangle]
pub unsafe extern "C" fn barylab_relative_entropy(
    p: *const f64,
    w: *const f64,
    len: usize,
    entropy_out: *mut f64,
) -> c_int {
    guard(|| {
        let pv = slice(p, len, "p")?;
        let wv = slice(w, len, "w")?;
        *out(entropy_out, "entropy_out")? = relative_entropy(pv, wv)?;
        Ok(())
    })
}

/// Runs an experiment described by a JSON config (with a `"kind"` field)
/// and returns the JSON report through `report_out`. Free it with
/// `barylab_string_free`. A report whose checks fail is still returned with
/// `BARYLAB_OK`; inspect its `"pass"` field.
#[no_mangle]
pub unsafe extern "C" fn barylab_run_experiment(config_json: *const c_char, report_out: *mut *mut c_char) -> c_int {
    guard(|| {
        let text = string(config_json, "config_json")?;
        let slot = out(report_out, "report_out")?;
        let config = ExperimentConfig::parse(text, None)?;
        let outcome = cli::run_config(&config)?;
        *slot = into_c_string(outcome.json());
        Ok(())
    })
}

/// Re-checks a report; writes 1 to `valid_out` if every invariant holds.
/// On failure the reasons are available from `barylab_last_error_message`.
#[no_mangle]
pub unsafe extern "C" fn barylab_verify_report(report_json: *const c_char, valid_out: *mut c_int) -> c_int {
    let mut reasons = String::new();
    let status = guard(|| {
        let text = string(report_json, "report_json")?;
        let slot = out(valid_out, "valid_out")?;
        let v = cli::verify_report(text);
        *slot = c_int::from(v.ok);
        reasons = v.failures.join("; ");
        Ok(())
    });
    if status == BARYLAB_OK && !reasons.is_empty() {
        set_error(&reasons);
    }
    status
}

/// Releases a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn barylab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
