//! C ABI for `lindyn`.
//!
//! Objects cross the boundary as opaque handles created by `lindyn_*_new`-style
//! constructors and released with the matching `lindyn_*_free`. Every fallible
//! call returns a [`LindynStatus`]; on failure the message is available from
//! [`lindyn_last_error`] on the same thread until the next failing call.
//!
//! Complex arrays are interleaved `re, im` doubles; matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lindyn::criteria::{hypercyclicity_report, supercyclicity_report, CriterionData, CriterionReport};
use lindyn::ideals::{audit_ideal_axioms, IdealDesc};
use lindyn::num_complex::Complex64;
use lindyn::operators::{apply, operator_norm, scaled_backward_shift, MatOp};
use lindyn::probes::scaled_orbit_distance;
use lindyn::spaces::{SpaceDesc, SpaceVec};
use lindyn::tensor::{projective_norm_report, TensorElem};
use lindyn::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    WindowViolation = 4,
    NumericalFailure = 5,
    Panic = 6,
}

/// Operator on a truncated sequence space.
pub struct LindynOp(MatOp);

/// Vector in a truncated sequence space.
pub struct LindynVec(SpaceVec);

/// Criterion witness data.
pub struct LindynCriterion(CriterionData);

/// Result of a certifier run.
pub struct LindynReport(CriterionReport);

/// One index of a certifier run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LindynRecord {
    pub k: usize,
    pub n_k: usize,
    pub max_product: f64,
    pub max_reconstruction_error: f64,
    pub max_orbit_norm: f64,
    pub max_right_norm: f64,
    pub window_ok: bool,
}

/// Best approximation from the scaled orbit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LindynOrbitHit {
    pub n: usize,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub distance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LindynStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::SpaceMismatch(_) => LindynStatus::DimensionMismatch,
        Error::WindowViolation { .. } => LindynStatus::WindowViolation,
        Error::LinearDependence { .. } | Error::BudgetUnmet { .. } => LindynStatus::NumericalFailure,
        _ => LindynStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status and the last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LindynStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LindynStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LindynStatus::Panic
        }
    }
}

struct Failure(LindynStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LindynStatus::NullPointer, format!("{what} is null"))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn complex_slice(data: *const f64, len: usize, what: &str) -> Result<Vec<Complex64>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if data.is_null() {
        return Err(null(what));
    }
    let raw = std::slice::from_raw_parts(data, 2 * len);
    Ok(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lindyn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lindyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lindyn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// --- operators and vectors -------------------------------------------------

/// `c·B` on `ℓᵖ_dim`, `c = weight_re + i·weight_im`. Use `p = INFINITY` for `ℓ^∞`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_op_shift(
    p: f64,
    dim: usize,
    weight_re: f64,
    weight_im: f64,
    out: *mut *mut LindynOp,
) -> LindynStatus {
    guard(|| {
        let op = scaled_backward_shift(SpaceDesc::new(p, dim)?, Complex64::new(weight_re, weight_im))?;
        write_out(out, boxed(LindynOp(op)))
    })
}

/// Operator from `dim × dim` interleaved row-major entries.
///
/// # Safety
/// `entries` must hold `2·dim·dim` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_op_from_matrix(
    p: f64,
    dim: usize,
    entries: *const f64,
    out: *mut *mut LindynOp,
) -> LindynStatus {
    guard(|| {
        let space = SpaceDesc::new(p, dim)?;
        let flat = complex_slice(entries, dim * dim, "entries")?;
        let m = lindyn::nalgebra::DMatrix::from_row_slice(dim, dim, &flat);
        write_out(out, boxed(LindynOp(MatOp::new(space, m)?)))
    })
}

/// Operator norm (exact for p = 1, 2, ∞; a lower estimate otherwise).
///
/// # Safety
/// `op` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_op_norm(op: *const LindynOp, out: *mut f64) -> LindynStatus {
    guard(|| write_out(out, operator_norm(&reference(op, "op")?.0)))
}

/// # Safety
/// `op` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lindyn_op_free(op: *mut LindynOp) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Vector from `dim` interleaved coordinates.
///
/// # Safety
/// `coords` must hold `2·dim` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_vec_new(
    p: f64,
    dim: usize,
    coords: *const f64,
    out: *mut *mut LindynVec,
) -> LindynStatus {
    guard(|| {
        let v = SpaceVec::new(SpaceDesc::new(p, dim)?, complex_slice(coords, dim, "coords")?)?;
        write_out(out, boxed(LindynVec(v)))
    })
}

/// # Safety
/// `v` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_vec_norm(v: *const LindynVec, out: *mut f64) -> LindynStatus {
    guard(|| write_out(out, reference(v, "vector")?.0.norm()))
}

/// Copies the interleaved coordinates into `buf`, which holds `2·len` doubles.
///
/// # Safety
/// `v` must be a live handle; `buf` must be valid for `2·len` writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_vec_coords(v: *const LindynVec, buf: *mut f64, len: usize) -> LindynStatus {
    guard(|| {
        let v = &reference(v, "vector")?.0;
        if len != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: v.dim(),
                found: len,
            }
            .into());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * len);
        for (i, z) in v.coords().iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `v` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lindyn_vec_free(v: *mut LindynVec) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// `T x` as a new vector.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_op_apply(
    op: *const LindynOp,
    x: *const LindynVec,
    out: *mut *mut LindynVec,
) -> LindynStatus {
    guard(|| {
        let y = apply(&reference(op, "op")?.0, &reference(x, "vector")?.0)?;
        write_out(out, boxed(LindynVec(y)))
    })
}

// --- criteria ---------------------------------------------------------------

/// Shift instance: `T = c·B`, `S_k = (c⁻¹F)^k`, `n_k = k` for `k ≤ kmax`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_criterion_shift(
    p: f64,
    dim: usize,
    weight_re: f64,
    weight_im: f64,
    kmax: usize,
    out: *mut *mut LindynCriterion,
) -> LindynStatus {
    guard(|| {
        let data = CriterionData::shift_instance(SpaceDesc::new(p, dim)?, Complex64::new(weight_re, weight_im), kmax)?;
        write_out(out, boxed(LindynCriterion(data)))
    })
}

/// # Safety
/// `c` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lindyn_criterion_free(c: *mut LindynCriterion) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Supercyclicity (`hyper = false`) or hypercyclicity (`hyper = true`)
/// certifier. Window violations are reported in the verdict, not the status.
///
/// # Safety
/// `data` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_certify(
    data: *const LindynCriterion,
    hyper: bool,
    tol: f64,
    out: *mut *mut LindynReport,
) -> LindynStatus {
    guard(|| {
        let data = &reference(data, "criterion")?.0;
        let report = if hyper {
            hypercyclicity_report(data, tol)?
        } else {
            supercyclicity_report(data, tol)?
        };
        write_out(out, boxed(LindynReport(report)))
    })
}

/// Verdict as the CLI exit code: 0 pass, 2 fail, 3 window violation.
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_report_verdict(r: *const LindynReport, out: *mut i32) -> LindynStatus {
    guard(|| write_out(out, reference(r, "report")?.0.verdict.exit_code()))
}

/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_report_len(r: *const LindynReport, out: *mut usize) -> LindynStatus {
    guard(|| write_out(out, reference(r, "report")?.0.records.len()))
}

/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_report_record(
    r: *const LindynReport,
    index: usize,
    out: *mut LindynRecord,
) -> LindynStatus {
    guard(|| {
        let records = &reference(r, "report")?.0.records;
        let rec = records.get(index).ok_or_else(|| {
            Failure(
                LindynStatus::InvalidArgument,
                format!("record {index} out of range ({} records)", records.len()),
            )
        })?;
        write_out(
            out,
            LindynRecord {
                k: rec.k,
                n_k: rec.n_k,
                max_product: rec.max_product,
                max_reconstruction_error: rec.max_reconstruction_error,
                max_orbit_norm: rec.max_orbit_norm,
                max_right_norm: rec.max_right_norm,
                window_ok: rec.window_ok,
            },
        )
    })
}

/// Full report as JSON; release with [`lindyn_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_report_json(r: *const LindynReport, out: *mut *mut c_char) -> LindynStatus {
    guard(|| {
        let json = reference(r, "report")?.0.to_json()?;
        write_out(out, CString::new(json).expect("JSON has no NUL").into_raw())
    })
}

/// # Safety
/// `r` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lindyn_report_free(r: *mut LindynReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

// --- ideals, tensors, probes ------------------------------------------------

/// Audits the ideal axioms for Schatten-`schatten_p` (`INFINITY` for the
/// operator-norm ideal) on `ℓ²_dim`; `holds` receives the verdict at `tol`.
///
/// # Safety
/// `holds` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_audit_ideal(
    schatten_p: f64,
    dim: usize,
    samples: usize,
    seed: u64,
    tol: f64,
    holds: *mut bool,
) -> LindynStatus {
    guard(|| {
        let ideal = IdealDesc::schatten(schatten_p, SpaceDesc::hilbert(dim)?)?;
        let report = audit_ideal_axioms(&ideal, samples, seed)?;
        write_out(holds, report.holds(tol))
    })
}

/// Bounds on the projective norm of the tensor with `d1 × d2` interleaved
/// row-major coefficients in `ℓ^{p1} ⊗ ℓ^{p2}`. `lower` is the nuclear norm on
/// `ℓ² ⊗ ℓ²` and a dual bound otherwise.
///
/// # Safety
/// `coeff` must hold `2·d1·d2` doubles; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_projective_norm(
    p1: f64,
    d1: usize,
    p2: f64,
    d2: usize,
    coeff: *const f64,
    iters: usize,
    seed: u64,
    upper: *mut f64,
    lower: *mut f64,
) -> LindynStatus {
    guard(|| {
        let (left, right) = (SpaceDesc::new(p1, d1)?, SpaceDesc::new(p2, d2)?);
        let flat = complex_slice(coeff, d1 * d2, "coeff")?;
        let z = TensorElem::from_coeff(left, right, lindyn::nalgebra::DMatrix::from_row_slice(d1, d2, &flat))?;
        let report = projective_norm_report(&z, iters, seed)?;
        write_out(upper, report.upper)?;
        write_out(lower, report.oracle_or_dual_lower)
    })
}

/// Closest point to `target` on the lines `ℂ·Tⁿx`, `n ≤ horizon`.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lindyn_scaled_orbit_distance(
    op: *const LindynOp,
    x: *const LindynVec,
    target: *const LindynVec,
    horizon: usize,
    out: *mut LindynOrbitHit,
) -> LindynStatus {
    guard(|| {
        let hit = scaled_orbit_distance(
            &reference(op, "op")?.0,
            &reference(x, "x")?.0,
            &reference(target, "target")?.0,
            horizon,
        )?;
        write_out(
            out,
            LindynOrbitHit {
                n: hit.n,
                alpha_re: hit.alpha.re,
                alpha_im: hit.alpha.im,
                distance: hit.distance,
            },
        )
    })
}
