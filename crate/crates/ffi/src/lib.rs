//! C ABI over the `stonespec` library.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`StonespecStatus`]; on failure a message is available from
//! [`stonespec_last_error`] on the calling thread until the next call.
//! Strings returned through `char **out` are owned by the caller and must be
//! released with [`stonespec_string_free`].
//!
//! A tolerance argument that is not a positive finite number selects the
//! default of `1e-9`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stonespec::algebra::{check_shape_cap, shape_cap, AlgebraShape, BlockOperator};
use stonespec::io::{lattice_from_json, parse_block_projection, parse_lattice_json, parse_operator, parse_quasipoints, witness_json};
use stonespec::lattice::{enumerate_maximal_dual_ideals, FiniteLattice};
use stonespec::masa::random_witness;
use stonespec::matrix::Tolerances;
use stonespec::observable::observable_value;
use stonespec::spectrum::{qp_contains, Quasipoint};
use stonespec::verify::{run_suite, RunConfig};
use stonespec::Error;

/// Status codes; the first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StonespecStatus {
    Ok = 0,
    PropertyFailure = 1,
    InvalidInput = 2,
    ResourceCap = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A Hermitian or general operator in `⊕_{k<m} M_n(ℂ)`.
pub struct StonespecOperator(BlockOperator);

/// A quasipoint: a block index and a unit ray in `ℂⁿ`.
pub struct StonespecQuasipoint(Quasipoint);

/// A finite lattice with its derived meet and join tables.
pub struct StonespecLattice(FiniteLattice);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(StonespecStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::TooLarge { .. } | Error::ShapeCapExceeded { .. } | Error::ClosureCapExceeded(_) => {
                StonespecStatus::ResourceCap
            }
            _ => StonespecStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(StonespecStatus::NullPointer, format!("{name} is null"))
}

/// Runs `body` with panics contained and the thread-local error updated.
fn guard(body: impl FnOnce() -> Result<StonespecStatus, Fail>) -> StonespecStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StonespecStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(StonespecStatus::InvalidInput, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(StonespecStatus::InvalidInput, "output contains NUL".into()))?;
    write_out(out, c.into_raw(), "out")
}

fn tolerances(tol: f64) -> Tolerances {
    if tol.is_finite() && tol > 0.0 {
        Tolerances::default().with_tol(tol)
    } else {
        Tolerances::default()
    }
}

fn shape(m: usize, n: usize) -> Result<AlgebraShape, Fail> {
    let s = AlgebraShape::new(m, n)?;
    check_shape_cap(s, shape_cap()?)?;
    Ok(s)
}

/// Version of this interface; bumped on incompatible changes.
#[no_mangle]
pub extern "C" fn stonespec_abi_version() -> u32 {
    1
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn stonespec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer previously returned through a `char **out`
/// argument and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stonespec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a block operator `{"shape":{"m","n"},"blocks":[...]}`.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_operator_from_json(json: *const c_char, out: *mut *mut StonespecOperator) -> StonespecStatus {
    guard(|| {
        let op = parse_operator(text(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(StonespecOperator(op))), "out")?;
        Ok(StonespecStatus::Ok)
    })
}

/// # Safety
/// `op` must be null or a handle from [`stonespec_operator_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stonespec_operator_free(op: *mut StonespecOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Parses one quasipoint `{"block","ray"}` in the algebra of shape `(m, n)`.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_quasipoint_from_json(
    json: *const c_char,
    m: usize,
    n: usize,
    out: *mut *mut StonespecQuasipoint,
) -> StonespecStatus {
    guard(|| {
        let s = AlgebraShape::new(m, n)?;
        let mut qs = parse_quasipoints(text(json, "json")?, s)?;
        if qs.len() != 1 {
            return Err(Fail(StonespecStatus::InvalidInput, format!("expected one quasipoint, found {}", qs.len())));
        }
        write_out(out, Box::into_raw(Box::new(StonespecQuasipoint(qs.remove(0)))), "out")?;
        Ok(StonespecStatus::Ok)
    })
}

/// # Safety
/// `q` must be null or a handle from [`stonespec_quasipoint_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stonespec_quasipoint_free(q: *mut StonespecQuasipoint) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Block index of a quasipoint, or `SIZE_MAX` for a null handle.
///
/// # Safety
/// `q` must be null or a live quasipoint handle.
#[no_mangle]
pub unsafe extern "C" fn stonespec_quasipoint_block(q: *const StonespecQuasipoint) -> usize {
    q.as_ref().map_or(usize::MAX, |q| q.0.block())
}

/// Writes the value of the observable function of the Hermitian `op` at `q`.
///
/// # Safety
/// Handles must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_observable_value(
    op: *const StonespecOperator,
    q: *const StonespecQuasipoint,
    tol: f64,
    out: *mut f64,
) -> StonespecStatus {
    guard(|| {
        let (op, q) = (handle(op, "op")?, handle(q, "q")?);
        let value = observable_value(&op.0, &q.0, &tolerances(tol))?;
        write_out(out, value, "out")?;
        Ok(StonespecStatus::Ok)
    })
}

/// Writes whether the block projection given as JSON belongs to `q`.
///
/// # Safety
/// `q` must be null or live; `projection_json` must be null or NUL-terminated;
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_quasipoint_contains(
    q: *const StonespecQuasipoint,
    projection_json: *const c_char,
    tol: f64,
    out: *mut bool,
) -> StonespecStatus {
    guard(|| {
        let q = handle(q, "q")?;
        let t = tolerances(tol);
        let p = parse_block_projection(text(projection_json, "projection_json")?, &t)?;
        let inside = qp_contains(&q.0, &p, &t)?;
        write_out(out, inside, "out")?;
        Ok(StonespecStatus::Ok)
    })
}

/// Parses a lattice `{"elements":[...],"leq":[[...]]}` and derives meets and joins.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_lattice_from_json(json: *const c_char, out: *mut *mut StonespecLattice) -> StonespecStatus {
    guard(|| {
        let l = lattice_from_json(parse_lattice_json(text(json, "json")?)?)?;
        write_out(out, Box::into_raw(Box::new(StonespecLattice(l))), "out")?;
        Ok(StonespecStatus::Ok)
    })
}

/// # Safety
/// `l` must be null or a handle from [`stonespec_lattice_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stonespec_lattice_free(l: *mut StonespecLattice) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `l` must be null or a live lattice handle.
#[no_mangle]
pub unsafe extern "C" fn stonespec_lattice_len(l: *const StonespecLattice) -> usize {
    l.as_ref().map_or(0, |l| l.0.len())
}

/// Maximal dual ideals as a JSON array of label arrays. Lattices with more
/// than `cap` elements give [`StonespecStatus::ResourceCap`].
///
/// # Safety
/// `l` must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_lattice_ideals_json(
    l: *const StonespecLattice,
    cap: usize,
    out: *mut *mut c_char,
) -> StonespecStatus {
    guard(|| {
        let l = &handle(l, "l")?.0;
        let ideals = enumerate_maximal_dual_ideals(l, cap)?;
        let labels: Vec<Vec<&str>> = ideals
            .iter()
            .map(|d| d.elements.iter().map(|&i| l.labels()[i].as_str()).collect())
            .collect();
        write_string(out, serde_json::to_string(&labels).expect("labels serialize"))?;
        Ok(StonespecStatus::Ok)
    })
}

/// Prime-property violation at a seeded random quasipoint of `(m, n)`, as
/// witness JSON. Requires `n ≥ 2`. Returns [`StonespecStatus::PropertyFailure`]
/// with the JSON still written when the re-check disagrees.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_witness_json(m: usize, n: usize, seed: u64, tol: f64, out: *mut *mut c_char) -> StonespecStatus {
    guard(|| {
        let t = tolerances(tol);
        let w = random_witness(shape(m, n)?, seed, &t)?;
        let value = witness_json(&w, &t)?;
        let ok = w.verified() && value["recheck"] == serde_json::Value::Bool(true);
        write_string(out, value.to_string())?;
        Ok(if ok { StonespecStatus::Ok } else { StonespecStatus::PropertyFailure })
    })
}

/// Runs one verification suite and writes its report as JSON. Returns
/// [`StonespecStatus::PropertyFailure`] with the report written when any
/// property fails.
///
/// # Safety
/// `suite` must be null or NUL-terminated; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn stonespec_verify_json(
    suite: *const c_char,
    m: usize,
    n: usize,
    seed: u64,
    trials: usize,
    tol: f64,
    out: *mut *mut c_char,
) -> StonespecStatus {
    guard(|| {
        let name = text(suite, "suite")?;
        let cfg = RunConfig {
            shape: shape(m, n)?,
            seed,
            trials,
            tol: tolerances(tol),
        };
        let report = run_suite(name, &cfg)?;
        write_string(out, serde_json::to_string(&report).expect("report serializes"))?;
        Ok(if report.passed { StonespecStatus::Ok } else { StonespecStatus::PropertyFailure })
    })
}
