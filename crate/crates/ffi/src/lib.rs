//! C ABI for the multisep toolkit.
//!
//! States travel as opaque handles created from the library's JSON text
//! format or from named fixtures; analyses hand back JSON strings that the
//! caller frees with [`msep_string_free`]. Every fallible call returns a
//! status code; on failure [`msep_last_error`] holds a thread-local message
//! valid until the next failing call on the same thread.
//!
//! The generated header lands in `include/multisep.h` at build time.

use multisep::fixtures::{make_fixture, FixtureName, FixtureSpec, StateFixture};
use multisep::io::{self, Payload};
use multisep::numerics::Tolerance;
use multisep::purification::purify;
use multisep::report;
use multisep::schmidt::gsd_detect;
use multisep::separability::{classify_bipartite, ppt_report, triangle_classify, SearchParams};
use multisep::states::{DensityMatrix, PureState};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

/// Status codes returned by the fallible entry points.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsepStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input text failed to parse or violated a state invariant.
    ParseError = 3,
    /// The handle does not fit the requested analysis.
    InvalidState = 4,
    /// The analysis itself failed.
    AnalysisError = 5,
}

/// Opaque state handle: a pure state or a density operator.
pub struct MsepState {
    payload: StateKind,
}

enum StateKind {
    Pure(PureState),
    Density(DensityMatrix),
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    });
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn msep_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn string_out(out: *mut *mut c_char, text: String) -> MsepStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return MsepStatus::NullArgument;
    }
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            MsepStatus::Ok
        }
        Err(_) => {
            set_error("analysis output contained an interior NUL");
            MsepStatus::AnalysisError
        }
    }
}

/// Frees a string returned by any of the `*_json` functions.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed (or null, in which case nothing happens).
#[no_mangle]
pub unsafe extern "C" fn msep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, MsepStatus> {
    if ptr.is_null() {
        set_error("string argument is null");
        return Err(MsepStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        MsepStatus::InvalidUtf8
    })
}

/// Parses a state from the library's JSON text format (kinds "pure" and
/// "density"). Returns null on failure; see [`msep_last_error`].
///
/// # Safety
/// `json` must point to a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn msep_state_parse(json: *const c_char) -> *mut MsepState {
    let text = match utf8_arg(json) {
        Ok(t) => t,
        Err(_) => return std::ptr::null_mut(),
    };
    match io::read_payload(text) {
        Ok(Payload::Pure(p)) => Box::into_raw(Box::new(MsepState { payload: StateKind::Pure(p) })),
        Ok(Payload::Density(d)) => {
            Box::into_raw(Box::new(MsepState { payload: StateKind::Density(d) }))
        }
        Ok(_) => {
            set_error("expected a pure or density state");
            std::ptr::null_mut()
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Builds a named fixture (epr, ghz, ncat, w, basis, tiles, random_pure,
/// random_gsd). `dims`/`dims_len` may be null/0 for fixtures with implied
/// dimensions; `n` and `k` are ignored where not applicable (pass 0).
/// Returns null on failure.
///
/// # Safety
/// `name` must be NUL-terminated; `dims`, when non-null, must point to
/// `dims_len` readable entries.
#[no_mangle]
pub unsafe extern "C" fn msep_state_fixture(
    name: *const c_char,
    dims: *const u32,
    dims_len: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> *mut MsepState {
    let name = match utf8_arg(name) {
        Ok(t) => t,
        Err(_) => return std::ptr::null_mut(),
    };
    let fixture_name = match FixtureName::parse(name) {
        Ok(f) => f,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    let dims_vec = if dims.is_null() || dims_len == 0 {
        None
    } else {
        Some(
            std::slice::from_raw_parts(dims, dims_len)
                .iter()
                .map(|&d| d as usize)
                .collect::<Vec<_>>(),
        )
    };
    let spec = FixtureSpec {
        name: fixture_name,
        n: (n > 0).then_some(n),
        dims: dims_vec,
        k: (k > 0).then_some(k),
        seed,
    };
    match make_fixture(&spec) {
        Ok(StateFixture::Pure(p)) => {
            Box::into_raw(Box::new(MsepState { payload: StateKind::Pure(p) }))
        }
        Ok(StateFixture::Density(d)) => {
            Box::into_raw(Box::new(MsepState { payload: StateKind::Density(d) }))
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Frees a state handle.
///
/// # Safety
/// `state` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn msep_state_free(state: *mut MsepState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

unsafe fn state_arg<'a>(state: *const MsepState) -> Result<&'a MsepState, MsepStatus> {
    if state.is_null() {
        set_error("state handle is null");
        return Err(MsepStatus::NullArgument);
    }
    Ok(&*state)
}

/// Serializes the state back to the JSON text format.
///
/// # Safety
/// `state` must be a live handle; `out_json` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn msep_state_to_json(
    state: *const MsepState,
    out_json: *mut *mut c_char,
) -> MsepStatus {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let text = match &s.payload {
        StateKind::Pure(p) => io::write_pure(p),
        StateKind::Density(d) => io::write_density(d),
    };
    string_out(out_json, text)
}

fn params_from(seed: u64, tol: f64) -> Result<SearchParams, MsepStatus> {
    let mut p = SearchParams { seed, ..SearchParams::default() };
    if tol > 0.0 {
        p.tol = Tolerance::with_eps(tol).map_err(|e| {
            set_error(e.to_string());
            MsepStatus::ParseError
        })?;
    }
    Ok(p)
}

/// Runs every applicable analysis and returns the machine report. Pass
/// `tol <= 0` for the default tolerance.
///
/// # Safety
/// `state` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msep_report_json(
    state: *const MsepState,
    seed: u64,
    tol: f64,
    out_json: *mut *mut c_char,
) -> MsepStatus {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let params = match params_from(seed, tol) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let rep = match &s.payload {
        StateKind::Pure(p) => report::analyze_pure(p, &params),
        StateKind::Density(d) => report::analyze_density(d, &params),
    };
    match rep {
        Ok(r) => string_out(out_json, r.json),
        Err(e) => {
            set_error(e.to_string());
            MsepStatus::AnalysisError
        }
    }
}

/// Detects the all-parties Schmidt form of a pure state. Pass `tol <= 0`
/// for the default tolerance.
///
/// # Safety
/// `state` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msep_gsd_json(
    state: *const MsepState,
    tol: f64,
    retries: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> MsepStatus {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let psi = match &s.payload {
        StateKind::Pure(p) => p,
        StateKind::Density(_) => {
            set_error("Schmidt detection needs a pure state");
            return MsepStatus::InvalidState;
        }
    };
    let params = match params_from(seed, tol) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let g = gsd_detect(psi, &params.tol, retries, seed);
    string_out(out_json, report::gsd_json(&g))
}

/// Partial-transpose report over all bipartitions.
///
/// # Safety
/// `state` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msep_ppt_json(
    state: *const MsepState,
    out_json: *mut *mut c_char,
) -> MsepStatus {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let rho = match &s.payload {
        StateKind::Pure(p) => p.to_density(),
        StateKind::Density(d) => d.clone(),
    };
    match ppt_report(&rho) {
        Ok(r) => string_out(out_json, report::ppt_json(&r)),
        Err(e) => {
            set_error(e.to_string());
            MsepStatus::AnalysisError
        }
    }
}

/// One-sided certification of a two-party state.
///
/// # Safety
/// `state` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msep_classify_json(
    state: *const MsepState,
    seed: u64,
    out_json: *mut *mut c_char,
) -> MsepStatus {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let rho = match &s.payload {
        StateKind::Pure(p) => p.to_density(),
        StateKind::Density(d) => d.clone(),
    };
    let params = match params_from(seed, 0.0) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match classify_bipartite(&rho, &params) {
        Ok(c) => string_out(out_json, report::classification_json(&c)),
        Err(e) => {
            set_error(e.to_string());
            MsepStatus::InvalidState
        }
    }
}

/// Classifies the three reductions of a three-party pure state; the record
/// includes any exclusion flags.
///
/// # Safety
/// `state` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msep_triangle_json(
    state: *const MsepState,
    seed: u64,
    out_json: *mut *mut c_char,
) -> MsepStatus {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let psi = match &s.payload {
        StateKind::Pure(p) => p,
        StateKind::Density(_) => {
            set_error("triangle classification needs a pure state");
            return MsepStatus::InvalidState;
        }
    };
    let params = match params_from(seed, 0.0) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match triangle_classify(psi, &params) {
        Ok(t) => {
            let sides = report::json_array(t.sides.iter().map(|side| {
                let mut o = report::JsonObj::new();
                o.string("pair", &side.label())
                    .raw("classification", report::classification_json(&side.classification))
                    .real("min_pt_eigenvalue", side.min_pt_eigenvalue);
                o.finish()
            }));
            let mut o = report::JsonObj::new();
            o.raw("sides", sides)
                .boolean("gsd_decomposable", t.gsd.decomposable)
                .raw(
                    "exclusion_flags",
                    report::json_array(
                        t.exclusion_flags.iter().map(|f| format!("\"{}\"", f.replace('"', "'"))),
                    ),
                );
            string_out(out_json, o.finish())
        }
        Err(e) => {
            set_error(e.to_string());
            MsepStatus::InvalidState
        }
    }
}

/// Minimal purification of a density operator (appends one party of
/// dimension equal to the rank). Returns null on failure.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn msep_purify(state: *const MsepState) -> *mut MsepState {
    let s = match state_arg(state) {
        Ok(s) => s,
        Err(_) => return std::ptr::null_mut(),
    };
    let rho = match &s.payload {
        StateKind::Density(d) => d,
        StateKind::Pure(_) => {
            set_error("purification needs a density operator");
            return std::ptr::null_mut();
        }
    };
    match purify(rho) {
        Ok(p) => Box::into_raw(Box::new(MsepState { payload: StateKind::Pure(p) })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}
