//! C interface to the pita engine.
//!
//! Programs and results are opaque heap handles owned by the caller. Every
//! fallible call returns a [`PitaStatus`]; on failure the message is kept
//! per thread and read back with [`pita_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use pita::ast::Program;
use pita::{parse_program, parse_query, solve, EngineConfig, Mode, Outcome};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidMode = 3,
    ParseError = 4,
    EngineError = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitaMode {
    Prob = 0,
    IndExc = 1,
    Count = 2,
    Viterbi = 3,
    Poss = 4,
}

impl From<PitaMode> for Mode {
    fn from(m: PitaMode) -> Mode {
        match m {
            PitaMode::Prob => Mode::Prob,
            PitaMode::IndExc => Mode::IndExc,
            PitaMode::Count => Mode::Count,
            PitaMode::Viterbi => Mode::Viterbi,
            PitaMode::Poss => Mode::Poss,
        }
    }
}

/// A parsed program together with the mode it was parsed for.
pub struct PitaProgram {
    program: Program,
    mode: Mode,
}

struct Row {
    atom: CString,
    text: CString,
    value: f64,
}

/// The ground answers of one query.
pub struct PitaResult {
    rows: Vec<Row>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: PitaStatus, msg: impl Into<String>) -> PitaStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PitaStatus) -> PitaStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PitaStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PitaStatus> {
    if p.is_null() {
        return Err(fail(PitaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(PitaStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn c_text(s: String) -> CString {
    CString::new(s).unwrap_or_default()
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pita_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `text` for evaluation in `mode`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
/// The handle written to `out` must be released with `pita_program_free`.
#[no_mangle]
pub unsafe extern "C" fn pita_program_parse(
    text: *const c_char,
    mode: PitaMode,
    out: *mut *mut PitaProgram,
) -> PitaStatus {
    parse_in(text, Mode::from(mode), out)
}

unsafe fn parse_in(text: *const c_char, mode: Mode, out: *mut *mut PitaProgram) -> PitaStatus {
    guard(|| {
        if out.is_null() {
            return fail(PitaStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_program(text, mode.parse_mode()) {
            Ok(program) => {
                *out = Box::into_raw(Box::new(PitaProgram { program, mode }));
                PitaStatus::Ok
            }
            Err(e) => fail(PitaStatus::ParseError, e.to_string()),
        }
    })
}

/// Like `pita_program_parse` with the mode given by name
/// (`prob`, `ind-exc`, `count`, `viterbi`, `poss`).
///
/// # Safety
/// As for `pita_program_parse`; `mode` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pita_program_parse_named(
    text: *const c_char,
    mode: *const c_char,
    out: *mut *mut PitaProgram,
) -> PitaStatus {
    let mode = match read_str(mode, "mode").and_then(|name| {
        name.parse::<Mode>()
            .map_err(|e| fail(PitaStatus::InvalidMode, e.to_string()))
    }) {
        Ok(m) => m,
        Err(s) => {
            if !out.is_null() {
                *out = ptr::null_mut();
            }
            return s;
        }
    };
    parse_in(text, mode, out)
}

/// # Safety
/// `program` must come from `pita_program_parse` and not be freed twice.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pita_program_free(program: *mut PitaProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Answers `goal` against `program`. A `timeout_secs` of zero or less
/// means no time limit.
///
/// # Safety
/// `program` must be a live handle, `goal` NUL-terminated and `out`
/// writable. The handle written to `out` must be released with
/// `pita_result_free`.
#[no_mangle]
pub unsafe extern "C" fn pita_query(
    program: *const PitaProgram,
    goal: *const c_char,
    timeout_secs: f64,
    out: *mut *mut PitaResult,
) -> PitaStatus {
    guard(|| {
        if out.is_null() {
            return fail(PitaStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(program) = program.as_ref() else {
            return fail(PitaStatus::NullArgument, "program is null");
        };
        let goal = match read_str(goal, "goal") {
            Ok(g) => g,
            Err(s) => return s,
        };
        let goal = match parse_query(goal) {
            Ok(g) => g,
            Err(e) => return fail(PitaStatus::ParseError, format!("goal: {e}")),
        };
        let config = EngineConfig {
            timeout: (timeout_secs > 0.0)
                .then(|| Duration::try_from_secs_f64(timeout_secs).ok())
                .flatten(),
            ..EngineConfig::default()
        };
        match solve(&program.program, program.mode, &goal, &config) {
            Ok(solution) => {
                let rows = solution
                    .answers
                    .into_iter()
                    .map(|a| Row {
                        atom: c_text(a.atom.to_string()),
                        text: c_text(match &a.value {
                            Outcome::Count(c) => c.to_string(),
                            v => format!("{:?}", v.as_f64()),
                        }),
                        value: a.value.as_f64(),
                    })
                    .collect();
                *out = Box::into_raw(Box::new(PitaResult { rows }));
                PitaStatus::Ok
            }
            Err(e) => fail(PitaStatus::EngineError, format!("{}: {e}", e.kind())),
        }
    })
}

/// Number of answers; zero for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pita_result_len(result: *const PitaResult) -> usize {
    result.as_ref().map_or(0, |r| r.rows.len())
}

unsafe fn row<'a>(result: *const PitaResult, index: usize) -> Result<&'a Row, PitaStatus> {
    let Some(r) = result.as_ref() else {
        return Err(fail(PitaStatus::NullArgument, "result is null"));
    };
    r.rows.get(index).ok_or_else(|| {
        fail(
            PitaStatus::OutOfRange,
            format!("answer {index} of {}", r.rows.len()),
        )
    })
}

/// The ground atom of answer `index`, or null when out of range. The
/// string is owned by `result`.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pita_result_atom(result: *const PitaResult, index: usize) -> *const c_char {
    row(result, index).map_or(ptr::null(), |r| r.atom.as_ptr())
}

/// The value of answer `index` as a float. Counts beyond 2^53 lose
/// precision; use `pita_result_text` for the exact digits.
///
/// # Safety
/// `result` must be null or a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn pita_result_value(
    result: *const PitaResult,
    index: usize,
    value: *mut f64,
) -> PitaStatus {
    if value.is_null() {
        return fail(PitaStatus::NullArgument, "value is null");
    }
    match row(result, index) {
        Ok(r) => {
            *value = r.value;
            PitaStatus::Ok
        }
        Err(s) => s,
    }
}

/// The value of answer `index` as text: exact digits for counts, the
/// shortest round-trip form otherwise. Owned by `result`.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pita_result_text(result: *const PitaResult, index: usize) -> *const c_char {
    row(result, index).map_or(ptr::null(), |r| r.text.as_ptr())
}

/// # Safety
/// `result` must come from `pita_query` and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pita_result_free(result: *mut PitaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
