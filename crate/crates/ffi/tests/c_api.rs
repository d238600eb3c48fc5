use std::ffi::{CStr, CString};
use std::ptr;

use pita_ffi::*;

fn text(p: *const std::ffi::c_char) -> String {
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn parse(src: &str, mode: PitaMode) -> *mut PitaProgram {
    let src = CString::new(src).unwrap();
    let mut prog = ptr::null_mut();
    let st = unsafe { pita_program_parse(src.as_ptr(), mode, &mut prog) };
    assert_eq!(st, PitaStatus::Ok, "{}", text(pita_last_error()));
    prog
}

fn query(prog: *const PitaProgram, goal: &str) -> Result<*mut PitaResult, PitaStatus> {
    let goal = CString::new(goal).unwrap();
    let mut res = ptr::null_mut();
    match unsafe { pita_query(prog, goal.as_ptr(), 0.0, &mut res) } {
        PitaStatus::Ok => Ok(res),
        st => {
            assert!(res.is_null());
            Err(st)
        }
    }
}

#[test]
fn round_trip() {
    let prog = parse("q :- a. q :- b. a:0.2. b:0.4.", PitaMode::Prob);
    let res = query(prog, "q").unwrap();
    unsafe {
        assert_eq!(pita_result_len(res), 1);
        assert_eq!(text(pita_result_atom(res, 0)), "q");
        let mut v = 0.0;
        assert_eq!(pita_result_value(res, 0, &mut v), PitaStatus::Ok);
        assert!((v - 0.52).abs() < 1e-12);
        assert!(pita_result_atom(res, 1).is_null());
        assert_eq!(pita_result_value(res, 1, &mut v), PitaStatus::OutOfRange);
        pita_result_free(res);
        pita_program_free(prog);
    }
}

#[test]
fn open_goals_and_counts() {
    let src = "edge(a,b). edge(b,c). edge(a,c). \
               path(X,Y) :- edge(X,Y). path(X,Y) :- edge(X,Z), path(Z,Y).";
    let prog = parse(src, PitaMode::Count);
    let res = query(prog, "path(a,X)").unwrap();
    unsafe {
        let mut rows: Vec<(String, String)> = (0..pita_result_len(res))
            .map(|i| (text(pita_result_atom(res, i)), text(pita_result_text(res, i))))
            .collect();
        rows.sort();
        assert_eq!(
            rows,
            vec![("path(a,b)".into(), "1".into()), ("path(a,c)".into(), "2".into())]
        );
        pita_result_free(res);
        pita_program_free(prog);
    }
}

#[test]
fn named_modes() {
    let src = CString::new("e(a,b):0.4. p(X,Y) :- e(X,Y).").unwrap();
    let mut prog = ptr::null_mut();
    let poss = CString::new("poss").unwrap();
    let st = unsafe { pita_program_parse_named(src.as_ptr(), poss.as_ptr(), &mut prog) };
    assert_eq!(st, PitaStatus::Ok);
    let res = query(prog, "p(a,b)").unwrap();
    let mut v = 0.0;
    unsafe {
        assert_eq!(pita_result_value(res, 0, &mut v), PitaStatus::Ok);
        pita_result_free(res);
        pita_program_free(prog);
    }
    assert_eq!(v, 0.4);

    let bogus = CString::new("fuzzy").unwrap();
    let st = unsafe { pita_program_parse_named(src.as_ptr(), bogus.as_ptr(), &mut prog) };
    assert_eq!(st, PitaStatus::InvalidMode);
    assert!(prog.is_null());
    assert!(text(pita_last_error()).contains("fuzzy"));
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("p :- .").unwrap();
    let mut prog = ptr::null_mut();
    let st = unsafe { pita_program_parse(bad.as_ptr(), PitaMode::Prob, &mut prog) };
    assert_eq!(st, PitaStatus::ParseError);
    assert!(prog.is_null());
    assert!(!text(pita_last_error()).is_empty());

    let st = unsafe { pita_program_parse(ptr::null(), PitaMode::Prob, &mut prog) };
    assert_eq!(st, PitaStatus::NullArgument);

    let prog = parse("p :- p, a. p :- a. a:0.5.", PitaMode::Count);
    assert_eq!(query(prog, "p"), Err(PitaStatus::EngineError));
    assert!(text(pita_last_error()).starts_with("CyclicNonIdempotent"));
    assert_eq!(query(prog, "p("), Err(PitaStatus::ParseError));
    unsafe { pita_program_free(prog) };

    unsafe {
        assert_eq!(pita_result_len(ptr::null()), 0);
        pita_result_free(ptr::null_mut());
        pita_program_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pita.h")).unwrap();
    for name in [
        "pita_program_parse",
        "pita_query",
        "pita_result_free",
        "PITA_STATUS_ENGINE_ERROR",
        "typedef struct PitaProgram PitaProgram",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Builds the C example against the static library when a C compiler is
/// around.
#[test]
fn c_program_links() {
    use std::process::Command;

    let deps = std::env::current_exe().unwrap();
    let profile_dir = deps.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpita_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = Command::new("cc")
        .arg(format!("{manifest}/examples/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "q\t0.6000000000000001\t0.6\n");
}
