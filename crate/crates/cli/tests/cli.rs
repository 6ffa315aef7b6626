use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).display().to_string()
}

fn nmifc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmifc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp_program(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".nm").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn voice_of_a_confidentiality_projection() {
    let o = nmifc(&["lattice", "voice (t^->)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "t^<-");
}

#[test]
fn top_acts_for_any_atom() {
    let o = nmifc(&["lattice", "actsfor top alice"]);
    assert_eq!(stdout(&o).trim(), "true");
}

#[test]
fn flows_under_a_config_file() {
    let cfg = corpus("pwd.json");
    let o = nmifc(&["--config", &cfg, "lattice", "flows (U^->) (T^->)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "true");
    let o = nmifc(&["--config", &cfg, "lattice", "flows (T^->) (U^->)"]);
    assert_eq!(stdout(&o).trim(), "false");
}

#[test]
fn explain_lists_covered_clauses() {
    let o = nmifc(&["--config", &corpus("pwd.json"), "lattice", "--explain", "flows (U^->) (T^->)"]);
    let text = stdout(&o);
    assert!(text.starts_with("true"), "{text}");
    assert!(text.contains("conf: need U"), "{text}");
}

#[test]
fn check_prints_the_type() {
    let o = nmifc(&["check", &corpus("password.nm")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "says[T] bool -[T^<-]-> says[U^<-] bool -[T^<-]-> says[T^<-] bool");
}

#[test]
fn rejected_endorse_exits_2() {
    let o = nmifc(&["check", &corpus("password_endorse_bad.nm")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Endorse final premise"), "{}", stderr(&o));
}

#[test]
fn type_errors_as_json() {
    let o = nmifc(&["--format", "json", "check", &corpus("launder_bad.nm")]);
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "type");
}

#[test]
fn ast_json_is_versioned() {
    let o = nmifc(&["--format", "json", "check", "--ast", &corpus("auction.nm")]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["version"], 1);
    assert!(v["ast"].is_object());
}

#[test]
fn parse_errors_exit_3() {
    let f = temp_program("lam (x : unit) [bot]. (x,");
    let o = nmifc(&["check", f.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("expected"), "{}", stderr(&o));
}

#[test]
fn usage_and_io_errors_exit_3() {
    assert_eq!(code(&nmifc(&["check", "/nonexistent/program.nm"])), 3);
    assert_eq!(code(&nmifc(&["frobnicate"])), 3);
    assert_eq!(code(&nmifc(&["--fuel", "0", "lattice", "voice a"])), 3);
    assert_eq!(code(&nmifc(&["lattice", "actsfor a"])), 3);
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&nmifc(&["--help"])), 0);
}

#[test]
fn run_applies_inputs() {
    let args = ["run", &corpus("password.nm"), "--input", "p=etav[T] tt", "--input", "g=etav[U^<-] tt"];
    let o = nmifc(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("value: etav[T^<-] tt"), "{text}");
    assert!(text.contains("decl [T] -> [T^<-] tt"), "{text}");
    assert_eq!(stdout(&nmifc(&args)), text);
}

#[test]
fn run_json_is_deterministic() {
    let args =
        ["--format", "json", "run", &corpus("password.nm"), "--input", "p=etav[T] ff", "--input", "g=etav[U^<-] tt"];
    let a = stdout(&nmifc(&args));
    let b = stdout(&nmifc(&args));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["steps"], v["trace"].as_array().unwrap().len());
}

#[test]
fn input_of_the_wrong_type_is_rejected() {
    let o = nmifc(&["run", &corpus("password.nm"), "--input", "p=etav[U^<-] tt", "--input", "g=etav[U^<-] tt"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn running_out_of_fuel_exits_4() {
    let o = nmifc(&["--fuel", "2", "run", &corpus("password.nm"), "--input", "p=etav[T] tt", "--input", "g=etav[U^<-] tt"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn stuck_programs_exit_2() {
    let f = temp_program("proj1 ()");
    let o = nmifc(&["--unsafe", "run", f.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stuck"), "{}", stderr(&o));
}

#[test]
fn nmif_passes_on_the_checker() {
    let o = nmifc(&[
        "verify",
        &corpus("password.nm"),
        "--condition",
        "nmif",
        "--attacker",
        "U",
        "--pools",
        &corpus("password.pools.json"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "nmif: pass");
}

#[test]
fn robust_declassification_skips_endorsing_programs() {
    let o = nmifc(&["verify", &corpus("password.nm"), "--condition", "rd", "--attacker", "U"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("skip"), "{}", stdout(&o));
}

#[test]
fn mutant_needs_unsafe() {
    let file = corpus("password_copy.nm");
    let pools = corpus("password_copy.pools.json");
    let o = nmifc(&["verify", &file, "--condition", "nmif", "--attacker", "U", "--pools", &pools]);
    assert_eq!(code(&o), 2);
    let o = nmifc(&["--unsafe", "--format", "json", "verify", &file, "--condition", "nmif", "--attacker", "U", "--pools", &pools]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "violation");
    assert_eq!(v["witness"]["traces"].as_array().unwrap().len(), 4);
    assert_eq!(v["witness"]["indices"].as_array().unwrap().len(), 4);
    assert!(v.get("label").map_or(true, Value::is_null));
}

#[test]
fn noninterference_with_generated_pools() {
    let o = nmifc(&["--seed", "3", "verify", &corpus("auction.nm"), "--condition", "ni-3", "--attacker", "B"]);
    assert!(matches!(code(&o), 0 | 5), "{} {}", stdout(&o), stderr(&o));
}

#[test]
fn holes_are_desugared() {
    let o = nmifc(&["desugar", &corpus("holes.nm")]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("bind y_1 = proj1 y in y_1 x"), "{text}");
    assert!(text.contains("-- y : "), "{text}");
    let o = nmifc(&["verify", &corpus("holes.nm"), "--condition", "nmif", "--attacker", "U"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
