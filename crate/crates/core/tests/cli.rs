use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_finite-rmt");
const WISHART: &str = "wprod(det(R, 2x2), det(I, 4x4), 2, 4)";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn formula_latex_is_stable() {
    let a = run(&["formula", "--model", WISHART, "--P", "3", "--latex"]);
    assert_eq!(code(&a), 0);
    let text = stdout(&a);
    assert!(text.contains(r"1+\frac{1}{N^{2}} & 3c & c^{2}"), "{text}");
    assert_eq!(stdout(&run(&["formula", "--model", WISHART, "--P", "3", "--latex"])), text);
    let raw = stdout(&run(&["formula", "--model", WISHART, "--P", "2", "--raw-nN"]));
    assert!(raw.contains("n/N"), "{raw}");
}

#[test]
fn convolve_deconvolve_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = "-\t1\n1\t3/4\n2\t5/8\n1,1\t9/16\n3\t9/16\n2,1\t15/32\n1,1,1\t27/64\n";
    let inp = write(dir.path(), "in.txt", input);
    let mid = dir.path().join("mid.txt");
    let back = dir.path().join("back.txt");
    let model = "chain(det(D, 2x2), gC(2, 3), gC(2, 5, 1/2))";
    let c = run(&["convolve", "--model", model, "--in", &inp, "--out", mid.to_str().unwrap()]);
    assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));
    let d = run(&["deconvolve", "--model", model, "--in", mid.to_str().unwrap(), "--out", back.to_str().unwrap()]);
    assert_eq!(code(&d), 0, "{}", String::from_utf8_lossy(&d.stderr));
    assert_eq!(fs::read_to_string(back).unwrap(), input);
}

#[test]
fn convolve_from_bindings_and_two_sided() {
    let dir = tempfile::tempdir().unwrap();
    let r = write(dir.path(), "r.txt", "2 2 real\n1 0\n0 1/2\n");
    let bad = run(&["--bind", &format!("R={r}"), "convolve", "--model", WISHART, "--P", "2"]);
    assert_eq!(code(&bad), 3, "fractions are not matrix entries");
    let r = write(dir.path(), "r.txt", "2 2 real\n1 0\n0 0.5\n");
    let out = run(&["--bind", &format!("R={r}"), "convolve", "--model", WISHART, "--P", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("2\t0.90625"), "{}", stdout(&out));
    let pair = write(dir.path(), "pair.txt", "-|-\t1\n1|-\t1\n-|1\t1\n1|1\t1\n");
    let two = run(&["convolve", "--model", "wprod(det(R, 2x2), det(S, 3x3), 2, 3)", "--in", &pair]);
    assert_eq!(code(&two), 0, "{}", String::from_utf8_lossy(&two.stderr));
    assert!(stdout(&two).contains("1\t1\n"));
}

#[test]
fn simulate_reports_double_factorials() {
    let out = run(&["simulate", "--model", "sasum(det(0, 1x1), 1)", "--trials", "20000", "--seed", "9", "--P", "4"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("# model"));
    assert!(text.contains("key\tpredicted\tempirical\tse\tz"));
    assert!(text.contains("\n4\t3.0000000000\t"), "{text}");
    let again = run(&["--threads", "1", "simulate", "--model", "sasum(det(0, 1x1), 1)", "--trials", "20000", "--seed", "9", "--P", "4"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn rate_and_powers_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs");
    fs::create_dir(&obs).unwrap();
    write(&obs, "y1.txt", "2 2 complex\n1.1 0.1 0.2 0\n-0.1 0.3 0.45 -0.2\n");
    write(&obs, "y2.txt", "2 2 complex\n0.9 -0.2 0 0.1\n0.2 0 0.6 0.1\n");
    let o = obs.to_str().unwrap();
    let rate = run(&["rate", "--obs", o, "--snr", "5", "--rank", "2", "--strategy", "stack"]);
    assert_eq!(code(&rate), 0, "{}", String::from_utf8_lossy(&rate.stderr));
    assert!(stdout(&rate).contains("rate_core\t"));
    let powers = run(&["powers", "--obs", o, "--K", "2", "--N", "2", "--M", "2", "--sigma", "0.1", "--P", "2"]);
    assert_eq!(code(&powers), 0, "{}", String::from_utf8_lossy(&powers.stderr));
    assert!(stdout(&powers).contains("eigenvalues\t"));
}

#[test]
fn exit_code_validation_failure() {
    // one trial has no standard error, so any deviation fails
    let out = run(&["simulate", "--model", "gC(2, 2)", "--trials", "1", "--P", "2"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("# FAIL"));
}

#[test]
fn exit_code_usage() {
    assert_eq!(code(&run(&["formula", "--model", WISHART, "--P", "2", "--bogus"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["formula", "--model", WISHART])), 2);
}

#[test]
fn exit_code_format() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "m.txt", "1\tnot-a-number\n");
    assert_eq!(code(&run(&["convolve", "--model", WISHART, "--in", &bad])), 3);
}

#[test]
fn exit_code_dimension() {
    assert_eq!(code(&run(&["formula", "--model", "sum(det(D, 2x4), gC(2, 3))", "--P", "2"])), 4);
    let dir = tempfile::tempdir().unwrap();
    let r = write(dir.path(), "r.txt", "3 3 real 1 0 0 0 1 0 0 0 1");
    assert_eq!(
        code(&run(&["--bind", &format!("R={r}"), "convolve", "--model", WISHART, "--P", "2"])),
        4
    );
}

#[test]
fn exit_code_parse() {
    let out = run(&["formula", "--model", "sum(det(D,2x2)", "--P", "2"]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 14"));
}

#[test]
fn exit_code_singular() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.txt", "1\t1\n2\t2\n1,1\t1\n3\t5\n2,1\t2\n1,1,1\t1\n");
    let out = run(&["deconvolve", "--model", "wprod(det(R, 2x2), det(I, 2x2), 2, 2)", "--in", &m]);
    assert_eq!(code(&out), 6, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_code_io() {
    assert_eq!(code(&run(&["convolve", "--model", WISHART, "--in", "/nonexistent/m.txt"])), 7);
}

#[test]
fn exit_code_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs");
    fs::create_dir(&obs).unwrap();
    write(&obs, "y.txt", "2 2 real 0 0 0 0");
    let out = run(&["rate", "--obs", obs.to_str().unwrap(), "--snr", "5", "--rank", "1", "--sigma", "1"]);
    assert_eq!(code(&out), 8, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("rate\tundefined"));
}

#[test]
fn exit_code_unsupported() {
    assert_eq!(code(&run(&["formula", "--model", "sum(det(A, 2x2), det(B, 2x2))", "--P", "2"])), 9);
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.txt", "1\t1\n");
    assert_eq!(
        code(&run(&["deconvolve", "--model", "wprod(det(R, 2x2), det(S, 3x3), 2, 3)", "--in", &m])),
        9
    );
}

#[test]
fn exit_code_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let e = empty.to_str().unwrap();
    assert_eq!(code(&run(&["rate", "--obs", e, "--snr", "5", "--rank", "2"])), 10);
    assert_eq!(code(&run(&["rate", "--obs", e, "--snr=-1", "--rank", "2"])), 10);
    assert_eq!(code(&run(&["--bind", "nofile", "formula", "--model", WISHART, "--P", "2"])), 10);
    assert_eq!(code(&run(&["simulate", "--model", "gC(2, 2)", "--trials", "0", "--P", "2"])), 10);
}
