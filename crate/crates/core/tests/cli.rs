use std::path::Path;
use std::process::{Command, Output};

use fftu::cli::signal_io::{read_signal, write_signal};
use fftu::cli::{generate_input, RunReport};
use fftu::{TensorShape, TensorSignal};
use num_complex::Complex64;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fftu");

fn fftu(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FFTU_SERIAL")
        .output()
        .expect("spawn fftu")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_report(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--report", "json"]);
    let out = fftu(&all);
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn verify_small_cube() {
    let out = fftu(&[
        "--shape", "8x8x8", "--grid", "2x2x2", "--verify", "--seed", "13",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json_report(&[
        "--shape", "8x8x8", "--grid", "2x2x2", "--verify", "--seed", "13",
    ]);
    let v = &report["verification"];
    assert_eq!(v["passed"], true);
    assert!(v["residual"].as_f64().unwrap() <= 1e-11);
}

#[test]
fn illegal_grid_exits_2() {
    let out = fftu(&["--shape", "8x8x8", "--grid", "4x1x1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("16") && err.contains("8"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fftu(&["--shape", "8xq"]).status.code(), Some(2));
    assert_eq!(fftu(&[]).status.code(), Some(2));
    assert_eq!(
        fftu(&["--shape", "8", "--iterations", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        fftu(&["--shape", "8", "--inverse", "--roundtrip"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        fftu(&["--shape", "8x8", "--grid", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn oracle_cap_exits_3() {
    let out = fftu(&["--shape", "64x64", "--verify", "--oracle-cap", "1024"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn single_processor_has_no_communication() {
    let r = json_report(&["--shape", "64x64", "--grid", "1x1", "--iterations", "100"]);
    assert_eq!(r["iterations"], 100);
    assert_eq!(r["trace"]["communicate_supersteps"], 0);
    assert_eq!(r["trace"]["syncs_charged"], 0);
    assert!(r.get("verification").is_none());
}

#[test]
fn json_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.json");
    let r1 = json_report(&["--shape", "16x16", "--grid", "1x1", "--verify"]);
    std::fs::write(&base, r1.to_string()).unwrap();
    let r2 = json_report(&[
        "--shape",
        "16x16",
        "--grid",
        "4x2",
        "--roundtrip",
        "--verify",
        "--iterations",
        "3",
        "--baseline",
        base.to_str().unwrap(),
    ]);
    let validator = schema("run_report.schema.json");
    for r in [&r1, &r2] {
        let errors: Vec<String> = validator.iter_errors(r).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }
    assert_eq!(r2["speedup"]["baseline_nprocs"], 1);
    assert_eq!(r2["trace"]["communicate_supersteps"], 2);
    let parsed: RunReport = serde_json::from_value(r2).unwrap();
    assert_eq!(parsed.nprocs, 8);
}

#[test]
fn speedup_table_in_text_report() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.json");
    let r = json_report(&["--shape", "16x16"]);
    std::fs::write(&base, r.to_string()).unwrap();
    let out = fftu(&[
        "--shape",
        "16x16",
        "--grid",
        "2x2",
        "--baseline",
        base.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("speedup"), "{text}");
}

#[test]
fn reports_differ_only_in_timing() {
    let strip = |mut v: Value| {
        for key in ["wall_time_s", "time_per_iteration_s", "gflops"] {
            v.as_object_mut().unwrap().remove(key);
        }
        v
    };
    let args = ["--shape", "8x8", "--grid", "2x2", "--verify", "--seed", "4"];
    assert_eq!(strip(json_report(&args)), strip(json_report(&args)));
}

#[test]
fn trace_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.json");
    let out = fftu(&[
        "--shape",
        "16x16",
        "--grid",
        "2x4",
        "--trace",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let errors: Vec<String> = schema("trace.schema.json")
        .iter_errors(&trace)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(trace["nprocs"], 8);
    assert_eq!(trace["supersteps"].as_array().unwrap().len(), 3);
    assert_eq!(trace["supersteps"][1]["kind"], "communicate");
    assert_eq!(trace["supersteps"][1]["max_words_sent"], 32);
}

#[test]
fn serial_env_is_honoured() {
    let r = json_report(&["--shape", "8x8", "--grid", "2x2", "--serial"]);
    assert_eq!(r["execution"], "serial");
    let out = Command::new(BIN)
        .args(["--shape", "8x8", "--grid", "2x2", "--report", "json"])
        .env("FFTU_SERIAL", "1")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["execution"], "serial");
    assert_eq!(
        json_report(&["--shape", "8x8", "--grid", "2x2"])["execution"],
        "parallel"
    );
}

#[test]
fn delta_file_transforms_to_ones() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("delta.fftu");
    let output = dir.path().join("ones.fftu");
    let mut data = vec![Complex64::default(); 4];
    data[0] = Complex64::new(1.0, 0.0);
    write_signal(
        &input,
        &TensorSignal::new(TensorShape::new([4]).unwrap(), data).unwrap(),
    )
    .unwrap();
    let out = fftu(&[
        "--input",
        input.to_str().unwrap(),
        "--grid",
        "2",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let y = read_signal(&output).unwrap();
    assert_eq!(y.shape().dims(), &[4]);
    assert!(
        y.data().iter().all(|v| *v == Complex64::new(1.0, 0.0)),
        "{:?}",
        y.data()
    );
}

#[test]
fn inverse_of_written_output_recovers_input() {
    let dir = tempfile::tempdir().unwrap();
    let fwd = dir.path().join("fwd.fftu");
    let back = dir.path().join("back.fftu");
    let out = fftu(&[
        "--shape",
        "16x4",
        "--grid",
        "2x2",
        "--seed",
        "9",
        "--output",
        fwd.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = fftu(&[
        "--input",
        fwd.to_str().unwrap(),
        "--grid",
        "4x1",
        "--inverse",
        "--output",
        back.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let x = generate_input(&TensorShape::new([16, 4]).unwrap(), 9);
    let y = read_signal(&back).unwrap();
    assert!(fftu::kernel::relative_l2(y.data(), x.data()) <= 1e-12);
}

#[test]
fn bad_input_file_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.fftu");
    std::fs::write(&path, b"FFTV\x01\x00\x00\x00").unwrap();
    let out = fftu(&["--input", path.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("at byte 0"), "{}", stderr(&out));
}

#[test]
fn generator_test_vector() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/generator_vectors.json");
    let vectors: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    for case in vectors.as_array().unwrap() {
        let dims: Vec<usize> = serde_json::from_value(case["shape"].clone()).unwrap();
        let seed = case["seed"].as_u64().unwrap();
        let x = generate_input(&TensorShape::new(dims).unwrap(), seed);
        for (v, bits) in x.data().iter().zip(case["bits"].as_array().unwrap()) {
            let parse = |b: &Value| {
                u64::from_str_radix(b.as_str().unwrap().trim_start_matches("0x"), 16).unwrap()
            };
            assert_eq!(v.re.to_bits(), parse(&bits[0]));
            assert_eq!(v.im.to_bits(), parse(&bits[1]));
        }
    }
}
