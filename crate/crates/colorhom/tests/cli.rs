//! End-to-end runs of the colorhom binary: exit codes, error wording,
//! output formats, and the synth → fit → apply → eval pipeline.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_colorhom")
}

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Workdir {
        let dir = std::env::temp_dir().join(format!("colorhom-cli-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        Workdir(dir)
    }

    fn path(&self, name: &str) -> String {
        self.0.join(name).to_str().unwrap().to_owned()
    }

    fn write(&self, name: &str, contents: &str) -> String {
        let p = self.0.join(name);
        fs::write(&p, contents).unwrap();
        p.to_str().unwrap().to_owned()
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "colorhom {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SQUARE_CSV: &str = "R,G,B\n0.2,0.3,0.5\n0.6,0.1,0.3\n0.25,0.55,0.2\n0.4,0.4,0.2\n0.1,0.2,0.7\n";

#[test]
fn fit_of_identical_sets_is_identity() {
    let w = Workdir::new("fit-id");
    let src = w.write("chart.csv", SQUARE_CSV);
    let out_path = w.path("fit.json");
    for method in ["ls", "als", "ransac"] {
        run_ok(&["fit", "--src", &src, "--ref", &src, "--method", method, "--out", &out_path]);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
        assert!(v["method"].as_str().unwrap().starts_with("least_squares")
            || v["method"].as_str().unwrap().starts_with("homography"));
        let m: Vec<f64> = v["matrix"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert_eq!(m.len(), 9);
        let identity = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in m.iter().zip(identity) {
            assert!((a - b).abs() < 1e-9, "method {method}: matrix {m:?}");
        }
    }
}

#[test]
fn fit_json_carries_solver_diagnostics() {
    let w = Workdir::new("fit-diag");
    let src = w.write("chart.csv", SQUARE_CSV);
    let out_path = w.path("fit.json");

    run_ok(&["fit", "--src", &src, "--ref", &src, "--method", "als", "--out", &out_path]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["method"], "homography_als");
    let als = v["als"].as_object().unwrap();
    let mut keys: Vec<&String> = als.keys().collect();
    keys.sort();
    assert_eq!(keys, ["D", "H", "converged", "iterations", "residuals"]);
    assert_eq!(als["converged"], true);

    run_ok(&["fit", "--src", &src, "--ref", &src, "--method", "ransac", "--out", &out_path]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["method"], "homography_ransac");
    let r = v["ransac"].as_object().unwrap();
    let mut keys: Vec<&String> = r.keys().collect();
    keys.sort();
    assert_eq!(keys, ["H", "consensus_error", "inlier_mask", "trials_used"]);
    assert!(v["refit"].is_object());
    assert_eq!(
        r["inlier_mask"].as_array().unwrap().iter().filter(|b| b.as_bool().unwrap()).count(),
        5
    );
}

#[test]
fn apply_with_identity_matrix_preserves_csv_bytes() {
    let w = Workdir::new("apply-id");
    let src = w.write("chart.csv", SQUARE_CSV);
    let matrix = w.write("id.json", "[1, 0, 0, 0, 1, 0, 0, 0, 1]\n");
    let out_path = w.path("out.csv");
    run_ok(&["apply", "--matrix", &matrix, "--src", &src, "--out", &out_path]);
    assert_eq!(fs::read_to_string(&out_path).unwrap(), SQUARE_CSV);
}

#[test]
fn apply_accepts_fit_output_as_matrix() {
    let w = Workdir::new("apply-fit");
    let src = w.write("chart.csv", SQUARE_CSV);
    let fit_path = w.path("fit.json");
    run_ok(&["fit", "--src", &src, "--ref", &src, "--method", "ls", "--out", &fit_path]);
    let out_path = w.path("out.csv");
    run_ok(&["apply", "--matrix", &fit_path, "--src", &src, "--out", &out_path]);
}

#[test]
fn csv_round_trips_losslessly_through_apply() {
    // values chosen to need all 17 significant digits
    let w = Workdir::new("csv-rt");
    let src = w.write(
        "v.csv",
        "R,G,B\n0.1,0.30000000000000004,0.123456789012345678\n0.7071067811865476,0.9999999999999999,1.0000000000000002\n3.141592653589793,0.5,0.25\n0.125,0.2,0.30000000000000004\n",
    );
    let matrix = w.write("id.json", "[1,0,0,0,1,0,0,0,1]");
    let a = w.path("a.csv");
    let b = w.path("b.csv");
    run_ok(&["apply", "--matrix", &matrix, "--src", &src, "--out", &a]);
    run_ok(&["apply", "--matrix", &matrix, "--src", &a, "--out", &b]);
    // first pass normalizes formatting; after that the file is a fixed point
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let first = fs::read_to_string(&a).unwrap();
    assert!(first.contains("0.30000000000000004"));
    assert!(first.contains("0.7071067811865476"));
    assert!(first.contains("1.0000000000000002"));
}

#[test]
fn synth_pipeline_eval_dominates_least_squares() {
    let w = Workdir::new("pipeline");
    run_ok(&["synth", "--seed", "7", "--noise-sigma", "0.01", "--out-dir", &w.path("data")]);
    let report_path = w.path("report.json");
    let out = run_ok(&[
        "eval",
        "--observed", &w.path("data/observed.csv"),
        "--shading-corrected", &w.path("data/shading_corrected.csv"),
        "--ref", &w.path("data/reference.csv"),
        "--methods", "ls,als",
        "--json", &report_path,
    ]);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("least_squares"), "table: {table}");
    assert!(table.contains("homography_als"));

    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let stat = |method: &str, field: &str| v[method]["delta_e"][field].as_f64().unwrap();
    for field in ["mean", "median", "q95", "max"] {
        assert!(
            stat("homography_als", field) < stat("least_squares", field),
            "{field}: homography {} vs least squares {}",
            stat("homography_als", field),
            stat("least_squares", field)
        );
    }
    assert!(v["least_squares"]["matrix"].as_array().unwrap().len() == 9);
    assert!(v["least_squares"]["clamped"].is_u64());
}

#[test]
fn eval_accepts_gray_measurements_for_shading_correction() {
    let w = Workdir::new("eval-gray");
    // observed rows are the reference scaled per-row; the gray target scales
    // identically, so division reconstructs the chart up to one global factor
    let reference = w.write("ref.csv", SQUARE_CSV);
    let build = |scales: &[f64]| {
        let mut obs = String::from("R,G,B\n");
        let mut gray = String::from("R,G,B\n");
        for (line, s) in SQUARE_CSV.lines().skip(1).zip(scales) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            obs.push_str(&format!("{},{},{}\n", v[0] * s, v[1] * s, v[2] * s));
            gray.push_str(&format!("{},{},{}\n", 0.9 * s, 0.9 * s, 0.9 * s));
        }
        (obs, gray)
    };

    // per-row shading: the pipeline runs and reports every requested method
    let (obs, gray) = build(&[0.5, 1.5, 0.8, 1.2, 1.0]);
    let obs = w.write("obs.csv", &obs);
    let gray = w.write("gray.csv", &gray);
    let report_path = w.path("report.json");
    run_ok(&[
        "eval",
        "--observed", &obs,
        "--gray", &gray,
        "--ref", &reference,
        "--methods", "ls,als",
        "--json", &report_path,
    ]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(v["homography_als"]["delta_e"]["max"].as_f64().unwrap().is_finite());
    assert!(v["least_squares"]["clamped"].is_u64());

    // uniform shading: gray division keeps the observed exposure, and the
    // fitted gauge cancels it exactly, so the correction is perfect
    let (obs, gray) = build(&[1.3; 5]);
    let obs = w.write("obs-u.csv", &obs);
    let gray = w.write("gray-u.csv", &gray);
    run_ok(&[
        "eval",
        "--observed", &obs,
        "--gray", &gray,
        "--ref", &reference,
        "--methods", "als",
        "--json", &report_path,
    ]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(v["homography_als"]["delta_e"]["max"].as_f64().unwrap() < 1e-6);
}

#[test]
fn eval_without_shading_data_is_a_protocol_error() {
    let w = Workdir::new("eval-noshading");
    let src = w.write("chart.csv", SQUARE_CSV);
    let out = run(&["eval", "--observed", &src, "--ref", &src]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr_of(&out).contains("protocol inputs incomplete"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn ransac_fit_on_degenerate_data_reports_no_consensus() {
    let w = Workdir::new("ransac-degen");
    // first three chromaticities sit on the p = q line, so every 4-point
    // sample is degenerate
    let src = w.write(
        "degen.csv",
        "R,G,B\n0.2,0.2,0.6\n0.3,0.3,0.4\n0.4,0.4,0.2\n0.6,0.2,0.2\n",
    );
    let out = run(&["fit", "--src", &src, "--ref", &src, "--method", "ransac", "--out", &w.path("f.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("no consensus"), "stderr: {}", stderr_of(&out));
}

#[test]
fn input_errors_exit_2_with_pinned_messages() {
    let w = Workdir::new("input-errors");
    let good = w.write("good.csv", SQUARE_CSV);

    let bad_fields = w.write("short.csv", "R,G,B\n0.5,0.5\n");
    let out = run(&["fit", "--src", &bad_fields, "--ref", &good, "--method", "ls", "--out", &w.path("f.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("line 2: expected 3 fields"), "stderr: {}", stderr_of(&out));

    let bad_byte = w.write("byte.csv", "R,G,B\n12,300,80\n1,2,3\n4,5,6\n7,8,9\n");
    let out = run(&["fit", "--src", &bad_byte, "--ref", &good, "--method", "ls",
                    "--encoding", "srgb8", "--out", &w.path("f.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("invalid 8-bit value"), "stderr: {}", stderr_of(&out));

    let short = w.write("three.csv", "R,G,B\n0.1,0.2,0.3\n0.4,0.5,0.6\n0.7,0.8,0.9\n");
    let out = run(&["fit", "--src", &short, "--ref", &short, "--method", "als", "--out", &w.path("f.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("insufficient points"), "stderr: {}", stderr_of(&out));

    let gray0 = w.write("gray0.csv", "R,G,B\n0.5,0.5,0.5\n0,0.5,0.5\n0.5,0.5,0.5\n0.5,0.5,0.5\n0.5,0.5,0.5\n");
    let out = run(&["eval", "--observed", &good, "--gray", &gray0, "--ref", &good]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("invalid gray reference"), "stderr: {}", stderr_of(&out));

    let out = run(&["eval", "--observed", &good, "--shading-corrected", &good,
                    "--ref", &good, "--methods", "ls,super"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown method"), "stderr: {}", stderr_of(&out));

    let out = run(&["fit", "--src", &good, "--ref", &good, "--method", "ls",
                    "--out", &w.path("f.json"), "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["fit", "--src", &w.path("missing.csv"), "--ref", &good, "--method", "ls", "--out", &w.path("f.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("missing.csv"), "stderr: {}", stderr_of(&out));
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["fit", "--help"]).status.code(), Some(0));
}

#[test]
fn demo_theorem_reports_tiny_deviation() {
    let out = run_ok(&["demo-theorem"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.starts_with("max conjugation deviation over 1000 samples:"),
        "stdout: {text}"
    );
    let value: f64 = text.rsplit(' ').next().unwrap().trim().parse().unwrap();
    assert!(value < 1e-9, "deviation {value}");
}

#[test]
fn synth_truth_json_has_expected_shape() {
    let w = Workdir::new("synth-shape");
    run_ok(&["synth", "--seed", "3", "--m-mode", "random-diagonal", "--n-patches", "10",
             "--out-dir", &w.path("data")]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(w.path("data/truth.json")).unwrap()).unwrap();
    assert_eq!(v["mode"], "random-diagonal");
    assert_eq!(v["seed"], 3);
    assert_eq!(v["M"].as_array().unwrap().len(), 9);
    assert_eq!(v["D"].as_array().unwrap().len(), 10);
    // diagonal mode: off-diagonal entries are exactly zero
    let m: Vec<f64> = v["M"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (i, v) in m.iter().enumerate() {
        if i % 4 != 0 {
            assert_eq!(*v, 0.0);
        }
    }
    let observed = fs::read_to_string(w.path("data/observed.csv")).unwrap();
    assert_eq!(observed.lines().count(), 11);
}
