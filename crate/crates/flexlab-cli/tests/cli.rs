//! End-to-end tests of the flexlab binary: exit-code contract, report text,
//! JSON schema conformance, and file round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn flexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, instance: &Value) {
    let validator = jsonschema::validator_for(&schema(schema_name)).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

fn json_report(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.push("--json");
    let out = flexlab(&full);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    serde_json::from_str(&stdout(&out)).expect("report parses")
}

fn temp_dir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn analyze_classifies_the_builtins() {
    let out = flexlab(&["analyze", "builtin:tetrahedron"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("first-order rigid, nontrivial flex dim 0, stress dim 0"));

    let out = flexlab(&["analyze", "builtin:subdivided-tetrahedron"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("first-order nonrigid, nontrivial flex dim 1, stress dim 1"));

    let out = flexlab(&["analyze", "builtin:subdivided-tetrahedron", "--exact"]);
    assert!(stdout(&out).contains("exact: rank 8, nontrivial flex dim 1, stress dim 1"));
}

#[test]
fn malformed_json_exits_2_with_position() {
    let dir = temp_dir();
    let path = write_temp(&dir, "bad.json", "{\"schema\": \"flexlab.framework.v1\",");
    let out = flexlab(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("parse error at line"));
}

#[test]
fn framework_validation_failures_exit_2() {
    let dir = temp_dir();
    let file = json!({
        "schema": "flexlab.framework.v1",
        "vertices": [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        "edges": [[0, 5]]
    });
    let path = write_temp(&dir, "bad_edge.json", &file.to_string());
    let out = flexlab(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("out of range"));
}

#[test]
fn unknown_builtin_lists_the_available_names() {
    let out = flexlab(&["analyze", "builtin:moebius"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("tetrahedron"));
}

#[test]
fn extend_reports_the_obstruction() {
    let out = flexlab(&[
        "extend",
        "builtin:subdivided-tetrahedron",
        "--flex",
        "0",
        "--order",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("OBSTRUCTED at order 2"));
    assert!(text.contains("stress certificate"));
    assert!(text.contains("stress energy"));
}

#[test]
fn extend_walks_the_hinge_to_order_4() {
    let out = flexlab(&["extend", "builtin:hinge", "--flex", "0", "--order", "4"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("extended to order 4"));
}

#[test]
fn extend_accepts_a_translation_field_file() {
    let dir = temp_dir();
    let field = json!({
        "schema": "flexlab.flexfield.v1",
        "vectors": vec![[1.0, 0.5, -0.25]; 4]
    });
    let path = write_temp(&dir, "translation.json", &field.to_string());
    let out = flexlab(&[
        "extend",
        "builtin:tetrahedron",
        "--flex-field",
        path.to_str().unwrap(),
        "--order",
        "3",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("extended to order 3"));
}

#[test]
fn extend_rejects_a_non_flex_with_exit_3() {
    let dir = temp_dir();
    let field = json!({
        "schema": "flexlab.flexfield.v1",
        "vectors": [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
    });
    let path = write_temp(&dir, "stretch.json", &field.to_string());
    let out = flexlab(&[
        "extend",
        "builtin:tetrahedron",
        "--flex-field",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("residual gate"));
}

#[test]
fn flex_index_out_of_range_exits_3() {
    let out = flexlab(&["extend", "builtin:hinge", "--flex", "7"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("out of range"));
}

#[test]
fn tangent_extend_prints_the_convergence_table() {
    let out = flexlab(&["tangent-extend", "builtin:hinge-fold-curve"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("log-log slope: 2.0"));
    assert!(text.contains("1.2500e-3"));
}

#[test]
fn tangent_extend_rejects_the_slide_curve_with_exit_4() {
    let out = flexlab(&["tangent-extend", "builtin:inplane-slide-curve"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("(ii) velocity match"));
    assert!(!stderr(&out).contains("(i) nonrigidity"));
}

#[test]
fn curve_without_base_sample_exits_4() {
    let dir = temp_dir();
    let sample = |r: f64| {
        json!({
            "r": r,
            "positions": [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            "flex": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        })
    };
    let file = json!({
        "schema": "flexlab.curve.v1",
        "edges": [[0, 1]],
        "samples": [sample(-1.0), sample(0.5), sample(1.0)]
    });
    let path = write_temp(&dir, "no_base.json", &file.to_string());
    let out = flexlab(&["tangent-extend", path.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("no base sample"));
}

#[test]
fn tangent_extend_writes_the_csv_table() {
    let dir = temp_dir();
    let csv = dir.path().join("table.csv");
    let out = flexlab(&[
        "tangent-extend",
        "builtin:hinge-fold-curve",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("h,residual\n"));
    assert_eq!(text.lines().count(), 5);
    assert!(!text.contains('\r'));
}

#[test]
fn surface_reports_residual_maxima() {
    let out = flexlab(&["surface", "builtin:plane-tilt-jet", "--order", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("order 2"));

    let out = flexlab(&["surface", "builtin:plane-normal-bump", "--order", "2"]);
    let text = stdout(&out);
    let order2 = text.lines().find(|l| l.starts_with("order 2")).unwrap();
    assert!(order2.contains("3.61"), "{order2}");
}

#[test]
fn surface_dumps_interior_residual_arrays_as_csv() {
    let dir = temp_dir();
    let csv = dir.path().join("residuals.csv");
    let out = flexlab(&[
        "surface",
        "builtin:plane-normal-bump",
        "--order",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("order,i,j,u,v,res_uu,res_uv,res_vv\n"));
    // Two orders over a 21x21 grid's 19x19 interior, plus the header.
    assert_eq!(text.lines().count(), 1 + 2 * 19 * 19);
    assert!(!text.contains('\r'));
}

#[test]
fn degenerate_grid_exits_5() {
    let dir = temp_dir();
    // x(u, v) = (u, u, 0): rank-deficient everywhere.
    let n = 4;
    let axis: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let positions: Vec<Vec<[f64; 3]>> = (0..n)
        .map(|i| (0..n).map(|_| [i as f64, i as f64, 0.0]).collect())
        .collect();
    let file = json!({
        "schema": "flexlab.grid.v1",
        "u": axis,
        "v": axis,
        "positions": positions
    });
    let path = write_temp(&dir, "degenerate.json", &file.to_string());
    let out = flexlab(&["surface", path.to_str().unwrap()]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("immersion failure"));
}

#[test]
fn missing_jet_order_exits_5() {
    let out = flexlab(&["surface", "builtin:cylinder-killing", "--order", "3"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("jet order 3 missing"));
}

#[test]
fn make_curve_writes_a_curve_the_pipeline_accepts() {
    let dir = temp_dir();
    let path = dir.path().join("fold.json");
    let out = flexlab(&[
        "make-curve",
        "builtin:hinge",
        "--flex",
        "0",
        "--steps",
        "4",
        "--h",
        "1e-3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("max relative squared-length drift"));

    let curve: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid("curve.schema.json", &curve);

    let out = flexlab(&["tangent-extend", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
}

#[test]
fn make_curve_reports_no_finite_motion_with_exit_6() {
    let out = flexlab(&[
        "make-curve",
        "builtin:subdivided-tetrahedron",
        "--flex",
        "0",
    ]);
    assert_eq!(code(&out), 6);
    assert!(stderr(&out).contains("no finite motion found along flex 0"));
}

#[test]
fn make_curve_on_a_rigid_input_exits_3() {
    let out = flexlab(&["make-curve", "builtin:tetrahedron", "--flex", "0"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("no nontrivial flex to follow"));
}

#[test]
fn json_reports_validate_against_the_schema_for_every_builtin() {
    for name in ["tetrahedron", "subdivided-tetrahedron", "hinge"] {
        let input = format!("builtin:{name}");
        assert_valid("report.schema.json", &json_report(&["analyze", &input]));
        assert_valid(
            "report.schema.json",
            &json_report(&["analyze", &input, "--exact"]),
        );
        if name != "tetrahedron" {
            assert_valid(
                "report.schema.json",
                &json_report(&["extend", &input, "--flex", "0", "--order", "2"]),
            );
        }
    }
    assert_valid(
        "report.schema.json",
        &json_report(&["tangent-extend", "builtin:hinge-fold-curve"]),
    );
    for name in ["plane-tilt-jet", "plane-normal-bump", "cylinder-killing"] {
        let input = format!("builtin:{name}");
        assert_valid("report.schema.json", &json_report(&["surface", &input]));
    }
    let dir = temp_dir();
    let path = dir.path().join("curve.json");
    assert_valid(
        "report.schema.json",
        &json_report(&[
            "make-curve",
            "builtin:hinge",
            "--steps",
            "2",
            "--out",
            path.to_str().unwrap(),
        ]),
    );
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = flexlab(&["analyze", "builtin:subdivided-tetrahedron", "--json"]);
    let b = flexlab(&["analyze", "builtin:subdivided-tetrahedron", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn file_input_round_trips_to_the_builtin_digest() {
    // The integer tetrahedron written out by hand must canonicalize to the
    // same digest as the builtin, edge order and all.
    let dir = temp_dir();
    let file = json!({
        "schema": "flexlab.framework.v1",
        "vertices": [
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0]
        ],
        "edges": [[3, 2], [1, 3], [2, 1], [0, 3], [2, 0], [1, 0]]
    });
    let path = write_temp(&dir, "tetra.json", &file.to_string());
    let from_file = json_report(&["analyze", path.to_str().unwrap()]);
    let from_builtin = json_report(&["analyze", "builtin:tetrahedron"]);
    assert_eq!(
        from_file["input"]["digest"],
        from_builtin["input"]["digest"]
    );
    assert_eq!(from_file["payload"], from_builtin["payload"]);
}

#[test]
fn tolerance_override_is_echoed() {
    let report = json_report(&["analyze", "builtin:hinge", "--tol", "1e-8:1e-11"]);
    assert_eq!(report["policy"]["rel_tol"].as_f64().unwrap(), 1e-8);
    assert_eq!(report["policy"]["abs_tol"].as_f64().unwrap(), 1e-11);
}
