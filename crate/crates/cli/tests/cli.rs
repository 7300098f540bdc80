//! End-to-end tests of the `tvb` binary: exit codes, report shapes, and
//! determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tvb"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tvb-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn write_tangent_p2(dir: &Path) -> (String, String) {
    let out = run(&["example", "--name", "tangent-pn", "--n", "2", "--out", &path(dir)]);
    assert_eq!(code(&out), 0);
    (path(&dir.join("fan.json")), path(&dir.join("bundle.json")))
}

#[test]
fn tangent_p2_classify_and_positivity_succeed() {
    let dir = tmpdir("tangent");
    let (fan, bundle) = write_tangent_p2(&dir);

    let out = run(&["validate-fan", "--fan", &fan]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["complete"], Value::Bool(true));

    let out = run(&["classify", "--fan", &fan, "--bundle", &bundle]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["integral"], Value::Bool(true));
    assert_eq!(v["pieces"].as_array().unwrap().len(), 3);
    assert_eq!(v["seed"], Value::from(0));

    let out = run(&["positivity", "--fan", &fan, "--bundle", &bundle]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["nef"], Value::Bool(true));
    assert_eq!(v["ample"], Value::Bool(true));
    assert_eq!(v["globally_generated"], Value::Bool(true));
    for wall in v["walls"].as_array().unwrap() {
        assert_eq!(wall["degrees"], serde_json::json!(["2", "1"]));
    }
}

#[test]
fn classify_reports_are_deterministic() {
    let dir = tmpdir("determinism");
    let (fan, bundle) = write_tangent_p2(&dir);
    let a = run(&["classify", "--fan", &fan, "--bundle", &bundle, "--seed", "7"]);
    let b = run(&["classify", "--fan", &fan, "--bundle", &bundle, "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn incompatible_bundle_exits_2() {
    let dir = tmpdir("incompatible");
    let (fan, data) = tvb_core::fixtures::three_lines_incompatible();
    let fan_path = dir.join("fan.json");
    let bundle_path = dir.join("bundle.json");
    fs::write(&fan_path, fan.to_json()).unwrap();
    fs::write(&bundle_path, data.to_json()).unwrap();
    let out = run(&["classify", "--fan", &path(&fan_path), "--bundle", &path(&bundle_path)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn negative_divisor_fails_positivity_with_exit_2() {
    let dir = tmpdir("negdivisor");
    let out = run(&[
        "example", "--name", "line-bundle", "--coeffs=-1,0", "--out", &path(&dir),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "positivity",
        "--fan", &path(&dir.join("fan.json")),
        "--bundle", &path(&dir.join("bundle.json")),
    ]);
    assert_eq!(code(&out), 2);
    let v = stdout_json(&out);
    assert_eq!(v["nef"], Value::Bool(false));
    assert_eq!(v["witnesses"][0]["degree"], Value::from("-1"));
}

#[test]
fn chern_emits_per_cone_polynomials() {
    let dir = tmpdir("chern");
    let (fan, bundle) = write_tangent_p2(&dir);
    let out = run(&["chern", "--fan", &fan, "--bundle", &bundle, "--i", "1"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let cones = v["cones"].as_array().unwrap();
    assert_eq!(cones.len(), 3);
    // c1 on the coordinate cone is x1 + x2
    assert_eq!(
        cones[0]["poly"],
        serde_json::json!([[[0, 1], "1"], [[1, 0], "1"]])
    );
}

#[test]
fn tensor_output_reparses_as_a_bundle() {
    let dir = tmpdir("tensor");
    let (fan, bundle) = write_tangent_p2(&dir);
    let out = run(&[
        "tensor", "--fan", &fan, "--bundle", &bundle, "--with", &bundle,
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["rank"], Value::from(4));
    let bundle_text = serde_json::to_string(&v["bundle"]).unwrap();
    let reparsed = tvb_core::plmap::RayFiltrationData::from_json(&bundle_text).unwrap();
    assert_eq!(reparsed.rank, 4);
}

#[test]
fn cocycle_pair_and_triple() {
    let dir = tmpdir("cocycle");
    let (fan, bundle) = write_tangent_p2(&dir);
    let out = run(&["cocycle", "--fan", &fan, "--bundle", &bundle, "--cones", "0,1"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["regular"], Value::Bool(true));
    assert_eq!(v["matrix"]["rank"], Value::from(2));

    let out = run(&["cocycle", "--fan", &fan, "--bundle", &bundle, "--cones", "0,1,2"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["cocycle_condition"], Value::Bool(true));
}

#[test]
fn sp_check_accepts_demo_and_rejects_tamper() {
    let dir = tmpdir("spcheck");
    let out = run(&["example", "--name", "symplectic-demo", "--out", &path(&dir)]);
    assert_eq!(code(&out), 0);
    let fan = path(&dir.join("fan.json"));
    let cert = path(&dir.join("certificate.json"));
    let out = run(&["sp-check", "--fan", &fan, "--cert", &cert]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["accepted"], Value::Bool(true));

    // tamper with one label
    let mut parsed = tvb_core::classical::Certificate::from_json(
        &fs::read_to_string(&cert).unwrap(),
    )
    .unwrap();
    parsed.ray_flags[0].labels = vec![tvb_core::rat::rat(3), tvb_core::rat::rat(-3)];
    let bad = path(&dir.join("bad.json"));
    fs::write(&bad, parsed.to_json()).unwrap();
    let out = run(&["sp-check", "--fan", &fan, "--cert", &bad]);
    assert_eq!(code(&out), 2);
    let v = stdout_json(&out);
    assert_eq!(v["accepted"], Value::Bool(false));
    assert_eq!(v["witness"]["ray"], Value::from(0));
}

#[test]
fn malformed_input_exits_1() {
    let dir = tmpdir("malformed");
    let garbage = dir.join("fan.json");
    fs::write(&garbage, "{ not json").unwrap();
    let out = run(&["validate-fan", "--fan", &path(&garbage)]);
    assert_eq!(code(&out), 1);
    let missing = path(&dir.join("missing.json"));
    let out = run(&["validate-fan", "--fan", &missing]);
    assert_eq!(code(&out), 1);
    let out = run(&["example", "--name", "nonsense", "--out", &path(&dir)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn report_goes_to_file_with_out_flag() {
    let dir = tmpdir("outfile");
    let (fan, bundle) = write_tangent_p2(&dir);
    let report = dir.join("report.json");
    let out = run(&[
        "positivity", "--fan", &fan, "--bundle", &bundle, "--out", &path(&report),
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["nef"], Value::Bool(true));
}
