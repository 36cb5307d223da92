use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn varjet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varjet"))
        .args(args)
        .current_dir(models())
        .env_remove("VARJET_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn euler_lagrange_of_the_wave_model() {
    let out = varjet(&["el", "wave.model"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), serde_json::json!({ "E": { "u": "-u_tt + u_xx" } }));
}

#[test]
fn latex_output() {
    let out = varjet(&["el", "--latex", "wave.model"]);
    assert_eq!(json(&out)["E"]["u"], "-u_{tt} + u_{xx}");
}

#[test]
fn order_of_kdv_density() {
    let out = varjet(&["order", "kdv.model"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3");
}

#[test]
fn noether_energy_current() {
    let out = varjet(&["noether", "wave.model", "--symmetry", "time"]);
    assert_eq!(out.status.code(), Some(0));
    let j = &json(&out)["currents"]["time"];
    assert_eq!(j["J"]["t"], "1/2*u_t^2 + 1/2*u_x^2");
    assert_eq!(j["J"]["x"], "-u_t*u_x");
    assert_eq!(j["on_shell_conserved"], true);
}

#[test]
fn noether_on_a_non_symmetry_is_a_failed_check() {
    let out = varjet(&["noether", "klein_gordon.model"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["currents"]["shift"]["error"].is_string());
}

#[test]
fn symmetry_verdicts_carry_witnesses() {
    let out = varjet(&["symmetry", "klein_gordon.model"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["symmetries"]["time"]["is_symmetry"], true);
    assert_eq!(v["symmetries"]["shift"]["is_symmetry"], false);
    assert_eq!(v["symmetries"]["shift"]["witness"], Value::Null);
}

#[test]
fn variation_splits_into_interior_and_boundary() {
    let out = varjet(&["variation", "wave.model", "--symmetry", "shift"]);
    let v = &json(&out)["variations"]["shift"];
    assert_eq!(v["interior"], "-u_tt + u_xx");
    assert_eq!(v["boundary"]["t"], "u_t");
    assert_eq!(v["boundary"]["x"], "-u_x");
}

#[test]
fn helmholtz_verdicts_exit_zero() {
    let yes = varjet(&["helmholtz", "kdv.model"]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(json(&yes)["variational"], true);
    let no = varjet(&["helmholtz", "transport.model"]);
    assert_eq!(no.status.code(), Some(0));
    assert_eq!(json(&no)["variational"], false);
}

#[test]
fn differentials_of_forms() {
    let out = varjet(&["dv", "bicomplex.model"]);
    assert_eq!(json(&out)["result"]["bidegree"], serde_json::json!([2, 0]));
    let out = varjet(&["dh", "wave.model"]);
    let v = json(&out);
    assert_eq!(v["input"]["bidegree"], serde_json::json!([0, 2]));
    assert_eq!(v["result"]["terms"], serde_json::json!([]));
}

#[test]
fn glue_check_exit_codes() {
    let ok = varjet(&["glue-check", "glue.model"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["glued"], true);
    let bad = varjet(&["glue-check", "glue_mismatch.model"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["pieces"], serde_json::json!([0, 1]));
}

#[test]
fn u1_holonomy_phase() {
    let out = varjet(&["holonomy", "holonomy_u1.model"]);
    assert_eq!(out.status.code(), Some(0));
    let z = &json(&out)["matrix"][0][0];
    let (re, im) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
    assert!((re - 6f64.cos()).abs() < 1e-8 && (im + 6f64.sin()).abs() < 1e-8);
}

#[test]
fn axioms_embed_the_seed() {
    let out = varjet(&["axioms", "--suite", "jet", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["suites"][0]["seed"], 11);
    let env = Command::new(env!("CARGO_BIN_EXE_varjet"))
        .args(["axioms", "--suite", "jet"])
        .env("VARJET_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(env.stdout, out.stdout);
}

#[test]
fn sheaf_suite_passes() {
    let out = varjet(&["axioms", "--suite", "sheaf"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(varjet(&["el", "missing.model"]).status.code(), Some(2));
    assert_eq!(varjet(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(varjet(&["axioms", "--suite", "bogus"]).status.code(), Some(2));
    let dir = std::env::temp_dir().join(format!("varjet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.model");
    std::fs::write(&bad, "[signature]\nbase: x\nfields: u\n[lagrangian]\ndensity: u_x + * 2\n").unwrap();
    let out = varjet(&["el", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5, column 16"));
}
