use serde_json::Value;
use varjet_web::{conserved_current, field_equations, holonomy_sweep};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn wave_equation() {
    let v = parse(field_equations("t x", "u", "", "1/2*(u_t^2 - u_x^2)"));
    assert_eq!(v["E"]["u"], "-u_tt + u_xx");
    assert_eq!(v["order"], 1);
    assert_eq!(v["variational"], true);
}

#[test]
fn parse_errors_are_reported() {
    let v = parse(field_equations("x", "u", "", "u_x +"));
    assert!(v["error"].as_str().unwrap().contains("syntax"));
    let v = parse(field_equations("x x", "u", "", "u"));
    assert!(v["error"].is_string());
}

#[test]
fn energy_current() {
    let v = parse(conserved_current("t x", "u", "", "1/2*(u_t^2 - u_x^2)", "u_t"));
    assert_eq!(v["is_symmetry"], true);
    assert_eq!(v["J"]["t"], "1/2*u_t^2 + 1/2*u_x^2");
    let v = parse(conserved_current("t x", "u", "m", "1/2*(u_t^2 - u_x^2 - m^2*u^2)", "1"));
    assert_eq!(v["is_symmetry"], false);
    assert_eq!(v["J"], Value::Null);
}

#[test]
fn abelian_sweep_tracks_the_flux() {
    let v = parse(holonomy_sweep("U1", 1.0, 2.0, 5));
    let area = v["area"].as_f64().expect(&v.to_string());
    assert!((area + 32.0 / 15.0).abs() < 1e-6, "{area}");
    for p in v["points"].as_array().unwrap() {
        let (phase, exact) = (p["phase"].as_f64().unwrap(), p["exact_phase"].as_f64().unwrap());
        let diff = (phase - exact).rem_euclid(std::f64::consts::TAU);
        assert!(diff.min(std::f64::consts::TAU - diff) < 1e-4, "{phase} vs {exact}");
    }
}

#[test]
fn nonabelian_sweep_starts_at_identity() {
    let v = parse(holonomy_sweep("SU2", 0.8, 3.0, 4));
    let points = v["points"].as_array().unwrap();
    assert_eq!(points[0]["distance_from_identity"], 0.0);
    assert!(points[3]["distance_from_identity"].as_f64().unwrap() > 1e-3);
    assert!(parse(holonomy_sweep("GL3", 1.0, 1.0, 3))["error"].is_string());
}

