//! Browser bindings: every function takes plain strings and returns JSON text.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use varjet::holonomy::{holonomy, ConnectionForm, Group, GroupElement, HolonomyError, MatrixExpr, Path};
use varjet::jetcalc::EvolutionaryField;
use varjet::smoothset::PlotDomain;
use varjet::symexpr::{parse_expression, BundleSignature, Expr, Rational};
use varjet::variational::{euler_lagrange, helmholtz_check, is_divergence_symmetry, noether_current, Lagrangian};

const SWEEP_STEPS: usize = 1024;
const MAX_SWEEP_STEPS: usize = 16_384;

fn words(s: &str) -> Vec<&str> {
    s.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()).collect()
}

fn signature(base: &str, fields: &str, params: &str) -> Result<BundleSignature, String> {
    BundleSignature::new(&words(base), &words(fields), &words(params)).map_err(|e| e.to_string())
}

fn error(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

fn field_map(sig: &BundleSignature, exprs: &[Expr], latex: bool) -> Value {
    let render = |e: &Expr| if latex { e.to_latex(sig) } else { e.to_text(sig) };
    let map: serde_json::Map<String, Value> =
        sig.field_names().iter().zip(exprs).map(|(f, e)| (f.to_string(), Value::String(render(e)))).collect();
    Value::Object(map)
}

fn base_map(sig: &BundleSignature, exprs: &[Expr]) -> Value {
    let map: serde_json::Map<String, Value> =
        sig.base_names().iter().zip(exprs).map(|(b, e)| (b.to_string(), Value::String(e.to_text(sig)))).collect();
    Value::Object(map)
}

/// Euler–Lagrange expressions, order, Helmholtz verdict and both
/// differentials of `L dx¹…dxᵐ` for a density.
#[wasm_bindgen]
pub fn field_equations(base: &str, fields: &str, params: &str, density: &str) -> String {
    let sig = match signature(base, fields, params) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    let l = match parse_expression(density, &sig) {
        Ok(e) => Lagrangian::new(e),
        Err(e) => return error(format!("density {e}")),
    };
    let e = euler_lagrange(&l, &sig);
    let form = l.as_form(&sig);
    let function = varjet::bicomplex::BigradedForm::function(sig.base_dim(), l.density.clone());
    json!({
        "order": l.order(),
        "E": field_map(&sig, &e.components, false),
        "E_latex": field_map(&sig, &e.components, true),
        "variational": helmholtz_check(&e, &sig).variational,
        "dH_L": function.d_horizontal().to_text(&sig),
        "dV_L_volume": form.d_vertical().to_text(&sig),
    })
    .to_string()
}

/// Divergence-symmetry verdict and Noether current for characteristics
/// given one per field, separated by `;`.
#[wasm_bindgen]
pub fn conserved_current(base: &str, fields: &str, params: &str, density: &str, characteristics: &str) -> String {
    let sig = match signature(base, fields, params) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    let l = match parse_expression(density, &sig) {
        Ok(e) => Lagrangian::new(e),
        Err(e) => return error(format!("density {e}")),
    };
    let parts: Vec<&str> = characteristics.split(';').map(str::trim).collect();
    if parts.len() != sig.field_names().len() {
        return error(format!("expected {} characteristics separated by `;`", sig.field_names().len()));
    }
    let q = match parts.iter().map(|p| parse_expression(p, &sig)).collect::<Result<Vec<_>, _>>() {
        Ok(q) => EvolutionaryField::new(q, &sig).expect("one per field"),
        Err(e) => return error(format!("characteristic {e}")),
    };
    let verdict = is_divergence_symmetry(&l, &q, &sig);
    let current = noether_current(&l, &q, &sig).ok();
    json!({
        "is_symmetry": verdict.is_symmetry,
        "J": current.as_ref().map_or(Value::Null, |j| base_map(&sig, &j.components)),
    })
    .to_string()
}

/// Holonomy around the closed loop `(8 r s(1-s), 8 r s(1-s)(1-2s))` in the
/// plane as the coupling `g` sweeps `[0, g_max]`.
///
/// `U1`: `A = i g/2 (x dy - y dx)`, a constant field strength, so the exact
/// phase is `-g` times the signed loop area.
/// `SU2`: `A = i g (y σ_z dx + x σ_x dy)`, non-abelian.
#[wasm_bindgen]
pub fn holonomy_sweep(group: &str, radius: f64, g_max: f64, samples: usize) -> String {
    let group = match Group::from_name(group) {
        Some(g @ (Group::U1 | Group::SU2)) => g,
        _ => return error("group must be U1 or SU2"),
    };
    if !(radius.is_finite() && g_max.is_finite()) || samples < 2 || samples > 400 {
        return error("radius and coupling must be finite and samples in 2..=400");
    }
    let chart = varjet::holonomy::path_chart();
    let r = match Rational::from_float(radius) {
        Some(r) => Expr::constant(r),
        None => return error("radius is not representable"),
    };
    let bump = parse_expression("8*s*(1 - s)", &chart).expect("fixed text");
    let twist = parse_expression("1 - 2*s", &chart).expect("fixed text");
    let loop_path = match Path::with_sitting_instants(vec![&r * &bump, &(&r * &bump) * &twist]) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    // ∮ x dy over this loop, by the midpoint rule on a fine grid.
    let area: f64 = (0..20_000)
        .map(|k| {
            let s = (k as f64 + 0.5) / 20_000.0;
            let (p, v) = loop_path.at(s);
            p[0] * v[1] / 20_000.0
        })
        .sum();
    let mut points = Vec::with_capacity(samples);
    for k in 0..samples {
        let g = g_max * k as f64 / (samples - 1) as f64;
        let c = match Rational::from_float(g) {
            Some(c) => Expr::constant(c),
            None => return error("coupling is not representable"),
        };
        let (x, y) = (Expr::base(0), Expr::base(1));
        let zero = Expr::zero;
        let comps = match group {
            Group::U1 => {
                let half = c.scale(&Rational::new(1.into(), 2.into()));
                vec![
                    MatrixExpr::new(1, vec![zero()], vec![-&(&half * &y)]),
                    MatrixExpr::new(1, vec![zero()], vec![&half * &x]),
                ]
            }
            _ => {
                let (cy, cx) = (&c * &y, &c * &x);
                vec![
                    MatrixExpr::new(2, vec![zero(); 4], vec![cy.clone(), zero(), zero(), -&cy]),
                    MatrixExpr::new(2, vec![zero(); 4], vec![zero(), cx.clone(), cx, zero()]),
                ]
            }
        };
        let comps = match comps.into_iter().collect::<Result<Vec<_>, _>>() {
            Ok(c) => c,
            Err(e) => return error(e),
        };
        let conn = match ConnectionForm::new(group, PlotDomain::euclidean(2), comps) {
            Ok(c) => c,
            Err(e) => return error(e),
        };
        let mut steps = SWEEP_STEPS;
        let h = loop {
            match holonomy(&conn, &loop_path, steps) {
                Ok(h) => break h,
                Err(HolonomyError::UnitarityLost(_)) if steps < MAX_SWEEP_STEPS => steps *= 2,
                Err(e) => return error(e),
            }
        };
        let trace = h.matrix.trace();
        let mut point = json!({
            "g": g,
            "steps": steps,
            "trace": [trace.re, trace.im],
            "distance_from_identity": h.distance(&GroupElement::identity(group)),
        });
        if group == Group::U1 {
            point["phase"] = json!(trace.im.atan2(trace.re));
            point["exact_phase"] = json!(-g * area);
        }
        points.push(point);
    }
    json!({ "group": group.name(), "area": area, "points": points }).to_string()
}
