//! The `varjet` command line.

pub mod model;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use varjet::bicomplex::BigradedForm;
use varjet::holonomy::{holonomy, thin_invariance_probe, HolonomyError};
use varjet::random::DEFAULT_SEED;
use varjet::smoothset::GlueError;
use varjet::suites::{run_suite, Suite};
use varjet::symexpr::{BundleSignature, Expr};
use varjet::variational::{
    euler_lagrange, first_variation_decompose, helmholtz_check, is_divergence_symmetry, noether_current, Current,
    Lagrangian, SourceForm,
};

use model::Model;

pub const SEED_ENV: &str = "VARJET_SEED";
pub const DEFAULT_STEPS: usize = 4096;

#[derive(Parser, Debug)]
#[command(name = "varjet", version, about = "Jet-bundle field theory, smooth-set checks and holonomy")]
struct Cli {
    /// Seed for randomized suites (overrides VARJET_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Render expressions and forms as LaTeX instead of plain text.
    #[arg(long, global = true)]
    latex: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Euler–Lagrange expressions of the model's Lagrangian.
    El { model: PathBuf },
    /// Split pr Q(L) into Q·E(L) plus a total divergence.
    Variation {
        model: PathBuf,
        #[arg(long)]
        symmetry: Option<String>,
    },
    /// Conserved currents of the model's symmetries.
    Noether {
        model: PathBuf,
        #[arg(long)]
        symmetry: Option<String>,
    },
    /// Decide whether each symmetry block is a divergence symmetry.
    Symmetry {
        model: PathBuf,
        #[arg(long)]
        symmetry: Option<String>,
    },
    /// Helmholtz test of the [source] block (or of E(L) if absent).
    Helmholtz { model: PathBuf },
    /// Horizontal differential of the [form] block (or of L dx).
    Dh { model: PathBuf },
    /// Vertical differential of the [form] block (or of L dx).
    Dv { model: PathBuf },
    /// Jet order of the Lagrangian density.
    Order { model: PathBuf },
    /// Glue the pieces of the [glue] block.
    GlueCheck { model: PathBuf },
    /// Run randomized axiom suites.
    Axioms {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Holonomy of the [connection] along the [path].
    Holonomy {
        model: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
}

/// A command outcome: the JSON payload and the exit code.
struct Outcome {
    payload: Value,
    code: i32,
}

impl Outcome {
    fn ok(payload: Value) -> Self {
        Outcome { payload, code: 0 }
    }

    fn check(payload: Value, passed: bool) -> Self {
        Outcome { payload, code: if passed { 0 } else { 1 } }
    }
}

/// Errors that mean the input was unusable (exit 2).
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

/// Run with the given arguments (including the program name) and return
/// the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => match v.trim().parse() {
                Ok(s) => s,
                Err(_) => {
                    let _ = writeln!(err, "error: {SEED_ENV} must be an unsigned integer, got `{v}`");
                    return 2;
                }
            },
            Err(_) => DEFAULT_SEED,
        },
    };
    match execute(&cli.command, seed, cli.latex) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.payload).expect("JSON values serialize");
            let _ = writeln!(out, "{text}");
            outcome.code
        }
        Err(InputError(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
    }
}

fn load(path: &FsPath) -> Result<Model, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Model::parse(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

struct Render<'a> {
    sig: &'a BundleSignature,
    latex: bool,
}

impl Render<'_> {
    fn expr(&self, e: &Expr) -> Value {
        Value::String(if self.latex { e.to_latex(self.sig) } else { e.to_text(self.sig) })
    }

    fn source(&self, s: &SourceForm) -> Value {
        let map: BTreeMap<String, Value> =
            self.sig.field_names().iter().zip(&s.components).map(|(f, e)| (f.to_string(), self.expr(e))).collect();
        json!(map)
    }

    fn current(&self, c: &Current) -> Value {
        let map: BTreeMap<String, Value> =
            self.sig.base_names().iter().zip(&c.components).map(|(b, e)| (b.to_string(), self.expr(e))).collect();
        json!(map)
    }

    fn form(&self, f: &BigradedForm) -> Value {
        if self.latex {
            json!({ "bidegree": [f.bidegree().0, f.bidegree().1], "latex": f.to_latex(self.sig) })
        } else {
            f.to_json(self.sig)
        }
    }
}

fn lagrangian(model: &Model) -> Result<&Lagrangian, InputError> {
    model.lagrangian.as_ref().ok_or_else(|| InputError("model has no [lagrangian] section".into()))
}

fn selected<'a>(
    model: &'a Model,
    only: &Option<String>,
) -> Result<Vec<(&'a String, &'a varjet::jetcalc::EvolutionaryField)>, InputError> {
    if model.symmetries.is_empty() {
        return Err(InputError("model has no [symmetry <name>] section".into()));
    }
    match only {
        Some(name) => model
            .symmetries
            .get_key_value(name)
            .map(|kv| vec![kv])
            .ok_or_else(|| InputError(format!("no symmetry named `{name}`"))),
        None => Ok(model.symmetries.iter().collect()),
    }
}

fn execute(command: &Command, seed: u64, latex: bool) -> Result<Outcome, InputError> {
    match command {
        Command::Axioms { suite } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::from_name(suite).ok_or_else(|| {
                    InputError(format!("unknown suite `{suite}` (expected sheaf, jet, bicomplex, variational, holonomy or all)"))
                })?]
            };
            let reports: Vec<_> = suites.into_iter().map(|s| run_suite(s, seed)).collect();
            let passed = reports.iter().all(|r| r.passed());
            let payload = json!({
                "seed": seed,
                "passed": passed,
                "suites": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            });
            Ok(Outcome::check(payload, passed))
        }
        Command::El { model } => {
            let model = load(model)?;
            let r = Render { sig: &model.signature, latex };
            let e = euler_lagrange(lagrangian(&model)?, &model.signature);
            Ok(Outcome::ok(json!({ "E": r.source(&e) })))
        }
        Command::Order { model } => {
            let model = load(model)?;
            Ok(Outcome::ok(json!(lagrangian(&model)?.order())))
        }
        Command::Variation { model, symmetry } => {
            let model = load(model)?;
            let (sig, l) = (&model.signature, lagrangian(&model)?);
            let r = Render { sig, latex };
            let mut out = BTreeMap::new();
            for (name, q) in selected(&model, symmetry)? {
                let (interior, boundary) = first_variation_decompose(l, q, sig);
                out.insert(name.clone(), json!({ "interior": r.expr(&interior), "boundary": r.current(&boundary) }));
            }
            Ok(Outcome::ok(json!({ "variations": out })))
        }
        Command::Symmetry { model, symmetry } => {
            let model = load(model)?;
            let (sig, l) = (&model.signature, lagrangian(&model)?);
            let r = Render { sig, latex };
            let mut out = BTreeMap::new();
            for (name, q) in selected(&model, symmetry)? {
                let verdict = is_divergence_symmetry(l, q, sig);
                let witness = verdict.witness.as_ref().map_or(Value::Null, |k| r.current(k));
                out.insert(name.clone(), json!({ "is_symmetry": verdict.is_symmetry, "witness": witness }));
            }
            Ok(Outcome::ok(json!({ "symmetries": out })))
        }
        Command::Noether { model, symmetry } => {
            let model = load(model)?;
            let (sig, l) = (&model.signature, lagrangian(&model)?);
            let r = Render { sig, latex };
            let e = euler_lagrange(l, sig);
            let mut out = BTreeMap::new();
            let mut all_ok = true;
            for (name, q) in selected(&model, symmetry)? {
                let entry = match noether_current(l, q, sig) {
                    Ok(j) => {
                        let qe: Expr = q.characteristics().iter().zip(&e.components).map(|(a, b)| a * b).sum();
                        let conserved = (&j.divergence() + &qe).is_zero();
                        all_ok &= conserved;
                        json!({ "J": r.current(&j), "on_shell_conserved": conserved })
                    }
                    Err(err) => {
                        all_ok = false;
                        json!({ "error": err.to_string() })
                    }
                };
                out.insert(name.clone(), entry);
            }
            Ok(Outcome::check(json!({ "currents": out }), all_ok))
        }
        Command::Helmholtz { model } => {
            let model = load(model)?;
            let sig = &model.signature;
            let source = match &model.source {
                Some(s) => s.clone(),
                None => euler_lagrange(lagrangian(&model)?, sig),
            };
            Ok(Outcome::ok(helmholtz_check(&source, sig).to_json(sig)))
        }
        Command::Dh { model } | Command::Dv { model } => {
            let model = load(model)?;
            let sig = &model.signature;
            let r = Render { sig, latex };
            let form = match &model.form {
                Some(f) => f.clone(),
                None => lagrangian(&model)?.as_form(sig),
            };
            let result = if matches!(command, Command::Dh { .. }) { form.d_horizontal() } else { form.d_vertical() };
            Ok(Outcome::ok(json!({ "input": r.form(&form), "result": r.form(&result) })))
        }
        Command::GlueCheck { model } => {
            let model = load(model)?;
            let spec = model.glue.as_ref().ok_or_else(|| InputError("model has no [glue] section".into()))?;
            match spec.set.glue(&spec.cover, &spec.witnesses) {
                Ok((domain, witness)) => Ok(Outcome::ok(json!({
                    "glued": true,
                    "domain": domain.to_json(),
                    "witness": witness.to_json(),
                }))),
                Err(e) => {
                    let mut payload = json!({ "glued": false, "reason": e.to_string() });
                    if let GlueError::Incompatible { i, j, point } = &e {
                        payload["pieces"] = json!([i, j]);
                        payload["point"] = json!(point);
                    }
                    Ok(Outcome::check(payload, false))
                }
            }
        }
        Command::Holonomy { model, steps } => {
            let model = load(model)?;
            let conn = model.connection.as_ref().ok_or_else(|| InputError("model has no [connection] section".into()))?;
            let spec = model.path.as_ref().ok_or_else(|| InputError("model has no [path] section".into()))?;
            let steps = steps.or(spec.steps).unwrap_or(DEFAULT_STEPS);
            let numeric = |e: HolonomyError| match e {
                HolonomyError::UnitarityLost(_) | HolonomyError::NonFinite(_) => Ok(Outcome::check(json!({ "error": e.to_string() }), false)),
                other => Err(InputError(other.to_string())),
            };
            let h = match holonomy(conn, &spec.path, steps) {
                Ok(h) => h,
                Err(e) => return numeric(e),
            };
            let mut payload = h.to_json();
            payload["steps"] = json!(steps);
            payload["unitarity_defect"] = json!(h.unitarity_defect());
            payload["path"] = spec.path.to_json();
            if !spec.reparametrizations.is_empty() {
                match thin_invariance_probe(conn, &spec.path, &spec.reparametrizations, steps) {
                    Ok(report) => {
                        payload["deviations"] = json!(report.deviations);
                        payload["max_deviation"] = json!(report.max_deviation);
                    }
                    Err(e) => return numeric(e),
                }
            }
            Ok(Outcome::ok(payload))
        }
    }
}
