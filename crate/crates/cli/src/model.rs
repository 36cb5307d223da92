//! Line-oriented model files: `[section]` headers followed by `key: value`.

use std::collections::BTreeMap;

use thiserror::Error;
use varjet::bicomplex::{BigradedForm, Generator};
use varjet::holonomy::{ConnectionForm, Group, MatrixExpr, Path};
use varjet::jetcalc::EvolutionaryField;
use varjet::smoothset::{Interval, PlotDomain, PlotWitness, SmoothSet};
use varjet::symexpr::{parse_expression, BundleSignature, Expr, ParseError, Rational, Var};
use varjet::variational::{Lagrangian, SourceForm};

#[derive(Debug, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ModelError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ModelError {
    fn at(entry: &Entry, message: impl Into<String>) -> Self {
        ModelError { line: entry.line, column: entry.value_column, message: message.into() }
    }

    fn header(section: &Section, message: impl Into<String>) -> Self {
        ModelError { line: section.line, column: 1, message: message.into() }
    }
}

#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    value_column: usize,
}

#[derive(Clone, Debug)]
struct Section {
    kind: String,
    name: Option<String>,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

const SECTIONS: [&str; 8] = ["signature", "lagrangian", "symmetry", "source", "form", "glue", "connection", "path"];

fn split_sections(text: &str) -> Result<Vec<Section>, ModelError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                return Err(ModelError { line, column: indent + 1, message: "unterminated section header".into() });
            };
            let mut words = inner.split_whitespace();
            let kind = words.next().unwrap_or("").to_string();
            if !SECTIONS.contains(&kind.as_str()) {
                return Err(ModelError { line, column: indent + 2, message: format!("unknown section `{kind}`") });
            }
            let name = words.next().map(str::to_string);
            if words.next().is_some() {
                return Err(ModelError { line, column: indent + 1, message: "section header has extra words".into() });
            }
            out.push(Section { kind, name, line, entries: Vec::new() });
            continue;
        }
        let Some(colon) = content.find(':') else {
            return Err(ModelError { line, column: indent + 1, message: "expected `key: value`".into() });
        };
        let Some(section) = out.last_mut() else {
            return Err(ModelError { line, column: indent + 1, message: "entry before any section header".into() });
        };
        let key = content[..colon].trim().to_string();
        let after = &content[colon + 1..];
        let value_column = colon + 2 + (after.len() - after.trim_start().len());
        section.entries.push(Entry { key, value: after.trim().to_string(), line, value_column });
    }
    Ok(out)
}

/// A parsed model: every expression already checked against the signature.
#[derive(Clone, Debug)]
pub struct Model {
    pub signature: BundleSignature,
    pub lagrangian: Option<Lagrangian>,
    pub symmetries: BTreeMap<String, EvolutionaryField>,
    pub source: Option<SourceForm>,
    pub form: Option<BigradedForm>,
    pub glue: Option<GlueSpec>,
    pub connection: Option<ConnectionForm>,
    pub path: Option<PathSpec>,
}

#[derive(Clone, Debug)]
pub struct GlueSpec {
    pub set: SmoothSet,
    pub cover: Vec<PlotDomain>,
    pub witnesses: Vec<PlotWitness>,
}

#[derive(Clone, Debug)]
pub struct PathSpec {
    pub path: Path,
    pub steps: Option<usize>,
    pub reparametrizations: Vec<Expr>,
}

fn expr(entry: &Entry, text: &str, offset: usize, sig: &BundleSignature) -> Result<Expr, ModelError> {
    parse_expression(text, sig).map_err(|e: ParseError| ModelError {
        line: entry.line,
        column: entry.value_column + offset + e.column.saturating_sub(1),
        message: e.to_string().split_once(": ").map_or(e.to_string(), |(_, m)| m.to_string()),
    })
}

fn names(entry: &Entry) -> Vec<&str> {
    entry.value.split_whitespace().collect()
}

impl Model {
    pub fn parse(text: &str) -> Result<Model, ModelError> {
        let sections = split_sections(text)?;
        let sig_section = sections
            .iter()
            .find(|s| s.kind == "signature")
            .ok_or(ModelError { line: 1, column: 1, message: "missing [signature] section".into() })?;
        let require = |key: &str| {
            sig_section.get(key).ok_or_else(|| ModelError::header(sig_section, format!("[signature] needs `{key}`")))
        };
        let (base, fields) = (require("base")?, require("fields")?);
        let params = sig_section.get("params").map(names).unwrap_or_default();
        let signature = BundleSignature::new(&names(base), &names(fields), &params)
            .map_err(|e| ModelError::at(base, e.to_string()))?;

        let mut model = Model {
            signature,
            lagrangian: None,
            symmetries: BTreeMap::new(),
            source: None,
            form: None,
            glue: None,
            connection: None,
            path: None,
        };
        let mut seen = BTreeMap::new();
        for section in &sections {
            let key = format!("{}{}", section.kind, section.name.as_deref().map(|n| format!(" {n}")).unwrap_or_default());
            if seen.insert(key.clone(), section.line).is_some() {
                return Err(ModelError::header(section, format!("duplicate section [{key}]")));
            }
            match section.kind.as_str() {
                "signature" => {}
                "lagrangian" => model.lagrangian = Some(model.parse_lagrangian(section)?),
                "symmetry" => {
                    let name = section.name.clone().ok_or_else(|| ModelError::header(section, "[symmetry] needs a name"))?;
                    let q = model.parse_field(section, "Q_")?;
                    model.symmetries.insert(name, EvolutionaryField::new(q, &model.signature).expect("one per field"));
                }
                "source" => model.source = Some(SourceForm { components: model.parse_field(section, "E_")? }),
                "form" => model.form = Some(model.parse_form(section)?),
                "glue" => model.glue = Some(model.parse_glue(section)?),
                "connection" => model.connection = Some(model.parse_connection(section)?),
                "path" => model.path = Some(model.parse_path(section)?),
                _ => unreachable!("validated section kind"),
            }
        }
        Ok(model)
    }

    fn parse_lagrangian(&self, section: &Section) -> Result<Lagrangian, ModelError> {
        let entry = section.get("density").ok_or_else(|| ModelError::header(section, "[lagrangian] needs `density`"))?;
        Ok(Lagrangian::new(expr(entry, &entry.value, 0, &self.signature)?))
    }

    /// One expression per field, keyed `<prefix><field>`; missing fields are zero.
    fn parse_field(&self, section: &Section, prefix: &str) -> Result<Vec<Expr>, ModelError> {
        let fields = self.signature.field_names();
        let mut out = vec![Expr::zero(); fields.len()];
        for entry in &section.entries {
            let field = entry.key.strip_prefix(prefix).and_then(|f| fields.iter().position(|n| n == f));
            let Some(a) = field else {
                return Err(ModelError { line: entry.line, column: 1, message: format!("expected `{prefix}<field>`, got `{}`", entry.key) });
            };
            out[a] = expr(entry, &entry.value, 0, &self.signature)?;
        }
        Ok(out)
    }

    /// `term: <coeff> | dx: t x | theta: u u_x`
    fn parse_form(&self, section: &Section) -> Result<BigradedForm, ModelError> {
        let sig = &self.signature;
        let m = sig.base_dim();
        let mut terms = Vec::new();
        for entry in section.all("term") {
            let mut parts = entry.value.split('|');
            let coeff_text = parts.next().unwrap_or("");
            let coeff = expr(entry, coeff_text, 0, sig)?;
            let mut gens = Vec::new();
            for part in parts {
                let (kind, list) = part.split_once(':').ok_or_else(|| ModelError::at(entry, "expected `dx: ...` or `theta: ...`"))?;
                for name in list.split_whitespace() {
                    match kind.trim() {
                        "dx" => {
                            let mu = sig
                                .base_names()
                                .iter()
                                .position(|b| b == name)
                                .ok_or_else(|| ModelError::at(entry, format!("unknown base coordinate `{name}`")))?;
                            gens.push(Generator::Dx(mu));
                        }
                        "theta" => match sig.parse_coordinate(name) {
                            Ok(Var::Jet(j)) => gens.push(Generator::Theta(j)),
                            _ => return Err(ModelError::at(entry, format!("`{name}` is not a jet coordinate"))),
                        },
                        other => return Err(ModelError::at(entry, format!("unknown generator kind `{other}`"))),
                    }
                }
            }
            terms.push((entry, BigradedForm::monomial(m, gens, coeff).map_err(|e| ModelError::at(entry, e.to_string()))?));
        }
        let bidegree = match section.get("bidegree") {
            Some(entry) => {
                let v: Vec<usize> = entry.value.split_whitespace().filter_map(|w| w.parse().ok()).collect();
                match v[..] {
                    [s, r] => Some((s, r)),
                    _ => return Err(ModelError::at(entry, "expected `bidegree: s r`")),
                }
            }
            None => None,
        };
        let (s, r) = bidegree.or_else(|| terms.first().map(|(_, t)| t.bidegree())).unwrap_or((0, 0));
        let mut form = BigradedForm::zero(m, s, r);
        for (entry, t) in terms {
            form = form.add(&t).map_err(|e| ModelError::at(entry, e.to_string()))?;
        }
        Ok(form)
    }

    /// `set: representable n` and `piece: <box> => <components>`, boxes
    /// written `lo..hi` per axis separated by `x`.
    fn parse_glue(&self, section: &Section) -> Result<GlueSpec, ModelError> {
        let set_entry = section.get("set").ok_or_else(|| ModelError::header(section, "[glue] needs `set`"))?;
        let n = match names(set_entry)[..] {
            ["representable", n] => n.parse::<usize>().map_err(|_| ModelError::at(set_entry, "bad dimension"))?,
            _ => return Err(ModelError::at(set_entry, "supported sets: `representable <n>`")),
        };
        let mut cover = Vec::new();
        let mut witnesses = Vec::new();
        for entry in section.all("piece") {
            let (domain_text, comps) =
                entry.value.split_once("=>").ok_or_else(|| ModelError::at(entry, "expected `<box> => <components>`"))?;
            let sides = domain_text
                .split(" x ")
                .map(|side| {
                    let (lo, hi) = side.trim().split_once("..").ok_or_else(|| ModelError::at(entry, "expected `lo..hi`"))?;
                    Interval::new(Some(rational(entry, lo)?), Some(rational(entry, hi)?))
                        .map_err(|e| ModelError::at(entry, e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let chart = BundleSignature::numbered_chart(sides.len());
            let offset = domain_text.len() + 2;
            let mut exprs = Vec::new();
            let mut column = offset;
            for c in comps.split(',') {
                exprs.push(expr(entry, c, column, &chart)?);
                column += c.len() + 1;
            }
            if exprs.len() != n {
                return Err(ModelError::at(entry, format!("expected {n} components")));
            }
            cover.push(PlotDomain::cuboid(sides));
            witnesses.push(PlotWitness::Map(exprs));
        }
        Ok(GlueSpec { set: SmoothSet::representable(n), cover, witnesses })
    }

    /// `group: SU2` and one `A_<base>: <real part> | <imaginary part>` per
    /// direction; matrix rows separated by `;`, entries by `,`.
    fn parse_connection(&self, section: &Section) -> Result<ConnectionForm, ModelError> {
        let sig = &self.signature;
        let g = section.get("group").ok_or_else(|| ModelError::header(section, "[connection] needs `group`"))?;
        let group = Group::from_name(&g.value).ok_or_else(|| ModelError::at(g, format!("unknown group `{}`", g.value)))?;
        let size = group.size();
        let mut comps = vec![MatrixExpr::zero(size); sig.base_dim()];
        for entry in &section.entries {
            if entry.key == "group" {
                continue;
            }
            let mu = entry
                .key
                .strip_prefix("A_")
                .and_then(|b| sig.base_names().iter().position(|n| n == b))
                .ok_or_else(|| ModelError { line: entry.line, column: 1, message: format!("unexpected key `{}`", entry.key) })?;
            let (re, im) = entry.value.split_once('|').unwrap_or((&entry.value, ""));
            let zero = vec!["0"; size].join(",");
            let zeros = vec![zero; size].join(";");
            let im = if im.trim().is_empty() { zeros.as_str() } else { im };
            let re = if re.trim().is_empty() { zeros.as_str() } else { re };
            comps[mu] = MatrixExpr::parse(size, re, im, sig).map_err(|e| ModelError::at(entry, e.to_string()))?;
        }
        ConnectionForm::new(group, PlotDomain::euclidean(sig.base_dim()), comps)
            .map_err(|e| ModelError::header(section, e.to_string()))
    }

    /// One `<base>: <expression in s>` per direction, plus optional
    /// `sitting`, `steps` and `reparametrize` lines.
    fn parse_path(&self, section: &Section) -> Result<PathSpec, ModelError> {
        let sig = &self.signature;
        let chart = varjet::holonomy::path_chart();
        let mut comps = vec![None; sig.base_dim()];
        let mut sitting = true;
        let mut steps = None;
        let mut reparametrizations = Vec::new();
        for entry in &section.entries {
            match entry.key.as_str() {
                "sitting" => {
                    sitting = entry.value.parse().map_err(|_| ModelError::at(entry, "expected true or false"))?;
                }
                "steps" => steps = Some(entry.value.parse().map_err(|_| ModelError::at(entry, "expected an integer"))?),
                "reparametrize" => reparametrizations.push(expr(entry, &entry.value, 0, &chart)?),
                key => {
                    let mu = sig
                        .base_names()
                        .iter()
                        .position(|n| n == key)
                        .ok_or_else(|| ModelError { line: entry.line, column: 1, message: format!("unexpected key `{key}`") })?;
                    comps[mu] = Some(expr(entry, &entry.value, 0, &chart)?);
                }
            }
        }
        let comps: Vec<Expr> = comps.into_iter().map(Option::unwrap_or_default).collect();
        let path = if sitting { Path::with_sitting_instants(comps) } else { Path::smooth(comps) }
            .map_err(|e| ModelError::header(section, e.to_string()))?;
        Ok(PathSpec { path, steps, reparametrizations })
    }
}

fn rational(entry: &Entry, text: &str) -> Result<Rational, ModelError> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((p, q)) => p.trim().parse::<i64>().ok().zip(q.trim().parse::<i64>().ok().filter(|q| *q != 0)),
        None => text.parse::<i64>().ok().map(|p| (p, 1)),
    };
    parsed
        .map(|(p, q)| Rational::new(p.into(), q.into()))
        .ok_or_else(|| ModelError::at(entry, format!("`{text}` is not a rational number")))
}
