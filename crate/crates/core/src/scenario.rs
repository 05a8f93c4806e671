//! TOML scenario files: charts, transition maps, named fields and an ordered
//! list of tasks.
//!
//! ```toml
//! name = "collar"
//! grid = 9
//!
//! [[chart]]
//! name = "T3"
//! torus = ["x", "y", "z"]
//!
//! [[field]]
//! name = "theta"
//! kind = "form"
//! chart = "T3"
//! degree = 1
//! components = { z = "1" }
//!
//! [[field]]
//! name = "eta"
//! kind = "form"
//! chart = "T3"
//! degree = 2
//! components = { "x,y" = "1" }
//!
//! [[field]]
//! name = "pair"
//! kind = "pair"
//! theta = "theta"
//! eta = "eta"
//!
//! [[task]]
//! id = "collar"
//! op = "b_collar"
//! params = { pair = "pair", epsilon = 0.5 }
//! ```
//!
//! Expressions are in prefix notation over the chart's coordinate names.
//! Fields may only reference fields declared before them, and tasks only
//! declared fields, so the dependency graph is acyclic by construction.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bgeometry::{BForm, CollarChart};
use crate::chart::{ChartDomain, Coordinate, ExprMap};
use crate::construct::{CobordismEnd, CosymplecticCobordism};
use crate::cosymplectic::CosymplecticPair;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{FormField, MultivectorField};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chart: Vec<RawChart>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transition: Vec<RawTransition>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub field: Vec<RawField>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub task: Vec<RawTask>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChart {
    pub name: String,
    /// Shorthand for unit-period coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coords: Vec<RawCoord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoord {
    pub name: String,
    pub lo: f64,
    /// Upper end of an interval coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// Period of a periodic coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTransition {
    pub name: String,
    pub from: String,
    pub to: String,
    pub map: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnd {
    pub s: f64,
    pub pair: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RawField {
    Form {
        name: String,
        chart: String,
        degree: usize,
        #[serde(default)]
        components: BTreeMap<String, String>,
    },
    Multivector {
        name: String,
        chart: String,
        degree: usize,
        #[serde(default)]
        components: BTreeMap<String, String>,
    },
    /// `d log|t| ∧ α + β` on a chart whose first coordinate is the collar
    /// coordinate.
    Bform {
        name: String,
        chart: String,
        #[serde(default = "two")]
        degree: usize,
        #[serde(default)]
        alpha: BTreeMap<String, String>,
        #[serde(default)]
        beta: BTreeMap<String, String>,
    },
    Pair {
        name: String,
        theta: String,
        eta: String,
    },
    Cobordism {
        name: String,
        omega: String,
        ends: Vec<RawEnd>,
    },
    /// Symmetric matrix of expressions, row by row.
    Metric {
        name: String,
        chart: String,
        rows: Vec<Vec<String>>,
    },
}

fn two() -> usize {
    2
}

impl RawField {
    pub fn name(&self) -> &str {
        match self {
            RawField::Form { name, .. }
            | RawField::Multivector { name, .. }
            | RawField::Bform { name, .. }
            | RawField::Pair { name, .. }
            | RawField::Cobordism { name, .. }
            | RawField::Metric { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTask {
    pub id: String,
    pub op: String,
    #[serde(default, skip_serializing_if = "toml::Table::is_empty")]
    pub params: toml::Table,
}

#[derive(Debug, Clone)]
pub enum FieldValue {
    Form(FormField),
    Multivector(MultivectorField),
    BForm(BForm),
    Pair(CosymplecticPair),
    Cobordism(CosymplecticCobordism),
    Metric(Arc<ChartDomain>, Vec<Vec<Expr>>),
}

impl FieldValue {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldValue::Form(_) => "form",
            FieldValue::Multivector(_) => "multivector",
            FieldValue::BForm(_) => "bform",
            FieldValue::Pair(_) => "pair",
            FieldValue::Cobordism(_) => "cobordism",
            FieldValue::Metric(..) => "metric",
        }
    }
}

/// Operations a task may invoke, with the parameters that name fields and
/// the kind each must have.
pub const OPS: &[(&str, &[(&str, &str)])] = &[
    ("verify_symplectic", &[("field", "form")]),
    ("is_b_symplectic", &[("field", "bform")]),
    ("b_flat", &[("field", "bform"), ("expect", "form")]),
    ("is_poisson", &[("field", "multivector")]),
    ("singular_locus", &[("field", "multivector")]),
    ("is_b_serious", &[("field", "multivector")]),
    ("pullback_compat", &[("source_form", "form"), ("target_form", "form")]),
    ("check_volume", &[("pair", "pair")]),
    ("reeb", &[("pair", "pair")]),
    ("closedness_equivalence", &[("pair", "pair")]),
    ("symplectic_collar", &[("pair", "pair")]),
    ("b_collar", &[("pair", "pair")]),
    ("glue_double", &[("cobordism", "cobordism")]),
    ("thurston_inflate", &[("leafwise", "form"), ("theta0", "form")]),
    ("mapping_torus", &[("sigma", "form")]),
    ("radko_sphere", &[]),
    ("folded_to_bserious", &[("folded", "form"), ("theta", "form")]),
    ("dehn_twist", &[]),
    ("dehn_chain", &[]),
];

/// Field-naming parameters that may be omitted.
const OPTIONAL_REFS: &[(&str, &str, &str)] = &[("folded_to_bserious", "metric", "metric")];

#[derive(Debug, Clone)]
pub struct Task {
    pub id: String,
    pub op: String,
    pub params: toml::Table,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub charts: BTreeMap<String, Arc<ChartDomain>>,
    pub transitions: BTreeMap<String, ExprMap>,
    /// In declaration order.
    pub fields: Vec<(String, FieldValue)>,
    pub tasks: Vec<Task>,
}

fn terms(map: &BTreeMap<String, String>) -> impl Iterator<Item = (&str, &str)> {
    map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and resolves a scenario. Syntax errors are `Parse`; unresolved
    /// references and invalid fields are `Scenario`.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn resolve(raw: RawScenario) -> Result<Self> {
        let bad = |msg: String| Error::Scenario(msg);
        let mut charts = BTreeMap::new();
        for c in &raw.chart {
            let coords: Vec<Coordinate> = match (&c.torus, c.coords.is_empty()) {
                (Some(names), true) => names.iter().map(|n| Coordinate::periodic(n, 0.0, 1.0)).collect(),
                (None, false) => c
                    .coords
                    .iter()
                    .map(|k| match (k.hi, k.period) {
                        (Some(hi), None) => Ok(Coordinate::interval(&k.name, k.lo, hi)),
                        (None, Some(p)) => Ok(Coordinate::periodic(&k.name, k.lo, p)),
                        _ => Err(bad(format!("coordinate `{}` needs exactly one of `hi`, `period`", k.name))),
                    })
                    .collect::<Result<_>>()?,
                _ => return Err(bad(format!("chart `{}` needs exactly one of `torus`, `coords`", c.name))),
            };
            let d = ChartDomain::new(coords).map_err(|e| bad(format!("chart `{}`: {e}", c.name)))?;
            if charts.insert(c.name.clone(), d).is_some() {
                return Err(bad(format!("chart `{}` declared twice", c.name)));
            }
        }
        let chart = |name: &str| charts.get(name).cloned().ok_or_else(|| bad(format!("unknown chart `{name}`")));
        let mut transitions = BTreeMap::new();
        for t in &raw.transition {
            let (src, tgt) = (chart(&t.from)?, chart(&t.to)?);
            let names = src.names();
            let comps = t.map.iter().map(|s| Expr::parse(s, &names)).collect::<Result<Vec<_>>>()?;
            let map = ExprMap::new(src, tgt, comps).map_err(|e| bad(format!("transition `{}`: {e}", t.name)))?;
            transitions.insert(t.name.clone(), map);
        }
        let mut fields: Vec<(String, FieldValue)> = Vec::new();
        for f in &raw.field {
            let name = f.name();
            if fields.iter().any(|(n, _)| n == name) {
                return Err(bad(format!("field `{name}` declared twice")));
            }
            let lookup = |r: &str, kind: &str| -> Result<FieldValue> {
                match fields.iter().find(|(n, _)| n == r) {
                    Some((_, v)) if v.kind() == kind => Ok(v.clone()),
                    Some((_, v)) => Err(bad(format!("field `{r}` is a {}, expected a {kind}", v.kind()))),
                    None => Err(bad(format!("field `{name}` references `{r}`, which is not declared before it"))),
                }
            };
            let ctx = |e: Error| match e {
                Error::Parse(m) => Error::Parse(format!("field `{name}`: {m}")),
                other => bad(format!("field `{name}`: {other}")),
            };
            let value = match f {
                RawField::Form { chart: c, degree, components, .. } => {
                    FieldValue::Form(FormField::from_text(chart(c)?, *degree, terms(components)).map_err(ctx)?)
                }
                RawField::Multivector { chart: c, degree, components, .. } => FieldValue::Multivector(
                    MultivectorField::from_text(chart(c)?, *degree, terms(components)).map_err(ctx)?,
                ),
                RawField::Bform { chart: c, degree, alpha, beta, .. } => {
                    let d = chart(c)?;
                    if *degree == 0 {
                        return Err(bad(format!("field `{name}`: b-forms have degree at least 1")));
                    }
                    let collar = CollarChart::from_domain(d.clone()).map_err(ctx)?;
                    let a = FormField::from_text(d.clone(), degree - 1, terms(alpha)).map_err(ctx)?;
                    let b = FormField::from_text(d, *degree, terms(beta)).map_err(ctx)?;
                    FieldValue::BForm(BForm::new(collar, a, b).map_err(ctx)?)
                }
                RawField::Pair { theta, eta, .. } => {
                    let (FieldValue::Form(t), FieldValue::Form(e)) = (lookup(theta, "form")?, lookup(eta, "form")?) else {
                        unreachable!("kinds checked by lookup")
                    };
                    FieldValue::Pair(CosymplecticPair::new(t, e).map_err(ctx)?)
                }
                RawField::Cobordism { omega, ends, .. } => {
                    let FieldValue::Form(w) = lookup(omega, "form")? else { unreachable!("kind checked") };
                    let mut resolved = Vec::new();
                    for e in ends {
                        let FieldValue::Pair(p) = lookup(&e.pair, "pair")? else { unreachable!("kind checked") };
                        resolved.push(CobordismEnd { s: e.s, pair: p });
                    }
                    FieldValue::Cobordism(CosymplecticCobordism::new(w, resolved, Vec::new()).map_err(ctx)?)
                }
                RawField::Metric { chart: c, rows, .. } => {
                    let d = chart(c)?;
                    let names = d.names();
                    let m = rows
                        .iter()
                        .map(|row| row.iter().map(|s| Expr::parse(s, &names)).collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(ctx)?;
                    if m.len() != d.dim() || m.iter().any(|r| r.len() != d.dim()) {
                        return Err(bad(format!("metric `{name}` must be {0}×{0}", d.dim())));
                    }
                    FieldValue::Metric(d, m)
                }
            };
            fields.push((name.to_string(), value));
        }
        let mut tasks = Vec::new();
        for t in &raw.task {
            if tasks.iter().any(|k: &Task| k.id == t.id) {
                return Err(bad(format!("task id `{}` used twice", t.id)));
            }
            let Some((_, refs)) = OPS.iter().find(|(op, _)| *op == t.op) else {
                return Err(bad(format!("task `{}`: unknown op `{}`", t.id, t.op)));
            };
            let check = |key: &str, v: &toml::Value, kind: &str| -> Result<()> {
                let r = v.as_str().ok_or_else(|| bad(format!("task `{}`: `{key}` must name a field", t.id)))?;
                match fields.iter().find(|(n, _)| n == r) {
                    Some((_, f)) if f.kind() == kind => Ok(()),
                    Some((_, f)) => Err(bad(format!("task `{}`: `{r}` is a {}, expected a {kind}", t.id, f.kind()))),
                    None => Err(bad(format!("task `{}`: unknown field `{r}`", t.id))),
                }
            };
            for (key, kind) in refs.iter() {
                match t.params.get(*key) {
                    Some(v) => check(key, v, kind)?,
                    None if t.op == "glue_double" && t.params.contains_key("builtin") => {}
                    None => return Err(bad(format!("task `{}`: missing parameter `{key}`", t.id))),
                }
            }
            for (op, key, kind) in OPTIONAL_REFS {
                if let (true, Some(v)) = (*op == t.op, t.params.get(*key)) {
                    check(key, v, kind)?;
                }
            }
            if t.op == "thurston_inflate" {
                for end in t.params.get("ends").and_then(|e| e.as_array()).into_iter().flatten() {
                    let eta = end.get("eta").ok_or_else(|| bad(format!("task `{}`: each end needs `eta`", t.id)))?;
                    check("eta", eta, "form")?;
                }
            }
            tasks.push(Task { id: t.id.clone(), op: t.op.clone(), params: t.params.clone() });
        }
        Ok(Scenario { name: raw.name, seed: raw.seed, grid: raw.grid, charts, transitions, fields, tasks })
    }

    pub fn field(&self, name: &str) -> Option<&FieldValue> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Builds scenario text for constructed objects so they can be re-verified
/// from disk.
#[derive(Debug, Clone)]
pub struct ScenarioWriter {
    raw: RawScenario,
}

impl ScenarioWriter {
    pub fn new(name: &str) -> Self {
        ScenarioWriter {
            raw: RawScenario {
                name: name.into(),
                seed: None,
                grid: None,
                chart: Vec::new(),
                transition: Vec::new(),
                field: Vec::new(),
                task: Vec::new(),
            },
        }
    }

    pub fn chart(&mut self, name: &str, domain: &ChartDomain) -> &mut Self {
        let coords = domain
            .coords()
            .iter()
            .map(|c| RawCoord {
                name: c.name.clone(),
                lo: c.lo,
                hi: (!c.periodic).then_some(c.hi),
                period: c.period(),
            })
            .collect();
        self.raw.chart.push(RawChart { name: name.into(), torus: None, coords });
        self
    }

    pub fn form(&mut self, name: &str, chart: &str, w: &FormField) -> &mut Self {
        self.raw.field.push(RawField::Form {
            name: name.into(),
            chart: chart.into(),
            degree: w.degree(),
            components: w.to_text(),
        });
        self
    }

    pub fn bform(&mut self, name: &str, chart: &str, w: &BForm) -> &mut Self {
        self.raw.field.push(RawField::Bform {
            name: name.into(),
            chart: chart.into(),
            degree: w.degree(),
            alpha: w.alpha().to_text(),
            beta: w.beta().to_text(),
        });
        self
    }

    pub fn task(&mut self, id: &str, op: &str, params: toml::Table) -> &mut Self {
        self.raw.task.push(RawTask { id: id.into(), op: op.into(), params });
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.raw).map_err(|e| Error::Scenario(e.to_string()))
    }
}
