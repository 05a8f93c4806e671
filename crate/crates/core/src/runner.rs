//! Executes scenario tasks and assembles a run report.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bgeometry::{
    b_flat, bform_from_bivector, bivector_from_bform, is_b_serious, is_b_symplectic, singular_locus, BForm,
};
use crate::calculus::{exterior_derivative, pullback, restrict_to_slice, schouten_bracket};
use crate::chart::{ChartDomain, ChartMap, ExprMap, SampleGrid};
use crate::construct::{
    b_collar, budget_grid, collar_poisson, folded_to_bserious, glue_double, inflation_end_report, mapping_torus,
    radko_sphere, symplectic_collar, thurston_inflate, verify_symplectic, CosymplecticCobordism, GlueMode,
    GlueProfile,
};
use crate::cosymplectic::{check_reeb, check_volume, closedness_equivalence, defining_residuals, reeb_data};
use crate::dehn::{
    canonical_form, circle_action, dehn_word_chain, flow_residual, model_dehn_twist, verify_symplectomorphism,
    CotangentSpherePoint, DehnWord, TorusTwist, TwistProfile,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{FormField, MultivectorField};
use crate::report::{Residual, VerificationReport};
use crate::scenario::{FieldValue, Scenario, Task};
use crate::tol::{self, Tolerances};

/// Command-line overrides; each replaces the scenario or task value.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub profile_c: Option<f64>,
    pub period: Option<f64>,
}

impl RunOptions {
    pub fn tolerances(&self) -> Tolerances {
        match self.tol {
            Some(t) => Tolerances::default().with_residual(t),
            None => Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub tolerances: Tolerances,
    pub tasks: Vec<VerificationReport>,
}

impl RunReport {
    pub fn new(scenario: &str, seed: u64, tolerances: Tolerances) -> Self {
        RunReport { scenario: scenario.into(), seed, passed: true, tolerances, tasks: Vec::new() }
    }

    pub fn push(&mut self, r: VerificationReport) {
        self.passed &= r.passed;
        self.tasks.push(r);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn task(&self, id: &str) -> Option<&VerificationReport> {
        self.tasks.iter().find(|t| t.task == id)
    }

    /// Number of tasks that ended in an error rather than a verdict.
    pub fn errors(&self) -> usize {
        self.tasks.iter().filter(|t| t.provenance.contains_key("error")).count()
    }
}

/// Runs every task in order. Task errors are recorded in that task's report
/// and do not stop the run.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> RunReport {
    let ctx = Context::new(scenario, opts);
    let mut out = RunReport::new(&scenario.name, ctx.seed, ctx.tols);
    for task in &scenario.tasks {
        out.push(ctx.run_task(task));
    }
    out
}

/// Runs a single task against the scenario's declarations.
pub fn run_task(scenario: &Scenario, task: &Task, opts: &RunOptions) -> VerificationReport {
    Context::new(scenario, opts).run_task(task)
}

/// Default checks for every declared field: symplectic 2-forms,
/// b-symplectic b-forms, Poisson bivectors, cosymplectic pairs.
pub fn verify_fields(scenario: &Scenario, opts: &RunOptions) -> RunReport {
    let ctx = Context::new(scenario, opts);
    let mut out = RunReport::new(&scenario.name, ctx.seed, ctx.tols);
    for (name, value) in &scenario.fields {
        let id = format!("field:{name}");
        let result = match value {
            FieldValue::Form(w) if w.degree() == 2 && w.dim() % 2 == 0 => {
                Ok(verify_symplectic(w, &budget_grid(w.domain().clone(), ctx.per_axis(None)), &ctx.tols))
            }
            FieldValue::Form(w) => Ok(closedness_report(w, ctx.per_axis(None), &ctx.tols)),
            FieldValue::BForm(w) => Ok(is_b_symplectic(w, &w.collar().grid(ctx.per_axis(None), tol::EXCLUSION_BAND), &ctx.tols)),
            FieldValue::Multivector(p) if p.degree() == 2 => ctx.poisson_report(p, None),
            FieldValue::Pair(pair) => {
                let grid = budget_grid(pair.domain().clone(), ctx.per_axis(None));
                let mut r = check_volume(pair, &grid, &ctx.tols);
                match reeb_data(pair) {
                    Ok(data) => {
                        r.absorb("reeb", &check_reeb(pair, &data, &grid, &ctx.tols));
                    }
                    Err(e) => {
                        r.fail(e.to_string());
                    }
                }
                Ok(r)
            }
            FieldValue::Cobordism(c) => {
                let mut r = VerificationReport::new("cobordism");
                r.set("tags", c.tags());
                r.absorb("omega", &verify_symplectic(c.omega(), &budget_grid(c.domain().clone(), ctx.per_axis(None)), &ctx.tols));
                Ok(r)
            }
            FieldValue::Multivector(_) | FieldValue::Metric(..) => continue,
        };
        out.push(finish(&id, result));
    }
    out
}

fn closedness_report(w: &FormField, per_axis: usize, tols: &Tolerances) -> VerificationReport {
    let mut r = VerificationReport::new("closedness");
    let dw = exterior_derivative(w);
    let v = if dw.is_zero() {
        0.0
    } else {
        budget_grid(w.domain().clone(), per_axis).max_of(|x| dw.max_abs_at(x)).value
    };
    r.push(Residual::at_most("closedness", v, tols.closedness));
    r
}

fn finish(id: &str, result: Result<VerificationReport>) -> VerificationReport {
    match result {
        Ok(mut r) => {
            let op = std::mem::take(&mut r.task);
            r.set("op", &op);
            r.task = id.to_string();
            r
        }
        Err(e) => {
            let mut r = VerificationReport::new(id);
            r.set("error", e.to_string());
            r.fail(format!("error: {e}"));
            r
        }
    }
}

struct Context<'a> {
    scenario: &'a Scenario,
    opts: &'a RunOptions,
    tols: Tolerances,
    seed: u64,
}

/// Typed access to a task's parameter table.
struct Params<'a> {
    task: &'a Task,
}

impl Params<'_> {
    fn bad(&self, key: &str, what: &str) -> Error {
        Error::Scenario(format!("task `{}`: parameter `{key}` {what}", self.task.id))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.task.params.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(x)) => Ok(*x),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(self.bad(key, "must be a number")),
        }
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        if self.task.params.contains_key(key) {
            self.f64_or(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    fn usize_opt(&self, key: &str) -> Result<Option<usize>> {
        match self.task.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(self.bad(key, "must be a non-negative integer")),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    fn str_opt(&self, key: &str) -> Result<Option<&str>> {
        match self.task.params.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.bad(key, "must be a string")),
        }
    }

    fn str_req(&self, key: &str) -> Result<&str> {
        self.str_opt(key)?.ok_or_else(|| self.bad(key, "is required"))
    }

    fn bool_opt(&self, key: &str) -> Result<Option<bool>> {
        match self.task.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.bad(key, "must be a boolean")),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.task.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(self.bad(key, "must be a list of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.bad(key, "must be a list of numbers")),
        }
    }
}

fn axis_of(domain: &ChartDomain, name: &str) -> Result<usize> {
    domain.index_of(name).ok_or_else(|| Error::Scenario(format!("no coordinate `{name}` in {domain}")))
}

fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl<'a> Context<'a> {
    fn new(scenario: &'a Scenario, opts: &'a RunOptions) -> Self {
        Context { scenario, opts, tols: opts.tolerances(), seed: opts.seed.or(scenario.seed).unwrap_or(0) }
    }

    /// Flag override, then the task's `grid`, then the scenario's, then the
    /// op default.
    fn per_axis(&self, task_default: Option<usize>) -> usize {
        self.opts.grid.or(task_default).or(self.scenario.grid).unwrap_or(tol::GRID_POINTS)
    }

    fn task_grid(&self, p: &Params, op_default: usize) -> Result<usize> {
        Ok(self.opts.grid.or(p.usize_opt("grid")?).or(self.scenario.grid).unwrap_or(op_default))
    }

    fn form(&self, name: &str) -> Result<&FormField> {
        match self.scenario.field(name) {
            Some(FieldValue::Form(w)) => Ok(w),
            _ => Err(Error::Scenario(format!("`{name}` is not a declared form"))),
        }
    }

    fn field(&self, name: &str) -> Result<&FieldValue> {
        self.scenario.field(name).ok_or_else(|| Error::Scenario(format!("unknown field `{name}`")))
    }

    fn run_task(&self, task: &Task) -> VerificationReport {
        let mut r = finish(&task.id, self.dispatch(task));
        r.provenance.insert("op".into(), serde_json::Value::String(task.op.clone()));
        r
    }

    fn dispatch(&self, task: &Task) -> Result<VerificationReport> {
        let p = Params { task };
        match task.op.as_str() {
            "verify_symplectic" => {
                let w = self.form(p.str_req("field")?)?;
                Ok(verify_symplectic(w, &budget_grid(w.domain().clone(), self.task_grid(&p, tol::GRID_POINTS)?), &self.tols))
            }
            "is_b_symplectic" => {
                let w = self.bform(p.str_req("field")?)?;
                let band = p.f64_or("band", tol::EXCLUSION_BAND)?;
                Ok(is_b_symplectic(w, &w.collar().grid(self.task_grid(&p, 9)?, band), &self.tols))
            }
            "b_flat" => {
                let w = self.bform(p.str_req("field")?)?;
                let expect = self.form(p.str_req("expect")?)?;
                let got = b_flat(w);
                got.same_domain(expect)?;
                let mut r = VerificationReport::new("b_flat");
                let pts = budget_grid(got.domain().clone(), self.task_grid(&p, 9)?).points();
                let diff = if got.structurally_equal(expect) { 0.0 } else { got.max_difference(expect, &pts)?.value };
                r.push(Residual::at_most("difference", diff, self.tols.round_trip));
                r.set("b_flat", got.to_text());
                Ok(r)
            }
            "is_poisson" => {
                let m = self.multivector(p.str_req("field")?)?;
                self.poisson_report(m, Some(self.task_grid(&p, 9)?))
            }
            "singular_locus" => self.locus_task(&p),
            "is_b_serious" => {
                let m = self.multivector(p.str_req("field")?)?;
                let axis = axis_of(m.domain(), p.str_req("direction")?)?;
                is_b_serious(m, &SampleGrid::new(m.domain().clone(), self.task_grid(&p, 9)?), axis, &self.tols)
            }
            "pullback_compat" => {
                let name = p.str_req("transition")?;
                let map = self
                    .scenario
                    .transitions
                    .get(name)
                    .ok_or_else(|| Error::Scenario(format!("unknown transition `{name}`")))?;
                let src = self.form(p.str_req("source_form")?)?;
                let tgt = self.form(p.str_req("target_form")?)?;
                let pulled = pullback(map, tgt)?;
                let pts = budget_grid(src.domain().clone(), self.task_grid(&p, 9)?).points();
                let mut r = VerificationReport::new("pullback_compat");
                r.push(Residual::at_most("overlap", pulled.max_difference(src, &pts)?.value, self.tols.seam));
                Ok(r)
            }
            "check_volume" | "reeb" | "closedness_equivalence" | "symplectic_collar" | "b_collar" => {
                self.pair_task(&p)
            }
            "glue_double" => self.glue_task(&p),
            "thurston_inflate" => self.inflate_task(&p),
            "mapping_torus" => self.torus_task(&p),
            "radko_sphere" => Ok(radko_sphere().verify(self.task_grid(&p, tol::GRID_POINTS)?, &self.tols)),
            "folded_to_bserious" => self.folded_task(&p),
            "dehn_twist" => self.twist_task(&p),
            "dehn_chain" => {
                let spheres: Option<Vec<String>> = p
                    .str_opt("spheres")?
                    .map(|s| s.split([',', ' ']).filter(|x| !x.is_empty()).map(str::to_string).collect());
                chain_report(p.str_req("word")?, spheres.as_deref(), p.str_opt("fiber")?)
            }
            other => Err(Error::Scenario(format!("unknown op `{other}`"))),
        }
    }

    fn bform(&self, name: &str) -> Result<&BForm> {
        match self.field(name)? {
            FieldValue::BForm(w) => Ok(w),
            _ => Err(Error::Scenario(format!("`{name}` is not a b-form"))),
        }
    }

    fn multivector(&self, name: &str) -> Result<&MultivectorField> {
        match self.field(name)? {
            FieldValue::Multivector(m) => Ok(m),
            _ => Err(Error::Scenario(format!("`{name}` is not a multivector"))),
        }
    }

    fn poisson_report(&self, m: &MultivectorField, per_axis: Option<usize>) -> Result<VerificationReport> {
        let mut r = VerificationReport::new("is_poisson");
        let b = schouten_bracket(m, m)?;
        let v = if b.is_zero() {
            0.0
        } else {
            budget_grid(m.domain().clone(), self.per_axis(per_axis)).max_of(|x| b.max_abs_at(x)).value
        };
        r.set("symbolic_zero", b.is_zero());
        r.push(Residual::at_most("schouten", v, self.tols.bracket));
        Ok(r)
    }

    fn locus_task(&self, p: &Params) -> Result<VerificationReport> {
        let m = self.multivector(p.str_req("field")?)?;
        let axis = axis_of(m.domain(), p.str_req("direction")?)?;
        let grid = SampleGrid::new(m.domain().clone(), self.task_grid(p, 9)?);
        let locus = singular_locus(m, &grid, axis, self.tols.transversality)?;
        let mut r = VerificationReport::new("singular_locus");
        r.set("lines", locus.lines).set("roots", locus.roots.len()).set("min_margin", locus.min_margin);
        if p.bool_opt("expect_empty")?.unwrap_or(false) {
            r.push(Residual::at_most("root_count", locus.roots.len() as f64, 0.0));
            return Ok(r);
        }
        r.push(Residual::at_most("root_count_mismatch", (locus.roots.len() as f64 - locus.lines as f64).abs(), 0.0));
        if let Some(at) = p.f64_opt("at")? {
            let off = locus.roots.iter().fold(0.0f64, |a, x| a.max((x[axis] - at).abs()));
            r.push(Residual::at_most("offset", off, tol::LOCUS_OFFSET));
        }
        if let Some(want) = p.f64_opt("margin")? {
            let dev = [locus.min_margin, locus.max_margin]
                .iter()
                .map(|m| m.map_or(f64::INFINITY, |m| (m - want).abs()))
                .fold(0.0, f64::max);
            r.push(Residual::at_most("margin_deviation", dev, self.tols.round_trip));
        }
        Ok(r)
    }

    fn pair_task(&self, p: &Params) -> Result<VerificationReport> {
        let name = p.str_req("pair")?;
        let FieldValue::Pair(pair) = self.field(name)? else {
            return Err(Error::Scenario(format!("`{name}` is not a pair")));
        };
        let per_axis = self.task_grid(p, 9)?;
        let grid = budget_grid(pair.domain().clone(), per_axis);
        match p.task.op.as_str() {
            "check_volume" => Ok(check_volume(pair, &grid, &self.tols)),
            "reeb" => Ok(check_reeb(pair, &reeb_data(pair)?, &grid, &self.tols)),
            "closedness_equivalence" => {
                let eq = closedness_equivalence(pair, &grid, &self.tols)?;
                let mut r = eq.to_report(&self.tols);
                if let Some(want) = p.bool_opt("expect_closed")? {
                    r.push(Residual::at_most("expectation", if eq.forms_closed == want { 0.0 } else { 1.0 }, 0.0));
                }
                Ok(r)
            }
            "symplectic_collar" => {
                let w = symplectic_collar(pair, p.f64_or("epsilon", 0.5)?)?;
                let mut r = verify_symplectic(&w, &budget_grid(w.domain().clone(), per_axis), &self.tols);
                r.task = "symplectic_collar".into();
                r.set("form", w.to_text());
                Ok(r)
            }
            _ => {
                let eps = p.f64_or("epsilon", 0.5)?;
                let band = p.f64_or("band", tol::EXCLUSION_BAND)?;
                let w = b_collar(pair, eps)?;
                let grid = w.collar().grid(per_axis, band);
                let mut r = VerificationReport::new("b_collar");
                r.absorb("b_symplectic", &is_b_symplectic(&w, &grid, &self.tols));
                let pts = grid.points();
                let from_form = bivector_from_bform(&w)?;
                let from_reeb = collar_poisson(pair, eps)?;
                let agree = from_form.to_multivector().max_difference(&from_reeb.to_multivector(), &pts)?;
                r.push(Residual::at_most("bivector_agreement", agree.value, self.tols.round_trip));
                let back = bform_from_bivector(&from_reeb)?;
                let trip = pts
                    .iter()
                    .map(|x| (back.b_frame_matrix(x) - w.b_frame_matrix(x)).abs().max())
                    .fold(0.0, f64::max);
                r.push(Residual::at_most("round_trip", trip, self.tols.round_trip));
                let data = reeb_data(pair)?;
                let base = budget_grid(pair.domain().clone(), per_axis).points();
                let reeb = base.iter().map(|x| defining_residuals(pair, &data, x).into_iter().fold(0.0, f64::max)).fold(0.0, f64::max);
                r.push(Residual::at_most("reeb_defining", reeb, tol::REEB));
                r.set("alpha", w.alpha().to_text()).set("beta", w.beta().to_text());
                r.set("r", from_reeb.r_part().to_text()).set("nu", from_reeb.nu_part().to_text());
                Ok(r)
            }
        }
    }

    fn glue_task(&self, p: &Params) -> Result<VerificationReport> {
        let owned;
        let cob = match (p.str_opt("builtin")?, p.str_opt("cobordism")?) {
            (Some("disk"), None) => {
                owned = CosymplecticCobordism::disk()?;
                &owned
            }
            (Some(other), None) => return Err(Error::Scenario(format!("unknown builtin cobordism `{other}`"))),
            (None, Some(name)) => match self.field(name)? {
                FieldValue::Cobordism(c) => c,
                _ => return Err(Error::Scenario(format!("`{name}` is not a cobordism"))),
            },
            _ => return Err(Error::Scenario("give exactly one of `cobordism`, `builtin`".into())),
        };
        let end = p.usize_or("end", cob.ends().len().saturating_sub(1))?;
        let mode = match p.str_opt("mode")?.unwrap_or("same_class") {
            "same_class" => GlueMode::SameClass,
            "opposite" => GlueMode::Opposite,
            m => return Err(Error::Scenario(format!("unknown glue mode `{m}`"))),
        };
        let profile = GlueProfile::with_band(p.f64_or("inner", 0.25)?, p.f64_or("outer", 0.75)?)?;
        let double = glue_double(cob, end, mode, &profile)?;
        let per_axis = self.task_grid(p, 5)?;
        let mut r = double.verify(per_axis, &self.tols);
        r.set("tags", cob.tags());
        if p.bool_opt("compare_radko")?.unwrap_or(false) {
            r.absorb("radko", &double.compare_with_radko(&radko_sphere(), per_axis));
        }
        Ok(r)
    }

    fn inflate_task(&self, p: &Params) -> Result<VerificationReport> {
        let leaf = self.form(p.str_req("leafwise")?)?;
        let theta0 = self.form(p.str_req("theta0")?)?;
        let axis = axis_of(leaf.domain(), p.str_opt("axis")?.unwrap_or("s"))?;
        let k0 = p.f64_or("k0", 1.0)?;
        let per_axis = self.task_grid(p, 8)?;
        let grid = budget_grid(leaf.domain().clone(), per_axis);
        let inf = thurston_inflate(leaf, theta0, axis, k0, &grid, &self.tols)?;
        let mut ends = Vec::new();
        match p.task.params.get("ends").and_then(|e| e.as_array()) {
            Some(list) => {
                for e in list {
                    let s = e.get("s").and_then(|v| v.as_float().or(v.as_integer().map(|i| i as f64)));
                    let s = s.ok_or_else(|| p.bad("ends", "entries need a numeric `s`"))?;
                    let eta = e.get("eta").and_then(|v| v.as_str()).ok_or_else(|| p.bad("ends", "entries need `eta`"))?;
                    ends.push((s, self.form(eta)?.clone()));
                }
            }
            None => {
                let c = leaf.domain().coord(axis);
                for s in [c.lo, c.hi] {
                    ends.push((s, restrict_to_slice(leaf, axis, s)?));
                }
            }
        }
        let mut r = inflation_end_report(&inf, leaf, axis, &ends, per_axis)?;
        r.set("k0", k0).set("sign", inf.sign);
        Ok(r)
    }

    fn torus_task(&self, p: &Params) -> Result<VerificationReport> {
        let sigma = self.form(p.str_req("sigma")?)?;
        let fiber = sigma.domain().clone();
        let lambda = self.opts.period.unwrap_or(p.f64_or("lambda", 1.0)?);
        let holonomy: Arc<dyn ChartMap> = match p.str_opt("holonomy")?.unwrap_or("identity") {
            "identity" => Arc::new(ExprMap::identity(fiber.clone())),
            "translate" => {
                let shift = p.f64_list("shift")?.unwrap_or_else(|| vec![0.0; fiber.dim()]);
                if shift.len() != fiber.dim() {
                    return Err(p.bad("shift", "must have one entry per fiber coordinate"));
                }
                let comps = shift.iter().enumerate().map(|(i, a)| Expr::var(i) + *a).collect();
                Arc::new(ExprMap::new(fiber.clone(), fiber.clone(), comps)?)
            }
            "twist" => {
                let c = self.opts.profile_c.unwrap_or(p.f64_or("profile_c", 0.4)?);
                Arc::new(TorusTwist::new(&TwistProfile::standard(c)?, p.f64_or("center", 0.5)?)?)
            }
            name => Arc::new(
                self.scenario
                    .transitions
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::Scenario(format!("unknown holonomy `{name}`")))?,
            ),
        };
        let per_axis = self.task_grid(p, 9)?;
        let torus = mapping_torus(sigma, holonomy, lambda, per_axis, &self.tols)?;
        let mut r = torus.verify(per_axis, &self.tols);
        r.set("lambda", lambda);
        if p.bool_opt("filling")?.unwrap_or(false) {
            let (form, fr) = torus.filling(self.task_grid(p, 5)?.min(7), &self.tols)?;
            r.absorb("filling", &fr);
            r.set("filling_form", form.to_text());
        }
        Ok(r)
    }

    fn folded_task(&self, p: &Params) -> Result<VerificationReport> {
        let folded = self.form(p.str_req("folded")?)?;
        let theta = self.form(p.str_req("theta")?)?;
        let m = theta.dim();
        let metric = match p.str_opt("metric")? {
            Some(name) => match self.field(name)? {
                FieldValue::Metric(_, rows) => rows.clone(),
                _ => return Err(Error::Scenario(format!("`{name}` is not a metric"))),
            },
            None => (0..m).map(|i| (0..m).map(|j| Expr::constant(if i == j { 1.0 } else { 0.0 })).collect()).collect(),
        };
        let per_axis = self.task_grid(p, 6)?;
        let pi = folded_to_bserious(folded, theta, &metric, per_axis, &self.tols)?;
        let mut r = is_b_serious(&pi, &SampleGrid::new(pi.domain().clone(), per_axis), 0, &self.tols)?;
        r.task = "folded_to_bserious".into();
        r.set("bivector", pi.to_text());
        Ok(r)
    }

    fn twist_task(&self, p: &Params) -> Result<VerificationReport> {
        let n = p.usize_or("n", 3)?;
        if n < 1 {
            return Err(p.bad("n", "must be at least 1"));
        }
        let c = self.opts.profile_c.unwrap_or(p.f64_or("profile_c", 1.0)?);
        let profile = TwistProfile::standard(c)?;
        let psi = model_dehn_twist(&profile, n);
        let seed = self.opts.seed.or(p.usize_opt("seed")?.map(|s| s as u64)).unwrap_or(self.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = p.usize_or("points", 40)?;
        let v_max = p.f64_or("v_max", 1.2 * c)?;
        let pts: Vec<CotangentSpherePoint> = (0..count).map(|_| CotangentSpherePoint::random(n, v_max, &mut rng)).collect();
        let omega = canonical_form(n);
        let mut r = VerificationReport::new("dehn_twist");
        r.set("n", n).set("profile_c", c).set("seed", seed).set("points", count);

        let jac = p.str_opt("jacobian")?.unwrap_or("analytic");
        let symp = match jac {
            "analytic" => verify_symplectomorphism(&psi, &omega, &pts, tol::SYMPLECTIC_ANALYTIC)?,
            "fd" => {
                let step = p.f64_or("fd_step", tol::FD_STEP)?;
                let numeric = crate::chart::NumericMap::new(2 * n, 2 * n, |x: &[f64]| psi.apply(x)).with_step(step);
                verify_symplectomorphism(&numeric, &omega, &pts, tol::SYMPLECTIC_FD)?
            }
            other => return Err(p.bad("jacobian", &format!("must be `analytic` or `fd`, got `{other}`"))),
        };
        r.absorb(jac, &symp);

        let flow_count = p.usize_or("flow_points", 20)?;
        let flow_pts: Vec<_> = (0..flow_count).map(|_| CotangentSpherePoint::random(n, 0.9 * c, &mut rng)).collect();
        let steps = p.usize_or("flow_steps", 2000)?;
        r.push(Residual::at_most("flow", flow_residual(&profile, &flow_pts, steps), tol::FLOW));

        // zero-section limit, support, half-period of the circle action
        let (mut limit, mut support, mut half): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for q in &pts {
            let x = q.ambient();
            let r0: f64 = q.v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if r0 > 0.0 {
                let small = 1e-3 * c / r0;
                let v: Vec<f64> = q.v.iter().map(|a| a * small).collect();
                let near = CotangentSpherePoint::new(q.u.clone(), v)?.ambient();
                let y = psi.apply(&near);
                limit = limit.max(y.iter().zip(&near).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
                let far_scale = (c * (1.0 + 0.5 * (r0 / v_max))) / r0;
                let far = CotangentSpherePoint::new(q.u.clone(), q.v.iter().map(|a| a * far_scale).collect())?.ambient();
                support = support.max(max_distance(&psi.apply(&far), &far));
                let h = circle_action(0.5, q)?.ambient();
                half = half.max(h.iter().zip(&x).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
            }
        }
        let zero: Vec<f64> = pts.first().map(|q| q.u.iter().cloned().chain(std::iter::repeat_n(0.0, n)).collect()).unwrap_or_default();
        if !zero.is_empty() {
            limit = limit.max(psi.apply(&zero).iter().zip(&zero).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
        }
        r.push(Residual::at_most("zero_section_antipodal", limit, tol::FLOW));
        r.push(Residual::at_most("support_identity", support, 0.0));
        r.push(Residual::at_most("half_period_antipodal", half, tol::CONSTRAINT));
        let inverse = psi.inverse();
        let back = pts.iter().map(|q| max_distance(&inverse.apply(&psi.apply(&q.ambient())), &q.ambient())).fold(0.0, f64::max);
        r.push(Residual::at_most("inverse", back, self.tols.round_trip));
        Ok(r)
    }
}

pub fn chain_report(word: &str, spheres: Option<&[String]>, fiber: Option<&str>) -> Result<VerificationReport> {
    let mut w = DehnWord::parse(word)?;
    if let Some(f) = fiber {
        w = w.with_fiber(f);
    }
    let chain = dehn_word_chain(&w, spheres)?;
    let mut r = VerificationReport::new("dehn_chain");
    let expected = w.letters.len() + 1;
    r.push(Residual::at_most("link_count", (chain.links.len() as f64 - expected as f64).abs(), 0.0));
    let terminal = chain.links.last().is_some_and(|l| l.monodromy == "id" && l.step.is_none());
    r.push(Residual::at_most("terminates_at_identity", if terminal { 0.0 } else { 1.0 }, 0.0));
    r.set("chain", &chain);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCN: &str = r#"
name = "mini"
seed = 3

[[chart]]
name = "T3"
torus = ["x", "y", "z"]

[[field]]
name = "theta"
kind = "form"
chart = "T3"
degree = 1
components = { z = "1" }

[[field]]
name = "eta"
kind = "form"
chart = "T3"
degree = 2
components = { "x,y" = "1" }

[[field]]
name = "pair"
kind = "pair"
theta = "theta"
eta = "eta"

[[task]]
id = "collar"
op = "b_collar"
params = { pair = "pair", epsilon = 0.5, grid = 5 }

[[task]]
id = "equiv"
op = "closedness_equivalence"
params = { pair = "pair", expect_closed = true, grid = 5 }

[[task]]
id = "chain"
op = "dehn_chain"
params = { word = "l1 l2^-1 l1" }
"#;

    #[test]
    fn runs_tasks_in_order() {
        let s = Scenario::parse(SCN).unwrap();
        let r = run(&s, &RunOptions::default());
        assert!(r.passed, "{}", r.to_json());
        assert_eq!(r.tasks.iter().map(|t| t.task.as_str()).collect::<Vec<_>>(), ["collar", "equiv", "chain"]);
        assert_eq!(r.seed, 3);
        assert_eq!(r.errors(), 0);
    }

    #[test]
    fn deterministic_json() {
        let s = Scenario::parse(SCN).unwrap();
        let a = run(&s, &RunOptions::default()).to_json();
        let b = run(&s, &RunOptions::default()).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn task_errors_are_recorded() {
        let text = SCN.replace("epsilon = 0.5, grid = 5", "epsilon = \"wide\"");
        let s = Scenario::parse(&text).unwrap();
        let r = run(&s, &RunOptions::default());
        assert!(!r.passed);
        assert_eq!(r.errors(), 1);
        assert!(r.task("equiv").unwrap().passed);
    }

    #[test]
    fn field_defaults() {
        let s = Scenario::parse(SCN).unwrap();
        let r = verify_fields(&s, &RunOptions { grid: Some(5), ..Default::default() });
        assert!(r.passed, "{}", r.to_json());
        assert_eq!(r.tasks.len(), 3);
    }
}
