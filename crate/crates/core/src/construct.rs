//! Constructions: symplectic and b-symplectic collars, doubles of
//! cosymplectic cobordisms, inflation along an interval factor, mapping tori,
//! the Radko sphere, and the passage from folded forms to b-serious bivectors.
//!
//! Charts with an interval factor keep it at index 0 (the collar and product
//! conventions), except for inflation and mapping tori, whose interval
//! coordinate is passed explicitly or appended last.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bgeometry::{
    bivector_from_bform, is_b_serious, is_b_symplectic, lift_to_collar, singular_locus, BBivector, BForm, CollarChart,
    LocusReport,
};
use crate::calculus::{
    component_distance, components_at, exterior_derivative, fd_exterior_derivative_at, inverse_exprs, pfaffian,
    pullback_at, restrict_to_slice, schouten_bracket,
};
use crate::chart::{extremum, ChartDomain, ChartMap, Coordinate, ExprMap, SampleGrid};
use crate::cosymplectic::{check_volume, reeb_data, CosymplecticPair};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{Field, FormField, Index, MultivectorField, Variance};
use crate::report::{Residual, VerificationReport};
use crate::tol::{self, Tolerances};

/// Largest number of points a default verification grid may have.
const GRID_BUDGET: f64 = 20_000.0;

/// Width of the chart overlap on either side of the mediating collar.
const OVERLAP: f64 = 0.25;

/// Step of the finite-difference closedness check across seams.
pub const SEAM_FD_STEP: f64 = 1e-4;

/// Per-axis resolution capped so the grid stays within budget.
pub fn budget_grid(domain: Arc<ChartDomain>, per_axis: usize) -> SampleGrid {
    let cap = GRID_BUDGET.powf(1.0 / domain.dim() as f64).floor() as usize;
    SampleGrid::new(domain, per_axis.min(cap).max(3))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n!·Pf` of a 2-form on a `2n`-chart.
fn top_coefficient_of(w: &FormField) -> Expr {
    factorial(w.dim() / 2) * pfaffian(&w.matrix_exprs())
}

fn to_map(v: Vec<(Index, f64)>) -> BTreeMap<Index, f64> {
    v.into_iter().filter(|(_, c)| *c != 0.0).collect()
}

/// Shifts a field on `Z` onto `I × Z` (new coordinate at index 0).
fn shift_up<V: Variance>(w: &Field<V>, target: &Arc<ChartDomain>) -> Result<Field<V>> {
    Field::<V>::from_terms(
        target.clone(),
        w.degree(),
        w.components().map(|(k, c)| (k.iter().map(|i| i + 1).collect(), c.reindex(&|v| v + 1))),
    )
}

/// `ι_{∂_0} w` restricted to `x_0 = value`, as a 1-form on the remaining
/// coordinates.
fn contract_first_at(w: &FormField, value: f64) -> Result<FormField> {
    let base = w.domain().without(0)?;
    let subs: Vec<Expr> = std::iter::once(Expr::constant(value)).chain((0..w.dim() - 1).map(Expr::var)).collect();
    FormField::from_terms(
        base,
        w.degree() - 1,
        w.components()
            .filter(|(k, _)| k[0] == 0)
            .map(|(k, c)| (k[1..].iter().map(|i| i - 1).collect(), c.substitute(&subs))),
    )
}

fn max_form_difference(a: &FormField, b: &FormField, points: &[Vec<f64>]) -> f64 {
    extremum(points, |x| component_distance(&components_at(a, x), &components_at(b, x)), true).value
}

/// Closedness and nondegeneracy residuals of an ordinary 2-form.
pub fn symplectic_residuals(w: &FormField, points: &[Vec<f64>], tols: &Tolerances) -> Vec<Residual> {
    let dw = exterior_derivative(w);
    let closed = if dw.is_zero() { 0.0 } else { extremum(points, |x| dw.max_abs_at(x), true).value };
    let top = top_coefficient_of(w);
    let nondeg = extremum(points, |x| top.eval(x).abs(), false).value;
    vec![
        Residual::at_most("closedness", closed, tols.closedness),
        Residual::at_least("nondegeneracy", nondeg, tols.nondegeneracy),
    ]
}

/// Symplectic check of an ordinary 2-form on a grid.
pub fn verify_symplectic(w: &FormField, grid: &SampleGrid, tols: &Tolerances) -> VerificationReport {
    let mut report = VerificationReport::new("verify_symplectic").with_grid(grid.meta());
    if w.degree() != 2 || w.dim() % 2 == 1 {
        report.fail(format!("needs a 2-form on an even-dimensional chart (degree {}, dim {})", w.degree(), w.dim()));
        return report;
    }
    for r in symplectic_residuals(w, &grid.points(), tols) {
        report.push(r);
    }
    report
}

fn require_volume(pair: &CosymplecticPair, tols: &Tolerances) -> Result<()> {
    let grid = budget_grid(pair.domain().clone(), tol::GRID_POINTS);
    let report = check_volume(pair, &grid, tols);
    let min = report.residual("volume_min").map_or(0.0, |r| r.value);
    if !report.passed {
        return Err(Error::NotCosymplectic { min });
    }
    Ok(())
}

/// `dt ∧ θ + η` on `(−ε, ε) × Z`.
pub fn symplectic_collar(pair: &CosymplecticPair, epsilon: f64) -> Result<FormField> {
    require_volume(pair, &Tolerances::default())?;
    let collar = CollarChart::new(pair.domain(), epsilon)?;
    let dt = FormField::basis(collar.domain().clone(), &[0])?;
    dt.wedge(&lift_to_collar(&collar, pair.theta())?)?.add(&lift_to_collar(&collar, pair.eta())?)
}

/// `d log|t| ∧ θ + η` on `(−ε, ε) × Z`.
pub fn b_collar(pair: &CosymplecticPair, epsilon: f64) -> Result<BForm> {
    require_volume(pair, &Tolerances::default())?;
    let collar = CollarChart::new(pair.domain(), epsilon)?;
    BForm::new(collar.clone(), lift_to_collar(&collar, pair.theta())?, lift_to_collar(&collar, pair.eta())?)
}

/// `t∂t ∧ R + ν` built from the Reeb data of the pair.
pub fn collar_poisson(pair: &CosymplecticPair, epsilon: f64) -> Result<BBivector> {
    require_volume(pair, &Tolerances::default())?;
    let collar = CollarChart::new(pair.domain(), epsilon)?;
    let data = reeb_data(pair)?;
    BBivector::new(collar.clone(), lift_to_collar(&collar, &data.r)?, lift_to_collar(&collar, &data.nu)?)
}

/// The derivative of the gluing function `f` on `[−1, 1]`, stored as
/// `h(|τ|) = τ·f′(τ)`: `h = 1` gives `df = d log|τ|`, `h = |τ|` gives
/// `df = ±dτ`. `f` is even, increasing for `τ > 0` and decreasing for `τ < 0`
/// exactly when `h > 0`.
#[derive(Debug, Clone)]
pub struct GlueProfile {
    scaled: Expr,
    inner: f64,
    outer: f64,
    pub monotone: bool,
}

impl Default for GlueProfile {
    fn default() -> Self {
        Self::with_band(0.25, 0.75).expect("default band")
    }
}

impl GlueProfile {
    /// `h(u) = 1 + (u − 1)·S(w)`, `w = (u − inner)/(outer − inner)`, with `S`
    /// the quintic smoothstep; `C²` at both knots.
    pub fn with_band(inner: f64, outer: f64) -> Result<Self> {
        if !(0.0 < inner && inner < outer && outer < 1.0) {
            return Err(Error::Precondition(format!("profile band needs 0 < {inner} < {outer} < 1")));
        }
        let u = Expr::var(0).abs();
        let w = (&u - inner) * (1.0 / (outer - inner));
        let c = (w.abs() - (&w - 1.0).abs() + 1.0) * 0.5;
        let s = c.powi(3) * (10.0 - 15.0 * &c + 6.0 * c.powi(2));
        Self::custom(1.0 + (u - 1.0) * s, inner, outer)
    }

    /// A profile given by `τ·f′(τ)` as an expression in `τ` (variable 0).
    pub fn custom(scaled: Expr, inner: f64, outer: f64) -> Result<Self> {
        if scaled.max_var().is_some_and(|v| v > 0) {
            return Err(Error::Precondition("a profile depends on τ only".into()));
        }
        let mut p = GlueProfile { scaled, inner, outer, monotone: false };
        p.monotone = p.check_monotone().is_ok();
        Ok(p)
    }

    pub fn band(&self) -> (f64, f64) {
        (self.inner, self.outer)
    }

    /// `τ·f′(τ)`.
    pub fn scaled_derivative(&self) -> &Expr {
        &self.scaled
    }

    /// `f′(τ)`.
    pub fn derivative(&self) -> Expr {
        &self.scaled / Expr::var(0)
    }

    fn samples() -> impl Iterator<Item = f64> {
        (-2000..=2000).filter(|&k| k != 0).map(|k| k as f64 / 2000.0)
    }

    fn check_monotone(&self) -> Result<()> {
        if Self::samples().any(|t| !(self.scaled.eval(&[t]) > 0.0)) {
            return Err(Error::NonMonotoneProfile);
        }
        Ok(())
    }

    /// Monotonicity on each side and the two asymptotic regimes.
    pub fn validate(&self) -> Result<()> {
        self.check_monotone()?;
        for t in Self::samples() {
            let h = self.scaled.eval(&[t]);
            let u = t.abs();
            if u <= self.inner && (h - 1.0).abs() > 1e-12 {
                return Err(Error::Precondition(format!("df ≠ d log|τ| at τ = {t}")));
            }
            if u >= self.outer && (h - u).abs() > 1e-12 {
                return Err(Error::Precondition(format!("df ≠ ±dτ at τ = {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndTag {
    In,
    Out,
}

impl EndTag {
    pub fn opposite(self) -> Self {
        match self {
            EndTag::In => EndTag::Out,
            EndTag::Out => EndTag::In,
        }
    }
}

/// A boundary component `{s = const}` with its declared cosymplectic pair.
#[derive(Debug, Clone)]
pub struct CobordismEnd {
    pub s: f64,
    pub pair: CosymplecticPair,
}

/// A chart covering the part of a cobordism the product chart misses (for
/// example the centre of a disk). `from_product` is defined on product points
/// with `s` in `overlap`; grids are cut to the ball of radius `radius`.
#[derive(Debug, Clone)]
pub struct CapChart {
    pub name: String,
    pub domain: Arc<ChartDomain>,
    pub omega: FormField,
    pub from_product: ExprMap,
    pub overlap: (f64, f64),
    pub radius: Option<f64>,
}

impl CapChart {
    pub fn grid(&self, per_axis: usize) -> SampleGrid {
        let g = budget_grid(self.domain.clone(), per_axis);
        match self.radius {
            Some(r) => g.excluding(format!("|x| <= {r}"), move |x| x.iter().map(|v| v * v).sum::<f64>() <= r * r),
            None => g,
        }
    }

    /// Pullback compatibility with the product chart on the overlap.
    fn overlap_residual(&self, product: &FormField, per_axis: usize) -> Result<f64> {
        let (lo, hi) = self.overlap;
        let base = budget_grid(product.domain().without(0)?, per_axis).points();
        let pts: Vec<Vec<f64>> = (0..=6)
            .map(|k| lo + (hi - lo) * k as f64 / 6.0)
            .flat_map(|s| base.iter().map(move |b| std::iter::once(s).chain(b.iter().copied()).collect()))
            .collect();
        let mut worst: f64 = 0.0;
        for x in &pts {
            let a = pullback_at(&self.from_product, &self.omega, x)?;
            worst = worst.max(component_distance(&a, &components_at(product, x)));
        }
        Ok(worst)
    }
}

fn cap_checks(report: &mut VerificationReport, caps: &[CapChart], product: &FormField, per_axis: usize, tols: &Tolerances) {
    for cap in caps {
        let pts = cap.grid(per_axis).points();
        for mut r in symplectic_residuals(&cap.omega, &pts, tols) {
            r.name = format!("{}.{}", cap.name, r.name);
            report.push(r);
        }
        match cap.overlap_residual(product, per_axis) {
            Ok(v) => {
                report.push(Residual::at_most(format!("{}.overlap", cap.name), v, tols.seam));
            }
            Err(e) => {
                report.fail(format!("{}: {e}", cap.name));
            }
        }
    }
}

/// A compact symplectic manifold in a product chart `[s₀, s₁] × Z` (plus
/// optional caps), with cosymplectic pairs on the ends `s = s₀, s₁` it
/// declares. The orientation class of an end is read off the declared `θ`:
/// `θ = ι_vω` with `v = ±∂s`, and the end is outgoing when `v` points out.
#[derive(Debug, Clone)]
pub struct CosymplecticCobordism {
    domain: Arc<ChartDomain>,
    omega: FormField,
    ends: Vec<CobordismEnd>,
    tags: Vec<EndTag>,
    caps: Vec<CapChart>,
}

impl CosymplecticCobordism {
    pub fn new(omega: FormField, ends: Vec<CobordismEnd>, caps: Vec<CapChart>) -> Result<Self> {
        let domain = omega.domain().clone();
        let s = domain.coord(0);
        if s.periodic || omega.degree() != 2 || domain.dim() % 2 == 1 {
            return Err(Error::Precondition(
                "a cobordism is a 2-form on an even-dimensional chart with an interval first coordinate".into(),
            ));
        }
        let base = domain.without(0)?;
        let grid = budget_grid(base.clone(), tol::GRID_POINTS);
        let pts = grid.points();
        let mut tags = Vec::with_capacity(ends.len());
        for end in &ends {
            let at_hi = (end.s - s.hi).abs() < 1e-12;
            if !at_hi && (end.s - s.lo).abs() >= 1e-12 {
                return Err(Error::Precondition(format!("end s = {} is not a boundary of [{}, {}]", end.s, s.lo, s.hi)));
            }
            if **end.pair.domain() != *base {
                return Err(Error::DomainMismatch);
            }
            let eta = restrict_to_slice(&omega, 0, end.s)?;
            let residual = max_form_difference(&eta, end.pair.eta(), &pts);
            if !(residual <= tol::SEAM) {
                return Err(Error::BoundaryMismatch { residual, tolerance: tol::SEAM });
            }
            let theta_s = contract_first_at(&omega, end.s)?;
            let plus = max_form_difference(&theta_s, end.pair.theta(), &pts);
            let minus = max_form_difference(&theta_s.neg(), end.pair.theta(), &pts);
            let along = if plus <= tol::SEAM {
                true
            } else if minus <= tol::SEAM {
                false
            } else {
                return Err(Error::BoundaryMismatch { residual: plus.min(minus), tolerance: tol::SEAM });
            };
            tags.push(if along == at_hi { EndTag::Out } else { EndTag::In });
        }
        Ok(CosymplecticCobordism { domain, omega, ends, tags, caps })
    }

    /// `([0, 1] × Z, ds ∧ θ + η)` with the given classes at `s = 0` and `s = 1`.
    pub fn trivial(pair: &CosymplecticPair, tags: [EndTag; 2]) -> Result<Self> {
        let domain = pair.domain().prepend(Coordinate::interval("s", 0.0, 1.0))?;
        let ds = FormField::basis(domain.clone(), &[0])?;
        let omega = ds.wedge(&shift_up(pair.theta(), &domain)?)?.add(&shift_up(pair.eta(), &domain)?)?;
        let signed = |sign: f64| CosymplecticPair::new(pair.theta().scale(&Expr::constant(sign)), pair.eta().clone());
        let ends = vec![
            CobordismEnd { s: 0.0, pair: signed(if tags[0] == EndTag::In { 1.0 } else { -1.0 })? },
            CobordismEnd { s: 1.0, pair: signed(if tags[1] == EndTag::Out { 1.0 } else { -1.0 })? },
        ];
        Self::new(omega, ends, Vec::new())
    }

    /// The unit-area disk as `[0, 0.9] × S¹` with `ω = ds ∧ dφ` (`s = 1 − r²/2`)
    /// and a cap chart `−dx ∧ dy` around the centre; the boundary `s = 0` is
    /// outgoing with `θ = −dφ` of period `2π`.
    pub fn disk() -> Result<Self> {
        let domain = ChartDomain::new(vec![Coordinate::interval("s", 0.0, 0.9), Coordinate::periodic("phi", 0.0, TAU)])?;
        let omega = FormField::basis(domain.clone(), &[0, 1])?;
        let circle = domain.without(0)?;
        let pair = CosymplecticPair::new(FormField::term(circle.clone(), &[0], Expr::constant(-1.0))?, FormField::zero(circle, 2))?;
        let cap_domain = ChartDomain::new(vec![Coordinate::interval("x", -1.2, 1.2), Coordinate::interval("y", -1.2, 1.2)])?;
        let r = (2.0 * (1.0 - Expr::var(0))).pow(&Expr::constant(0.5));
        let from_product =
            ExprMap::new(domain.clone(), cap_domain.clone(), vec![&r * Expr::var(1).cos(), &r * Expr::var(1).sin()])?;
        let cap = CapChart {
            name: "centre".into(),
            omega: FormField::term(cap_domain.clone(), &[0, 1], Expr::constant(-1.0))?,
            domain: cap_domain,
            from_product,
            overlap: (0.3, 0.9),
            radius: Some(1.2),
        };
        Self::new(omega, vec![CobordismEnd { s: 0.0, pair }], vec![cap])
    }

    pub fn domain(&self) -> &Arc<ChartDomain> {
        &self.domain
    }

    pub fn omega(&self) -> &FormField {
        &self.omega
    }

    pub fn ends(&self) -> &[CobordismEnd] {
        &self.ends
    }

    pub fn tags(&self) -> &[EndTag] {
        &self.tags
    }

    pub fn caps(&self) -> &[CapChart] {
        &self.caps
    }

    pub fn boundary(&self) -> Arc<ChartDomain> {
        self.domain.without(0).expect("product chart")
    }

    /// `+1` when the end is the upper end of the interval.
    fn outward(&self, end: usize) -> f64 {
        if (self.ends[end].s - self.domain.coord(0).hi).abs() < 1e-12 {
            1.0
        } else {
            -1.0
        }
    }

    /// `ι_{∂s}ω` on the end.
    fn theta_s(&self, end: usize) -> FormField {
        contract_first_at(&self.omega, self.ends[end].s).expect("product chart")
    }

    /// `ω` must not depend on `s` within the overlap band next to the end.
    fn check_normal_form(&self, end: usize, per_axis: usize) -> Result<()> {
        let c = self.domain.coord(0);
        if c.hi - c.lo < OVERLAP {
            return Err(Error::Precondition(format!("interval factor shorter than the overlap band {OVERLAP}")));
        }
        let s_end = self.ends[end].s;
        let o = self.outward(end);
        let grid = budget_grid(self.boundary(), per_axis);
        let at_end = restrict_to_slice(&self.omega, 0, s_end)?;
        let dir_end = contract_first_at(&self.omega, s_end)?;
        let mut worst: f64 = 0.0;
        for k in 0..=4 {
            let s = s_end - o * OVERLAP * k as f64 / 4.0;
            let slice = restrict_to_slice(&self.omega, 0, s)?;
            let dir = contract_first_at(&self.omega, s)?;
            worst = worst.max(max_form_difference(&slice, &at_end, &grid.points()));
            worst = worst.max(max_form_difference(&dir, &dir_end, &grid.points()));
        }
        if worst > tol::SEAM {
            return Err(Error::Precondition(format!(
                "ω is not s-independent within {OVERLAP} of the end s = {s_end} (deviation {worst:.3e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlueMode {
    /// The cobordism and its mirror, along an end; both copies of the end
    /// carry the same class, so the mediating collar is b-symplectic.
    SameClass,
    /// A second copy along its end of the opposite class; the result is
    /// symplectic.
    Opposite,
}

/// The double as an atlas: a mediating collar `(−1.25, 1.25) × Z` carrying
/// `df ∧ θ_c + η`, the cobordism for `τ ≥ 1` and the partner copy for
/// `τ ≤ −1`, with affine transition maps on the overlaps `1 ≤ |τ| ≤ 1.25`.
#[derive(Debug, Clone)]
pub struct GluedDouble {
    pub mode: GlueMode,
    pub cobordism: CosymplecticCobordism,
    pub end: usize,
    pub partner: usize,
    pub collar: BForm,
    pub to_right: ExprMap,
    pub to_left: ExprMap,
    pub band: (f64, f64),
}

/// Glues the cobordism to a second copy along `end`.
pub fn glue_double(cob: &CosymplecticCobordism, end: usize, mode: GlueMode, profile: &GlueProfile) -> Result<GluedDouble> {
    if end >= cob.ends.len() {
        return Err(Error::Precondition(format!("cobordism has {} ends, asked for end {end}", cob.ends.len())));
    }
    cob.check_normal_form(end, tol::GRID_POINTS)?;
    let o = cob.outward(end);
    let theta_c = cob.theta_s(end).scale(&Expr::constant(-o));
    let eta = cob.ends[end].pair.eta().clone();
    let base = cob.boundary();
    let t_name = if base.index_of("tau").is_some() { "tau_" } else { "tau" };
    let collar = CollarChart::named(&base, t_name, 1.0 + OVERLAP)?;
    let lift = |f: &FormField| lift_to_collar(&collar, f);
    let (partner, collar_form) = match mode {
        GlueMode::SameClass => {
            profile.validate()?;
            let alpha = lift(&theta_c)?.scale(profile.scaled_derivative());
            (end, BForm::new(collar.clone(), alpha, lift(&eta)?)?)
        }
        GlueMode::Opposite => {
            let want = cob.tags[end].opposite();
            let partner = (0..cob.ends.len())
                .find(|&i| i != end && cob.tags[i] == want)
                .ok_or_else(|| Error::Precondition(format!("no end of class {want:?} to glue against")))?;
            cob.check_normal_form(partner, tol::GRID_POINTS)?;
            let theta_p = cob.theta_s(partner).scale(&Expr::constant(cob.outward(partner)));
            let pts = budget_grid(base.clone(), tol::GRID_POINTS).points();
            let residual = max_form_difference(&theta_p, &theta_c, &pts)
                .max(max_form_difference(cob.ends[partner].pair.eta(), &eta, &pts));
            if residual > tol::SEAM {
                return Err(Error::BoundaryMismatch { residual, tolerance: tol::SEAM });
            }
            let dtau = FormField::basis(collar.domain().clone(), &[0])?;
            let beta = dtau.wedge(&lift(&theta_c)?)?.add(&lift(&eta)?)?;
            (partner, BForm::ordinary(collar.clone(), beta)?)
        }
    };
    let tau = Expr::var(0);
    let rest = (1..collar.dim()).map(Expr::var);
    let s_e = cob.ends[end].s;
    let s_p = cob.ends[partner].s;
    let o_p = cob.outward(partner);
    let right = std::iter::once(s_e - o * (&tau - 1.0)).chain(rest.clone()).collect();
    let left = std::iter::once(s_p + o_p * (&tau + 1.0)).chain(rest).collect();
    Ok(GluedDouble {
        mode,
        cobordism: cob.clone(),
        end,
        partner,
        to_right: ExprMap::new(collar.domain().clone(), cob.domain.clone(), right)?,
        to_left: ExprMap::new(collar.domain().clone(), cob.domain.clone(), left)?,
        collar: collar_form,
        band: profile.band(),
    })
}

impl GluedDouble {
    pub fn collar_chart(&self) -> &CollarChart {
        self.collar.collar()
    }

    /// The bivector on the mediating collar.
    pub fn collar_bivector(&self) -> Result<MultivectorField> {
        Ok(bivector_from_bform(&self.collar)?.to_multivector())
    }

    /// Components of the assembled form in the collar coordinate `τ`,
    /// switching to the pulled-back cobordism for `|τ| > 1`.
    pub fn assembled_at(&self, x: &[f64]) -> Result<BTreeMap<Index, f64>> {
        if x[0] > 1.0 {
            pullback_at(&self.to_right, &self.cobordism.omega, x)
        } else if x[0] < -1.0 {
            pullback_at(&self.to_left, &self.cobordism.omega, x)
        } else {
            Ok(to_map(self.collar.eval_components(x)?))
        }
    }

    pub fn singular_locus(&self, per_axis: usize, tols: &Tolerances) -> Result<LocusReport> {
        let grid = SampleGrid::new(self.collar_chart().domain().clone(), per_axis);
        singular_locus(&self.collar_bivector()?, &grid, 0, tols.transversality)
    }

    fn base_points(&self, per_axis: usize) -> Vec<Vec<f64>> {
        budget_grid(self.cobordism.boundary(), per_axis).points()
    }

    fn with_tau(base: &[Vec<f64>], taus: &[f64]) -> Vec<Vec<f64>> {
        taus.iter()
            .flat_map(|&t| base.iter().map(move |b| std::iter::once(t).chain(b.iter().copied()).collect()))
            .collect()
    }

    /// Pieces, overlaps, seam closedness, collar nondegeneracy and the
    /// singular locus.
    pub fn verify(&self, per_axis: usize, tols: &Tolerances) -> VerificationReport {
        let mut report = VerificationReport::new("glue_double");
        if let Err(e) = self.verify_into(&mut report, per_axis, tols) {
            report.fail(e.to_string());
        }
        report
    }

    fn verify_into(&self, report: &mut VerificationReport, per_axis: usize, tols: &Tolerances) -> Result<()> {
        let cob = &self.cobordism;
        report.set("mode", self.mode);
        report.set("end_tag", cob.tags[self.end]);
        report.set("partner_tag", cob.tags[self.partner]);
        report.set("profile_band", self.band);
        report.set("fd_step", SEAM_FD_STEP);

        let piece = budget_grid(cob.domain.clone(), per_axis).points();
        for mut r in symplectic_residuals(&cob.omega, &piece, tols) {
            r.name = format!("piece.{}", r.name);
            report.push(r);
        }
        cap_checks(report, &cob.caps, &cob.omega, per_axis, tols);
        report.note("both copies carry the same form in their own charts; pieces and caps are checked once");

        let collar_grid = budget_grid(self.collar_chart().domain().clone(), per_axis).excluding_band(0, 0.0, tol::EXCLUSION_BAND);
        report.absorb("collar", &is_b_symplectic(&self.collar, &collar_grid, tols));

        let base = self.base_points(per_axis.min(9));
        let ov: Vec<f64> = (0..=4).map(|k| 1.0 + OVERLAP * k as f64 / 4.0).collect();
        for (name, map, sign) in [("overlap.right", &self.to_right, 1.0), ("overlap.left", &self.to_left, -1.0)] {
            let taus: Vec<f64> = ov.iter().map(|t| sign * t).collect();
            let mut worst: f64 = 0.0;
            for x in Self::with_tau(&base, &taus) {
                let a = pullback_at(map, &cob.omega, &x)?;
                let b = to_map(self.collar.eval_components(&x)?);
                worst = worst.max(component_distance(&a, &b));
            }
            report.push(Residual::at_most(name, worst, tols.seam));
        }

        let h = SEAM_FD_STEP;
        let mut taus: Vec<f64> = Vec::new();
        for side in [1.0, -1.0] {
            for off in [-3.0 * h, -h, -0.5 * h, 0.0, 0.5 * h, h, 3.0 * h] {
                taus.push(side * (1.0 + off));
            }
            for k in 1..=8 {
                taus.push(side * (0.1 + 1.1 * k as f64 / 8.0));
            }
        }
        let n = self.collar_chart().dim();
        let mut worst: f64 = 0.0;
        let failure = std::cell::RefCell::new(None);
        for x in Self::with_tau(&base, &taus) {
            let d = fd_exterior_derivative_at(
                |y| {
                    self.assembled_at(y).unwrap_or_else(|e| {
                        failure.borrow_mut().get_or_insert(e.to_string());
                        BTreeMap::new()
                    })
                },
                n,
                2,
                &x,
                h,
            );
            worst = worst.max(d.values().fold(0.0, |m, v| m.max(v.abs())));
        }
        if let Some(e) = failure.into_inner() {
            report.fail(e);
        }
        report.push(Residual::at_most("seam_closedness", worst, tols.seam));

        let locus = self.singular_locus(per_axis, tols)?;
        let offset = locus.roots.iter().fold(0.0f64, |m, r| m.max(r[0].abs()));
        report.set("locus_roots", locus.roots.len());
        report.set("locus_lines", locus.lines);
        match self.mode {
            GlueMode::SameClass => {
                let excess = (locus.roots.len() as f64 - locus.lines as f64).abs();
                report.push(Residual::at_most("locus.root_count_mismatch", excess, 0.0));
                report.push(Residual::at_most("locus.offset", offset, tol::LOCUS_OFFSET));
                report.set("singular_locus", "one copy of Z at tau = 0");
            }
            GlueMode::Opposite => {
                report.push(Residual::at_most("locus.roots", locus.roots.len() as f64, 0.0));
                report.set("singular_locus", "empty");
            }
        }
        Ok(())
    }

    /// Compares the collar with the Radko cylinder under `(τ, φ) ↦ (h, θ)` on
    /// the band where `df = d log|τ|`; meaningful for the disk double.
    pub fn compare_with_radko(&self, radko: &RadkoSphere, per_axis: usize) -> VerificationReport {
        let mut report = VerificationReport::new("radko_identification");
        let inner = self.band.0;
        let base = self.base_points(per_axis);
        let taus: Vec<f64> = (0..=8).map(|k| -inner + 2.0 * inner * k as f64 / 8.0).collect();
        let pts = Self::with_tau(&base, &taus);
        if self.collar.collar().dim() != 2 {
            report.fail("only a circle boundary compares with the Radko cylinder");
            return report;
        }
        let worst = extremum(
            &pts,
            |x| (self.collar.b_frame_matrix(x) - radko.form.b_frame_matrix(x)).abs().max(),
            true,
        );
        report.push(Residual::at_most("b_frame_difference", worst.value, tol::ROUND_TRIP));
        report.set("band", inner);
        report
    }
}

/// Result of [`thurston_inflate`].
#[derive(Debug, Clone)]
pub struct Inflation {
    pub k: f64,
    pub omega: FormField,
    /// `min sign·n!·Pf(ω)` on the grid at the returned `K`.
    pub margin: f64,
    pub sign: f64,
    pub doublings: usize,
    pub bisections: usize,
}

/// `ω = ω′ + K θ₀ ∧ ds` with the smallest tested `K` (doubling from `K₀`, then
/// bisection to two significant digits) making `ω` nondegenerate on the grid.
pub fn thurston_inflate(
    leafwise: &FormField,
    theta0: &FormField,
    s_axis: usize,
    k0: f64,
    grid: &SampleGrid,
    tols: &Tolerances,
) -> Result<Inflation> {
    theta0.same_domain(&FormField::zero(leafwise.domain().clone(), 1))?;
    if leafwise.degree() != 2 || theta0.degree() != 1 || s_axis >= leafwise.dim() || leafwise.dim() % 2 == 1 {
        return Err(Error::Precondition("inflation needs a 2-form, a 1-form and an interval axis in even dimension".into()));
    }
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::Precondition(format!("K₀ must be positive, got {k0}")));
    }
    let pts = grid.points();
    for (name, f) in [("leafwise form", leafwise), ("θ₀", theta0)] {
        let d = exterior_derivative(f);
        if !d.is_zero() {
            let worst = extremum(&pts, |x| d.max_abs_at(x), true).value;
            if worst > tols.closedness {
                return Err(Error::Precondition(format!("{name} is not closed (|d| = {worst:.3e})")));
            }
        }
    }
    let ds = FormField::basis(leafwise.domain().clone(), &[s_axis])?;
    let kick = theta0.wedge(&ds)?;
    let p0 = top_coefficient_of(leafwise);
    let p1 = top_coefficient_of(&leafwise.add(&kick)?) - &p0;
    let values: Vec<(f64, f64)> = pts.iter().map(|x| (p0.eval(x), p1.eval(x))).collect();
    let total: f64 = values.iter().map(|v| v.1).sum();
    let sign = if total < 0.0 { -1.0 } else { 1.0 };
    let margin = |k: f64| values.iter().fold(f64::INFINITY, |m, (a, b)| m.min(sign * (a + k * b)));
    let pass = |k: f64| margin(k) >= tols.nondegeneracy;
    let k_max = k0 * 2f64.powi(20);
    let mut k = k0;
    let mut doublings = 0;
    while !pass(k) {
        k *= 2.0;
        doublings += 1;
        if k > k_max {
            return Err(Error::InflationFail { k_max });
        }
    }
    let mut bisections = 0;
    if doublings > 0 {
        let (mut lo, mut hi) = (k / 2.0, k);
        while hi - lo > 0.005 * hi {
            let mid = 0.5 * (lo + hi);
            if pass(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            bisections += 1;
        }
        k = hi;
    }
    let omega = leafwise.add(&kick.scale(&Expr::constant(k)))?;
    Ok(Inflation { k, omega, margin: margin(k), sign, doublings, bisections })
}

/// Restrictions of the inflated form to the ends `s = value`: symbolic
/// identity with the restriction of `ω′`, and agreement with the declared
/// `η` (symbolic when the trees coincide, otherwise on the grid).
pub fn inflation_end_report(
    inflation: &Inflation,
    leafwise: &FormField,
    s_axis: usize,
    ends: &[(f64, FormField)],
    per_axis: usize,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("thurston_inflate");
    report.set("k", inflation.k);
    report.set("margin", inflation.margin);
    report.set("doublings", inflation.doublings);
    report.set("bisections", inflation.bisections);
    report.push(Residual::at_least("nondegeneracy_margin", inflation.margin, tol::NONDEGENERACY));
    for (i, (s, eta)) in ends.iter().enumerate() {
        let got = restrict_to_slice(&inflation.omega, s_axis, *s)?;
        let base = restrict_to_slice(leafwise, s_axis, *s)?;
        let symbolic = got.structurally_equal(&base);
        report.push(Residual::at_most(format!("end{i}.symbolic_identity"), if symbolic { 0.0 } else { 1.0 }, 0.0));
        let exact = got.structurally_equal(eta);
        let pts = budget_grid(got.domain().clone(), per_axis).points();
        let diff = if exact { 0.0 } else { max_form_difference(&got, eta, &pts) };
        report.push(Residual::at_most(format!("end{i}.eta"), diff, tol::ROUND_TRIP));
        report.set(&format!("end{i}_eta_identity"), if exact { "symbolic" } else { "grid" });
    }
    Ok(report)
}

/// `(x, 1) ↦ (φ(x), 0)` on `F × [0, 1]`, with the interval coordinate last.
struct SeamMap<'a> {
    holonomy: &'a dyn ChartMap,
}

impl ChartMap for SeamMap<'_> {
    fn source_dim(&self) -> usize {
        self.holonomy.source_dim() + 1
    }
    fn target_dim(&self) -> usize {
        self.holonomy.target_dim() + 1
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() - 1;
        let mut y = self.holonomy.apply(&x[..n]);
        y.push(x[n] - 1.0);
        y
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len() - 1;
        let j = self.holonomy.jacobian(&x[..n]);
        let mut out = DMatrix::zeros(n + 1, n + 1);
        out.view_mut((0, 0), (n, n)).copy_from(&j);
        out[(n, n)] = 1.0;
        out
    }
}

/// Suspension of a symplectomorphism of `(F, σ)` on the fundamental domain
/// `F × [0, 1]` (interval coordinate `s` last), glued by `(x, 1) ~ (φ(x), 0)`.
pub struct MappingTorus {
    pub fiber: Arc<ChartDomain>,
    pub sigma: FormField,
    pub holonomy: Arc<dyn ChartMap>,
    pub lambda: f64,
    pub domain: Arc<ChartDomain>,
    pub eta: FormField,
    pub theta: FormField,
    /// `max |φ*σ − σ|` on the fiber grid.
    pub holonomy_residual: f64,
}

impl std::fmt::Debug for MappingTorus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MappingTorus")
            .field("domain", &self.domain.to_string())
            .field("lambda", &self.lambda)
            .field("holonomy_residual", &self.holonomy_residual)
            .finish()
    }
}

pub fn mapping_torus(
    sigma: &FormField,
    holonomy: Arc<dyn ChartMap>,
    lambda: f64,
    per_axis: usize,
    tols: &Tolerances,
) -> Result<MappingTorus> {
    let fiber = sigma.domain().clone();
    if holonomy.source_dim() != fiber.dim() || holonomy.target_dim() != fiber.dim() {
        return Err(Error::DomainMismatch);
    }
    if sigma.degree() != 2 {
        return Err(Error::Arity { expected: 2, got: sigma.degree() });
    }
    let grid = budget_grid(fiber.clone(), per_axis);
    let mut residual: f64 = 0.0;
    for x in grid.points() {
        let pulled = pullback_at(holonomy.as_ref(), sigma, &x)?;
        residual = residual.max(component_distance(&pulled, &components_at(sigma, &x)));
    }
    if !(residual <= tols.seam) {
        return Err(Error::NotSymplectic { residual, tolerance: tols.seam });
    }
    let mut coords = fiber.coords().to_vec();
    coords.push(Coordinate::interval("s", 0.0, 1.0));
    let domain = ChartDomain::new(coords)?;
    let eta = FormField::from_terms(domain.clone(), 2, sigma.components().map(|(k, c)| (k.clone(), c.clone())))?;
    let theta = FormField::term(domain.clone(), &[fiber.dim()], Expr::constant(lambda))?;
    Ok(MappingTorus { fiber, sigma: sigma.clone(), holonomy, lambda, domain, eta, theta, holonomy_residual: residual })
}

impl MappingTorus {
    pub fn pair(&self) -> Result<CosymplecticPair> {
        CosymplecticPair::new(self.theta.clone(), self.eta.clone())
    }

    /// `max |J*(θ, η) − (θ, η)|` at `s = 1`, `J(x, 1) = (φ(x), 0)`.
    pub fn seam_residual(&self, per_axis: usize) -> Result<f64> {
        let j = SeamMap { holonomy: self.holonomy.as_ref() };
        let mut worst: f64 = 0.0;
        for mut x in budget_grid(self.fiber.clone(), per_axis).points() {
            x.push(1.0);
            for f in [&self.eta, &self.theta] {
                let pulled = pullback_at(&j, f, &x)?;
                worst = worst.max(component_distance(&pulled, &components_at(f, &x)));
            }
        }
        Ok(worst)
    }

    pub fn verify(&self, per_axis: usize, tols: &Tolerances) -> VerificationReport {
        let mut report = VerificationReport::new("mapping_torus");
        report.push(Residual::at_most("holonomy_symplectic", self.holonomy_residual, tols.seam));
        match self.pair() {
            Ok(pair) => {
                let grid = budget_grid(self.domain.clone(), per_axis);
                report.absorb("pair", &check_volume(&pair, &grid, tols));
                let closed = [&self.eta, &self.theta].iter().all(|f| exterior_derivative(f).is_zero());
                report.push(Residual::at_most("closedness", if closed { 0.0 } else { 1.0 }, tols.closedness));
            }
            Err(e) => {
                report.fail(e.to_string());
            }
        }
        match self.seam_residual(per_axis) {
            Ok(v) => {
                report.push(Residual::at_most("seam", v, tols.seam));
            }
            Err(e) => {
                report.fail(e.to_string());
            }
        }
        report.set("lambda", self.lambda);
        report
    }

    /// For trivial holonomy: `(F × D², σ + dy₁ ∧ dy₂)` bounds the mapping
    /// torus; checks the holonomy is the identity and the filling symplectic.
    pub fn filling(&self, per_axis: usize, tols: &Tolerances) -> Result<(FormField, VerificationReport)> {
        let grid = budget_grid(self.fiber.clone(), per_axis);
        let moved = grid.max_of(|x| {
            let mut y = self.holonomy.apply(x);
            self.fiber.wrap(&mut y);
            y.iter()
                .zip(x)
                .zip(self.fiber.coords())
                .map(|((a, b), c)| match c.period() {
                    Some(p) => {
                        let d = (a - b).rem_euclid(p);
                        d.min(p - d)
                    }
                    None => (a - b).abs(),
                })
                .fold(0.0, f64::max)
        });
        if moved.value > tols.round_trip {
            return Err(Error::Precondition(format!(
                "product filling needs trivial holonomy (moves points by {:.3e})",
                moved.value
            )));
        }
        let mut coords = self.fiber.coords().to_vec();
        coords.push(Coordinate::interval("y1", -1.0, 1.0));
        coords.push(Coordinate::interval("y2", -1.0, 1.0));
        let domain = ChartDomain::new(coords)?;
        let n = self.fiber.dim();
        let disk = FormField::basis(domain.clone(), &[n, n + 1])?;
        let sigma = FormField::from_terms(domain.clone(), 2, self.sigma.components().map(|(k, c)| (k.clone(), c.clone())))?;
        let omega = sigma.add(&disk)?;
        let g = budget_grid(domain, per_axis)
            .excluding("y1² + y2² <= 1", move |x| x[n] * x[n] + x[n + 1] * x[n + 1] <= 1.0);
        let report = verify_symplectic(&omega, &g, tols);
        Ok((omega, report))
    }
}

/// `ω = (1/h) dh ∧ dθ` on the cylinder `h ∈ (−1, 1)`, with polar caps
/// `h = ±(1 − (x² + y²)/2)`.
#[derive(Debug, Clone)]
pub struct RadkoSphere {
    pub form: BForm,
    pub north: CapChart,
    pub south: CapChart,
}

pub fn radko_sphere() -> RadkoSphere {
    let d = ChartDomain::new(vec![Coordinate::interval("h", -1.0, 1.0), Coordinate::periodic("theta", 0.0, TAU)])
        .expect("cylinder");
    let collar = CollarChart::from_domain(d.clone()).expect("symmetric h");
    let form = BForm::new(
        collar,
        FormField::basis(d.clone(), &[1]).expect("dθ"),
        FormField::zero(d.clone(), 2),
    )
    .expect("b-form");
    let cap = |name: &str, pole: f64| {
        let cd = ChartDomain::new(vec![Coordinate::interval("x", -1.2, 1.2), Coordinate::interval("y", -1.2, 1.2)])
            .expect("cap");
        let r2 = Expr::var(0).powi(2) + Expr::var(1).powi(2);
        let height = pole * (1.0 - r2 * 0.5);
        let omega = FormField::term(cd.clone(), &[0, 1], -pole / height).expect("cap form");
        let r = (2.0 * (1.0 - pole * Expr::var(0))).pow(&Expr::constant(0.5));
        let from_product =
            ExprMap::new(d.clone(), cd.clone(), vec![&r * Expr::var(1).cos(), &r * Expr::var(1).sin()]).expect("polar map");
        let overlap = if pole > 0.0 { (0.3, 0.9) } else { (-0.9, -0.3) };
        CapChart { name: name.into(), domain: cd, omega, from_product, overlap, radius: Some(1.2) }
    };
    RadkoSphere { form, north: cap("north", 1.0), south: cap("south", -1.0) }
}

impl RadkoSphere {
    pub fn bivector(&self) -> Result<MultivectorField> {
        Ok(bivector_from_bform(&self.form)?.to_multivector())
    }

    pub fn verify(&self, per_axis: usize, tols: &Tolerances) -> VerificationReport {
        let mut report = VerificationReport::new("radko_sphere");
        if let Err(e) = self.verify_into(&mut report, per_axis, tols) {
            report.fail(e.to_string());
        }
        report
    }

    fn verify_into(&self, report: &mut VerificationReport, per_axis: usize, tols: &Tolerances) -> Result<()> {
        let d = self.form.collar().domain().clone();
        let pi = self.bivector()?;
        let at_half = pi.component(&[0, 1]).eval(&[0.5, 0.0]);
        report.push(Residual::at_most("bivector_at_half", (at_half - 0.5).abs(), tol::ROUND_TRIP));
        let bracket = schouten_bracket(&pi, &pi)?;
        report.push(Residual::at_most("poisson", if bracket.is_zero() { 0.0 } else { 1.0 }, tols.bracket));
        report.set("poisson_symbolic", bracket.is_zero());

        let grid = SampleGrid::new(d.clone(), per_axis).excluding_band(0, 0.0, tol::EXCLUSION_BAND);
        report.absorb("cylinder", &is_b_symplectic(&self.form, &grid, tols));

        let full = SampleGrid::new(d.clone(), per_axis);
        let locus = singular_locus(&pi, &full, 0, tols.transversality)?;
        let offset = locus.roots.iter().fold(0.0f64, |m, r| m.max(r[0].abs()));
        report.push(Residual::at_most("locus.offset", offset, tol::LOCUS_OFFSET));
        report.push(Residual::at_most(
            "locus.root_count_mismatch",
            (locus.roots.len() as f64 - locus.lines as f64).abs(),
            0.0,
        ));
        // the top coefficient is h, so |∇h| = 1 along the equator
        let margin = [locus.min_margin, locus.max_margin]
            .iter()
            .map(|m| m.map_or(f64::INFINITY, |m| (m - 1.0).abs()))
            .fold(0.0, f64::max);
        report.push(Residual::at_most("locus.margin_deviation", margin, tol::ROUND_TRIP));
        report.set("locus.margin", locus.min_margin);
        report.set("singular_locus", "equator h = 0");
        report.absorb("b_serious", &is_b_serious(&pi, &full, 0, tols)?);

        let antipode = ExprMap::new(d.clone(), d.clone(), vec![-Expr::var(0), Expr::var(1) + PI])?;
        let ordinary = self.form.to_form();
        let mut worst: f64 = 0.0;
        for x in grid.points() {
            let pulled = pullback_at(&antipode, &ordinary, &x)?;
            worst = worst.max(component_distance(&pulled, &components_at(&ordinary, &x)));
        }
        report.push(Residual::at_most("antipodal_invariance", worst, tols.seam));

        cap_checks(report, &[self.north.clone(), self.south.clone()], &ordinary, per_axis, tols);
        for cap in [&self.north, &self.south] {
            let top = top_coefficient_of(&cap.omega).eval(&[0.0, 0.0]).abs();
            report.push(Residual::at_least(format!("{}.pole_nondegeneracy", cap.name), top, tols.nondegeneracy));
        }

        let equator_rank = locus.roots.iter().fold(0.0f64, |m, x| m.max(pi.max_abs_at(x)));
        report.push(Residual::at_most("leaves.equator_rank_zero", equator_rank, tol::ROOT));
        let open = grid.min_of(|x| pi.component(&[0, 1]).eval(x).abs());
        report.push(Residual::at_least("leaves.open_rank_two", open.value, tols.nondegeneracy));
        report.set(
            "leaves",
            serde_json::json!({
                "equator": "points of the equator (rank 0)",
                "open": "the two hemispheres h > 0 and h < 0 (rank 2)",
            }),
        );
        Ok(())
    }
}

/// `π = t∂t ∧ R + ν` with `R = g⁻¹θ` and `ν = g⁻¹(φ|_Z + (t²/2) dθ)g⁻¹`, for
/// a folded form with fold `{t = 0}` (coordinate 0) and a metric on the fold.
pub fn folded_to_bserious(
    folded: &FormField,
    theta: &FormField,
    metric: &[Vec<Expr>],
    per_axis: usize,
    tols: &Tolerances,
) -> Result<MultivectorField> {
    let collar = CollarChart::from_domain(folded.domain().clone())?;
    let base = collar.base();
    if **theta.domain() != *base {
        return Err(Error::DomainMismatch);
    }
    let m = base.dim();
    if metric.len() != m || metric.iter().any(|row| row.len() != m) {
        return Err(Error::Arity { expected: m, got: metric.len() });
    }
    let grid = budget_grid(collar.domain().clone(), per_axis);
    let pts = grid.points();
    let d = exterior_derivative(folded);
    if !d.is_zero() {
        let worst = extremum(&pts, |x| d.max_abs_at(x), true).value;
        if worst > tols.closedness {
            return Err(Error::Precondition(format!("folded form is not closed (|dφ| = {worst:.3e})")));
        }
    }
    let c = top_coefficient_of(folded);
    let dc = c.diff(0);
    let slice: Vec<Vec<f64>> = budget_grid(base.clone(), per_axis)
        .points()
        .into_iter()
        .map(|p| std::iter::once(0.0).chain(p).collect())
        .collect();
    for x in &slice {
        let (v, g) = (c.eval(x), dc.eval(x).abs());
        if v.abs() > tol::ROOT || !(g >= tols.transversality) {
            return Err(Error::TransversalityFail { point: x.clone(), margin: g, threshold: tols.transversality });
        }
    }
    let eta_z = restrict_to_slice(folded, 0, 0.0)?;
    let pair = CosymplecticPair::new(theta.clone(), eta_z.clone())?;
    let vol = check_volume(&pair, &budget_grid(base.clone(), per_axis), tols);
    if !vol.passed {
        return Err(Error::Precondition(format!(
            "θ ∧ (φ|_Z)^(n−1) vanishes on the fold (min {:.3e})",
            vol.residual("volume_min").map_or(0.0, |r| r.value)
        )));
    }
    let ginv = inverse_exprs(metric)?;
    let half_t2 = Expr::var(0).powi(2) * 0.5;
    let beta = lift_to_collar(&collar, &eta_z)?.add(&lift_to_collar(&collar, &exterior_derivative(theta))?.scale(&half_t2))?;
    let lifted = |e: &Expr| e.reindex(&|v| v + 1);
    let g: Vec<Vec<Expr>> = ginv.iter().map(|row| row.iter().map(lifted).collect()).collect();
    let r_terms = (0..m).map(|i| {
        let v: Expr = (0..m).map(|j| &g[i][j] * theta.component(&[j]).reindex(&|v| v + 1)).sum();
        (vec![i + 1], v)
    });
    let r = MultivectorField::from_terms(collar.domain().clone(), 1, r_terms)?;
    let bm = beta.matrix_exprs();
    let mut nu_terms = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let mut acc = Expr::zero();
            for k in 0..m {
                for l in 0..m {
                    let b = &bm[k + 1][l + 1];
                    if b.is_zero() || g[i][k].is_zero() || g[j][l].is_zero() {
                        continue;
                    }
                    acc = acc + &g[i][k] * b * &g[j][l];
                }
            }
            nu_terms.push((vec![i + 1, j + 1], acc));
        }
    }
    let nu = MultivectorField::from_terms(collar.domain().clone(), 2, nu_terms)?;
    Ok(BBivector::new(collar, r, nu)?.to_multivector())
}
