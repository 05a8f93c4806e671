//! b-forms and b-bivectors on collars, the b-differential, and detection of
//! the singular locus of a bivector.
//!
//! A collar has the transverse coordinate `t` at index 0. A b-form is stored
//! as `d log|t| ∧ α + β` with `α` free of `dt`; it is only ever evaluated in
//! the b-frame `{t∂t, ∂_1, …}`, where its coefficients stay bounded.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calculus::{exterior_derivative, invert_pairing, pfaffian, top_power};
use crate::chart::{ChartDomain, Coordinate, SampleGrid};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{Field, FormField, Index, MultivectorField, Variance};
use crate::report::{Residual, VerificationReport};
use crate::tol::{self, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct CollarChart {
    domain: Arc<ChartDomain>,
}

impl CollarChart {
    /// `(−ε, ε) × base`, with the new coordinate named `t`.
    pub fn new(base: &ChartDomain, epsilon: f64) -> Result<Self> {
        Self::named(base, "t", epsilon)
    }

    pub fn named(base: &ChartDomain, t_name: &str, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Precondition(format!("collar width must be positive, got {epsilon}")));
        }
        Self::from_domain(base.prepend(Coordinate::interval(t_name, -epsilon, epsilon))?)
    }

    /// Uses an existing chart whose first coordinate is a symmetric interval.
    pub fn from_domain(domain: Arc<ChartDomain>) -> Result<Self> {
        let t = domain.coord(0);
        if t.periodic || (t.lo + t.hi).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "collar coordinate `{}` must be a symmetric interval around 0",
                t.name
            )));
        }
        if domain.dim() < 2 {
            return Err(Error::Precondition("a collar needs at least one base coordinate".into()));
        }
        Ok(CollarChart { domain })
    }

    pub fn domain(&self) -> &Arc<ChartDomain> {
        &self.domain
    }

    pub fn epsilon(&self) -> f64 {
        self.domain.coord(0).hi
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// The hypersurface `{t = 0}`.
    pub fn base(&self) -> Arc<ChartDomain> {
        self.domain.without(0).expect("collar has base coordinates")
    }

    /// Default grid with the band `|t| < δ` removed.
    pub fn grid(&self, per_axis: usize, band: f64) -> SampleGrid {
        SampleGrid::new(self.domain.clone(), per_axis).excluding_band(0, 0.0, band)
    }
}

/// Substitution that restricts a collar expression to `t = 0` and renumbers
/// the remaining coordinates onto the base.
fn restrict_to_locus(dim: usize) -> Vec<Expr> {
    std::iter::once(Expr::zero()).chain((0..dim - 1).map(Expr::var)).collect()
}

/// Inverse renumbering: base expression lifted to the collar.
fn lift_from_base(base_dim: usize) -> Vec<Expr> {
    (1..=base_dim).map(Expr::var).collect()
}

fn drop_index(field: &FormField, i: usize) -> FormField {
    FormField::from_terms(
        field.domain().clone(),
        field.degree(),
        field.components().filter(|(k, _)| !k.contains(&i)).map(|(k, v)| (k.clone(), v.clone())),
    )
    .expect("same chart")
}

/// `d log|t| ∧ α + β`.
#[derive(Debug, Clone)]
pub struct BForm {
    collar: CollarChart,
    alpha: FormField,
    beta: FormField,
}

impl BForm {
    pub fn new(collar: CollarChart, alpha: FormField, beta: FormField) -> Result<Self> {
        for f in [&alpha, &beta] {
            if **f.domain() != **collar.domain() {
                return Err(Error::DomainMismatch);
            }
        }
        if alpha.degree() + 1 != beta.degree() {
            return Err(Error::Arity { expected: beta.degree().saturating_sub(1), got: alpha.degree() });
        }
        let alpha = drop_index(&alpha, 0);
        Ok(BForm { collar, alpha, beta })
    }

    /// An ordinary smooth form seen as a b-form with `α = 0`.
    pub fn ordinary(collar: CollarChart, beta: FormField) -> Result<Self> {
        if beta.degree() == 0 {
            return Err(Error::Precondition("b-forms have degree at least 1".into()));
        }
        let alpha = FormField::zero(collar.domain().clone(), beta.degree() - 1);
        Self::new(collar, alpha, beta)
    }

    /// Splits a form with a first-order pole along `t = 0` into `(α, β)`, where
    /// `α_J = t·ω_{tJ}`. The result is checked for finiteness on `t = 0`.
    pub fn from_form_with_pole(collar: CollarChart, w: &FormField, check: &SampleGrid) -> Result<Self> {
        if **w.domain() != **collar.domain() {
            return Err(Error::DomainMismatch);
        }
        if w.degree() == 0 {
            return Err(Error::Precondition("b-forms have degree at least 1".into()));
        }
        let t = Expr::var(0);
        let mut alpha_terms = Vec::new();
        let mut beta_terms = Vec::new();
        for (k, c) in w.components() {
            if k[0] == 0 {
                alpha_terms.push((k[1..].to_vec(), &t * c));
            } else {
                beta_terms.push((k.clone(), c.clone()));
            }
        }
        let d = collar.domain().clone();
        let alpha = FormField::from_terms(d.clone(), w.degree() - 1, alpha_terms)?;
        let beta = FormField::from_terms(d, w.degree(), beta_terms)?;
        for mut x in check.points() {
            x[0] = 0.0;
            if alpha.components().any(|(_, c)| !c.eval(&x).is_finite()) {
                return Err(Error::Precondition(format!(
                    "t·ω has no finite limit on t = 0 at {x:?}; the pole is not of b-type"
                )));
            }
        }
        Self::new(collar, alpha, beta)
    }

    pub fn collar(&self) -> &CollarChart {
        &self.collar
    }

    pub fn alpha(&self) -> &FormField {
        &self.alpha
    }

    pub fn beta(&self) -> &FormField {
        &self.beta
    }

    pub fn degree(&self) -> usize {
        self.beta.degree()
    }

    /// True when `α` vanishes identically, i.e. the form is smooth.
    pub fn is_ordinary(&self) -> bool {
        self.alpha.is_zero()
    }

    /// The same form as an ordinary field with `dt/t`; singular on `t = 0`.
    pub fn to_form(&self) -> FormField {
        let d = self.collar.domain().clone();
        let dlog = FormField::term(d, &[0], Expr::var(0).powi(-1)).expect("collar index");
        dlog.wedge(&self.alpha).expect("same chart").add(&self.beta).expect("same degree")
    }

    /// Ordinary components at a point with `t ≠ 0`.
    pub fn eval_components(&self, x: &[f64]) -> Result<Vec<(Index, f64)>> {
        if x[0] == 0.0 {
            return Err(Error::Precondition("b-forms are not evaluated as ordinary forms on t = 0".into()));
        }
        Ok(self.to_form().eval_components(x))
    }

    /// Symbolic matrix in the b-frame `{t∂t, ∂_1, …}` (degree 2 only).
    pub fn b_frame_matrix_exprs(&self) -> Vec<Vec<Expr>> {
        assert_eq!(self.degree(), 2, "b-frame matrix needs a b-2-form");
        let n = self.collar.dim();
        let t = Expr::var(0);
        let mut m = vec![vec![Expr::zero(); n]; n];
        for i in 1..n {
            let v = self.alpha.component(&[i]) + &t * self.beta.component(&[0, i]);
            m[0][i] = v.clone();
            m[i][0] = -v;
            for j in i + 1..n {
                let b = self.beta.component(&[i, j]);
                m[i][j] = b.clone();
                m[j][i] = -b;
            }
        }
        m
    }

    pub fn b_frame_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.b_frame_matrix_exprs();
        let n = m.len();
        DMatrix::from_fn(n, n, |i, j| m[i][j].eval(x))
    }
}

/// `t∂t ∧ r + ν`.
#[derive(Debug, Clone)]
pub struct BBivector {
    collar: CollarChart,
    r_part: MultivectorField,
    nu_part: MultivectorField,
}

impl BBivector {
    pub fn new(collar: CollarChart, r_part: MultivectorField, nu_part: MultivectorField) -> Result<Self> {
        for f in [&r_part, &nu_part] {
            if **f.domain() != **collar.domain() {
                return Err(Error::DomainMismatch);
            }
        }
        if r_part.degree() + 1 != nu_part.degree() {
            return Err(Error::Arity { expected: nu_part.degree().saturating_sub(1), got: r_part.degree() });
        }
        Ok(BBivector { collar, r_part, nu_part })
    }

    pub fn collar(&self) -> &CollarChart {
        &self.collar
    }

    pub fn r_part(&self) -> &MultivectorField {
        &self.r_part
    }

    pub fn nu_part(&self) -> &MultivectorField {
        &self.nu_part
    }

    /// The ordinary multivector field; smooth across `t = 0`.
    pub fn to_multivector(&self) -> MultivectorField {
        let d = self.collar.domain().clone();
        let tdt = MultivectorField::term(d, &[0], Expr::var(0)).expect("collar index");
        tdt.wedge(&self.r_part).expect("same chart").add(&self.nu_part).expect("same degree")
    }
}

/// `♭ω = α|_{t=0}` as a form on the base.
pub fn b_flat(w: &BForm) -> FormField {
    let base = w.collar.base();
    let subs = restrict_to_locus(w.collar.dim());
    FormField::from_terms(
        base,
        w.alpha.degree(),
        w.alpha
            .components()
            .map(|(k, c)| (k.iter().map(|i| i - 1).collect(), c.substitute(&subs))),
    )
    .expect("indices shift onto the base")
}

/// Lifts a base field to the collar, constant in `t`.
pub fn lift_to_collar<V: Variance>(collar: &CollarChart, w: &Field<V>) -> Result<Field<V>> {
    if **w.domain() != *collar.base() {
        return Err(Error::DomainMismatch);
    }
    let subs = lift_from_base(w.dim());
    Field::<V>::from_terms(
        collar.domain().clone(),
        w.degree(),
        w.components().map(|(k, c)| (k.iter().map(|i| i + 1).collect(), c.substitute(&subs))),
    )
}

/// `ᵇd(d log|t| ∧ α + β) = d log|t| ∧ (−dα) + dβ`.
pub fn b_differential(w: &BForm) -> BForm {
    BForm::new(w.collar.clone(), exterior_derivative(&w.alpha).neg(), exterior_derivative(&w.beta))
        .expect("degrees stay aligned")
}

/// Top-degree coefficient `n!·Pf` of a b-2-form in the b-frame (or of the
/// ordinary matrix for an ordinary form).
pub fn top_coefficient(w: &BForm) -> Expr {
    let n = w.collar.dim();
    let m = if w.is_ordinary() { w.beta.matrix_exprs() } else { w.b_frame_matrix_exprs() };
    let fact: f64 = (1..=n / 2).map(|k| k as f64).product();
    fact * pfaffian(&m)
}

fn with_locus_slice(grid: &SampleGrid) -> Vec<Vec<f64>> {
    let mut pts = grid.points();
    let mut slice: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q[0] = 0.0;
            q
        })
        .collect();
    slice.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    slice.dedup();
    pts.extend(slice);
    pts
}

/// Closedness and b-nondegeneracy of a b-2-form on a grid. An ordinary form
/// (`α ≡ 0`) is checked as a symplectic form with empty singular locus.
pub fn is_b_symplectic(w: &BForm, grid: &SampleGrid, tols: &Tolerances) -> VerificationReport {
    let mut report = VerificationReport::new("is_b_symplectic").with_grid(grid.meta());
    if w.degree() != 2 || w.collar.dim() % 2 == 1 {
        report.fail(format!("needs a b-2-form on an even-dimensional collar (degree {}, dim {})", w.degree(), w.collar.dim()));
        return report;
    }
    let bd = b_differential(w);
    let symbolic_zero = bd.alpha.is_zero() && bd.beta.is_zero();
    let ordinary = w.is_ordinary();
    let pts = if ordinary { grid.points() } else { with_locus_slice(grid) };
    let closed = if symbolic_zero {
        0.0
    } else {
        crate::chart::extremum(&pts, |x| bd.alpha.max_abs_at(x).max(bd.beta.max_abs_at(x)), true).value
    };
    report.push(Residual::at_most("closedness", closed, tols.closedness));
    let top = top_coefficient(w);
    let nondeg = crate::chart::extremum(&pts, |x| top.eval(x).abs(), false);
    report.push(Residual::at_least("nondegeneracy", nondeg.value, tols.nondegeneracy));
    report.set("closed_symbolically", symbolic_zero);
    report.set("frame", if ordinary { "standard" } else { "b" });
    report.set("singular_locus", if b_flat(w).is_zero() { "empty" } else { "t = 0" });
    if let Some(p) = nondeg.point {
        report.set("nondegeneracy_worst_point", p);
    }
    report.set("points_checked", pts.len());
    report
}

/// Fails with `Degenerate` if the b-frame matrix is ill-conditioned anywhere
/// on the grid (including `t = 0`).
pub fn check_conditioning(w: &BForm, grid: &SampleGrid, threshold: f64) -> Result<()> {
    let pts = if w.is_ordinary() { grid.points() } else { with_locus_slice(grid) };
    let worst = crate::chart::extremum(
        &pts,
        |x| {
            let m = if w.is_ordinary() { w.beta.matrix_at(x) } else { w.b_frame_matrix(x) };
            crate::calculus::conditioning(&m)
        },
        false,
    );
    if worst.value < threshold || worst.value.is_nan() {
        return Err(Error::Degenerate { point: worst.point.unwrap_or_default(), ratio: worst.value, threshold });
    }
    Ok(())
}

fn b_frame_field(collar: &CollarChart, m: &[Vec<Expr>]) -> MultivectorField {
    MultivectorField::from_matrix_exprs(collar.domain().clone(), m).expect("square matrix")
}

/// The b-bivector inverse to a b-symplectic form: `Π_b = −B⁻¹` in the b-frame,
/// so `π = t∂t ∧ Π_b^{0i}∂_i + Π_b^{ij}∂_i∧∂_j`.
pub fn bivector_from_bform(w: &BForm) -> Result<BBivector> {
    if w.degree() != 2 {
        return Err(Error::Precondition(format!("expected a b-2-form, got degree {}", w.degree())));
    }
    let collar = w.collar.clone();
    let d = collar.domain().clone();
    if w.is_ordinary() {
        let pi: MultivectorField = invert_pairing(&w.beta)?;
        return BBivector::new(collar, MultivectorField::zero(d, 1), pi);
    }
    let b = FormField::from_matrix_exprs(d.clone(), &w.b_frame_matrix_exprs())?;
    let pb: MultivectorField = invert_pairing(&b)?;
    let n = collar.dim();
    let r = MultivectorField::from_terms(d.clone(), 1, (1..n).map(|i| (vec![i], pb.component(&[0, i]))))?;
    let nu = MultivectorField::from_terms(
        d,
        2,
        pb.components().filter(|(k, _)| k[0] != 0).map(|(k, v)| (k.clone(), v.clone())),
    )?;
    BBivector::new(collar, r, nu)
}

/// Inverse of [`bivector_from_bform`]. `ν` must not carry `∂t` unless `r = 0`,
/// in which case the bivector is inverted as an ordinary one.
pub fn bform_from_bivector(p: &BBivector) -> Result<BForm> {
    if p.nu_part.degree() != 2 {
        return Err(Error::Precondition(format!("expected a b-bivector, got degree {}", p.nu_part.degree())));
    }
    let collar = p.collar.clone();
    let d = collar.domain().clone();
    if p.r_part.is_zero() {
        let w: FormField = invert_pairing(&p.nu_part)?;
        return BForm::ordinary(collar, w);
    }
    if p.nu_part.components().any(|(k, _)| k[0] == 0) {
        return Err(Error::Precondition("ν has a ∂t component; not in collar normal form".into()));
    }
    let n = collar.dim();
    let mut m = vec![vec![Expr::zero(); n]; n];
    for i in 1..n {
        let r = p.r_part.component(&[i]);
        m[0][i] = r.clone();
        m[i][0] = -r;
        for j in i + 1..n {
            let v = p.nu_part.component(&[i, j]);
            m[i][j] = v.clone();
            m[j][i] = -v;
        }
    }
    let pb = b_frame_field(&collar, &m);
    let b: FormField = invert_pairing(&pb)?;
    let alpha = FormField::from_terms(d.clone(), 1, (1..n).map(|i| (vec![i], b.component(&[0, i]))))?;
    let beta = FormField::from_terms(
        d,
        2,
        b.components().filter(|(k, _)| k[0] != 0).map(|(k, v)| (k.clone(), v.clone())),
    )?;
    BForm::new(collar, alpha, beta)
}

/// Zeros of the top power of a bivector found along grid lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusReport {
    /// Axis along which lines were scanned.
    pub direction: usize,
    pub lines: usize,
    pub roots: Vec<Vec<f64>>,
    /// Smallest `|∇c|` over located roots; `None` when the locus is empty.
    pub min_margin: Option<f64>,
    pub max_margin: Option<f64>,
}

impl LocusReport {
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn scan_line(c: &Expr, base: &[f64], axis: usize, nodes: &[f64]) -> Vec<f64> {
    let at = |s: f64| {
        let mut x = base.to_vec();
        x[axis] = s;
        c.eval(&x)
    };
    let vals: Vec<f64> = nodes.iter().map(|&s| at(s)).collect();
    let mut roots = Vec::new();
    for i in 0..nodes.len() {
        if vals[i] == 0.0 {
            roots.push(nodes[i]);
        }
        if i + 1 < nodes.len() && vals[i].is_finite() && vals[i + 1].is_finite() && vals[i] * vals[i + 1] < 0.0 {
            roots.push(bisect(&at, nodes[i], nodes[i + 1], tol::ROOT));
        }
        if i > 0 && i + 1 < nodes.len() {
            let (l, m, r) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
            let same_sign = vals[i - 1] * vals[i] > 0.0 && vals[i] * vals[i + 1] > 0.0;
            if same_sign && m <= l && m <= r && m.is_finite() {
                let (s, v) = golden_min(&|s| at(s).abs(), nodes[i - 1], nodes[i + 1], tol::ROOT);
                if v <= tol::ROOT {
                    roots.push(s);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    roots
}

fn line_nodes(domain: &ChartDomain, grid: &SampleGrid, axis: usize) -> Vec<f64> {
    let c = domain.coord(axis);
    let mut nodes = grid.axis_nodes(axis);
    if c.periodic {
        nodes.push(c.hi);
    } else {
        nodes.insert(0, c.lo);
        nodes.push(c.hi);
    }
    nodes
}

/// The coefficient `c` of `⋀ⁿπ` on a `2n`-dimensional chart.
pub fn top_power_coefficient(p: &MultivectorField) -> Result<Expr> {
    if p.dim() % 2 == 1 {
        return Err(Error::Precondition("singular locus needs an even-dimensional chart".into()));
    }
    let top = top_power(p, p.dim() / 2)?;
    Ok(top.component(&(0..p.dim()).collect::<Vec<_>>()))
}

/// Zeros of the top power of `π`, located by scanning lines parallel to
/// `direction` through the grid and refining to `1e-10`. Each zero must be
/// transverse: `|∇c| ≥ threshold`.
pub fn singular_locus(p: &MultivectorField, grid: &SampleGrid, direction: usize, threshold: f64) -> Result<LocusReport> {
    let c = top_power_coefficient(p)?;
    let domain = p.domain().clone();
    if direction >= domain.dim() {
        return Err(Error::Precondition(format!("scan direction {direction} out of range")));
    }
    let grad: Vec<Expr> = (0..domain.dim()).map(|i| c.diff(i)).collect();
    let nodes = line_nodes(&domain, grid, direction);
    let mut bases: Vec<Vec<f64>> = vec![vec![0.0; domain.dim()]];
    for axis in 0..domain.dim() {
        if axis == direction {
            continue;
        }
        let ax = grid.axis_nodes(axis);
        bases = bases
            .into_iter()
            .flat_map(|b| {
                ax.iter().map(move |&v| {
                    let mut q = b.clone();
                    q[axis] = v;
                    q
                })
            })
            .collect();
    }
    use rayon::prelude::*;
    let per_line: Vec<Vec<Vec<f64>>> = bases
        .par_iter()
        .map(|b| {
            scan_line(&c, b, direction, &nodes)
                .into_iter()
                .map(|s| {
                    let mut x = b.clone();
                    x[direction] = s;
                    x
                })
                .collect()
        })
        .collect();
    let roots: Vec<Vec<f64>> = per_line.into_iter().flatten().collect();
    let mut min_margin: Option<(f64, Vec<f64>)> = None;
    let mut max_margin: Option<f64> = None;
    for x in &roots {
        let g = grad.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        if min_margin.as_ref().is_none_or(|(m, _)| g < *m || g.is_nan()) {
            min_margin = Some((g, x.clone()));
        }
        max_margin = Some(max_margin.map_or(g, |m: f64| m.max(g)));
    }
    if let Some((m, x)) = &min_margin {
        if !(*m >= threshold) {
            return Err(Error::TransversalityFail { point: x.clone(), margin: *m, threshold });
        }
    }
    Ok(LocusReport { direction, lines: bases.len(), roots, min_margin: min_margin.map(|(m, _)| m), max_margin })
}

/// b-seriousness: transverse top power, and `π♯(dc)` vanishing on the located
/// locus, i.e. in coordinates adapted to the locus `π` has no `∂t` component
/// outside the `t∂t ∧ (·)` factor.
pub fn is_b_serious(p: &MultivectorField, grid: &SampleGrid, direction: usize, tols: &Tolerances) -> Result<VerificationReport> {
    let locus = singular_locus(p, grid, direction, tols.transversality)?;
    let mut report = VerificationReport::new("is_b_serious").with_grid(grid.meta());
    report.set("locus_points", locus.roots.len());
    if locus.is_empty() {
        report.note("empty singular locus: nondegenerate bivector, b-serious vacuously");
        return Ok(report);
    }
    report.push(Residual::at_least("transversality_margin", locus.min_margin.unwrap_or(0.0), tols.transversality));
    let c = top_power_coefficient(p)?;
    let grad: Vec<Expr> = (0..p.dim()).map(|i| c.diff(i)).collect();
    let mut worst: f64 = 0.0;
    for x in &locus.roots {
        let g: Vec<f64> = grad.iter().map(|e| e.eval(x)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let m = p.matrix_at(x);
        let v = m.transpose() * DMatrix::from_column_slice(g.len(), 1, &g);
        worst = worst.max(v.abs().max() / norm);
    }
    report.push(Residual::at_most("normal_component_on_locus", worst, tol::TANGENCY));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn torus3() -> Arc<ChartDomain> {
        ChartDomain::torus(&["x", "y", "z"])
    }

    fn collar() -> CollarChart {
        CollarChart::new(&torus3(), 0.5).unwrap()
    }

    fn form(c: &CollarChart, degree: usize, terms: &[(&str, &str)]) -> FormField {
        FormField::from_text(c.domain().clone(), degree, terms.iter().copied()).unwrap()
    }

    fn mv(d: &Arc<ChartDomain>, degree: usize, terms: &[(&str, &str)]) -> MultivectorField {
        MultivectorField::from_text(d.clone(), degree, terms.iter().copied()).unwrap()
    }

    fn radko() -> CollarChart {
        let d = ChartDomain::new(vec![
            Coordinate::interval("h", -1.0, 1.0),
            Coordinate::periodic("theta", 0.0, std::f64::consts::TAU),
        ])
        .unwrap();
        CollarChart::from_domain(d).unwrap()
    }

    #[test]
    fn flat_examples() {
        let c = collar();
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "1")]), form(&c, 2, &[("x,y", "1")])).unwrap();
        let f = b_flat(&w);
        assert_eq!(f.component(&[2]).as_const(), Some(1.0));
        assert_eq!(f.len(), 1);
        assert!(b_flat(&BForm::ordinary(c.clone(), form(&c, 2, &[("x,y", "1")])).unwrap()).is_zero());
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "1"), ("x", "t")]), form(&c, 2, &[("x,y", "1")])).unwrap();
        let f = b_flat(&w);
        assert_eq!(f.len(), 1);
        assert_eq!(f.component(&[2]).as_const(), Some(1.0));
    }

    #[test]
    fn b_differential_examples() {
        let c = collar();
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "1")]), form(&c, 2, &[("x,y", "1")])).unwrap();
        let bd = b_differential(&w);
        assert!(bd.alpha().is_zero() && bd.beta().is_zero());
        let beta = form(&c, 2, &[("x,z", "(sin y)")]);
        let bd = b_differential(&BForm::ordinary(c.clone(), beta.clone()).unwrap());
        assert!(bd.alpha().is_zero());
        assert!(bd.beta().structurally_equal(&exterior_derivative(&beta)));
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "x")]), FormField::zero(c.domain().clone(), 2)).unwrap();
        let bd = b_differential(&w);
        assert_eq!(bd.alpha().component(&[1, 3]).as_const(), Some(-1.0));
        // agrees with d away from t = 0
        let ordinary = exterior_derivative(&w.to_form());
        let via_b = bd.to_form();
        for x in [[0.3, 0.1, 0.2, 0.7], [-0.2, 0.5, 0.9, 0.4]] {
            for k in crate::field::subsets(4, 3) {
                assert_abs_diff_eq!(ordinary.component(&k).eval(&x), via_b.component(&k).eval(&x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn b_symplectic_examples() {
        let c = collar();
        let grid = SampleGrid::new(c.domain().clone(), 5);
        let tols = Tolerances::default();
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "1")]), form(&c, 2, &[("x,y", "1")])).unwrap();
        assert!(is_b_symplectic(&w, &grid, &tols).passed);
        let w = BForm::ordinary(c.clone(), form(&c, 2, &[("x,y", "1"), ("z,t", "1")])).unwrap();
        let r = is_b_symplectic(&w, &grid, &tols);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.provenance["singular_locus"], "empty");
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "1")]), form(&c, 2, &[("x,y", "t")])).unwrap();
        let r = is_b_symplectic(&w, &grid, &tols);
        assert!(!r.passed);
        assert!(!r.residual("nondegeneracy").unwrap().passed);
    }

    #[test]
    fn correspondence_examples() {
        let c = collar();
        let w = BForm::new(c.clone(), form(&c, 1, &[("z", "1")]), form(&c, 2, &[("x,y", "1")])).unwrap();
        let p = bivector_from_bform(&w).unwrap();
        assert_eq!(p.r_part().component(&[3]).as_const(), Some(1.0));
        assert_eq!(p.r_part().len(), 1);
        assert_eq!(p.nu_part().component(&[1, 2]).as_const(), Some(1.0));
        assert_eq!(p.nu_part().len(), 1);
        let back = bform_from_bivector(&p).unwrap();
        assert!(back.alpha().structurally_equal(w.alpha()));
        assert!(back.beta().structurally_equal(w.beta()));

        let d2 = ChartDomain::new(vec![Coordinate::interval("x", -1.0, 1.0), Coordinate::interval("y", -1.0, 1.0)]).unwrap();
        let c2 = CollarChart::from_domain(d2.clone()).unwrap();
        let w = BForm::ordinary(c2.clone(), FormField::basis(d2.clone(), &[0, 1]).unwrap()).unwrap();
        let p = bivector_from_bform(&w).unwrap();
        assert!(p.r_part().is_zero());
        assert_eq!(p.nu_part().component(&[0, 1]).as_const(), Some(1.0));

        let r = radko();
        let w = FormField::from_text(r.domain().clone(), 2, [("h,theta", "(/ 1 h)")]).unwrap();
        let b = BForm::from_form_with_pole(r.clone(), &w, &SampleGrid::new(r.domain().clone(), 9)).unwrap();
        assert_eq!(b.alpha().component(&[1]).as_const(), Some(1.0));
        let pi = bivector_from_bform(&b).unwrap().to_multivector();
        assert_eq!(pi.component(&[0, 1]), Expr::var(0));
    }

    #[test]
    fn locus_examples() {
        let r = radko();
        let pi = mv(r.domain(), 2, &[("h,theta", "h")]);
        let grid = SampleGrid::new(r.domain().clone(), 17);
        let loc = singular_locus(&pi, &grid, 0, tol::TRANSVERSALITY).unwrap();
        assert_eq!(loc.roots.len(), 17);
        assert!(loc.roots.iter().all(|x| x[0].abs() < 1e-10));
        assert_abs_diff_eq!(loc.min_margin.unwrap(), 1.0, epsilon = 1e-8);

        let d4 = ChartDomain::new(["x", "y", "z", "w"].iter().map(|n| Coordinate::interval(n, -1.0, 1.0)).collect()).unwrap();
        let pi = mv(&d4, 2, &[("x,y", "1"), ("z,w", "1")]);
        assert!(singular_locus(&pi, &SampleGrid::new(d4.clone(), 5), 0, 1e-4).unwrap().is_empty());

        let c = collar();
        let pi = mv(c.domain(), 2, &[("t,z", "(* t t)"), ("x,y", "1")]);
        let err = singular_locus(&pi, &SampleGrid::new(c.domain().clone(), 5), 0, 1e-4).unwrap_err();
        assert!(matches!(err, Error::TransversalityFail { .. }), "{err:?}");
    }

    #[test]
    fn b_serious_examples() {
        let c = collar();
        let grid = SampleGrid::new(c.domain().clone(), 5);
        let tols = Tolerances::default();
        let pi = mv(c.domain(), 2, &[("t,z", "t"), ("x,y", "1")]);
        let r = is_b_serious(&pi, &grid, 0, &tols).unwrap();
        assert!(r.passed, "{r:?}");
        let pi = mv(c.domain(), 2, &[("t,z", "1"), ("x,y", "1")]);
        let r = is_b_serious(&pi, &grid, 0, &tols).unwrap();
        assert!(r.passed);
        assert_eq!(r.provenance["locus_points"], 0);
        // ⋀²π ≡ 0: the locus step already fails
        let pi = mv(c.domain(), 2, &[("t,z", "t"), ("t,x", "1")]);
        assert!(matches!(is_b_serious(&pi, &grid, 0, &tols), Err(Error::TransversalityFail { .. })));
        // transverse locus but a ∂t component survives on it
        let pi = mv(c.domain(), 2, &[("t,z", "t"), ("x,y", "1"), ("t,x", "1")]);
        let r = is_b_serious(&pi, &grid, 0, &tols).unwrap();
        assert!(!r.passed);
        assert!(!r.residual("normal_component_on_locus").unwrap().passed);
    }
}
