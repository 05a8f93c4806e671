//! Coordinate charts, sample grids and maps between charts.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Coordinate {
    pub fn interval(name: &str, lo: f64, hi: f64) -> Self {
        Coordinate { name: name.to_string(), lo, hi, periodic: false }
    }

    /// A circle coordinate on `[lo, lo + period)`.
    pub fn periodic(name: &str, lo: f64, period: f64) -> Self {
        Coordinate { name: name.to_string(), lo, hi: lo + period, periodic: true }
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then_some(self.hi - self.lo)
    }
}

/// A box in ℝⁿ with named coordinates; periodic coordinates wrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    coords: Vec<Coordinate>,
}

impl ChartDomain {
    pub fn new(coords: Vec<Coordinate>) -> Result<Arc<Self>> {
        if coords.is_empty() {
            return Err(Error::Precondition("chart needs at least one coordinate".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if !(c.lo.is_finite() && c.hi.is_finite()) || c.hi <= c.lo {
                return Err(Error::Precondition(format!(
                    "coordinate `{}` has invalid bounds [{}, {}]",
                    c.name, c.lo, c.hi
                )));
            }
            if coords[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Precondition(format!("duplicate coordinate `{}`", c.name)));
            }
        }
        Ok(Arc::new(ChartDomain { coords }))
    }

    /// Flat torus `[0,1)^k` with the given coordinate names.
    pub fn torus(names: &[&str]) -> Arc<Self> {
        Self::new(names.iter().map(|n| Coordinate::periodic(n, 0.0, 1.0)).collect())
            .expect("valid torus chart")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &Coordinate {
        &self.coords[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    /// Closed-box membership; periodic coordinates always pass.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .coords
                .iter()
                .zip(x)
                .all(|(c, &v)| v.is_finite() && (c.periodic || (v >= c.lo && v <= c.hi)))
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// Wraps periodic coordinates into their fundamental interval.
    pub fn wrap(&self, x: &mut [f64]) {
        for (c, v) in self.coords.iter().zip(x.iter_mut()) {
            if let Some(p) = c.period() {
                *v = c.lo + (*v - c.lo).rem_euclid(p);
            }
        }
    }

    /// Product chart `self × other` (coordinates of `self` first).
    pub fn product(&self, other: &ChartDomain) -> Result<Arc<Self>> {
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        ChartDomain::new(coords)
    }

    /// Prepends a coordinate.
    pub fn prepend(&self, c: Coordinate) -> Result<Arc<Self>> {
        let mut coords = vec![c];
        coords.extend(self.coords.iter().cloned());
        ChartDomain::new(coords)
    }

    /// Drops coordinate `i`.
    pub fn without(&self, i: usize) -> Result<Arc<Self>> {
        let mut coords = self.coords.clone();
        coords.remove(i);
        ChartDomain::new(coords)
    }
}

impl fmt::Display for ChartDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|c| {
                if c.periodic {
                    format!("{}∈S¹[{}, {})", c.name, c.lo, c.hi)
                } else {
                    format!("{}∈[{}, {}]", c.name, c.lo, c.hi)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" × "))
    }
}

pub type Exclusion = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Tensor-product sample grid.
///
/// Interval coordinates use cell centres, so every emitted point is interior;
/// periodic coordinates use `lo + k·period/N`.
#[derive(Clone)]
pub struct SampleGrid {
    domain: Arc<ChartDomain>,
    resolution: Vec<usize>,
    exclusion: Option<Exclusion>,
    exclusion_label: Option<String>,
    extra: Vec<Vec<f64>>,
}

impl fmt::Debug for SampleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleGrid")
            .field("domain", &self.domain.to_string())
            .field("resolution", &self.resolution)
            .field("exclusion", &self.exclusion_label)
            .finish()
    }
}

impl SampleGrid {
    pub fn new(domain: Arc<ChartDomain>, per_axis: usize) -> Self {
        let n = domain.dim();
        Self::with_resolution(domain, vec![per_axis.max(1); n])
    }

    pub fn with_default_resolution(domain: Arc<ChartDomain>) -> Self {
        Self::new(domain, tol::GRID_POINTS)
    }

    pub fn with_resolution(domain: Arc<ChartDomain>, resolution: Vec<usize>) -> Self {
        assert_eq!(resolution.len(), domain.dim(), "one resolution per axis");
        SampleGrid { domain, resolution, exclusion: None, exclusion_label: None, extra: Vec::new() }
    }

    /// Keeps only points with `|x[axis] - center| >= band`.
    pub fn excluding_band(self, axis: usize, center: f64, band: f64) -> Self {
        let label = format!("|{} - {}| >= {}", self.domain.coord(axis).name, center, band);
        self.excluding(label, move |x| (x[axis] - center).abs() >= band)
    }

    /// Keeps only points for which `keep` returns true.
    pub fn excluding(
        mut self,
        label: impl Into<String>,
        keep: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        let prev = self.exclusion.take();
        let keep: Exclusion = match prev {
            Some(p) => Arc::new(move |x| p(x) && keep(x)),
            None => Arc::new(keep),
        };
        self.exclusion = Some(keep);
        self.exclusion_label = Some(match self.exclusion_label.take() {
            Some(l) => format!("{l} and {}", label.into()),
            None => label.into(),
        });
        self
    }

    /// Adds explicit points in addition to the tensor grid.
    pub fn with_extra_points(mut self, pts: impl IntoIterator<Item = Vec<f64>>) -> Self {
        self.extra.extend(pts);
        self
    }

    pub fn domain(&self) -> &Arc<ChartDomain> {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn exclusion_label(&self) -> Option<&str> {
        self.exclusion_label.as_deref()
    }

    /// Nodes along axis `i`.
    pub fn axis_nodes(&self, i: usize) -> Vec<f64> {
        let c = self.domain.coord(i);
        let n = self.resolution[i];
        let w = c.hi - c.lo;
        if c.periodic {
            (0..n).map(|k| c.lo + w * k as f64 / n as f64).collect()
        } else {
            (0..n).map(|k| c.lo + w * (k as f64 + 0.5) / n as f64).collect()
        }
    }

    /// All points, in row-major order (last axis fastest), after exclusion.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.domain.dim()).map(|i| self.axis_nodes(i)).collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total + self.extra.len());
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let p: Vec<f64> = idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect();
            if self.keep(&p) {
                out.push(p);
            }
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        out.extend(self.extra.iter().filter(|p| self.keep(p)).cloned());
        out
    }

    fn keep(&self, p: &[f64]) -> bool {
        self.exclusion.as_ref().is_none_or(|f| f(p))
    }

    /// Evaluates `f` at every point (in parallel) and returns the worst value.
    pub fn max_of<F>(&self, f: F) -> GridExtremum
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        extremum(&self.points(), f, true)
    }

    /// Like [`SampleGrid::max_of`] but for the smallest value.
    pub fn min_of<F>(&self, f: F) -> GridExtremum
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        extremum(&self.points(), f, false)
    }

    pub fn meta(&self) -> crate::report::GridMeta {
        crate::report::GridMeta {
            chart: self.domain.to_string(),
            resolution: self.resolution.clone(),
            points: self.points().len(),
            exclusion: self.exclusion_label.clone(),
        }
    }
}

/// Worst value over a point set, with the point where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct GridExtremum {
    pub value: f64,
    pub point: Option<Vec<f64>>,
    pub count: usize,
}

/// Deterministic parallel extremum. NaN counts as worst.
pub fn extremum<F>(points: &[Vec<f64>], f: F, maximize: bool) -> GridExtremum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = points.par_iter().map(|p| f(p)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        let worse = match best {
            None => true,
            Some((_, b)) => {
                if b.is_nan() {
                    false
                } else if v.is_nan() {
                    true
                } else if maximize {
                    v > b
                } else {
                    v < b
                }
            }
        };
        if worse {
            best = Some((i, v));
        }
    }
    match best {
        Some((i, v)) => GridExtremum { value: v, point: Some(points[i].clone()), count: points.len() },
        None => GridExtremum {
            value: if maximize { 0.0 } else { f64::INFINITY },
            point: None,
            count: 0,
        },
    }
}

/// A smooth map between charts, evaluable with its Jacobian.
pub trait ChartMap: Send + Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;

    /// `target_dim × source_dim` Jacobian; central differences by default.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_jacobian(self, x, tol::FD_STEP)
    }
}

/// Central-difference Jacobian with step `h`.
pub fn fd_jacobian<M: ChartMap + ?Sized>(map: &M, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = map.target_dim();
    let n = map.source_dim();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let fp = map.apply(&xp);
        let fm = map.apply(&xm);
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

/// A map given numerically; the Jacobian is a central difference with a
/// configurable step.
pub struct NumericMap<F> {
    f: F,
    source_dim: usize,
    target_dim: usize,
    pub step: f64,
}

impl<F> NumericMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(source_dim: usize, target_dim: usize, f: F) -> Self {
        NumericMap { f, source_dim, target_dim, step: tol::FD_STEP }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl<F> ChartMap for NumericMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn source_dim(&self) -> usize {
        self.source_dim
    }
    fn target_dim(&self) -> usize {
        self.target_dim
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_jacobian(self, x, self.step)
    }
}

/// A map with closed-form components; its Jacobian is exact.
#[derive(Debug, Clone)]
pub struct ExprMap {
    pub source: Arc<ChartDomain>,
    pub target: Arc<ChartDomain>,
    components: Vec<Expr>,
    jac: Vec<Vec<Expr>>,
}

impl ExprMap {
    pub fn new(source: Arc<ChartDomain>, target: Arc<ChartDomain>, components: Vec<Expr>) -> Result<Self> {
        if components.len() != target.dim() {
            return Err(Error::Arity { expected: target.dim(), got: components.len() });
        }
        if let Some(m) = components.iter().filter_map(Expr::max_var).max() {
            if m >= source.dim() {
                return Err(Error::Precondition(format!(
                    "map component references coordinate {m} of a {}-dimensional chart",
                    source.dim()
                )));
            }
        }
        let jac = components
            .iter()
            .map(|c| (0..source.dim()).map(|j| c.diff(j)).collect())
            .collect();
        Ok(ExprMap { source, target, components, jac })
    }

    pub fn identity(domain: Arc<ChartDomain>) -> Self {
        let comps = (0..domain.dim()).map(Expr::var).collect();
        ExprMap::new(domain.clone(), domain, comps).expect("identity map")
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn jacobian_exprs(&self) -> &[Vec<Expr>] {
        &self.jac
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ExprMap) -> Result<ExprMap> {
        if inner.target.dim() != self.source.dim() {
            return Err(Error::DomainMismatch);
        }
        let comps = self.components.iter().map(|c| c.substitute(inner.components())).collect();
        ExprMap::new(inner.source.clone(), self.target.clone(), comps)
    }
}

impl ChartMap for ExprMap {
    fn source_dim(&self) -> usize {
        self.source.dim()
    }
    fn target_dim(&self) -> usize {
        self.target.dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.target.dim();
        let n = self.source.dim();
        DMatrix::from_fn(m, n, |i, j| self.jac[i][j].eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_interior_and_excluded() {
        let d = ChartDomain::new(vec![Coordinate::interval("t", -1.0, 1.0), Coordinate::periodic("z", 0.0, 1.0)])
            .unwrap();
        let g = SampleGrid::new(d.clone(), 17);
        let pts = g.points();
        assert_eq!(pts.len(), 17 * 17);
        assert!(pts.iter().all(|p| p[0] > -1.0 && p[0] < 1.0 && d.contains(p)));
        // odd resolution hits t = 0 exactly
        assert!(pts.iter().any(|p| p[0] == 0.0));
        let g = g.excluding_band(0, 0.0, tol::EXCLUSION_BAND);
        assert!(g.points().iter().all(|p| p[0].abs() >= 0.05));
        assert_eq!(g.points().len(), 16 * 17);
    }

    #[test]
    fn chart_rejects_bad_bounds() {
        assert!(ChartDomain::new(vec![Coordinate::interval("x", 1.0, 0.0)]).is_err());
        assert!(ChartDomain::new(vec![Coordinate::interval("x", 0.0, 1.0), Coordinate::interval("x", 0.0, 1.0)])
            .is_err());
    }

    #[test]
    fn extremum_is_deterministic_and_reports_nan() {
        let pts: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let e = extremum(&pts, |p| (p[0] - 40.0).abs(), false);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.point, Some(vec![40.0]));
        let e = extremum(&pts, |p| if p[0] == 7.0 { f64::NAN } else { 0.0 }, true);
        assert!(e.value.is_nan());
    }

    #[test]
    fn expr_map_jacobian_matches_finite_differences() {
        let d = ChartDomain::new(vec![Coordinate::interval("x", -2.0, 2.0), Coordinate::interval("y", -2.0, 2.0)])
            .unwrap();
        let x = Expr::var(0);
        let y = Expr::var(1);
        let f = ExprMap::new(d.clone(), d.clone(), vec![&x * &y, x.sin() + &y * &y]).unwrap();
        let p = [0.3, -0.4];
        let exact = f.jacobian(&p);
        let fd = fd_jacobian(&f, &p, 1e-5);
        assert!((exact - fd).abs().max() < 1e-9);
    }
}
