//! Antisymmetric tensor fields with closed-form components.
//!
//! Forms and multivector fields share one representation: a map from
//! strictly increasing index tuples to [`Expr`] coefficients. Only the
//! variance differs, which is tracked in the type.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::ChartDomain;
use crate::error::{Error, Result};
use crate::expr::Expr;

pub trait Variance: Clone + Send + Sync + 'static {
    const NAME: &'static str;
    const BASIS: &'static str;
}

#[derive(Debug, Clone, Copy)]
pub struct Covariant;

#[derive(Debug, Clone, Copy)]
pub struct Contravariant;

impl Variance for Covariant {
    const NAME: &'static str = "form";
    const BASIS: &'static str = "d";
}

impl Variance for Contravariant {
    const NAME: &'static str = "multivector";
    const BASIS: &'static str = "∂";
}

pub type Index = Vec<usize>;

#[derive(Clone)]
pub struct Field<V> {
    domain: Arc<ChartDomain>,
    degree: usize,
    comps: BTreeMap<Index, Expr>,
    _variance: PhantomData<V>,
}

/// Degree-p differential form.
pub type FormField = Field<Covariant>;
/// Degree-p multivector field.
pub type MultivectorField = Field<Contravariant>;

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
pub fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Sign and union of `a ++ b` for increasing tuples, or `None` if they overlap.
pub fn merge_sign(a: &[usize], b: &[usize]) -> Option<(f64, Index)> {
    let mut inversions = 0usize;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            inversions += a.len() - i;
            out.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((if inversions.is_multiple_of(2) { 1.0 } else { -1.0 }, out))
}

/// All increasing `k`-tuples of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Index> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

impl<V: Variance> Field<V> {
    pub fn zero(domain: Arc<ChartDomain>, degree: usize) -> Self {
        Field { domain, degree, comps: BTreeMap::new(), _variance: PhantomData }
    }

    /// Degree-0 field.
    pub fn scalar(domain: Arc<ChartDomain>, f: Expr) -> Self {
        let mut out = Self::zero(domain, 0);
        if !f.is_zero() {
            out.comps.insert(Vec::new(), f);
        }
        out
    }

    /// Builds a field from `(indices, coefficient)` terms. Indices need not be
    /// sorted; repeated indices contribute nothing.
    pub fn from_terms<I>(domain: Arc<ChartDomain>, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Index, Expr)>,
    {
        let mut out = Self::zero(domain, degree);
        for (mut idx, coeff) in terms {
            if idx.len() != degree {
                return Err(Error::Arity { expected: degree, got: idx.len() });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= out.domain.dim()) {
                return Err(Error::Precondition(format!(
                    "index {bad} out of range for a {}-dimensional chart",
                    out.domain.dim()
                )));
            }
            if let Some(m) = coeff.max_var() {
                if m >= out.domain.dim() {
                    return Err(Error::Precondition(format!(
                        "coefficient references coordinate {m} of a {}-dimensional chart",
                        out.domain.dim()
                    )));
                }
            }
            if let Some(sign) = sort_with_sign(&mut idx) {
                out.accumulate(idx, if sign > 0.0 { coeff } else { -coeff });
            }
        }
        Ok(out)
    }

    /// Single term `coeff · e_idx`.
    pub fn term(domain: Arc<ChartDomain>, idx: &[usize], coeff: Expr) -> Result<Self> {
        Self::from_terms(domain, idx.len(), [(idx.to_vec(), coeff)])
    }

    /// Basis element `e_{i1} ∧ … ∧ e_{ip}`.
    pub fn basis(domain: Arc<ChartDomain>, idx: &[usize]) -> Result<Self> {
        Self::term(domain, idx, Expr::one())
    }

    fn accumulate(&mut self, idx: Index, coeff: Expr) {
        if coeff.is_zero() {
            return;
        }
        let merged = match self.comps.remove(&idx) {
            Some(prev) => prev + coeff,
            None => coeff,
        };
        if !merged.is_zero() {
            self.comps.insert(idx, merged);
        }
    }

    pub fn domain(&self) -> &Arc<ChartDomain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Stored components, keyed by increasing index tuples.
    pub fn components(&self) -> impl Iterator<Item = (&Index, &Expr)> {
        self.comps.iter()
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    /// True when no component survives constant folding.
    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    /// Coefficient for an arbitrary (possibly unsorted) index tuple.
    pub fn component(&self, idx: &[usize]) -> Expr {
        let mut sorted = idx.to_vec();
        match sort_with_sign(&mut sorted) {
            None => Expr::zero(),
            Some(sign) => match self.comps.get(&sorted) {
                Some(e) if sign > 0.0 => e.clone(),
                Some(e) => -e,
                None => Expr::zero(),
            },
        }
    }

    pub fn same_domain(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    fn check_compatible<W: Variance>(&self, other: &Field<W>) -> Result<()> {
        if Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        if self.degree != other.degree {
            return Err(Error::Arity { expected: self.degree, got: other.degree });
        }
        let mut out = self.clone();
        for (idx, c) in &other.comps {
            out.accumulate(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|e| -e)
    }

    pub fn scale(&self, f: &Expr) -> Self {
        self.map(|e| f * e)
    }

    /// Applies `f` to every coefficient, dropping those that fold to zero.
    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|(k, v)| (k.clone(), f(v)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Field { domain: self.domain.clone(), degree: self.degree, comps, _variance: PhantomData }
    }

    /// Exterior product; degree adds, zero when it exceeds the dimension.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.same_domain(other)?;
        let degree = self.degree + other.degree;
        let mut out = Self::zero(self.domain.clone(), degree);
        if degree > self.dim() {
            return Ok(out);
        }
        for (a, fa) in &self.comps {
            for (b, fb) in &other.comps {
                if let Some((sign, idx)) = merge_sign(a, b) {
                    let c = fa * fb;
                    out.accumulate(idx, if sign > 0.0 { c } else { -c });
                }
            }
        }
        Ok(out)
    }

    /// Re-homes the field on another chart of the same dimension by
    /// substituting `subs` for the coordinates.
    pub fn substitute(&self, domain: Arc<ChartDomain>, subs: &[Expr]) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|(k, v)| (k.clone(), v.substitute(subs)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Field { domain, degree: self.degree, comps, _variance: PhantomData }
    }

    /// Components evaluated at `x`.
    pub fn eval_components(&self, x: &[f64]) -> Vec<(Index, f64)> {
        self.comps.iter().map(|(k, v)| (k.clone(), v.eval(x))).collect()
    }

    /// Largest |component| at `x`; 0 for the zero field.
    pub fn max_abs_at(&self, x: &[f64]) -> f64 {
        self.comps.values().map(|v| v.eval(x).abs()).fold(0.0, nan_max)
    }

    /// Antisymmetric component matrix of a degree-2 field.
    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        assert_eq!(self.degree, 2, "matrix_at needs a degree-2 field");
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (k, v) in &self.comps {
            let val = v.eval(x);
            m[(k[0], k[1])] = val;
            m[(k[1], k[0])] = -val;
        }
        m
    }

    /// Symbolic antisymmetric component matrix of a degree-2 field.
    pub fn matrix_exprs(&self) -> Vec<Vec<Expr>> {
        assert_eq!(self.degree, 2, "matrix_exprs needs a degree-2 field");
        let n = self.dim();
        let mut m = vec![vec![Expr::zero(); n]; n];
        for (k, v) in &self.comps {
            m[k[0]][k[1]] = v.clone();
            m[k[1]][k[0]] = -v;
        }
        m
    }

    /// Degree-2 field from an antisymmetric matrix (upper triangle is read).
    pub fn from_matrix_exprs(domain: Arc<ChartDomain>, m: &[Vec<Expr>]) -> Result<Self> {
        let n = domain.dim();
        let terms = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (vec![i, j], m[i][j].clone()));
        Self::from_terms(domain, 2, terms)
    }

    /// Reinterprets the coefficients with the other variance. Only used where
    /// a metric or frame identification makes this meaningful.
    pub fn cast<W: Variance>(&self) -> Field<W> {
        Field { domain: self.domain.clone(), degree: self.degree, comps: self.comps.clone(), _variance: PhantomData }
    }

    /// Structural equality of coefficients (no simplification beyond folding).
    pub fn structurally_equal(&self, other: &Self) -> bool {
        self.degree == other.degree && self.comps == other.comps
    }

    /// Max over `points` of the largest component difference.
    pub fn max_difference(&self, other: &Self, points: &[Vec<f64>]) -> Result<crate::chart::GridExtremum> {
        self.check_compatible(other)?;
        let diff = self.sub(other)?;
        Ok(crate::chart::extremum(points, |x| diff.max_abs_at(x), true))
    }

    /// Components in prefix text form.
    pub fn to_text(&self) -> BTreeMap<String, String> {
        let names = self.domain.names();
        self.comps
            .iter()
            .map(|(k, v)| {
                let key = k.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(",");
                (key, v.to_prefix(&names))
            })
            .collect()
    }

    /// Inverse of [`Field::to_text`]; keys are comma-separated coordinate names.
    pub fn from_text<'a, I>(domain: Arc<ChartDomain>, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let names = domain.names();
        let mut parsed = Vec::new();
        for (key, value) in terms {
            let idx: Index = if key.trim().is_empty() {
                Vec::new()
            } else {
                key.split(',')
                    .map(|n| {
                        domain
                            .index_of(n.trim())
                            .ok_or_else(|| Error::Parse(format!("unknown coordinate `{}` in component key", n.trim())))
                    })
                    .collect::<Result<_>>()?
            };
            parsed.push((idx, Expr::parse(value, &names)?));
        }
        Self::from_terms(domain, degree, parsed)
    }
}

pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

impl<V: Variance> fmt::Debug for Field<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.domain.names();
        if self.comps.is_empty() {
            return write!(f, "0 [{} degree {}]", V::NAME, self.degree);
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(k, v)| {
                let basis: Vec<String> = k.iter().map(|&i| format!("{}{}", V::BASIS, names[i])).collect();
                if basis.is_empty() {
                    v.to_prefix(&names)
                } else {
                    format!("{} {}", v.to_prefix(&names), basis.join("∧"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Coordinate;

    fn r3() -> Arc<ChartDomain> {
        ChartDomain::new(vec![
            Coordinate::interval("x", -1.0, 1.0),
            Coordinate::interval("y", -1.0, 1.0),
            Coordinate::interval("z", -1.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn sort_and_merge_signs() {
        let mut v = vec![2, 0, 1];
        assert_eq!(sort_with_sign(&mut v), Some(1.0));
        assert_eq!(v, vec![0, 1, 2]);
        let mut v = vec![1, 0];
        assert_eq!(sort_with_sign(&mut v), Some(-1.0));
        assert_eq!(sort_with_sign(&mut [1, 1]), None);
        assert_eq!(merge_sign(&[1], &[0]), Some((-1.0, vec![0, 1])));
        assert_eq!(merge_sign(&[0, 2], &[1]), Some((-1.0, vec![0, 1, 2])));
        assert_eq!(merge_sign(&[0, 2], &[2]), None);
    }

    #[test]
    fn subsets_enumerate_in_order() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn unsorted_terms_pick_up_signs() {
        let d = r3();
        let w = FormField::from_terms(d, 2, [(vec![1, 0], Expr::one())]).unwrap();
        assert_eq!(w.component(&[0, 1]).as_const(), Some(-1.0));
        assert_eq!(w.component(&[1, 0]).as_const(), Some(1.0));
        assert!(w.component(&[0, 0]).is_zero());
    }

    #[test]
    fn wedge_examples() {
        let d = r3();
        let dx = FormField::basis(d.clone(), &[0]).unwrap();
        let dy = FormField::basis(d.clone(), &[1]).unwrap();
        let dxdy = dx.wedge(&dy).unwrap();
        assert_eq!(dxdy.component(&[0, 1]).as_const(), Some(1.0));
        assert!(dx.wedge(&dx).unwrap().is_zero());
        // (dx + dy) ∧ dx = -dx∧dy
        let s = dx.add(&dy).unwrap().wedge(&dx).unwrap();
        assert_eq!(s.component(&[0, 1]).as_const(), Some(-1.0));
        assert_eq!(s.len(), 1);
        // overflow
        let top = dxdy.wedge(&dxdy).unwrap();
        assert!(top.is_zero());
        assert_eq!(top.degree(), 4);
    }

    #[test]
    fn text_round_trip() {
        let d = r3();
        let w = FormField::from_text(d.clone(), 2, [("x,y", "(sin z)"), ("z,x", "2")]).unwrap();
        assert_eq!(w.component(&[0, 2]).as_const(), Some(-2.0));
        let text = w.to_text();
        let back = FormField::from_text(d, 2, text.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert!(back.structurally_equal(&w));
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let a = FormField::basis(r3(), &[0]).unwrap();
        let other = ChartDomain::new(vec![Coordinate::interval("u", 0.0, 1.0)]).unwrap();
        let b = FormField::basis(other, &[0]).unwrap();
        assert_eq!(a.wedge(&b).unwrap_err(), Error::DomainMismatch);
    }
}
