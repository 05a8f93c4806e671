//! Exterior calculus on a single chart.
//!
//! Conventions:
//!
//! * Forms evaluate by determinants: `dx_J(V_1,…,V_p) = det[V_a^{j_b}]`, so
//!   `(dx∧dy)(e_x, e_y) = 1` and wedge products use shuffle signs.
//! * `ι_{∂_I}` contracts the leading slots: `ι_{∂_I} dx_J` is the sign of the
//!   shuffle that moves `I` to the front of `J`, times `dx_{J∖I}`. Hence
//!   `ι_{∂x∧∂y}(dx∧dy∧dz) = dz`.
//! * The Schouten bracket is computed with odd variables `ξ_i ≅ ∂_i` and right
//!   derivatives:
//!   `[P,Q] = Σ_i P∂⃖/∂ξ_i · ∂Q/∂x_i − (−1)^{(p−1)(q−1)} Q∂⃖/∂ξ_i · ∂P/∂x_i`.
//!   On vector fields this is the Lie bracket, `[X,Q] = L_X Q`, and
//!   `[π,π] = 0` is the Poisson condition. It is graded antisymmetric and
//!   satisfies the graded Jacobi identity in the shifted degree `p − 1`.
//! * A nondegenerate 2-form with matrix `Ω` corresponds to the bivector with
//!   matrix `B = −Ω⁻¹`, i.e. `Bᵀ·Ω = I`; this sends `dx∧dy` to `∂x∧∂y`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::chart::{ChartMap, ExprMap};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{merge_sign, subsets, FormField, Index, MultivectorField, Variance};

/// `ω_x(V_1, …, V_p)`.
pub fn eval_form(w: &FormField, x: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
    if vectors.len() != w.degree() {
        return Err(Error::Arity { expected: w.degree(), got: vectors.len() });
    }
    if x.len() != w.dim() {
        return Err(Error::Arity { expected: w.dim(), got: x.len() });
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != w.dim()) {
        return Err(Error::Arity { expected: w.dim(), got: v.len() });
    }
    w.domain().check_point(x)?;
    let p = w.degree();
    let mut total = 0.0;
    for (idx, c) in w.components() {
        let m = DMatrix::from_fn(p, p, |a, b| vectors[a][idx[b]]);
        total += c.eval(x) * det(&m);
    }
    Ok(total)
}

pub(crate) fn det(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().determinant(),
    }
}

/// `dω`; the zero field of degree `p+1` when `p` is top degree.
pub fn exterior_derivative(w: &FormField) -> FormField {
    let n = w.dim();
    let terms = w.components().flat_map(|(idx, c)| {
        (0..n).filter(|i| !idx.contains(i)).map(move |i| {
            let mut k = Vec::with_capacity(idx.len() + 1);
            k.push(i);
            k.extend_from_slice(idx);
            (k, c.diff(i))
        })
    });
    FormField::from_terms(w.domain().clone(), w.degree() + 1, terms.collect::<Vec<_>>())
        .expect("indices stay in range")
}

pub fn wedge<V: Variance>(a: &crate::field::Field<V>, b: &crate::field::Field<V>) -> Result<crate::field::Field<V>> {
    a.wedge(b)
}

/// `P ∧ … ∧ P` (n factors) for a bivector `P`.
pub fn top_power(p: &MultivectorField, n: usize) -> Result<MultivectorField> {
    if p.degree() != 2 {
        return Err(Error::Precondition(format!("top_power needs a bivector, got degree {}", p.degree())));
    }
    if 2 * n > p.dim() {
        return Err(Error::DegreeOverflow { degree: 2 * n, dim: p.dim() });
    }
    let mut acc = MultivectorField::scalar(p.domain().clone(), Expr::one());
    for _ in 0..n {
        acc = acc.wedge(p)?;
    }
    Ok(acc)
}

/// `ι_V ω` contracting the leading slots.
pub fn interior_product(v: &MultivectorField, w: &FormField) -> Result<FormField> {
    if v.domain() != w.domain() && **v.domain() != **w.domain() {
        return Err(Error::DomainMismatch);
    }
    if v.degree() > w.degree() {
        return Err(Error::DegreeUnderflow { inner: v.degree(), outer: w.degree() });
    }
    let mut terms = Vec::new();
    for (i, a) in v.components() {
        for (j, b) in w.components() {
            if !i.iter().all(|k| j.contains(k)) {
                continue;
            }
            let rest: Index = j.iter().copied().filter(|k| !i.contains(k)).collect();
            let (sign, _) = merge_sign(i, &rest).expect("disjoint");
            let c = a * b;
            terms.push((rest, if sign > 0.0 { c } else { -c }));
        }
    }
    FormField::from_terms(w.domain().clone(), w.degree() - v.degree(), terms)
}

/// Right ξ-derivative of `P` with respect to `ξ_k`: move `ξ_k` to the end,
/// then drop it.
fn xi_derivative(p: &MultivectorField, k: usize) -> Vec<(Index, Expr)> {
    p.components()
        .filter_map(|(idx, c)| {
            let pos = idx.iter().position(|&i| i == k)?;
            let mut rest = idx.clone();
            rest.remove(pos);
            let moves = idx.len() - 1 - pos;
            Some((rest, if moves % 2 == 0 { c.clone() } else { -c }))
        })
        .collect()
}

fn x_derivative(p: &MultivectorField, k: usize) -> Vec<(Index, Expr)> {
    p.components()
        .map(|(idx, c)| (idx.clone(), c.diff(k)))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

fn grassmann_product(a: &[(Index, Expr)], b: &[(Index, Expr)], scale: f64, out: &mut Vec<(Index, Expr)>) {
    for (i, f) in a {
        for (j, g) in b {
            if let Some((sign, k)) = merge_sign(i, j) {
                out.push((k, (sign * scale) * (f * g)));
            }
        }
    }
}

/// Schouten–Nijenhuis bracket; degree `p + q − 1`.
pub fn schouten_bracket(p: &MultivectorField, q: &MultivectorField) -> Result<MultivectorField> {
    p.same_domain(q)?;
    let (dp, dq) = (p.degree() as i64, q.degree() as i64);
    if dp + dq == 0 {
        return Ok(MultivectorField::zero(p.domain().clone(), 0));
    }
    let degree = (dp + dq - 1) as usize;
    if degree > p.dim() {
        return Ok(MultivectorField::zero(p.domain().clone(), degree));
    }
    let sym = if ((dp - 1) * (dq - 1)).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut terms = Vec::new();
    for k in 0..p.dim() {
        grassmann_product(&xi_derivative(p, k), &x_derivative(q, k), 1.0, &mut terms);
        grassmann_product(&xi_derivative(q, k), &x_derivative(p, k), -sym, &mut terms);
    }
    MultivectorField::from_terms(p.domain().clone(), degree, terms)
}

/// Symbolic `F*ω` for a closed-form map whose target is `ω`'s chart.
pub fn pullback(f: &ExprMap, w: &FormField) -> Result<FormField> {
    if *f.target != **w.domain() {
        return Err(Error::DomainMismatch);
    }
    let source = f.source.clone();
    let differentials: Vec<FormField> = f
        .jacobian_exprs()
        .iter()
        .map(|row| FormField::from_terms(source.clone(), 1, row.iter().enumerate().map(|(j, e)| (vec![j], e.clone()))))
        .collect::<Result<_>>()?;
    let mut out = FormField::zero(source.clone(), w.degree());
    for (idx, c) in w.components() {
        let mut acc = FormField::scalar(source.clone(), c.substitute(f.components()));
        for &j in idx {
            acc = acc.wedge(&differentials[j])?;
        }
        out = out.add(&acc)?;
    }
    Ok(out)
}

/// Components of `F*ω` at `x`, for any map with a Jacobian. Missing keys are 0.
pub fn pullback_at(f: &dyn ChartMap, w: &FormField, x: &[f64]) -> Result<BTreeMap<Index, f64>> {
    if f.target_dim() != w.dim() {
        return Err(Error::DomainMismatch);
    }
    let mut y = f.apply(x);
    w.domain().wrap(&mut y);
    if !w.domain().contains(&y) {
        return Err(Error::OutsideDomain { point: y });
    }
    let jac = f.jacobian(x);
    let p = w.degree();
    let values: Vec<(Index, f64)> = w.eval_components(&y);
    let mut out = BTreeMap::new();
    for k in subsets(f.source_dim(), p) {
        let v: f64 = values
            .iter()
            .map(|(j, c)| c * det(&DMatrix::from_fn(p, p, |a, b| jac[(j[a], k[b])])))
            .sum();
        if v != 0.0 {
            out.insert(k, v);
        }
    }
    Ok(out)
}

/// Largest difference between two sparse component maps.
pub fn component_distance(a: &BTreeMap<Index, f64>, b: &BTreeMap<Index, f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, v) in a {
        worst = worst.max((v - b.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// `σ_min / σ_max`, or 0 for the zero matrix.
pub fn conditioning(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max <= 0.0 || !max.is_finite() {
        0.0
    } else {
        sv.min() / max
    }
}

/// Bivector matrix `B = −Ω⁻¹` of a 2-form at `x`, checked against the
/// conditioning threshold.
pub fn sharp_inverse(w: &FormField, x: &[f64], threshold: f64) -> Result<DMatrix<f64>> {
    if w.degree() != 2 {
        return Err(Error::Precondition(format!("sharp_inverse needs a 2-form, got degree {}", w.degree())));
    }
    w.domain().check_point(x)?;
    let m = w.matrix_at(x);
    invert_antisymmetric(&m, x, threshold)
}

pub(crate) fn invert_antisymmetric(m: &DMatrix<f64>, x: &[f64], threshold: f64) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point: x.to_vec() });
    }
    let ratio = conditioning(m);
    if ratio < threshold {
        return Err(Error::Degenerate { point: x.to_vec(), ratio, threshold });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate { point: x.to_vec(), ratio, threshold })?;
    Ok(-inv)
}

/// Bivector with the given antisymmetric matrix.
pub fn bivector_from_matrix(domain: std::sync::Arc<crate::chart::ChartDomain>, b: &DMatrix<f64>) -> MultivectorField {
    let n = b.nrows();
    let terms: Vec<(Index, Expr)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (vec![i, j], Expr::constant(b[(i, j)])))
        .collect();
    MultivectorField::from_terms(domain, 2, terms).expect("square matrix of chart size")
}

/// Pfaffian of an antisymmetric matrix of expressions (upper triangle read).
pub fn pfaffian(m: &[Vec<Expr>]) -> Expr {
    let idx: Vec<usize> = (0..m.len()).collect();
    pfaffian_rec(m, &idx)
}

fn pfaffian_rec(m: &[Vec<Expr>], idx: &[usize]) -> Expr {
    if idx.is_empty() {
        return Expr::one();
    }
    if idx.len() % 2 == 1 {
        return Expr::zero();
    }
    let i0 = idx[0];
    let mut acc = Expr::zero();
    for (pos, &j) in idx.iter().enumerate().skip(1) {
        let a = &m[i0][j];
        if a.is_zero() {
            continue;
        }
        let rest: Vec<usize> = idx.iter().copied().filter(|&k| k != i0 && k != j).collect();
        let term = a * pfaffian_rec(m, &rest);
        acc = if pos % 2 == 1 { acc + term } else { acc - term };
    }
    acc
}

/// Numeric Pfaffian by the same expansion (intended for small charts).
pub fn pfaffian_num(m: &DMatrix<f64>) -> f64 {
    let idx: Vec<usize> = (0..m.nrows()).collect();
    pfaffian_num_rec(m, &idx)
}

fn pfaffian_num_rec(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let i0 = idx[0];
    let mut acc = 0.0;
    for (pos, &j) in idx.iter().enumerate().skip(1) {
        let a = m[(i0, j)];
        if a == 0.0 {
            continue;
        }
        let rest: Vec<usize> = idx.iter().copied().filter(|&k| k != i0 && k != j).collect();
        let term = a * pfaffian_num_rec(m, &rest);
        acc += if pos % 2 == 1 { term } else { -term };
    }
    acc
}

/// Closed-form bivector `B = −Ω⁻¹` of a 2-form on an even-dimensional chart,
/// built from sub-Pfaffians. Valid wherever the Pfaffian does not vanish.
pub fn inverse_bivector(w: &FormField) -> Result<MultivectorField> {
    invert_pairing(w)
}

/// `−M⁻¹` for the antisymmetric matrix of a degree-2 field; the same map
/// sends forms to bivectors and back.
pub fn invert_pairing<V: Variance, W: Variance>(w: &crate::field::Field<V>) -> Result<crate::field::Field<W>> {
    if w.degree() != 2 {
        return Err(Error::Precondition(format!("expected a degree-2 field, got degree {}", w.degree())));
    }
    let n = w.dim();
    if n % 2 == 1 {
        return Err(Error::Precondition("an antisymmetric pairing in odd dimension is never invertible".into()));
    }
    let m = w.matrix_exprs();
    let pf = pfaffian(&m);
    if pf.is_zero() {
        return Err(Error::Degenerate { point: Vec::new(), ratio: 0.0, threshold: crate::tol::CONDITIONING });
    }
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let rest: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
            let minor = pfaffian_rec(&m, &rest);
            if minor.is_zero() {
                continue;
            }
            let signed = if (i + j) % 2 == 1 { minor } else { -minor };
            terms.push((vec![i, j], signed / &pf));
        }
    }
    crate::field::Field::<W>::from_terms(w.domain().clone(), 2, terms)
}

/// Restriction of a form to the slice `x_axis = value`, as a form on the
/// remaining coordinates.
pub fn restrict_to_slice(w: &FormField, axis: usize, value: f64) -> Result<FormField> {
    let domain = w.domain().without(axis)?;
    let subs: Vec<Expr> = (0..w.dim())
        .map(|i| match i.cmp(&axis) {
            std::cmp::Ordering::Less => Expr::var(i),
            std::cmp::Ordering::Equal => Expr::constant(value),
            std::cmp::Ordering::Greater => Expr::var(i - 1),
        })
        .collect();
    FormField::from_terms(
        domain,
        w.degree(),
        w.components()
            .filter(|(k, _)| !k.contains(&axis))
            .map(|(k, c)| (k.iter().map(|&i| if i > axis { i - 1 } else { i }).collect(), c.substitute(&subs))),
    )
}

/// Determinant of a square matrix of expressions by cofactor expansion.
pub fn det_exprs(m: &[Vec<Expr>]) -> Expr {
    let idx: Vec<usize> = (0..m.len()).collect();
    det_rec(m, 0, &idx)
}

fn det_rec(m: &[Vec<Expr>], row: usize, cols: &[usize]) -> Expr {
    if cols.is_empty() {
        return Expr::one();
    }
    let mut acc = Expr::zero();
    for (pos, &c) in cols.iter().enumerate() {
        let a = &m[row][c];
        if a.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&k| k != c).collect();
        let term = a * det_rec(m, row + 1, &rest);
        acc = if pos % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

/// Inverse of a square matrix of expressions via the adjugate.
pub fn inverse_exprs(m: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>> {
    let n = m.len();
    let det = det_exprs(m);
    if det.is_zero() {
        return Err(Error::Degenerate { point: Vec::new(), ratio: 0.0, threshold: crate::tol::CONDITIONING });
    }
    let mut inv = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Expr>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| m[r][c].clone()).collect())
                .collect();
            let cof = det_exprs(&minor);
            if cof.is_zero() {
                continue;
            }
            inv[i][j] = if (i + j) % 2 == 0 { cof / &det } else { -cof / &det };
        }
    }
    Ok(inv)
}

/// Central-difference exterior derivative of a form given only pointwise.
/// `components(x)` returns the degree-`degree` components at `x`.
pub fn fd_exterior_derivative_at<F>(components: F, dim: usize, degree: usize, x: &[f64], h: f64) -> BTreeMap<Index, f64>
where
    F: Fn(&[f64]) -> BTreeMap<Index, f64>,
{
    let mut partials: Vec<(BTreeMap<Index, f64>, BTreeMap<Index, f64>)> = Vec::with_capacity(dim);
    let mut xp = x.to_vec();
    for i in 0..dim {
        xp[i] = x[i] + h;
        let plus = components(&xp);
        xp[i] = x[i] - h;
        let minus = components(&xp);
        xp[i] = x[i];
        partials.push((plus, minus));
    }
    let mut out = BTreeMap::new();
    for k in subsets(dim, degree + 1) {
        let mut v = 0.0;
        for (m, &i) in k.iter().enumerate() {
            let rest: Index = k.iter().copied().filter(|&j| j != i).collect();
            let (plus, minus) = &partials[i];
            let d = (plus.get(&rest).copied().unwrap_or(0.0) - minus.get(&rest).copied().unwrap_or(0.0)) / (2.0 * h);
            v += if m % 2 == 0 { d } else { -d };
        }
        if v != 0.0 {
            out.insert(k, v);
        }
    }
    out
}

/// Dense component map of a form at `x`.
pub fn components_at<V: Variance>(w: &crate::field::Field<V>, x: &[f64]) -> BTreeMap<Index, f64> {
    w.eval_components(x).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartDomain, Coordinate, NumericMap};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn chart(names: &[&str]) -> Arc<ChartDomain> {
        ChartDomain::new(names.iter().map(|n| Coordinate::interval(n, -3.0, 3.0)).collect()).unwrap()
    }

    fn form(d: &Arc<ChartDomain>, degree: usize, terms: &[(&str, &str)]) -> FormField {
        FormField::from_text(d.clone(), degree, terms.iter().copied()).unwrap()
    }

    fn mv(d: &Arc<ChartDomain>, degree: usize, terms: &[(&str, &str)]) -> MultivectorField {
        MultivectorField::from_text(d.clone(), degree, terms.iter().copied()).unwrap()
    }

    #[test]
    fn eval_form_examples() {
        let d = chart(&["x", "y"]);
        let w = form(&d, 2, &[("x,y", "1")]);
        let (e1, e2) = (vec![1.0, 0.0], vec![0.0, 1.0]);
        assert_eq!(eval_form(&w, &[0.3, 0.1], &[e1.clone(), e2.clone()]).unwrap(), 1.0);
        assert_eq!(eval_form(&w, &[0.3, 0.1], &[e2.clone(), e1.clone()]).unwrap(), -1.0);
        let radko = ChartDomain::new(vec![Coordinate::interval("h", -3.0, 3.0), Coordinate::periodic("theta", 0.0, std::f64::consts::TAU)]).unwrap();
        let w = form(&radko, 2, &[("h,theta", "(/ 1 h)")]);
        assert_abs_diff_eq!(eval_form(&w, &[2.0, 0.4], &[e1.clone(), e2]).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(eval_form(&w, &[2.0, 0.4], &[e1.clone()]), Err(Error::Arity { .. })));
        assert!(matches!(eval_form(&w, &[5.0, 0.4], &[e1.clone(), e1]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn exterior_derivative_examples() {
        let d = chart(&["x", "y"]);
        let dw = exterior_derivative(&form(&d, 1, &[("y", "x")]));
        assert_eq!(dw.component(&[0, 1]).as_const(), Some(1.0));
        assert!(exterior_derivative(&form(&d, 2, &[("x,y", "1")])).is_zero());
        let dw = exterior_derivative(&form(&d, 1, &[("y", "(sin x)")]));
        assert_abs_diff_eq!(dw.component(&[0, 1]).eval(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn top_power_examples() {
        let d = chart(&["x", "y", "z", "w"]);
        let p = mv(&d, 2, &[("x,y", "1"), ("z,w", "1")]);
        let p2 = top_power(&p, 2).unwrap();
        assert_eq!(p2.component(&[0, 1, 2, 3]).as_const(), Some(2.0));
        assert!(matches!(top_power(&p, 3), Err(Error::DegreeOverflow { degree: 6, dim: 4 })));
        let d2 = chart(&["x", "y"]);
        let q = mv(&d2, 2, &[("x,y", "1")]);
        assert_eq!(top_power(&q, 1).unwrap().component(&[0, 1]).as_const(), Some(1.0));
    }

    #[test]
    fn interior_product_examples() {
        let d = chart(&["x", "y", "z"]);
        let w = form(&d, 2, &[("x,y", "1")]);
        let dx = mv(&d, 1, &[("x", "1")]);
        let r = interior_product(&dx, &w).unwrap();
        assert_eq!(r.component(&[1]).as_const(), Some(1.0));
        assert_eq!(r.len(), 1);
        assert!(interior_product(&mv(&d, 1, &[("z", "1")]), &w).unwrap().is_zero());
        let vol = form(&d, 3, &[("x,y,z", "1")]);
        let r = interior_product(&mv(&d, 2, &[("x,y", "1")]), &vol).unwrap();
        assert_eq!(r.component(&[2]).as_const(), Some(1.0));
        assert!(matches!(interior_product(&mv(&d, 2, &[("x,y", "1")]), &form(&d, 1, &[("x", "1")])), Err(Error::DegreeUnderflow { .. })));
    }

    #[test]
    fn schouten_examples() {
        let d = chart(&["x", "y"]);
        let r = schouten_bracket(&mv(&d, 1, &[("x", "1")]), &mv(&d, 1, &[("y", "x")])).unwrap();
        assert_eq!(r.component(&[1]).as_const(), Some(1.0));
        assert_eq!(r.len(), 1);
        let p = mv(&d, 2, &[("x,y", "(sin (* x y))")]);
        assert!(schouten_bracket(&p, &p).unwrap().is_zero());
        let d4 = chart(&["t", "theta", "x", "y"]);
        let p = mv(&d4, 2, &[("t,theta", "t"), ("x,y", "1")]);
        assert!(schouten_bracket(&p, &p).unwrap().is_zero());
        // a non-Poisson bivector on ℝ³
        let d3 = chart(&["x", "y", "z"]);
        let p = mv(&d3, 2, &[("x,y", "1"), ("y,z", "y")]);
        assert!(!schouten_bracket(&p, &p).unwrap().is_zero());
    }

    #[test]
    fn pullback_examples() {
        let line = chart(&["x"]);
        let plane = chart(&["u", "y"]);
        let f = ExprMap::new(line.clone(), plane.clone(), vec![Expr::var(0), Expr::var(0).powi(2)]).unwrap();
        let w = form(&plane, 1, &[("y", "1")]);
        let pb = pullback(&f, &w).unwrap();
        assert_abs_diff_eq!(pb.component(&[0]).eval(&[0.7]), 1.4, epsilon = 1e-14);
        let num = pullback_at(&f, &w, &[0.7]).unwrap();
        assert_abs_diff_eq!(num[&vec![0]], 1.4, epsilon = 1e-14);
        let id = ExprMap::identity(plane.clone());
        let w2 = form(&plane, 2, &[("u,y", "(exp u)")]);
        assert!(pullback(&id, &w2).unwrap().structurally_equal(&w2));
        let far = NumericMap::new(1, 2, |x: &[f64]| vec![x[0] + 10.0, 0.0]);
        assert!(matches!(pullback_at(&far, &w, &[0.0]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn sharp_inverse_examples() {
        let d = chart(&["x", "y"]);
        let b = sharp_inverse(&form(&d, 2, &[("x,y", "1")]), &[0.0, 0.0], 1e-8).unwrap();
        assert_abs_diff_eq!(b[(0, 1)], 1.0);
        let b = sharp_inverse(&form(&d, 2, &[("x,y", "2")]), &[0.0, 0.0], 1e-8).unwrap();
        assert_abs_diff_eq!(b[(0, 1)], 0.5);
        let h = ChartDomain::new(vec![Coordinate::interval("h", -3.0, 3.0), Coordinate::periodic("theta", 0.0, std::f64::consts::TAU)]).unwrap();
        let w = form(&h, 2, &[("h,theta", "(/ 1 h)")]);
        let b = sharp_inverse(&w, &[2.0, 0.0], 1e-8).unwrap();
        assert_abs_diff_eq!(b[(0, 1)], 2.0, epsilon = 1e-14);
        let omega = w.matrix_at(&[2.0, 0.0]);
        assert_abs_diff_eq!((b.transpose() * omega - DMatrix::identity(2, 2)).abs().max(), 0.0, epsilon = 1e-14);
        // symbolic inverse folds to h ∂h∧∂θ
        let pi = inverse_bivector(&w).unwrap();
        assert_eq!(pi.component(&[0, 1]), Expr::var(0));
        let d3 = chart(&["x", "y", "z"]);
        assert!(matches!(
            sharp_inverse(&form(&d3, 2, &[("x,y", "1")]), &[0.0; 3], 1e-8),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn symbolic_inverse_matches_numeric() {
        let d = chart(&["a", "b", "c", "e"]);
        let w = form(&d, 2, &[("a,b", "(+ 2 (sin c))"), ("a,c", "a"), ("b,e", "(* 0.3 e)"), ("c,e", "(+ 1 (* b b))"), ("a,e", "0.2")]);
        let pi = inverse_bivector(&w).unwrap();
        for x in [[0.1, 0.2, 0.3, 0.4], [-1.0, 0.5, 2.0, -0.7]] {
            let num = sharp_inverse(&w, &x, 1e-8).unwrap();
            let sym = pi.matrix_at(&x);
            assert_abs_diff_eq!((num - sym).abs().max(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        let m = DMatrix::from_fn(6, 6, |i, j| {
            let v = ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * (i as f64);
            if i < j {
                v
            } else {
                0.0
            }
        });
        let a = &m - m.transpose();
        assert_abs_diff_eq!(pfaffian_num(&a).powi(2), a.determinant(), epsilon = 1e-9);
    }

    #[test]
    fn slice_restriction() {
        let d = chart(&["x", "y", "s"]);
        let w = form(&d, 2, &[("x,y", "(+ 1 (* s x))"), ("s,y", "x")]);
        let r = restrict_to_slice(&w, 2, 2.0).unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(r.len(), 1);
        assert_abs_diff_eq!(r.component(&[0, 1]).eval(&[0.5, 0.0]), 2.0);
    }

    #[test]
    fn symbolic_matrix_inverse() {
        let e = |v: f64| Expr::constant(v);
        let x = Expr::var(0);
        let m = vec![vec![e(2.0), x.clone(), e(0.0)], vec![x.clone(), e(3.0), e(1.0)], vec![e(0.0), e(1.0), e(4.0)]];
        let inv = inverse_exprs(&m).unwrap();
        let at = [0.7];
        let num = DMatrix::from_fn(3, 3, |i, j| m[i][j].eval(&at));
        let sym = DMatrix::from_fn(3, 3, |i, j| inv[i][j].eval(&at));
        assert_abs_diff_eq!((num * sym - DMatrix::identity(3, 3)).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fd_derivative_matches_symbolic() {
        let d = chart(&["x", "y", "z"]);
        let w = form(&d, 1, &[("x", "(* y z)"), ("z", "(sin (* x y))")]);
        let dw = exterior_derivative(&w);
        let x = [0.3, -0.4, 0.8];
        let fd = fd_exterior_derivative_at(|p| components_at(&w, p), 3, 1, &x, 1e-4);
        assert!(component_distance(&fd, &components_at(&dw, &x)) < 1e-7);
    }
}
