//! Cosymplectic pairs `(θ, η)` on odd-dimensional charts and their Reeb data.
//!
//! Sharp maps: `η♯(v) = η(v, ·)` and `ν♯(α) = ν(·, α)`. With component
//! matrices `H`, `N` and column vectors `θ`, `R` the defining equations read
//! `θᵀR = 1`, `HᵀR = 0`, `Nᵀθ = 0` and `−N·H + R·θᵀ = I`.
//!
//! `R` and `ν` are obtained in closed form from the bivector of
//! `ds ∧ θ + η` on `ℝ × Z`, which is `∂s ∧ R + ν`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calculus::{conditioning, exterior_derivative, invert_pairing, schouten_bracket};
use crate::chart::{extremum, ChartDomain, Coordinate, SampleGrid};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{FormField, MultivectorField};
use crate::report::{Residual, VerificationReport};
use crate::tol::{self, Tolerances};

#[derive(Debug, Clone)]
pub struct CosymplecticPair {
    theta: FormField,
    eta: FormField,
}

impl CosymplecticPair {
    pub fn new(theta: FormField, eta: FormField) -> Result<Self> {
        theta.same_domain(&eta)?;
        if theta.degree() != 1 {
            return Err(Error::Arity { expected: 1, got: theta.degree() });
        }
        if eta.degree() != 2 {
            return Err(Error::Arity { expected: 2, got: eta.degree() });
        }
        if theta.dim().is_multiple_of(2) {
            return Err(Error::Precondition(format!("cosymplectic pairs live in odd dimension, got {}", theta.dim())));
        }
        Ok(CosymplecticPair { theta, eta })
    }

    pub fn domain(&self) -> &Arc<ChartDomain> {
        self.theta.domain()
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn theta(&self) -> &FormField {
        &self.theta
    }

    pub fn eta(&self) -> &FormField {
        &self.eta
    }

    /// `(λθ, η)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        CosymplecticPair { theta: self.theta.scale(&Expr::constant(lambda)), eta: self.eta.clone() }
    }

    /// Coefficient of `θ ∧ η^{n−1}` against `dx_1 ∧ … ∧ dx_{2n−1}`.
    pub fn volume_coefficient(&self) -> Expr {
        let k = (self.dim() - 1) / 2;
        let mut acc = self.theta.clone();
        for _ in 0..k {
            acc = acc.wedge(&self.eta).expect("same chart");
        }
        acc.component(&(0..self.dim()).collect::<Vec<_>>())
    }

    /// `ds ∧ θ + η` on `ℝ_s × Z` with `s` at index 0.
    pub fn symplectization(&self) -> Result<FormField> {
        let ext = self.domain().prepend(Coordinate::interval("__s", -1.0, 1.0))?;
        let lift = |f: &FormField| {
            FormField::from_terms(
                ext.clone(),
                f.degree(),
                f.components().map(|(k, c)| (k.iter().map(|i| i + 1).collect(), c.reindex(&|v| v + 1))),
            )
        };
        let ds = FormField::basis(ext.clone(), &[0])?;
        ds.wedge(&lift(&self.theta)?)?.add(&lift(&self.eta)?)
    }
}

/// `min |θ ∧ η^{n−1}|` over the grid against the nondegeneracy margin.
pub fn check_volume(pair: &CosymplecticPair, grid: &SampleGrid, tols: &Tolerances) -> VerificationReport {
    let mut report = VerificationReport::new("check_volume").with_grid(grid.meta());
    let c = pair.volume_coefficient();
    let worst = grid.min_of(|x| c.eval(x).abs());
    report.push(Residual::at_least("volume_min", worst.value, tols.nondegeneracy));
    if let Some(p) = worst.point {
        report.set("volume_worst_point", p);
    }
    report
}

#[derive(Debug, Clone)]
pub struct ReebData {
    pub r: MultivectorField,
    pub nu: MultivectorField,
}

/// Closed-form `R` and `ν`.
pub fn reeb_data(pair: &CosymplecticPair) -> Result<ReebData> {
    let omega = pair.symplectization()?;
    let pi: MultivectorField = invert_pairing(&omega)?;
    let d = pair.domain().clone();
    let down = |e: &Expr| e.reindex(&|v| v.saturating_sub(1));
    let r = MultivectorField::from_terms(
        d.clone(),
        1,
        pi.components().filter(|(k, _)| k[0] == 0).map(|(k, c)| (vec![k[1] - 1], down(c))),
    )?;
    let nu = MultivectorField::from_terms(
        d,
        2,
        pi.components().filter(|(k, _)| k[0] != 0).map(|(k, c)| (vec![k[0] - 1, k[1] - 1], down(c))),
    )?;
    Ok(ReebData { r, nu })
}

fn vector_at(f: &MultivectorField, x: &[f64]) -> DVector<f64> {
    let mut v = DVector::zeros(f.dim());
    for (k, c) in f.components() {
        v[k[0]] = c.eval(x);
    }
    v
}

fn covector_at(f: &FormField, x: &[f64]) -> DVector<f64> {
    let mut v = DVector::zeros(f.dim());
    for (k, c) in f.components() {
        v[k[0]] = c.eval(x);
    }
    v
}

/// Pointwise solve of the defining equations, independent of [`reeb_data`]:
/// `R` from the stacked system `[θᵀ; Hᵀ] R = e_0`, then `N` from
/// `N·[H | θ] = [Rθᵀ − I | 0]`.
pub fn reeb_at(pair: &CosymplecticPair, x: &[f64], threshold: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = pair.dim();
    let theta = covector_at(&pair.theta, x);
    let h = pair.eta.matrix_at(x);
    let mut sys = DMatrix::zeros(m + 1, m);
    sys.row_mut(0).copy_from(&theta.transpose());
    sys.rows_mut(1, m).copy_from(&h.transpose());
    let ratio = conditioning(&sys);
    if ratio < threshold {
        return Err(Error::Degenerate { point: x.to_vec(), ratio, threshold });
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[0] = 1.0;
    let r = sys
        .clone()
        .svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Precondition(e.to_string()))?;
    let mut a = DMatrix::zeros(m, m + 1);
    a.columns_mut(0, m).copy_from(&h);
    a.column_mut(m).copy_from(&theta);
    let mut b = DMatrix::zeros(m, m + 1);
    b.columns_mut(0, m).copy_from(&(&r * theta.transpose() - DMatrix::identity(m, m)));
    let at = a.transpose();
    let n = at
        .svd(true, true)
        .solve(&b.transpose(), 0.0)
        .map_err(|e| Error::Precondition(e.to_string()))?
        .transpose();
    Ok((r, n))
}

/// Largest violation of the defining equations at `x`.
pub fn defining_residuals(pair: &CosymplecticPair, data: &ReebData, x: &[f64]) -> [f64; 4] {
    let m = pair.dim();
    let theta = covector_at(&pair.theta, x);
    let h = pair.eta.matrix_at(x);
    let r = vector_at(&data.r, x);
    let n = data.nu.matrix_at(x);
    let r_theta = (theta.dot(&r) - 1.0).abs();
    let r_eta = (h.transpose() * &r).abs().max();
    let theta_nu = (n.transpose() * &theta).abs().max();
    let id = (-&n * &h + &r * theta.transpose() - DMatrix::identity(m, m)).abs().max();
    [r_theta, r_eta, theta_nu, id]
}

/// Defining-equation residuals over a grid, plus agreement with the
/// pointwise solve.
pub fn check_reeb(pair: &CosymplecticPair, data: &ReebData, grid: &SampleGrid, tols: &Tolerances) -> VerificationReport {
    let mut report = VerificationReport::new("reeb_data").with_grid(grid.meta());
    let pts = grid.points();
    let names = ["iota_R_theta_minus_1", "iota_R_eta", "iota_theta_nu", "sharp_identity"];
    for (i, name) in names.iter().enumerate() {
        let worst = extremum(&pts, |x| defining_residuals(pair, data, x)[i], true);
        report.push(Residual::at_most(*name, worst.value, tol::REEB));
    }
    let agree = extremum(
        &pts,
        |x| match reeb_at(pair, x, tols.conditioning) {
            Ok((r, n)) => (r - vector_at(&data.r, x)).abs().max().max((n - data.nu.matrix_at(x)).abs().max()),
            Err(_) => f64::NAN,
        },
        true,
    );
    report.push(Residual::at_most("pointwise_solve_agreement", agree.value, tol::REEB));
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub d_theta: f64,
    pub d_eta: f64,
    pub bracket_r_nu: f64,
    pub bracket_nu_nu: f64,
    pub forms_closed: bool,
    pub brackets_vanish: bool,
}

impl EquivalenceReport {
    /// Both sides of the biconditional agree on this instance.
    pub fn consistent(&self) -> bool {
        self.forms_closed == self.brackets_vanish
    }

    pub fn to_report(&self, tols: &Tolerances) -> VerificationReport {
        let mut r = VerificationReport::new("closedness_equivalence");
        r.set("d_theta", self.d_theta)
            .set("d_eta", self.d_eta)
            .set("bracket_r_nu", self.bracket_r_nu)
            .set("bracket_nu_nu", self.bracket_nu_nu)
            .set("forms_closed", self.forms_closed)
            .set("brackets_vanish", self.brackets_vanish)
            .set("closedness_tolerance", tols.closedness)
            .set("bracket_tolerance", tols.bracket);
        if !self.consistent() {
            r.fail("closedness of (θ, η) and vanishing of the brackets disagree");
        }
        r
    }
}

fn grid_max<V: crate::field::Variance>(f: &crate::field::Field<V>, pts: &[Vec<f64>]) -> f64 {
    if f.is_zero() {
        0.0
    } else {
        extremum(pts, |x| f.max_abs_at(x), true).value
    }
}

/// `dθ = dη = 0 ⟺ [R,ν] = [ν,ν] = 0`, evaluated on this instance.
pub fn closedness_equivalence(pair: &CosymplecticPair, grid: &SampleGrid, tols: &Tolerances) -> Result<EquivalenceReport> {
    let data = reeb_data(pair)?;
    let pts = grid.points();
    let d_theta = grid_max(&exterior_derivative(&pair.theta), &pts);
    let d_eta = grid_max(&exterior_derivative(&pair.eta), &pts);
    let bracket_r_nu = grid_max(&schouten_bracket(&data.r, &data.nu)?, &pts);
    let bracket_nu_nu = grid_max(&schouten_bracket(&data.nu, &data.nu)?, &pts);
    Ok(EquivalenceReport {
        d_theta,
        d_eta,
        bracket_r_nu,
        bracket_nu_nu,
        forms_closed: d_theta <= tols.closedness && d_eta <= tols.closedness,
        brackets_vanish: bracket_r_nu <= tols.bracket && bracket_nu_nu <= tols.bracket,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(theta: &[(&str, &str)], eta: &[(&str, &str)]) -> CosymplecticPair {
        let d = ChartDomain::torus(&["x", "y", "z"]);
        CosymplecticPair::new(
            FormField::from_text(d.clone(), 1, theta.iter().copied()).unwrap(),
            FormField::from_text(d, 2, eta.iter().copied()).unwrap(),
        )
        .unwrap()
    }

    fn grid(p: &CosymplecticPair) -> SampleGrid {
        SampleGrid::new(p.domain().clone(), 5)
    }

    #[test]
    fn volume_examples() {
        let t = Tolerances::default();
        let p = pair(&[("z", "1")], &[("x,y", "1")]);
        let r = check_volume(&p, &grid(&p), &t);
        assert!(r.passed);
        assert_abs_diff_eq!(r.residuals[0].value, 1.0);
        let p = pair(&[("z", "1")], &[]);
        assert!(!check_volume(&p, &grid(&p), &t).passed);
        let p = pair(&[("z", "1"), ("x", "0.1")], &[("x,y", "1")]);
        let r = check_volume(&p, &grid(&p), &t);
        assert_abs_diff_eq!(r.residuals[0].value, 1.0);
        // brute-force determinant of [θ; η rows] via the symplectization
        let top = p.symplectization().unwrap();
        let m = top.matrix_at(&[0.0, 0.1, 0.2, 0.3]);
        assert_abs_diff_eq!(m.determinant().sqrt(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reeb_examples() {
        let p = pair(&[("z", "1")], &[("x,y", "1")]);
        let d = reeb_data(&p).unwrap();
        assert_eq!(d.r.component(&[2]).as_const(), Some(1.0));
        assert_eq!(d.r.len(), 1);
        assert_eq!(d.nu.component(&[0, 1]).as_const(), Some(1.0));
        assert_eq!(d.nu.len(), 1);

        let p = pair(&[("z", "2")], &[("x,y", "1")]);
        let d = reeb_data(&p).unwrap();
        assert_eq!(d.r.component(&[2]).as_const(), Some(0.5));
        assert_eq!(d.nu.component(&[0, 1]).as_const(), Some(1.0));

        // worked by hand: R = ∂y + ∂z, ν = ∂x∧∂y
        let p = pair(&[("z", "1")], &[("x,y", "1"), ("z,x", "1")]);
        let d = reeb_data(&p).unwrap();
        let x = [0.2, 0.3, 0.4];
        assert_abs_diff_eq!(d.r.component(&[0]).eval(&x), 0.0);
        assert_abs_diff_eq!(d.r.component(&[1]).eval(&x), 1.0);
        assert_abs_diff_eq!(d.r.component(&[2]).eval(&x), 1.0);
        assert_abs_diff_eq!(d.nu.component(&[0, 1]).eval(&x), 1.0);
        assert!(d.nu.component(&[0, 2]).is_zero() && d.nu.component(&[1, 2]).is_zero());
        let r = check_reeb(&p, &d, &grid(&p), &Tolerances::default());
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn reeb_nonconstant_coefficients() {
        let p = pair(&[("z", "(+ 1 (* 0.3 (sin (* 2 pi x))))"), ("y", "0.2")], &[("x,y", "(+ 2 (cos (* 2 pi z)))"), ("y,z", "0.1")]);
        let d = reeb_data(&p).unwrap();
        let r = check_reeb(&p, &d, &grid(&p), &Tolerances::default());
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let p = pair(&[("z", "1")], &[]);
        assert!(matches!(reeb_data(&p), Err(Error::Degenerate { .. })));
        assert!(matches!(reeb_at(&p, &[0.1, 0.1, 0.1], 1e-8), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn equivalence_examples() {
        let t = Tolerances::default();
        let p = pair(&[("z", "1")], &[("x,y", "1")]);
        let e = closedness_equivalence(&p, &grid(&p), &t).unwrap();
        assert!(e.forms_closed && e.brackets_vanish);
        // d(x² dy) = 2x dx∧dy
        let p = pair(&[("z", "1")], &[("x,y", "(+ 1 (* 2 x))")]);
        let e = closedness_equivalence(&p, &grid(&p), &t).unwrap();
        assert!(e.forms_closed && e.brackets_vanish, "{e:?}");
        let p = pair(&[("z", "1")], &[("x,y", "1"), ("y,z", "x")]);
        let e = closedness_equivalence(&p, &grid(&p), &t).unwrap();
        assert!(!e.forms_closed && !e.brackets_vanish, "{e:?}");
        assert!(e.consistent());
    }

    #[test]
    fn scaling_theta() {
        let p = pair(&[("z", "(+ 1 (* 0.2 (cos (* 2 pi y))))"), ("x", "0.3")], &[("x,y", "1"), ("x,z", "0.4")]);
        let base = reeb_data(&p).unwrap();
        for lambda in [2.0, 10.0, 0.5] {
            let s = reeb_data(&p.rescaled(lambda)).unwrap();
            for x in grid(&p).points() {
                let (a, b) = (vector_at(&base.r, &x), vector_at(&s.r, &x));
                assert!((a / lambda - b).abs().max() < 1e-12);
                assert!((base.nu.matrix_at(&x) - s.nu.matrix_at(&x)).abs().max() < 1e-12);
            }
        }
    }
}
