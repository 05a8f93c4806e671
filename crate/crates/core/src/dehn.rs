//! Model Dehn twists on `T*S^{n−1} = {(u, v) : ⟨u, v⟩ = 0, |u| = 1} ⊂ ℝ²ⁿ`
//! with `ω = Σ dv_i ∧ du_i`, and the bookkeeping of Dehn-word chains of
//! mapping tori.
//!
//! Ambient points are stored as `(u_1, …, u_n, v_1, …, v_n)`. Hamiltonian
//! vector fields use `ι_X ω = −dH`, under which `H = |v|` generates the
//! circle action `t ↦ e^{2πit}` at unit speed in `2πt`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::calculus::eval_form;
use crate::chart::{ChartDomain, ChartMap, Coordinate};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::FormField;
use crate::report::{Residual, VerificationReport};
use crate::tol;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotangentSpherePoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl CotangentSpherePoint {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Arity { expected: u.len(), got: v.len() });
        }
        let p = CotangentSpherePoint { u, v };
        let residual = p.constraint_residual();
        if !(residual <= tol::CONSTRAINT) {
            return Err(Error::ConstraintViolation { residual });
        }
        Ok(p)
    }

    pub fn from_ambient(x: &[f64]) -> Result<Self> {
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn ambient(&self) -> Vec<f64> {
        self.u.iter().chain(&self.v).copied().collect()
    }

    /// `max(|⟨u, v⟩|, ||u| − 1|)`.
    pub fn constraint_residual(&self) -> f64 {
        dot(&self.u, &self.v).abs().max((norm(&self.u) - 1.0).abs())
    }

    /// Uniform direction `u`, `v` orthogonal to it with `|v|` uniform in
    /// `(0, v_max)`.
    pub fn random<R: Rng>(n: usize, v_max: f64, rng: &mut R) -> Self {
        let gauss = |rng: &mut R| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let a: f64 = rng.random_range(f64::EPSILON..1.0);
                    let b: f64 = rng.random_range(0.0..TAU);
                    (-2.0 * a.ln()).sqrt() * b.cos()
                })
                .collect()
        };
        let mut u = gauss(rng);
        let nu = norm(&u);
        u.iter_mut().for_each(|x| *x /= nu);
        let mut w = gauss(rng);
        let c = dot(&u, &w);
        w.iter_mut().zip(&u).for_each(|(x, y)| *x -= c * y);
        let nw = norm(&w);
        let len: f64 = rng.random_range(1e-3..1.0) * v_max;
        let v = w.iter().map(|x| x / nw * len).collect();
        CotangentSpherePoint { u, v }
    }
}

/// `e^{2πit}·(u, v) = (cos(2πt)u + sin(2πt)v/|v|, cos(2πt)v − sin(2πt)|v|u)`.
pub fn circle_action(t: f64, p: &CotangentSpherePoint) -> Result<CotangentSpherePoint> {
    let r = norm(&p.v);
    if r == 0.0 {
        return Err(Error::ZeroSection);
    }
    let (s, c) = (TAU * t).sin_cos();
    let u = p.u.iter().zip(&p.v).map(|(a, b)| c * a + s * b / r).collect();
    let v = p.u.iter().zip(&p.v).map(|(a, b)| c * b - s * r * a).collect();
    Ok(CotangentSpherePoint { u, v })
}

/// `r(t)` with support in `[−C, C]` and `r(t) − r(−t) = t` for
/// `|t| ≤ small_radius`.
#[derive(Debug, Clone)]
pub struct TwistProfile {
    r: Expr,
    r1: Expr,
    r2: Expr,
    c: f64,
    small_radius: f64,
}

impl TwistProfile {
    /// `r(t) = (t/2)·ρ(t/C)` with `ρ = 1` on `|w| ≤ ½`, `0` on `|w| ≥ 1`, and a
    /// septic smootherstep (`C³`) in between.
    pub fn standard(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Precondition(format!("support radius must be positive, got {c}")));
        }
        let t = Expr::var(0);
        let w = (t.abs() * (1.0 / c) - 0.5) * 2.0;
        let x = (w.abs() - (&w - 1.0).abs() + 1.0) * 0.5;
        // 1 − smootherstep, factored so the clamp's rounding error enters only to the fourth power
        let rho = (1.0 - &x).powi(4) * (1.0 + 4.0 * &x + 10.0 * x.powi(2) + 20.0 * x.powi(3));
        Self::custom(&t * 0.5 * rho, c, 0.5 * c)
    }

    pub fn custom(r: Expr, c: f64, small_radius: f64) -> Result<Self> {
        if r.max_var().is_some_and(|v| v > 0) {
            return Err(Error::Precondition("a twist profile depends on one variable".into()));
        }
        let r1 = r.diff(0);
        let r2 = r1.diff(0);
        let p = TwistProfile { r, r1, r2, c, small_radius };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        for k in 0..=400 {
            let t = self.c * (1.0 + k as f64 / 200.0);
            for s in [t, -t] {
                if self.r.eval(&[s]).abs() > 1e-14 || self.r1.eval(&[s]).abs() > 1e-14 {
                    return Err(Error::Precondition(format!("r does not vanish at t = {s}")));
                }
            }
            let t = self.small_radius * k as f64 / 400.0;
            let odd = self.r.eval(&[t]) - self.r.eval(&[-t]) - t;
            if odd.abs() > 1e-14 {
                return Err(Error::Precondition(format!("r(t) − r(−t) ≠ t at t = {t}")));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> f64 {
        self.c
    }

    pub fn small_radius(&self) -> f64 {
        self.small_radius
    }

    pub fn r(&self) -> &Expr {
        &self.r
    }

    pub fn r_prime(&self, t: f64) -> f64 {
        self.r1.eval(&[t])
    }

    pub fn r_second(&self, t: f64) -> f64 {
        self.r2.eval(&[t])
    }
}

/// `ψ(u, v) = e^{2πi r′(|v|)}·(u, v)`, extended by `(−u, −v)` on the zero
/// section. The inverse rotates by `−2π r′(|v|)`.
#[derive(Debug, Clone)]
pub struct ModelDehnTwist {
    profile: TwistProfile,
    n: usize,
    inverse: bool,
}

pub fn model_dehn_twist(profile: &TwistProfile, n: usize) -> ModelDehnTwist {
    ModelDehnTwist { profile: profile.clone(), n, inverse: false }
}

impl ModelDehnTwist {
    pub fn inverse(&self) -> Self {
        ModelDehnTwist { inverse: !self.inverse, ..self.clone() }
    }

    pub fn profile(&self) -> &TwistProfile {
        &self.profile
    }

    fn angle(&self, r: f64) -> (f64, f64) {
        let sign = if self.inverse { -1.0 } else { 1.0 };
        (sign * TAU * self.profile.r_prime(r), sign * TAU * self.profile.r_second(r))
    }

    pub fn apply_point(&self, p: &CotangentSpherePoint) -> CotangentSpherePoint {
        let y = self.apply(&p.ambient());
        CotangentSpherePoint { u: y[..self.n].to_vec(), v: y[self.n..].to_vec() }
    }
}

impl ChartMap for ModelDehnTwist {
    fn source_dim(&self) -> usize {
        2 * self.n
    }
    fn target_dim(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (u, v) = (&x[..n], &x[n..]);
        let r = norm(v);
        if r == 0.0 {
            return x.iter().map(|a| -a).collect();
        }
        let (theta, _) = self.angle(r);
        let (s, c) = theta.sin_cos();
        let mut out: Vec<f64> = u.iter().zip(v).map(|(a, b)| c * a + s * b / r).collect();
        out.extend(u.iter().zip(v).map(|(a, b)| c * b - s * r * a));
        out
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let (u, v) = (&x[..n], &x[n..]);
        let r = norm(v);
        if r == 0.0 {
            return -DMatrix::identity(2 * n, 2 * n);
        }
        let (theta, dtheta) = self.angle(r);
        let (s, c) = theta.sin_cos();
        let uu = DVector::from_column_slice(u);
        let vv = DVector::from_column_slice(v);
        let vhat = &vv / r;
        // ∂θ/∂v = θ′(r) v/r
        let grad = &vhat * dtheta;
        let eye = DMatrix::<f64>::identity(n, n);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&(&eye * c));
        j.view_mut((n, 0), (n, n)).copy_from(&(&eye * (-s * r)));
        let d1 = (-s * &uu + c * &vhat) * grad.transpose() + (&eye - &vhat * vhat.transpose()) * (s / r);
        let d2 = (-s * &vv - c * r * &uu) * grad.transpose() + &eye * c - s * &uu * vhat.transpose();
        j.view_mut((0, n), (n, n)).copy_from(&d1);
        j.view_mut((n, n), (n, n)).copy_from(&d2);
        j
    }
}

/// `ℝ²ⁿ` chart `(u_1, …, u_n, v_1, …, v_n)` wide enough for any sampled point.
pub fn ambient_domain(n: usize) -> Arc<ChartDomain> {
    let mut coords: Vec<Coordinate> = (1..=n).map(|i| Coordinate::interval(&format!("u{i}"), -1e3, 1e3)).collect();
    coords.extend((1..=n).map(|i| Coordinate::interval(&format!("v{i}"), -1e3, 1e3)));
    ChartDomain::new(coords).expect("distinct names")
}

/// `Σ dv_i ∧ du_i` on the ambient chart.
pub fn canonical_form(n: usize) -> FormField {
    FormField::from_terms(ambient_domain(n), 2, (0..n).map(|i| (vec![i, n + i], Expr::constant(-1.0))))
        .expect("valid indices")
}

/// Orthonormal frame of the tangent space of the constraint manifold at `x`
/// (Gram–Schmidt against the normals `(u, 0)` and `(v, u)`).
pub fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len() / 2;
    let (u, v) = (&x[..n], &x[n..]);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let push = |w: Vec<f64>, basis: &mut Vec<Vec<f64>>| -> bool {
        let mut w = w;
        for b in basis.iter() {
            let c = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(a, bb)| *a -= c * bb);
        }
        let nw = norm(&w);
        if nw > 1e-6 {
            basis.push(w.into_iter().map(|a| a / nw).collect());
            true
        } else {
            false
        }
    };
    let normals = [u.iter().copied().chain(std::iter::repeat_n(0.0, n)).collect::<Vec<_>>(), v.iter().chain(u).copied().collect()];
    let mut count = 0;
    for w in normals {
        if push(w, &mut basis) {
            count += 1;
        }
    }
    for k in 0..2 * n {
        if basis.len() == 2 * n {
            break;
        }
        let mut e = vec![0.0; 2 * n];
        e[k] = 1.0;
        push(e, &mut basis);
    }
    basis.split_off(count)
}

/// `max_{i,j} |(F*ω − ω)(E_i, E_j)|` over orthonormal tangent frames `E` at
/// the grid points.
pub fn verify_symplectomorphism(
    f: &dyn ChartMap,
    omega: &FormField,
    points: &[CotangentSpherePoint],
    tolerance: f64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("verify_symplectomorphism");
    let mut worst: f64 = 0.0;
    let mut constraint: f64 = 0.0;
    for p in points {
        let x = p.ambient();
        if x.len() != f.source_dim() || x.len() != omega.dim() {
            return Err(Error::DomainMismatch);
        }
        let y = f.apply(&x);
        let image = CotangentSpherePoint { u: y[..p.n()].to_vec(), v: y[p.n()..].to_vec() };
        constraint = constraint.max(p.constraint_residual()).max(image.constraint_residual());
        if !(constraint <= tol::CONSTRAINT) {
            return Err(Error::ConstraintViolation { residual: constraint });
        }
        let jac = f.jacobian(&x);
        let frame = tangent_frame(&x);
        let pushed: Vec<Vec<f64>> = frame
            .iter()
            .map(|e| (&jac * DVector::from_column_slice(e)).iter().copied().collect())
            .collect();
        for i in 0..frame.len() {
            for j in i + 1..frame.len() {
                let a = eval_form(omega, &y, &[pushed[i].clone(), pushed[j].clone()])?;
                let b = eval_form(omega, &x, &[frame[i].clone(), frame[j].clone()])?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    report.push(Residual::at_most("symplectic", worst, tolerance));
    report.set("constraint_residual", constraint);
    report.set("points", points.len());
    Ok(report)
}

/// Hamiltonian vector field of `r(|v|)` on the constraint manifold, solved
/// from `ω(X, E_j) = −dH(E_j)` on a tangent frame.
fn hamiltonian_field(profile: &TwistProfile, x: &[f64]) -> Vec<f64> {
    let n = x.len() / 2;
    let v = &x[n..];
    let r = norm(v);
    let mut grad = vec![0.0; 2 * n];
    for i in 0..n {
        grad[n + i] = profile.r_prime(r) * v[i] / r;
    }
    let frame = tangent_frame(x);
    let k = frame.len();
    // ω(a, b) = Σ a_{v_i} b_{u_i} − a_{u_i} b_{v_i}
    let w = |a: &[f64], b: &[f64]| (0..n).map(|i| a[n + i] * b[i] - a[i] * b[n + i]).sum::<f64>();
    let omega = DMatrix::from_fn(k, k, |i, j| w(&frame[i], &frame[j]));
    let g = DVector::from_fn(k, |j, _| dot(&grad, &frame[j]));
    // Σ_i a_i Ω_ij = −g_j  ⇔  Ω a = g
    let a = omega.lu().solve(&g).unwrap_or_else(|| DVector::zeros(k));
    (0..2 * n).map(|c| (0..k).map(|i| a[i] * frame[i][c]).sum()).collect()
}

/// Endpoint distance between the time-`2π` flow of `r(|v|)` (RK4 with
/// `steps` steps) and the closed-form twist, maximized over `points`.
pub fn flow_residual(profile: &TwistProfile, points: &[CotangentSpherePoint], steps: usize) -> f64 {
    let h = TAU / steps as f64;
    let mut worst: f64 = 0.0;
    for p in points {
        let n = p.n();
        let twist = model_dehn_twist(profile, n);
        let mut x = p.ambient();
        let add = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        for _ in 0..steps {
            let k1 = hamiltonian_field(profile, &x);
            let k2 = hamiltonian_field(profile, &add(&x, &k1, h / 2.0));
            let k3 = hamiltonian_field(profile, &add(&x, &k2, h / 2.0));
            let k4 = hamiltonian_field(profile, &add(&x, &k3, h));
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let target = twist.apply(&p.ambient());
        worst = worst.max(x.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    worst
}

/// The model twist on `T*S¹` grafted into `T² = ℝ²/ℤ²` along the annulus
/// around `y = y₀`: `(x, y) ↦ (x + sgn(p)·r′(|p|), y)` with `p = y − y₀`.
/// On `p = 0` the shift is `½`, the antipodal map of the zero section.
#[derive(Debug, Clone)]
pub struct TorusTwist {
    profile: TwistProfile,
    center: f64,
}

impl TorusTwist {
    pub fn new(profile: &TwistProfile, center: f64) -> Result<Self> {
        if profile.support() >= 0.5 {
            return Err(Error::Precondition(format!(
                "support radius {} does not fit in an annulus of T² (needs < 0.5)",
                profile.support()
            )));
        }
        Ok(TorusTwist { profile: profile.clone(), center })
    }

    fn offset(&self, y: f64) -> f64 {
        (y - self.center + 0.5).rem_euclid(1.0) - 0.5
    }
}

impl ChartMap for TorusTwist {
    fn source_dim(&self) -> usize {
        2
    }
    fn target_dim(&self) -> usize {
        2
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let p = self.offset(x[1]);
        let shift = if p == 0.0 { 0.5 } else { p.signum() * self.profile.r_prime(p.abs()) };
        vec![x[0] + shift, x[1]]
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let p = self.offset(x[1]);
        DMatrix::from_row_slice(2, 2, &[1.0, self.profile.r_second(p.abs()), 0.0, 1.0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Letter {
    pub sphere: String,
    pub exponent: i8,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent < 0 {
            write!(f, "{}^-1", self.sphere)
        } else {
            write!(f, "{}", self.sphere)
        }
    }
}

/// A word `τ_{l₁}^{ε₁} ⋯ τ_{lₘ}^{εₘ}` in Dehn twists of a fiber.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DehnWord {
    pub letters: Vec<Letter>,
    pub fiber: String,
}

impl DehnWord {
    /// Whitespace-separated letters `l1`, `l1^-1` (also `l1^1`, `l1^+1`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e = match e {
                        "-1" => -1,
                        "1" | "+1" => 1,
                        other => return Err(Error::Parse(format!("exponent `{other}` in `{tok}`; expected ±1"))),
                    };
                    (n, e)
                }
                None => (tok, 1),
            };
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::Parse(format!("bad sphere label in `{tok}`")));
            }
            letters.push(Letter { sphere: name.to_string(), exponent: exp });
        }
        if letters.is_empty() {
            return Err(Error::Parse("empty Dehn word".into()));
        }
        Ok(DehnWord { letters, fiber: "F".into() })
    }

    pub fn with_fiber(mut self, fiber: &str) -> Self {
        self.fiber = fiber.to_string();
        self
    }
}

fn render(letters: &[Letter]) -> String {
    if letters.is_empty() {
        "id".into()
    } else {
        letters.iter().map(Letter::to_string).collect::<Vec<_>>().join(" ")
    }
}

/// Cancels adjacent `τ τ⁻¹` pairs.
fn free_reduce(letters: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for l in letters {
        if out.last().is_some_and(|p| p.sphere == l.sphere && p.exponent == -l.exponent) {
            out.pop();
        } else {
            out.push(l.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub letter: Letter,
    pub construction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    /// Monodromy of the mapping torus `Z(·)` at this link.
    pub monodromy: String,
    pub reduced: String,
    /// How this link is cobordant to the next one.
    pub step: Option<ChainStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateChain {
    pub word: String,
    pub fiber: String,
    pub links: Vec<ChainLink>,
    pub filling: String,
}

/// Peels letters from the left: link `k` is `Z(τ_{l_{k+1}}^{ε_{k+1}} ⋯ τ_{lₘ}^{εₘ})`,
/// ending at `Z(id)` and its product filling. When `spheres` is given, every
/// label must be declared there.
pub fn dehn_word_chain(word: &DehnWord, spheres: Option<&[String]>) -> Result<CertificateChain> {
    if word.letters.is_empty() {
        return Err(Error::Precondition("empty Dehn word".into()));
    }
    if let Some(declared) = spheres {
        if let Some(l) = word.letters.iter().find(|l| !declared.contains(&l.sphere)) {
            return Err(Error::UnknownSphere(l.sphere.clone()));
        }
    }
    let m = word.letters.len();
    let links = (0..=m)
        .map(|k| {
            let rest = &word.letters[k..];
            let step = word.letters.get(k).map(|l| ChainStep {
                letter: l.clone(),
                construction: if l.exponent > 0 {
                    "trace of a positive Lagrangian surgery".into()
                } else {
                    "trace of a negative Lagrangian surgery".into()
                },
            });
            ChainLink { monodromy: render(rest), reduced: render(&free_reduce(rest)), step }
        })
        .collect();
    Ok(CertificateChain {
        word: render(&word.letters),
        fiber: word.fiber.clone(),
        links,
        filling: format!("({} × D², σ + dy₁ ∧ dy₂)", word.fiber),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(u: &[f64], v: &[f64]) -> CotangentSpherePoint {
        CotangentSpherePoint::new(u.to_vec(), v.to_vec()).unwrap()
    }

    fn sample(n: usize, count: usize, vmax: f64, seed: u64) -> Vec<CotangentSpherePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| CotangentSpherePoint::random(n, vmax, &mut rng)).collect()
    }

    #[test]
    fn circle_action_examples() {
        let p = pt(&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0]);
        let q = circle_action(0.25, &p).unwrap();
        for (a, b) in q.u.iter().zip([0.0, 1.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        for (a, b) in q.v.iter().zip([-2.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let h = circle_action(0.5, &p).unwrap();
        assert_abs_diff_eq!(h.u[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.v[1], -2.0, epsilon = 1e-15);
        assert_eq!(circle_action(0.0, &p).unwrap(), p);
        assert!(matches!(circle_action(0.3, &pt(&[1.0, 0.0], &[0.0, 0.0])), Err(Error::ZeroSection)));
    }

    #[test]
    fn profile_constraints() {
        let p = TwistProfile::standard(1.0).unwrap();
        assert_abs_diff_eq!(p.r_prime(0.0), 0.5, epsilon = 1e-15);
        assert_eq!(p.r_prime(1.2), 0.0);
        assert!(TwistProfile::custom(Expr::var(0) * 0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn twist_regions() {
        let prof = TwistProfile::standard(1.0).unwrap();
        let psi = model_dehn_twist(&prof, 3);
        let far = pt(&[0.0, 0.0, 1.0], &[1.5, 0.0, 0.0]);
        assert_eq!(psi.apply(&far.ambient()), far.ambient());
        let zero = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(psi.apply(&zero), vec![-0.0, -1.0, -0.0, -0.0, -0.0, -0.0]);
        let mid = pt(&[1.0, 0.0, 0.0], &[0.0, 0.7, 0.0]);
        let expect = circle_action(prof.r_prime(0.7), &mid).unwrap();
        let got = psi.apply(&mid.ambient());
        for (a, b) in got.iter().zip(expect.ambient()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        // continuity across |v| = C
        let a = psi.apply(&pt(&[1.0, 0.0, 0.0], &[0.0, 1.0 - 1e-7, 0.0]).ambient());
        let b = psi.apply(&pt(&[1.0, 0.0, 0.0], &[0.0, 1.0 + 1e-7, 0.0]).ambient());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-6));
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let prof = TwistProfile::standard(1.0).unwrap();
        let psi = model_dehn_twist(&prof, 3);
        for p in sample(3, 20, 1.2, 7) {
            let x = p.ambient();
            let fd = crate::chart::fd_jacobian(&psi, &x, 1e-6);
            assert!((psi.jacobian(&x) - fd).abs().max() < 1e-5);
        }
    }

    #[test]
    fn symplectomorphism_examples() {
        let prof = TwistProfile::standard(1.0).unwrap();
        let omega = canonical_form(3);
        let pts = sample(3, 40, 1.2, 11);
        let id = crate::chart::ExprMap::identity(ambient_domain(3));
        let r = verify_symplectomorphism(&id, &omega, &pts, tol::SYMPLECTIC_ANALYTIC).unwrap();
        assert_eq!(r.residual("symplectic").unwrap().value, 0.0);
        let psi = model_dehn_twist(&prof, 3);
        assert!(verify_symplectomorphism(&psi, &omega, &pts, tol::SYMPLECTIC_ANALYTIC).unwrap().passed);
        let scale = crate::chart::NumericMap::new(6, 6, |x: &[f64]| {
            x.iter().enumerate().map(|(i, a)| if i < 3 { *a } else { 2.0 * a }).collect()
        });
        let r = verify_symplectomorphism(&scale, &omega, &pts, tol::SYMPLECTIC_FD).unwrap();
        let v = r.residual("symplectic").unwrap().value;
        // max over frame pairs of |ω(E_i, E_j)|, which approaches 1
        assert!((v - 1.0).abs() < 1e-3, "{v}");
        let bad = pt(&[1.0, 0.0], &[0.0, 1.0]);
        let off = crate::chart::NumericMap::new(4, 4, |x: &[f64]| x.iter().map(|a| a * 1.5).collect());
        assert!(matches!(
            verify_symplectomorphism(&off, &canonical_form(2), &[bad], 1e-6),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn inverse_and_antipodal_limit() {
        let prof = TwistProfile::standard(1.0).unwrap();
        let psi = model_dehn_twist(&prof, 3);
        let inv = psi.inverse();
        for p in sample(3, 30, 1.3, 3) {
            let x = p.ambient();
            let back = inv.apply(&psi.apply(&x));
            assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8));
        }
        let p = pt(&[0.0, 1.0, 0.0], &[1e-4, 0.0, 0.0]);
        let y = psi.apply(&p.ambient());
        assert!(y.iter().zip(p.ambient()).all(|(a, b)| (a + b).abs() < 1e-6));
    }

    #[test]
    fn closed_form_is_the_flow() {
        let prof = TwistProfile::standard(1.0).unwrap();
        let pts = sample(3, 20, 1.1, 5);
        assert!(flow_residual(&prof, &pts, 2000) < 1e-6);
    }

    #[test]
    fn torus_twist_is_symplectic() {
        let prof = TwistProfile::standard(0.4).unwrap();
        let tw = TorusTwist::new(&prof, 0.5).unwrap();
        for y in [0.13, 0.35, 0.5, 0.62, 0.9] {
            let j = tw.jacobian(&[0.2, y]);
            assert_abs_diff_eq!(j.determinant(), 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(tw.apply(&[0.1, 0.5])[0], 0.6);
        assert_abs_diff_eq!(tw.apply(&[0.1, 0.05])[0], 0.1);
        assert!(TorusTwist::new(&TwistProfile::standard(1.0).unwrap(), 0.5).is_err());
    }

    #[test]
    fn word_chains() {
        let c = dehn_word_chain(&DehnWord::parse("l").unwrap(), None).unwrap();
        assert_eq!(c.links.len(), 2);
        assert_eq!(c.links[1].monodromy, "id");
        let c = dehn_word_chain(&DehnWord::parse("l l^-1").unwrap(), None).unwrap();
        assert_eq!(c.links.len(), 3);
        assert_eq!(c.links[0].reduced, "id");
        let w = DehnWord::parse("l1 l2^-1 l1").unwrap();
        let spheres = vec!["l1".to_string(), "l2".to_string()];
        let c = dehn_word_chain(&w, Some(&spheres)).unwrap();
        assert_eq!(c.links.len(), 4);
        assert_eq!(c.links[1].monodromy, "l2^-1 l1");
        assert_eq!(c.links[2].monodromy, "l1");
        assert!(c.links[1].step.as_ref().unwrap().construction.contains("negative"));
        assert!(c.links[0].step.as_ref().unwrap().construction.contains("positive"));
        assert!(c.links[3].step.is_none());
        assert!(matches!(
            dehn_word_chain(&DehnWord::parse("l3").unwrap(), Some(&spheres)),
            Err(Error::UnknownSphere(s)) if s == "l3"
        ));
        assert!(DehnWord::parse("").is_err());
        assert!(DehnWord::parse("l^2").is_err());
    }
}
