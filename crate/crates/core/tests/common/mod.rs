//! Random fields, maps and cosymplectic pairs for the property suites.
#![allow(dead_code)]

use std::f64::consts::TAU;
use std::sync::Arc;

use bsymp::calculus::exterior_derivative;
use bsymp::cosymplectic::{check_volume, CosymplecticPair};
use bsymp::field::{subsets, Field, Variance};
use bsymp::tol::Tolerances;
use bsymp::{ChartDomain, Coordinate, Expr, ExprMap, FormField, SampleGrid};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn torus(m: usize) -> Arc<ChartDomain> {
    let names: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    ChartDomain::torus(&refs)
}

/// `[-2, 2]^m`, wide enough to hold the images of [`random_map`].
pub fn box_chart(m: usize, prefix: &str) -> Arc<ChartDomain> {
    ChartDomain::new((0..m).map(|i| Coordinate::interval(&format!("{prefix}{i}"), -2.0, 2.0)).collect()).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.0..1.0)).collect()
}

/// A short sum of trigonometric and polynomial terms.
pub fn random_scalar<R: Rng>(rng: &mut R, m: usize) -> Expr {
    let terms = rng.random_range(1..=3);
    let mut acc = Expr::zero();
    for _ in 0..terms {
        let a: f64 = rng.random_range(-1.0..1.0);
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        let t = match rng.random_range(0..4) {
            0 => {
                let k1 = rng.random_range(1..=2) as f64;
                let k2 = rng.random_range(0..=1) as f64;
                let phase: f64 = rng.random_range(0.0..TAU);
                ((Expr::var(i) * k1 + Expr::var(j) * k2) * TAU + phase).sin() * a
            }
            1 => (Expr::var(i) * TAU).cos() * Expr::var(j) * a,
            2 => Expr::var(i) * Expr::var(j) * a,
            _ => (Expr::var(i) * 0.3).exp() * a,
        };
        acc = acc + t;
    }
    acc
}

pub fn random_field<V: Variance, R: Rng>(rng: &mut R, domain: &Arc<ChartDomain>, degree: usize) -> Field<V> {
    let m = domain.dim();
    let mut terms = Vec::new();
    for idx in subsets(m, degree) {
        if rng.random_bool(0.7) {
            terms.push((idx, random_scalar(rng, m)));
        }
    }
    Field::from_terms(domain.clone(), degree, terms).unwrap()
}

/// `x ↦ x + small trigonometric bump`, a diffeomorphism onto its image.
pub fn random_map<R: Rng>(rng: &mut R, source: &Arc<ChartDomain>, target: &Arc<ChartDomain>) -> ExprMap {
    let m = source.dim();
    let comps = (0..m)
        .map(|i| {
            let j = rng.random_range(0..m);
            let a: f64 = rng.random_range(-0.1..0.1);
            Expr::var(i) + (Expr::var(j) * TAU).sin() * a + rng.random_range(-0.2..0.2)
        })
        .collect();
    ExprMap::new(source.clone(), target.clone(), comps).unwrap()
}

fn exact_one_form<R: Rng>(rng: &mut R, d: &Arc<ChartDomain>, amplitude: f64) -> FormField {
    let m = d.dim();
    let k: Vec<f64> = (0..m).map(|_| rng.random_range(0..=1) as f64).collect();
    let phase: f64 = rng.random_range(0.0..TAU);
    let mut arg = Expr::constant(phase);
    for (i, ki) in k.iter().enumerate() {
        arg = arg + Expr::var(i) * (TAU * ki);
    }
    let g = arg.sin() * rng.random_range(-amplitude..amplitude);
    exterior_derivative(&FormField::scalar(d.clone(), g))
}

fn exact_two_form<R: Rng>(rng: &mut R, d: &Arc<ChartDomain>, amplitude: f64) -> FormField {
    let m = d.dim();
    let j = rng.random_range(0..m);
    let l = rng.random_range(0..m);
    let phase: f64 = rng.random_range(0.0..TAU);
    let c = (Expr::var(l) * TAU + phase).sin() * rng.random_range(-amplitude..amplitude);
    exterior_derivative(&FormField::term(d.clone(), &[j], c).unwrap())
}

/// A closed pair on `T^{2n-1}`: a standard pair with constant and exact
/// perturbations, resampled until the volume check passes.
pub fn closed_pair<R: Rng>(rng: &mut R, n: usize) -> CosymplecticPair {
    let m = 2 * n - 1;
    let d = torus(m);
    loop {
        let mut theta = FormField::term(d.clone(), &[m - 1], Expr::constant(rng.random_range(0.5..2.0))).unwrap();
        for i in 0..m - 1 {
            let c = FormField::term(d.clone(), &[i], Expr::constant(rng.random_range(-0.2..0.2))).unwrap();
            theta = theta.add(&c).unwrap();
        }
        theta = theta.add(&exact_one_form(rng, &d, 0.02)).unwrap();
        let mut eta = FormField::zero(d.clone(), 2);
        for k in 0..n - 1 {
            let b = Expr::constant(rng.random_range(0.5..2.0));
            eta = eta.add(&FormField::term(d.clone(), &[2 * k, 2 * k + 1], b).unwrap()).unwrap();
        }
        let mix = FormField::term(d.clone(), &[0, m - 1], Expr::constant(rng.random_range(-0.1..0.1))).unwrap();
        eta = eta.add(&mix).unwrap().add(&exact_two_form(rng, &d, 0.02)).unwrap();
        let pair = CosymplecticPair::new(theta, eta).unwrap();
        if check_volume(&pair, &SampleGrid::new(d.clone(), 4), &Tolerances::default()).passed {
            return pair;
        }
    }
}

/// A closed pair with a non-closed perturbation of `θ` or `η`.
pub fn broken_pair<R: Rng>(rng: &mut R, n: usize) -> CosymplecticPair {
    let base = closed_pair(rng, n);
    let d = base.domain().clone();
    let m = d.dim();
    let delta: f64 = rng.random_range(0.05..0.3);
    if rng.random_bool(0.5) {
        // δ sin(2π x_j) dx_i with j ≠ i is not closed
        let i = rng.random_range(0..m);
        let j = (i + 1 + rng.random_range(0..m - 1)) % m;
        let c = (Expr::var(j) * TAU).sin() * delta;
        let theta = base.theta().add(&FormField::term(d.clone(), &[i], c).unwrap()).unwrap();
        CosymplecticPair::new(theta, base.eta().clone()).unwrap()
    } else {
        // δ sin(2π x_l) dx_i∧dx_j with l ∉ {i, j}
        let l = rng.random_range(0..m);
        let mut rest: Vec<usize> = (0..m).filter(|&k| k != l).collect();
        rest.truncate(2);
        let c = (Expr::var(l) * TAU).sin() * delta;
        let eta = base.eta().add(&FormField::term(d.clone(), &rest, c).unwrap()).unwrap();
        CosymplecticPair::new(base.theta().clone(), eta).unwrap()
    }
}
