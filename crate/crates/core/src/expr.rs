//! Closed-form scalar expressions over chart coordinates.
//!
//! An [`Expr`] is an immutable, reference-counted expression tree. Variables
//! are coordinate indices into the owning chart; names only matter for the
//! text format. Construction goes through smart constructors that fold
//! constants and drop neutral elements, nothing more.
//!
//! Differentiation is symbolic ([`Expr::diff`]), so first and second partials
//! are exact expressions rather than finite-difference approximations.
//!
//! # Text format
//!
//! Prefix notation with parentheses:
//!
//! ```text
//! (+ x (* 2 (sin y)))      (- a)      (^ t 2)      (log (abs t))
//! ```
//!
//! `+` and `*` are n-ary, `-` is unary negation or binary subtraction.
//! Atoms are decimal numbers, `pi`, or coordinate names.

use std::fmt;
use std::ops;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Neg(Expr),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Log(Expr),
    Abs(Expr),
    /// Derivative of `Abs`; `sign(0) = 0`.
    Sign(Expr),
}

/// A closed-form scalar field.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Expr {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(index: usize) -> Expr {
        Expr(Arc::new(Node::Var(index)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn pow(&self, exponent: &Expr) -> Expr {
        match (self.as_const(), exponent.as_const()) {
            (_, Some(e)) if e == 0.0 => Expr::one(),
            (_, Some(e)) if e == 1.0 => self.clone(),
            (Some(b), Some(e)) => Expr::constant(powf(b, e)),
            (Some(b), _) if b == 1.0 => Expr::one(),
            _ => Expr(Arc::new(Node::Pow(self.clone(), exponent.clone()))),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        self.pow(&Expr::constant(n as f64))
    }

    pub fn sin(&self) -> Expr {
        self.unary(Node::Sin, f64::sin)
    }

    pub fn cos(&self) -> Expr {
        self.unary(Node::Cos, f64::cos)
    }

    pub fn exp(&self) -> Expr {
        self.unary(Node::Exp, f64::exp)
    }

    pub fn log(&self) -> Expr {
        self.unary(Node::Log, f64::ln)
    }

    pub fn abs(&self) -> Expr {
        self.unary(Node::Abs, f64::abs)
    }

    pub fn sign(&self) -> Expr {
        self.unary(Node::Sign, sign)
    }

    fn unary(&self, make: fn(Expr) -> Node, fold: fn(f64) -> f64) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(fold(c)),
            None => Expr(Arc::new(make(self.clone()))),
        }
    }

    /// Evaluates at `x`. Undefined operations produce NaN or infinities.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => powf(a.eval(x), b.eval(x)),
            Node::Neg(a) => -a.eval(x),
            Node::Sin(a) => a.eval(x).sin(),
            Node::Cos(a) => a.eval(x).cos(),
            Node::Exp(a) => a.eval(x).exp(),
            Node::Log(a) => a.eval(x).ln(),
            Node::Abs(a) => a.eval(x).abs(),
            Node::Sign(a) => sign(a.eval(x)),
        }
    }

    /// Like [`Expr::eval`] but rejects non-finite results.
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { point: x.to_vec() })
        }
    }

    /// Partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => a.diff(var) + b.diff(var),
            Node::Sub(a, b) => a.diff(var) - b.diff(var),
            Node::Mul(a, b) => a.diff(var) * b + a * b.diff(var),
            Node::Div(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_zero() {
                    da / b
                } else {
                    (da * b - a * db) / (b * b)
                }
            }
            Node::Pow(a, b) => {
                let da = a.diff(var);
                match b.as_const() {
                    Some(c) => Expr::constant(c) * a.pow(&Expr::constant(c - 1.0)) * da,
                    None => {
                        let db = b.diff(var);
                        self * (db * a.log() + b * da / a)
                    }
                }
            }
            Node::Neg(a) => -a.diff(var),
            Node::Sin(a) => a.cos() * a.diff(var),
            Node::Cos(a) => -(a.sin() * a.diff(var)),
            Node::Exp(a) => self * a.diff(var),
            Node::Log(a) => a.diff(var) / a,
            Node::Abs(a) => a.sign() * a.diff(var),
            Node::Sign(_) => Expr::zero(),
        }
    }

    /// Replaces every coordinate `i` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(i) => subs[*i].clone(),
            Node::Add(a, b) => a.substitute(subs) + b.substitute(subs),
            Node::Sub(a, b) => a.substitute(subs) - b.substitute(subs),
            Node::Mul(a, b) => a.substitute(subs) * b.substitute(subs),
            Node::Div(a, b) => a.substitute(subs) / b.substitute(subs),
            Node::Pow(a, b) => a.substitute(subs).pow(&b.substitute(subs)),
            Node::Neg(a) => -a.substitute(subs),
            Node::Sin(a) => a.substitute(subs).sin(),
            Node::Cos(a) => a.substitute(subs).cos(),
            Node::Exp(a) => a.substitute(subs).exp(),
            Node::Log(a) => a.substitute(subs).log(),
            Node::Abs(a) => a.substitute(subs).abs(),
            Node::Sign(a) => a.substitute(subs).sign(),
        }
    }

    /// Renumbers coordinates: `i ↦ map(i)`.
    pub fn reindex(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        let max = self.max_var().map_or(0, |m| m + 1);
        let subs: Vec<Expr> = (0..max).map(|i| Expr::var(map(i))).collect();
        self.substitute(&subs)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
            Node::Neg(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Abs(a)
            | Node::Sign(a) => a.max_var(),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(i) => *i == var,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
            Node::Neg(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Abs(a)
            | Node::Sign(a) => a.depends_on(var),
        }
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Neg(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Abs(a)
            | Node::Sign(a) => 1 + a.size(),
        }
    }

    /// Serializes in prefix notation using `names` for coordinates.
    pub fn to_prefix(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.write_prefix(names, &mut out);
        out
    }

    fn write_prefix(&self, names: &[String], out: &mut String) {
        let bin = |op: &str, a: &Expr, b: &Expr, out: &mut String| {
            out.push('(');
            out.push_str(op);
            out.push(' ');
            a.write_prefix(names, out);
            out.push(' ');
            b.write_prefix(names, out);
            out.push(')');
        };
        let un = |op: &str, a: &Expr, out: &mut String| {
            out.push('(');
            out.push_str(op);
            out.push(' ');
            a.write_prefix(names, out);
            out.push(')');
        };
        match &*self.0 {
            Node::Const(c) => out.push_str(&format_number(*c)),
            Node::Var(i) => match names.get(*i) {
                Some(n) => out.push_str(n),
                None => out.push_str(&format!("x{i}")),
            },
            Node::Add(a, b) => bin("+", a, b, out),
            Node::Sub(a, b) => bin("-", a, b, out),
            Node::Mul(a, b) => bin("*", a, b, out),
            Node::Div(a, b) => bin("/", a, b, out),
            Node::Pow(a, b) => bin("^", a, b, out),
            Node::Neg(a) => un("-", a, out),
            Node::Sin(a) => un("sin", a, out),
            Node::Cos(a) => un("cos", a, out),
            Node::Exp(a) => un("exp", a, out),
            Node::Log(a) => un("log", a, out),
            Node::Abs(a) => un("abs", a, out),
            Node::Sign(a) => un("sign", a, out),
        }
    }

    /// Parses prefix notation; identifiers resolve against `names`.
    pub fn parse(text: &str, names: &[String]) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut pos = 0;
        let e = parse_tokens(&tokens, &mut pos, names)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("trailing input in expression `{text}`")));
        }
        Ok(e)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else if v == 0.0 {
        0.0
    } else {
        f64::NAN
    }
}

fn powf(b: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        b.powi(e as i32)
    } else {
        b.powf(e)
    }
}

fn format_number(c: f64) -> String {
    if c == std::f64::consts::PI {
        "pi".to_string()
    } else {
        // Shortest representation that round-trips.
        format!("{c:?}")
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (&*self.0, &*other.0) {
            (Node::Const(a), Node::Const(b)) => a == b,
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Add(a, b), Node::Add(c, d))
            | (Node::Sub(a, b), Node::Sub(c, d))
            | (Node::Mul(a, b), Node::Mul(c, d))
            | (Node::Div(a, b), Node::Div(c, d))
            | (Node::Pow(a, b), Node::Pow(c, d)) => a == c && b == d,
            (Node::Neg(a), Node::Neg(b))
            | (Node::Sin(a), Node::Sin(b))
            | (Node::Cos(a), Node::Cos(b))
            | (Node::Exp(a), Node::Exp(b))
            | (Node::Log(a), Node::Log(b))
            | (Node::Abs(a), Node::Abs(b))
            | (Node::Sign(a), Node::Sign(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_prefix(&[]))
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

fn add(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x + y),
        (Some(x), _) if x == 0.0 => b.clone(),
        (_, Some(y)) if y == 0.0 => a.clone(),
        _ => {
            if let Node::Neg(inner) = b.node() {
                return sub(a, inner);
            }
            Expr(Arc::new(Node::Add(a.clone(), b.clone())))
        }
    }
}

fn sub(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a.clone(),
        _ => {
            if a == b {
                return Expr::zero();
            }
            if let Node::Neg(inner) = b.node() {
                return add(a, inner);
            }
            Expr(Arc::new(Node::Sub(a.clone(), b.clone())))
        }
    }
}

fn mul(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
        (Some(x), _) if x == 1.0 => b.clone(),
        (_, Some(y)) if y == 1.0 => a.clone(),
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        (_, Some(_)) => Expr(Arc::new(Node::Mul(b.clone(), a.clone()))),
        _ => match (a.node(), b.node()) {
            (_, Node::Div(n, d)) if d == a => n.clone(),
            (Node::Div(n, d), _) if d == b => n.clone(),
            _ => Expr(Arc::new(Node::Mul(a.clone(), b.clone()))),
        },
    }
}

fn div(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x / y),
        (Some(x), _) if x == 0.0 => Expr::zero(),
        (_, Some(y)) if y == 1.0 => a.clone(),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => match b.node() {
            Node::Div(n, d) => div(&mul(a, d), n),
            _ => Expr(Arc::new(Node::Div(a.clone(), b.clone()))),
        },
    }
}

fn neg(a: &Expr) -> Expr {
    match a.node() {
        Node::Const(c) => Expr::constant(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Expr(Arc::new(Node::Neg(a.clone()))),
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $f(&self, &Expr::constant(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $f(self, &Expr::constant(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(&Expr::constant(self), &rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(&Expr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |acc, e| acc + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut current)));
                }
                tokens.push(if ch == '(' { Token::Open } else { Token::Close });
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut current)));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(Token::Atom(current));
    }
    if tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(tokens)
}

fn parse_atom(atom: &str, names: &[String]) -> Result<Expr> {
    if let Some(i) = names.iter().position(|n| n == atom) {
        return Ok(Expr::var(i));
    }
    match atom {
        "pi" => return Ok(Expr::constant(std::f64::consts::PI)),
        "e" => return Ok(Expr::constant(std::f64::consts::E)),
        _ => {}
    }
    atom.parse::<f64>()
        .map(Expr::constant)
        .map_err(|_| Error::Parse(format!("unknown symbol `{atom}`")))
}

fn parse_tokens(tokens: &[Token], pos: &mut usize, names: &[String]) -> Result<Expr> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
    *pos += 1;
    match tok {
        Token::Atom(a) => parse_atom(a, names),
        Token::Close => Err(Error::Parse("unexpected `)`".into())),
        Token::Open => {
            let op = match tokens.get(*pos) {
                Some(Token::Atom(a)) => a.clone(),
                _ => return Err(Error::Parse("expected operator after `(`".into())),
            };
            *pos += 1;
            let mut args = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(Token::Close) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => args.push(parse_tokens(tokens, pos, names)?),
                    None => return Err(Error::Parse("unbalanced parentheses".into())),
                }
            }
            apply_op(&op, args)
        }
    }
}

fn apply_op(op: &str, args: Vec<Expr>) -> Result<Expr> {
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!("`{op}` expects {n} argument(s), got {}", args.len())))
        }
    };
    let e = match op {
        "+" => {
            if args.is_empty() {
                return Err(Error::Parse("`+` needs arguments".into()));
            }
            args.into_iter().reduce(|a, b| a + b).unwrap()
        }
        "*" => {
            if args.is_empty() {
                return Err(Error::Parse("`*` needs arguments".into()));
            }
            args.into_iter().reduce(|a, b| a * b).unwrap()
        }
        "-" => match args.len() {
            1 => -&args[0],
            2 => &args[0] - &args[1],
            n => return Err(Error::Parse(format!("`-` expects 1 or 2 arguments, got {n}"))),
        },
        "/" => {
            arity(2)?;
            &args[0] / &args[1]
        }
        "^" | "pow" => {
            arity(2)?;
            args[0].pow(&args[1])
        }
        "sin" => {
            arity(1)?;
            args[0].sin()
        }
        "cos" => {
            arity(1)?;
            args[0].cos()
        }
        "exp" => {
            arity(1)?;
            args[0].exp()
        }
        "log" => {
            arity(1)?;
            args[0].log()
        }
        "abs" => {
            arity(1)?;
            args[0].abs()
        }
        "sign" => {
            arity(1)?;
            args[0].sign()
        }
        other => return Err(Error::Parse(format!("unknown operator `{other}`"))),
    };
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn constant_folding_and_neutral_elements() {
        let x = Expr::var(0);
        assert!((Expr::zero() * &x).is_zero());
        assert_eq!(Expr::one() * &x, x);
        assert_eq!(&x + 0.0, x);
        assert!((&x - &x).is_zero());
        assert_eq!((Expr::constant(2.0) + 3.0).as_const(), Some(5.0));
        assert_eq!(-(-x.clone()), x);
    }

    #[test]
    fn derivatives_of_elementary_functions() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        let f = x.sin() * &y;
        let fx = f.diff(0);
        let fy = f.diff(1);
        let p = [0.3, 1.7];
        assert!((fx.eval(&p) - 0.3f64.cos() * 1.7).abs() < 1e-15);
        assert!((fy.eval(&p) - 0.3f64.sin()).abs() < 1e-15);

        let g = x.log() / &y;
        assert!((g.diff(0).eval(&p) - 1.0 / (0.3 * 1.7)).abs() < 1e-14);
        assert!((g.diff(1).eval(&p) + 0.3f64.ln() / (1.7 * 1.7)).abs() < 1e-14);

        let h = x.pow(&y);
        let expected = 1.7 * 0.3f64.powf(0.7);
        assert!((h.diff(0).eval(&p) - expected).abs() < 1e-14);
        assert!((h.diff(1).eval(&p) - 0.3f64.powf(1.7) * 0.3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn abs_derivative_is_sign() {
        let x = Expr::var(0);
        let d = x.abs().diff(0);
        assert_eq!(d.eval(&[-2.0]), -1.0);
        assert_eq!(d.eval(&[2.0]), 1.0);
        assert_eq!(d.eval(&[0.0]), 0.0);
        assert!(d.diff(0).is_zero());
    }

    #[test]
    fn parse_and_print() {
        let n = names(&["t", "x"]);
        let e = Expr::parse("(+ (* 2 (sin x)) (/ 1 t) (^ t 2))", &n).unwrap();
        let v = e.eval(&[0.5, 0.25]);
        let want = 2.0 * 0.25f64.sin() + 2.0 + 0.25;
        assert!((v - want).abs() < 1e-15);
        let text = e.to_prefix(&n);
        let back = Expr::parse(&text, &n).unwrap();
        assert_eq!(back, e);
        assert_eq!(Expr::parse("(- x)", &n).unwrap().eval(&[0.0, 3.0]), -3.0);
        assert_eq!(Expr::parse("-0.5", &n).unwrap().as_const(), Some(-0.5));
        assert_eq!(Expr::parse("pi", &n).unwrap().as_const(), Some(std::f64::consts::PI));
    }

    #[test]
    fn parse_errors() {
        let n = names(&["x"]);
        for bad in ["", "(", "(+ x", "(foo x)", "y", "(/ x)", "x)", "(sin x x)"] {
            assert!(Expr::parse(bad, &n).is_err(), "accepted `{bad}`");
        }
    }

    #[test]
    fn substitute_composes() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        let f = &x * &x + y.cos();
        let g = f.substitute(&[y.clone() + 1.0, x.clone()]);
        let p = [0.4, 2.0];
        assert!((g.eval(&p) - (9.0 + 0.4f64.cos())).abs() < 1e-15);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-3.0f64..3.0).prop_map(|c| Expr::constant((c * 8.0).round() / 8.0)),
            (0usize..3).prop_map(Expr::var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                inner.clone().prop_map(|a| a.sin()),
                inner.clone().prop_map(|a| a.cos()),
                inner.clone().prop_map(|a| (a * 0.3).exp()),
                inner.prop_map(|a| a.powi(2)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn prefix_round_trip(e in arb_expr()) {
            let n = names(&["a", "b", "c"]);
            let back = Expr::parse(&e.to_prefix(&n), &n).unwrap();
            let p = [0.3, -0.7, 1.1];
            let (u, v) = (e.eval(&p), back.eval(&p));
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }

        #[test]
        fn symbolic_derivative_matches_central_difference(e in arb_expr(), var in 0usize..3) {
            let p = [0.3, -0.7, 1.1];
            let h = 1e-5;
            let mut hi = p;
            let mut lo = p;
            hi[var] += h;
            lo[var] -= h;
            let fd = (e.eval(&hi) - e.eval(&lo)) / (2.0 * h);
            let exact = e.diff(var).eval(&p);
            prop_assume!(exact.is_finite() && fd.is_finite());
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "fd {fd} exact {exact}");
        }

        #[test]
        fn mixed_partials_commute(e in arb_expr()) {
            let p = [0.3, -0.7, 1.1];
            let a = e.diff(0).diff(1).eval(&p);
            let b = e.diff(1).diff(0).eval(&p);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
