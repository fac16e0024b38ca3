use super::expr::{Expr, Node};
use crate::error::{Error, Result};

/// Arithmetic carrier for tree evaluation. Reals and dual vectors share the
/// evaluator, so the value part of a jet is computed by the very same
/// floating-point operations as a plain evaluation.
pub(crate) trait Scalar: Clone {
    fn value(&self) -> f64;
    fn lift(&self, c: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn sqrt(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn norm(items: &[Self]) -> Result<Self>;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn sqrt(&self) -> Result<Self> {
        Ok(f64::sqrt(*self))
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn norm(items: &[Self]) -> Result<Self> {
        Ok(norm_value(items.iter().copied()))
    }
}

pub(crate) fn norm_value(items: impl Iterator<Item = f64>) -> f64 {
    items.fold(0.0, |acc, v| acc + v * v).sqrt()
}

/// Value plus gradient with respect to every input coordinate.
#[derive(Debug, Clone)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: Vec<f64>,
}

impl Dual {
    pub fn seed(v: f64, i: usize, n: usize) -> Self {
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        Dual { v, d }
    }

    fn scaled(&self, v: f64, k: f64) -> Self {
        Dual {
            v,
            d: self.d.iter().map(|g| k * g).collect(),
        }
    }
}

impl Scalar for Dual {
    fn value(&self) -> f64 {
        self.v
    }
    fn lift(&self, c: f64) -> Self {
        Dual {
            v: c,
            d: vec![0.0; self.d.len()],
        }
    }
    fn add(&self, o: &Self) -> Self {
        Dual {
            v: self.v + o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Dual {
            v: self.v - o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a - b).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        Dual {
            v: self.v * o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a * o.v + self.v * b).collect(),
        }
    }
    fn div(&self, o: &Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v / o.v;
        Dual {
            v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| (a - v * b) * inv).collect(),
        }
    }
    fn neg(&self) -> Self {
        self.scaled(-self.v, -1.0)
    }
    fn powi(&self, n: i32) -> Self {
        let k = if n == 0 { 0.0 } else { f64::from(n) * self.v.powi(n - 1) };
        self.scaled(self.v.powi(n), k)
    }
    fn sqrt(&self) -> Result<Self> {
        let v = self.v.sqrt();
        if v == 0.0 {
            return Err(Error::DomainViolation("sqrt is not differentiable at 0".into()));
        }
        Ok(self.scaled(v, 0.5 / v))
    }
    fn exp(&self) -> Self {
        let v = self.v.exp();
        self.scaled(v, v)
    }
    fn ln(&self) -> Self {
        self.scaled(self.v.ln(), 1.0 / self.v)
    }
    fn sin(&self) -> Self {
        self.scaled(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.scaled(self.v.cos(), -self.v.sin())
    }
    fn norm(items: &[Self]) -> Result<Self> {
        let v = norm_value(items.iter().map(|s| s.v));
        if v == 0.0 {
            return Err(Error::DomainViolation(
                "norm is not differentiable at the origin".into(),
            ));
        }
        let n = items.first().map_or(0, |s| s.d.len());
        let mut d = vec![0.0; n];
        for it in items {
            for (acc, g) in d.iter_mut().zip(&it.d) {
                *acc += it.v / v * g;
            }
        }
        Ok(Dual { v, d })
    }
}

fn violation(what: &str, v: f64) -> Error {
    Error::DomainViolation(format!("{what} (argument {v:e})"))
}

/// Evaluates one tree; `zero` only provides the carrier shape for constants.
pub(crate) fn eval_node<S: Scalar>(expr: &Expr, env: &[S], zero: &S) -> Result<S> {
    let out = match expr.node() {
        Node::Const(c) => zero.lift(*c),
        Node::Var(i) => env[*i].clone(),
        Node::Neg(a) => eval_node(a, env, zero)?.neg(),
        Node::Add(a, b) => eval_node(a, env, zero)?.add(&eval_node(b, env, zero)?),
        Node::Sub(a, b) => eval_node(a, env, zero)?.sub(&eval_node(b, env, zero)?),
        Node::Mul(a, b) => eval_node(a, env, zero)?.mul(&eval_node(b, env, zero)?),
        Node::Div(a, b) => {
            let num = eval_node(a, env, zero)?;
            let den = eval_node(b, env, zero)?;
            if den.value() == 0.0 {
                return Err(violation("division by zero", 0.0));
            }
            num.div(&den)
        }
        Node::Powi(a, n) => {
            let base = eval_node(a, env, zero)?;
            if *n < 0 && base.value() == 0.0 {
                return Err(violation("negative power of zero", 0.0));
            }
            base.powi(*n)
        }
        Node::Sqrt(a) => {
            let arg = eval_node(a, env, zero)?;
            if arg.value() < 0.0 {
                return Err(violation("sqrt of a negative number", arg.value()));
            }
            arg.sqrt()?
        }
        Node::Log(a) => {
            let arg = eval_node(a, env, zero)?;
            if arg.value() <= 0.0 {
                return Err(violation("log of a nonpositive number", arg.value()));
            }
            arg.ln()
        }
        Node::Exp(a) => eval_node(a, env, zero)?.exp(),
        Node::Sin(a) => eval_node(a, env, zero)?.sin(),
        Node::Cos(a) => eval_node(a, env, zero)?.cos(),
        Node::Norm(items) => {
            let vals = items
                .iter()
                .map(|e| eval_node(e, env, zero))
                .collect::<Result<Vec<_>>>()?;
            S::norm(&vals)?
        }
    };
    if !out.value().is_finite() {
        return Err(violation("non-finite intermediate value", out.value()));
    }
    Ok(out)
}
