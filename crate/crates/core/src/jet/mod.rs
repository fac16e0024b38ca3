//! Forward-mode differentiation over expression trees.
//!
//! A [`SmoothMap`] is a vector of scalar [`Expr`] trees together with explicit
//! domain guards. Evaluation checks the guards and every partial operation
//! (division, `log`, `sqrt`, negative powers) and reports a
//! [`Error::DomainViolation`] instead of producing NaN.

mod eval;
mod expr;
mod parse;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use eval::{eval_node, Dual};

pub use expr::{Expr, Node};
pub use parse::{parse_expr, parse_map, parse_with_names, VarNames};

/// Value and Jacobian of a map at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<f64>,
    /// `m x n`, row `i` is the gradient of output `i`.
    pub jacobian: DMatrix<f64>,
}

impl Jet {
    /// Chain rule: `self` is the jet of `g` at `f(x)`, `inner` the jet of `f` at `x`.
    pub fn after(&self, inner: &Jet) -> Jet {
        Jet {
            value: self.value.clone(),
            jacobian: &self.jacobian * &inner.jacobian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuardKind {
    Positive,
    NonNegative,
    NonZero,
}

/// A scalar condition `expr > 0`, `expr >= 0` or `expr != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    pub expr: Expr,
    pub kind: GuardKind,
}

impl Guard {
    pub fn positive(expr: Expr) -> Self {
        Guard {
            expr,
            kind: GuardKind::Positive,
        }
    }

    pub fn non_negative(expr: Expr) -> Self {
        Guard {
            expr,
            kind: GuardKind::NonNegative,
        }
    }

    pub fn non_zero(expr: Expr) -> Self {
        Guard {
            expr,
            kind: GuardKind::NonZero,
        }
    }

    fn holds(&self, point: &[f64]) -> Result<bool> {
        let v = eval_node(&self.expr, point, &0.0)?;
        Ok(match self.kind {
            GuardKind::Positive => v > 0.0,
            GuardKind::NonNegative => v >= 0.0,
            GuardKind::NonZero => v != 0.0,
        })
    }
}

/// A smooth map `R^n -> R^m` given by expression trees and a domain predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothMap {
    input_dim: usize,
    outputs: Vec<Expr>,
    guards: Vec<Guard>,
}

impl SmoothMap {
    pub fn new(input_dim: usize, outputs: Vec<Expr>) -> Result<Self> {
        for e in &outputs {
            if let Some(i) = e.max_var() {
                if i >= input_dim {
                    return Err(Error::ArityMismatch {
                        expected: input_dim,
                        found: i + 1,
                    });
                }
            }
        }
        Ok(SmoothMap {
            input_dim,
            outputs,
            guards: Vec::new(),
        })
    }

    pub fn identity(n: usize) -> Self {
        SmoothMap {
            input_dim: n,
            outputs: (0..n).map(Expr::var).collect(),
            guards: Vec::new(),
        }
    }

    /// Linear map `x -> A x` for a row-major `m x n` matrix.
    pub fn linear(matrix: &DMatrix<f64>) -> Self {
        let outputs = (0..matrix.nrows())
            .map(|i| {
                (0..matrix.ncols())
                    .filter(|&j| matrix[(i, j)] != 0.0)
                    .map(|j| matrix[(i, j)] * Expr::var(j))
                    .reduce(|a, b| a + b)
                    .unwrap_or_else(|| Expr::constant(0.0))
            })
            .collect();
        SmoothMap {
            input_dim: matrix.ncols(),
            outputs,
            guards: Vec::new(),
        }
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[Expr] {
        &self.outputs
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    pub fn output(&self, i: usize) -> SmoothMap {
        SmoothMap {
            input_dim: self.input_dim,
            outputs: vec![self.outputs[i].clone()],
            guards: self.guards.clone(),
        }
    }

    /// Keeps only the listed output components.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> SmoothMap {
        SmoothMap {
            input_dim: self.input_dim,
            outputs: indices.into_iter().map(|i| self.outputs[i].clone()).collect(),
            guards: self.guards.clone(),
        }
    }

    /// Pulls the map back along `args`: the result is `x -> self(args(x))`
    /// where `args` are expressions over `new_dim` variables.
    pub fn substitute(&self, new_dim: usize, args: &[Expr]) -> Result<SmoothMap> {
        if args.len() != self.input_dim {
            return Err(Error::ArityMismatch {
                expected: self.input_dim,
                found: args.len(),
            });
        }
        let mut out = SmoothMap::new(new_dim, self.outputs.iter().map(|e| e.substitute(args)).collect())?;
        out.guards = self
            .guards
            .iter()
            .map(|g| Guard {
                expr: g.expr.substitute(args),
                kind: g.kind,
            })
            .collect();
        Ok(out)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        let mut out = self.substitute(inner.input_dim, &inner.outputs)?;
        let mut guards = inner.guards.clone();
        guards.append(&mut out.guards);
        out.guards = guards;
        Ok(out)
    }

    /// Stacks the outputs of two maps on the same input space.
    pub fn concat(&self, other: &SmoothMap) -> Result<SmoothMap> {
        if other.input_dim != self.input_dim {
            return Err(Error::ArityMismatch {
                expected: self.input_dim,
                found: other.input_dim,
            });
        }
        let mut out = self.clone();
        out.outputs.extend(other.outputs.iter().cloned());
        out.guards.extend(other.guards.iter().cloned());
        Ok(out)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.input_dim {
            return Err(Error::ArityMismatch {
                expected: self.input_dim,
                found: point.len(),
            });
        }
        if let Some(v) = point.iter().find(|v| !v.is_finite()) {
            return Err(Error::DomainViolation(format!("non-finite coordinate {v}")));
        }
        for (k, g) in self.guards.iter().enumerate() {
            if !g.holds(point)? {
                return Err(Error::DomainViolation(format!(
                    "guard #{k} ({} {:?}) fails",
                    g.expr, g.kind
                )));
            }
        }
        Ok(())
    }

    pub fn in_domain(&self, point: &[f64]) -> bool {
        self.eval(point).is_ok()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_point(point)?;
        self.outputs.iter().map(|e| eval_node(e, point, &0.0)).collect()
    }

    pub fn jet(&self, point: &[f64]) -> Result<Jet> {
        self.check_point(point)?;
        let n = self.input_dim;
        let env: Vec<Dual> = point.iter().enumerate().map(|(i, &v)| Dual::seed(v, i, n)).collect();
        let zero = Dual {
            v: 0.0,
            d: vec![0.0; n],
        };
        let mut value = Vec::with_capacity(self.outputs.len());
        let mut jacobian = DMatrix::zeros(self.outputs.len(), n);
        for (i, e) in self.outputs.iter().enumerate() {
            let d = eval_node(e, &env, &zero)?;
            value.push(d.v);
            for (j, g) in d.d.iter().enumerate() {
                jacobian[(i, j)] = *g;
            }
        }
        Ok(Jet { value, jacobian })
    }

    /// Central-difference Jacobian; every stencil point must be in the domain.
    pub fn finite_diff_jacobian(&self, point: &[f64], step: f64) -> Result<DMatrix<f64>> {
        self.check_point(point)?;
        let mut jac = DMatrix::zeros(self.outputs.len(), self.input_dim);
        let mut probe = point.to_vec();
        for j in 0..self.input_dim {
            probe[j] = point[j] + step;
            let fp = self.eval(&probe)?;
            probe[j] = point[j] - step;
            let fm = self.eval(&probe)?;
            probe[j] = point[j];
            for i in 0..fp.len() {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        Ok(jac)
    }

    /// Default step `1e-6 (1 + |x|)`.
    pub fn default_fd_step(point: &[f64]) -> f64 {
        1e-6 * (1.0 + eval::norm_value(point.iter().copied()))
    }
}

impl std::fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, e) in self.outputs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// `max |a_ij|`.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn cubic() -> SmoothMap {
        // (y, x) -> (y, y x + x^3)
        let y = Expr::var(0);
        let x = Expr::var(1);
        SmoothMap::new(2, vec![y.clone(), &y * &x + x.powi(3)]).unwrap()
    }

    #[test]
    fn identity_eval_and_jet() {
        let id = SmoothMap::identity(2);
        assert_eq!(id.eval(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(id.jet(&[-1.5, 7.0]).unwrap().jacobian, DMatrix::identity(2, 2));
    }

    #[test]
    fn cubic_value_and_jacobian() {
        let f = cubic();
        assert_eq!(f.eval(&[2.0, 1.0]).unwrap(), vec![2.0, 3.0]);
        let j = f.jet(&[2.0, 1.0]).unwrap();
        assert_eq!(j.value, vec![2.0, 3.0]);
        assert_eq!(j.jacobian, dmatrix![1.0, 0.0; 1.0, 5.0]);
        let fd = f.finite_diff_jacobian(&[2.0, 1.0], 1e-5).unwrap();
        assert!(max_abs(&(fd - dmatrix![1.0, 0.0; 1.0, 5.0])) < 1e-8);
    }

    #[test]
    fn norm_value_and_gradient() {
        let f = SmoothMap::new(2, vec![Expr::norm(vec![Expr::var(0), Expr::var(1)])]).unwrap();
        assert_eq!(f.eval(&[3.0, 4.0]).unwrap(), vec![5.0]);
        let fd = f.finite_diff_jacobian(&[3.0, 4.0], 1e-6).unwrap();
        assert!(max_abs(&(fd - dmatrix![0.6, 0.8])) < 1e-8);
        let ad = f.jet(&[3.0, 4.0]).unwrap().jacobian;
        assert!(max_abs(&(ad - dmatrix![0.6, 0.8])) < 1e-15);
    }

    #[test]
    fn linear_fd_matches_ad() {
        let a = dmatrix![1.0, -2.0, 0.5; 3.0, 0.0, 4.0];
        let f = SmoothMap::linear(&a);
        let p = [0.3, -1.2, 2.5];
        let fd = f.finite_diff_jacobian(&p, 1e-3).unwrap();
        assert!(max_abs(&(fd - &a)) < 1e-12);
        assert_eq!(f.jet(&p).unwrap().jacobian, a);
    }

    #[test]
    fn domain_errors_instead_of_nan() {
        let x = Expr::var(0);
        let recip = SmoothMap::new(1, vec![1.0 / x.clone()]).unwrap();
        assert!(matches!(recip.eval(&[0.0]), Err(Error::DomainViolation(_))));
        let log = SmoothMap::new(1, vec![x.ln()]).unwrap();
        assert!(matches!(log.eval(&[-1.0]), Err(Error::DomainViolation(_))));
        let sqrt = SmoothMap::new(1, vec![x.sqrt()]).unwrap();
        assert_eq!(sqrt.eval(&[0.0]).unwrap(), vec![0.0]);
        assert!(matches!(sqrt.jet(&[0.0]), Err(Error::DomainViolation(_))));
        let guarded = SmoothMap::identity(1).with_guard(Guard::positive(1.0 - x));
        assert!(guarded.eval(&[0.5]).is_ok());
        assert!(matches!(guarded.eval(&[1.0]), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(
            SmoothMap::new(1, vec![Expr::var(1)]),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            cubic().eval(&[1.0]),
            Err(Error::ArityMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn fd_stencil_must_stay_in_domain() {
        let x = Expr::var(0);
        let f = SmoothMap::new(1, vec![x.sqrt()]).unwrap();
        assert!(f.finite_diff_jacobian(&[1e-9], 1e-6).is_err());
    }

    #[test]
    fn composition_is_chain_rule() {
        let f = cubic();
        let g = {
            let a = Expr::var(0);
            let b = Expr::var(1);
            SmoothMap::new(2, vec![&a * &b, a.sin() + b.powi(2)]).unwrap()
        };
        let gf = g.compose(&f).unwrap();
        let p = [0.7, -0.4];
        let jf = f.jet(&p).unwrap();
        let jg = g.jet(&jf.value).unwrap();
        let jgf = gf.jet(&p).unwrap();
        let expected = jg.after(&jf);
        assert_eq!(jgf.value, gf.eval(&p).unwrap());
        assert!(max_abs(&(jgf.jacobian - expected.jacobian)) < 1e-14);
    }
}
