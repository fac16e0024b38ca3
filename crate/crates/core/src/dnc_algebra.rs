//! The algebraic deformation to the normal cone on polynomial functions:
//! finite sums `Σ f_k t^{-k}` with `f_k ∈ I_k` for `k ≥ 1`, where `I_k` is
//! spanned by monomials of degree at least `k` in the normal block.
//!
//! Variables are ordered `(y1..yp, x1..xq)`; the slice is `x = 0`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::dnc::{self, DncAbstractPoint, DncChart, DncPoint, FunctionClass, NonZero};
use crate::error::{Error, Result};
use crate::jet::{parse_with_names, Expr, Node, SmoothMap, VarNames};
use crate::pairs::PairDims;
use crate::poly::{rational, rational_from_f64, to_f64, MultiPoly, Rational};
use crate::sampling;

/// Float agreement required between the algebraic and geometric sides.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// Smallest `x`-block degree of a monomial of `f`; `None` for `f = 0`.
pub fn vanishing_order(dims: PairDims, f: &MultiPoly) -> Option<u32> {
    f.min_degree_in(dims.p..dims.n)
}

fn x_block(dims: PairDims) -> std::ops::Range<usize> {
    dims.p..dims.n
}

/// `Σ_k f_k t^{-k}`, keyed by `k`. Zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentElement {
    dims: PairDims,
    coeffs: BTreeMap<i32, MultiPoly>,
}

impl LaurentElement {
    /// Builds an element and checks `f_k ∈ I_k` for every `k ≥ 1`.
    pub fn new(dims: PairDims, coeffs: impl IntoIterator<Item = (i32, MultiPoly)>) -> Result<Self> {
        let raw = Self::unchecked(dims, coeffs)?;
        raw.check_filtration()
            .map_err(|(k, d)| Error::DomainViolation(format!("coefficient of t^{} has normal degree {d} < {k}", -k)))?;
        Ok(raw)
    }

    fn unchecked(dims: PairDims, coeffs: impl IntoIterator<Item = (i32, MultiPoly)>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (k, f) in coeffs {
            if f.nvars() != dims.n {
                return Err(Error::ArityMismatch {
                    expected: dims.n,
                    found: f.nvars(),
                });
            }
            let sum = match out.remove(&k) {
                Some(g) => &g + &f,
                None => f,
            };
            if !sum.is_zero() {
                out.insert(k, sum);
            }
        }
        Ok(LaurentElement { dims, coeffs: out })
    }

    /// First `(k, degree)` with `f_k ∉ I_k`.
    fn check_filtration(&self) -> std::result::Result<(), (i32, u32)> {
        for (&k, f) in self.coeffs.range(1..) {
            let d = f.min_degree_in(x_block(self.dims)).unwrap_or(u32::MAX);
            if (d as i64) < k as i64 {
                return Err((k, d));
            }
        }
        Ok(())
    }

    pub fn satisfies_filtration(&self) -> bool {
        self.check_filtration().is_ok()
    }

    /// `f` placed in degree `k`, i.e. `f t^{-k}`.
    pub fn term(dims: PairDims, f: MultiPoly, k: i32) -> Result<Self> {
        Self::new(dims, [(k, f)])
    }

    pub fn from_poly(dims: PairDims, f: MultiPoly) -> Result<Self> {
        Self::term(dims, f, 0)
    }

    pub fn one(dims: PairDims) -> Self {
        Self::unchecked(dims, [(0, MultiPoly::one(dims.n))]).expect("unit arity")
    }

    pub fn zero(dims: PairDims) -> Self {
        LaurentElement {
            dims,
            coeffs: BTreeMap::new(),
        }
    }

    /// The element `t`.
    pub fn t(dims: PairDims) -> Self {
        Self::unchecked(dims, [(-1, MultiPoly::one(dims.n))]).expect("t arity")
    }

    pub fn dims(&self) -> PairDims {
        self.dims
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `f_k`, zero when absent.
    pub fn coefficient(&self, k: i32) -> MultiPoly {
        self.coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(|| MultiPoly::zero(self.dims.n))
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i32, &MultiPoly)> {
        self.coeffs.iter().map(|(k, f)| (*k, f))
    }

    fn same_ring(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ArityMismatch {
                expected: self.dims.n,
                found: other.dims.n,
            });
        }
        Ok(())
    }

    fn asserted(self, op: &str) -> Result<Self> {
        self.check_filtration()
            .map_err(|(k, d)| Error::InvariantBreach(format!("{op} left degree {d} in I_{k}")))?;
        Ok(self)
    }

    fn add_raw(&self, other: &Self) -> Self {
        let terms = self.coeffs.iter().chain(&other.coeffs).map(|(k, f)| (*k, f.clone()));
        Self::unchecked(self.dims, terms).expect("matching arity")
    }

    fn mul_raw(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (k, f) in &self.coeffs {
            for (l, g) in &other.coeffs {
                terms.push((k + l, f * g));
            }
        }
        Self::unchecked(self.dims, terms).expect("matching arity")
    }

    fn scale_raw(&self, c: &Rational) -> Self {
        Self::unchecked(self.dims, self.coeffs.iter().map(|(k, f)| (*k, f.scale(c)))).expect("matching arity")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_ring(other)?;
        self.add_raw(other).asserted("addition")
    }

    pub fn neg(&self) -> Self {
        self.scale_raw(&-Rational::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// The product; membership `f_k g_l ∈ I_{k+l}` is re-checked.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_ring(other)?;
        self.mul_raw(other).asserted("multiplication")
    }

    /// The polynomial `Σ f_k s^{-k}` obtained by substituting `t := s`.
    pub fn at_t(&self, s: &Rational) -> Result<MultiPoly> {
        if s.is_zero() {
            return Err(Error::DomainViolation("t := 0 is not a body point".into()));
        }
        let mut acc = MultiPoly::zero(self.dims.n);
        for (k, f) in &self.coeffs {
            acc = &acc + &f.scale(&pow_i(s, -k));
        }
        Ok(acc)
    }

    pub fn variable_names(&self) -> Vec<String> {
        variable_names(self.dims)
    }
}

fn pow_i(s: &Rational, e: i32) -> Rational {
    let base = num_traits::pow(s.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        base.recip()
    } else {
        base
    }
}

pub fn variable_names(dims: PairDims) -> Vec<String> {
    (0..dims.p)
        .map(|i| format!("y{}", i + 1))
        .chain((0..dims.q()).map(|j| format!("x{}", j + 1)))
        .collect()
}

impl fmt::Display for LaurentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let names = self.variable_names();
        for (n, (k, c)) in self.coeffs.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{}", c.display_with(&names))?,
                -1 => write!(f, "({})*t", c.display_with(&names))?,
                _ => write!(f, "({})*t^{}", c.display_with(&names), -k)?,
            }
        }
        Ok(())
    }
}

/// `χ_{(x, s)}(Σ f_k t^{-k}) = Σ f_k(x) s^{-k}` for `s ≠ 0`.
pub fn char_xs(a: &LaurentElement, x: &[Rational], s: &Rational) -> Result<Rational> {
    check_point(a.dims.n, x.len())?;
    if s.is_zero() {
        return Err(Error::DomainViolation("the body characters need s ≠ 0".into()));
    }
    Ok(a.coeffs
        .iter()
        .fold(Rational::zero(), |acc, (k, f)| acc + f.eval(x) * pow_i(s, -k)))
}

/// `χ_{(y, ξ)}(Σ f_k t^{-k})`: the sum over `k ≥ 0` of the normal-degree-`k`
/// part of `f_k` evaluated at `(y, ξ)`. Positive powers of `t` vanish.
pub fn char_yxi(a: &LaurentElement, y: &[Rational], xi: &[Rational]) -> Result<Rational> {
    let dims = a.dims;
    check_point(dims.p, y.len())?;
    check_point(dims.q(), xi.len())?;
    let point: Vec<Rational> = y.iter().chain(xi).cloned().collect();
    Ok(a.coeffs.range(0..).fold(Rational::zero(), |acc, (k, f)| {
        acc + f.homogeneous_part(x_block(dims), *k as u32).eval(&point)
    }))
}

fn check_point(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ArityMismatch { expected, found });
    }
    Ok(())
}

fn element_names(dims: PairDims) -> VarNames {
    let mut names = VarNames::default();
    for (i, name) in variable_names(dims).iter().enumerate() {
        names = names.with_alias(name, i);
    }
    names.with_alias("t", dims.n)
}

/// Reads an element such as `3 + x1*x2*t^-2 + y1*t` over `y1..yp, x1..xq, t`.
/// Division is allowed by nonzero constants and powers of `t`.
pub fn parse_element(dims: PairDims, src: &str) -> Result<LaurentElement> {
    let expr = parse_with_names(src, &element_names(dims))?;
    let raw = from_expr(dims, &expr)?;
    raw.check_filtration().map_err(|(k, d)| {
        Error::DomainViolation(format!(
            "coefficient of t^{} in {src:?} has normal degree {d} < {k}",
            -k
        ))
    })?;
    Ok(raw)
}

/// `c t^{-k}` when the element is a single such term.
fn as_t_monomial(a: &LaurentElement) -> Option<(i32, Rational)> {
    let mut it = a.coeffs.iter();
    let (k, f) = it.next()?;
    if it.next().is_some() {
        return None;
    }
    f.as_constant().filter(|c| !c.is_zero()).map(|c| (*k, c))
}

fn from_expr(dims: PairDims, expr: &Expr) -> Result<LaurentElement> {
    let rec = |e: &Expr| from_expr(dims, e);
    let n = dims.n;
    let not_laurent = || Error::NotPolynomial(format!("{expr}"));
    Ok(match expr.node() {
        Node::Const(c) => LaurentElement::unchecked(dims, [(0, MultiPoly::constant(n, rational_from_f64(*c)?))])?,
        Node::Var(i) if *i == n => LaurentElement::t(dims),
        Node::Var(i) => LaurentElement::unchecked(dims, [(0, MultiPoly::var(n, *i))])?,
        Node::Neg(a) => rec(a)?.neg(),
        Node::Add(a, b) => rec(a)?.add_raw(&rec(b)?),
        Node::Sub(a, b) => rec(a)?.add_raw(&rec(b)?.neg()),
        Node::Mul(a, b) => rec(a)?.mul_raw(&rec(b)?),
        Node::Powi(a, e) => {
            let base = rec(a)?;
            if *e >= 0 {
                (0..*e).fold(LaurentElement::one(dims), |acc, _| acc.mul_raw(&base))
            } else {
                let (k, c) = as_t_monomial(&base).ok_or_else(not_laurent)?;
                LaurentElement::unchecked(dims, [(k * e, MultiPoly::constant(n, pow_i(&c, *e)))])?
            }
        }
        Node::Div(a, b) => {
            let (k, c) = as_t_monomial(&rec(b)?).ok_or_else(not_laurent)?;
            let inv = LaurentElement::unchecked(dims, [(-k, MultiPoly::constant(n, c.recip()))])?;
            rec(a)?.mul_raw(&inv)
        }
        _ => return Err(not_laurent()),
    })
}

/// `f` as an expression tree with floating-point coefficients.
pub fn poly_to_expr(f: &MultiPoly) -> Expr {
    f.terms()
        .map(|(e, c)| {
            e.iter()
                .enumerate()
                .filter(|(_, p)| **p > 0)
                .fold(Expr::constant(to_f64(c)), |acc, (i, p)| {
                    if *p == 1 {
                        acc * Expr::var(i)
                    } else {
                        acc * Expr::var(i).powi(*p as i32)
                    }
                })
        })
        .reduce(|a, b| a + b)
        .unwrap_or_else(|| Expr::constant(0.0))
}

/// A rational point `x` of `R^n` and a nonzero rational `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyPoint {
    pub x: Vec<Rational>,
    pub s: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub points: usize,
    /// `|χ_{(x,s)}(f t^{-1}) - f(x)/s|` against the geometric lift.
    pub body_residual: f64,
    /// `|χ_{(y,ξ)}(f t^{-1}) - d_N f(y) ξ|` with `(y, ξ)` read off `x`.
    pub slice_residual: f64,
}

impl ConsistencyReport {
    pub fn passes(&self) -> bool {
        self.body_residual <= CONSISTENCY_TOL && self.slice_residual <= CONSISTENCY_TOL
    }
}

/// Compares the characters on `f t^{-1}` with the geometric function
/// `DNC(f)` at `Ψ^{-1}(x, s)` and at `(y, ξ, 0)`.
pub fn geometric_consistency(dims: PairDims, f: &MultiPoly, points: &[ConsistencyPoint]) -> Result<ConsistencyReport> {
    if let Some(0) = vanishing_order(dims, f) {
        let worst = f
            .homogeneous_part(x_block(dims), 0)
            .terms()
            .map(|(_, c)| to_f64(c).abs())
            .fold(0.0, f64::max);
        return Err(Error::NotVanishing(worst));
    }
    let a = LaurentElement::term(dims, f.clone(), 1)?;
    let geo = SmoothMap::new(dims.n, vec![poly_to_expr(f)])?;
    let chart = DncChart::new(dims);
    let mut r = ConsistencyReport {
        points: points.len(),
        body_residual: 0.0,
        slice_residual: 0.0,
    };
    for pt in points {
        let xf: Vec<f64> = pt.x.iter().map(to_f64).collect();
        let sf = NonZero::new(to_f64(&pt.s)).ok_or_else(|| Error::DomainViolation("s must be nonzero".into()))?;
        let z = chart.psi_inv(&DncAbstractPoint::Body { x: xf.clone(), t: sf });
        let g = dnc::eval_function_class(dims, FunctionClass::DncF1, &geo, &z)?;
        let alg = to_f64(&char_xs(&a, &pt.x, &pt.s)?);
        r.body_residual = r.body_residual.max((g - alg).abs() / (1.0 + g.abs()));

        let (y, xi) = pt.x.split_at(dims.p);
        let z0 = DncPoint::new(xf[..dims.p].to_vec(), xf[dims.p..].to_vec(), 0.0);
        let g0 = dnc::eval_function_class(dims, FunctionClass::DncF1, &geo, &z0)?;
        let alg0 = to_f64(&char_yxi(&a, y, xi)?);
        r.slice_residual = r.slice_residual.max((g0 - alg0).abs() / (1.0 + g0.abs()));
    }
    Ok(r)
}

fn random_rational(rng: &mut sampling::SampleRng, den: i64) -> Rational {
    rational(rng.gen_range(-3 * den..=3 * den), den)
}

/// Random rational points with small denominators and `s ≠ 0`.
pub fn sample_consistency_points(dims: PairDims, count: usize, seed: u64) -> Vec<ConsistencyPoint> {
    let mut rng = sampling::rng(seed);
    (0..count)
        .map(|_| {
            let x = (0..dims.n).map(|_| random_rational(&mut rng, 4)).collect();
            let mut s = random_rational(&mut rng, 8);
            if s.is_zero() {
                s = rational(1, 8);
            }
            ConsistencyPoint { x, s }
        })
        .collect()
}

/// A random element of the ring: a few terms `c m t^{-k}` with `m` a monomial
/// of normal degree at least `k`.
pub fn random_element(dims: PairDims, rng: &mut sampling::SampleRng) -> LaurentElement {
    let terms: Vec<(i32, MultiPoly)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let k: i32 = rng.gen_range(-2..=3);
            let mut exps = vec![0u32; dims.n];
            for e in exps.iter_mut().take(dims.p) {
                *e = rng.gen_range(0..=2);
            }
            if dims.q() > 0 {
                let need = k.max(0) as u32 + rng.gen_range(0..=1);
                for _ in 0..need {
                    exps[dims.p + rng.gen_range(0..dims.q())] += 1;
                }
            }
            let c = rational(rng.gen_range(-5..=5), rng.gen_range(1..=3));
            let k = if dims.q() == 0 { k.min(0) } else { k };
            (k, MultiPoly::monomial(dims.n, exps, c))
        })
        .collect();
    LaurentElement::new(dims, terms).expect("random terms respect the filtration")
}

#[cfg(test)]
mod tests {
    use super::*;

    const P0Q2: PairDims = PairDims { n: 2, p: 0 };
    const P1Q1: PairDims = PairDims { n: 2, p: 1 };
    const P1Q2: PairDims = PairDims { n: 3, p: 1 };

    fn el(dims: PairDims, src: &str) -> LaurentElement {
        parse_element(dims, src).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d)
    }

    #[test]
    fn orders() {
        let names = P0Q2;
        let f = el(names, "x1*x2").coefficient(0);
        assert_eq!(vanishing_order(P0Q2, &f), Some(2));
        assert_eq!(vanishing_order(P0Q2, &MultiPoly::one(2)), Some(0));
        let g = el(P1Q1, "y1*x1 + x1^3").coefficient(0);
        assert_eq!(vanishing_order(P1Q1, &g), Some(1));
        assert_eq!(vanishing_order(P1Q1, &MultiPoly::zero(2)), None);
    }

    #[test]
    fn products() {
        let a = el(P0Q2, "x1*t^-1");
        let b = el(P0Q2, "x2/t");
        assert_eq!(a.mul(&b).unwrap(), el(P0Q2, "x1*x2*t^-2"));
        assert_eq!(a.mul(&LaurentElement::one(P0Q2)).unwrap(), a);
        let t = LaurentElement::t(P0Q2);
        assert_eq!(t.mul(&a).unwrap(), el(P0Q2, "x1"));
        assert_eq!(el(P0Q2, "t*t^-1*x1"), el(P0Q2, "x1"));
        assert_eq!(format!("{}", el(P0Q2, "3 + x1*x2*t^-2")), "(x1*x2)*t^-2 + 3");
    }

    #[test]
    fn filtration_is_enforced() {
        assert!(matches!(parse_element(P0Q2, "t^-1"), Err(Error::DomainViolation(_))));
        assert!(parse_element(P1Q1, "y1*t^-1").is_err());
        assert!(parse_element(P1Q1, "y1*x1*t^-1 + y1*t^3").is_ok());
        assert!(matches!(parse_element(P0Q2, "x1/x2"), Err(Error::NotPolynomial(_))));
        assert!(parse_element(P0Q2, "sin(x1)").is_err());
    }

    #[test]
    fn character_values() {
        let a = el(P0Q2, "3 + x1*x2*t^-2");
        assert_eq!(char_xs(&a, &[q(2, 1), q(3, 1)], &q(1, 1)).unwrap(), q(9, 1));
        assert_eq!(char_yxi(&a, &[], &[q(1, 1), q(4, 1)]).unwrap(), q(7, 1));
        let t = LaurentElement::t(P0Q2);
        assert_eq!(char_xs(&t, &[q(5, 1), q(-1, 2)], &q(3, 7)).unwrap(), q(3, 7));
        assert_eq!(char_yxi(&t, &[], &[q(5, 1), q(1, 1)]).unwrap(), q(0, 1));
        let y = el(P1Q1, "y1");
        assert_eq!(char_yxi(&y, &[q(2, 3)], &[q(9, 1)]).unwrap(), q(2, 3));
        assert!(char_xs(&t, &[q(1, 1), q(1, 1)], &q(0, 1)).is_err());
    }

    #[test]
    fn characters_are_homomorphisms() {
        let mut rng = sampling::rng(10);
        for dims in [P0Q2, P1Q1, P1Q2] {
            let pts = sample_consistency_points(dims, 1, 3);
            let (x, s) = (&pts[0].x, &pts[0].s);
            let (y, xi) = x.split_at(dims.p);
            let one = LaurentElement::one(dims);
            assert!(char_xs(&one, x, s).unwrap().is_one());
            assert!(char_yxi(&one, y, xi).unwrap().is_one());
            for _ in 0..300 {
                let a = random_element(dims, &mut rng);
                let b = random_element(dims, &mut rng);
                let (sum, prod) = (a.add(&b).unwrap(), a.mul(&b).unwrap());
                let cx = |e: &LaurentElement| char_xs(e, x, s).unwrap();
                let cy = |e: &LaurentElement| char_yxi(e, y, xi).unwrap();
                assert_eq!(cx(&sum), cx(&a) + cx(&b));
                assert_eq!(cx(&prod), cx(&a) * cx(&b));
                assert_eq!(cy(&sum), cy(&a) + cy(&b));
                assert_eq!(cy(&prod), cy(&a) * cy(&b));
                assert_eq!(cx(&a), a.at_t(s).unwrap().eval(x));
            }
        }
    }

    #[test]
    fn grading() {
        let a = el(P1Q2, "(y1*x1*x2 + x1^3 + y1^2*x2^2)*t^-2");
        let (y, xi) = ([q(1, 2)], [q(2, 1), q(-3, 5)]);
        let l = q(-7, 3);
        let scaled: Vec<Rational> = xi.iter().map(|c| c * &l).collect();
        let base = char_yxi(&a, &y, &xi).unwrap();
        assert_eq!(char_yxi(&a, &y, &scaled).unwrap(), base * &l * &l);
    }

    #[test]
    fn geometric_side() {
        let f = el(P1Q1, "y1*x1").coefficient(0);
        let pt = ConsistencyPoint {
            x: vec![q(2, 1), q(3, 2)],
            s: q(1, 2),
        };
        let a = LaurentElement::term(P1Q1, f.clone(), 1).unwrap();
        assert_eq!(char_xs(&a, &pt.x, &pt.s).unwrap(), q(6, 1));
        let r = geometric_consistency(P1Q1, &f, &[pt]).unwrap();
        assert!(r.passes(), "{r:?}");
        for src in ["x1", "y1*x1 + x1^2 - 3*x1", "x1^2*y1"] {
            let f = el(P1Q1, src).coefficient(0);
            let r = geometric_consistency(P1Q1, &f, &sample_consistency_points(P1Q1, 8, 5)).unwrap();
            assert!(r.passes(), "{src}: {r:?}");
        }
        let g = el(P1Q1, "x1^2").coefficient(0);
        let a = LaurentElement::term(P1Q1, g, 1).unwrap();
        assert!(char_yxi(&a, &[q(1, 1)], &[q(5, 1)]).unwrap().is_zero());
        let c = el(P1Q1, "1 + x1").coefficient(0);
        assert!(matches!(
            geometric_consistency(P1Q1, &c, &[]),
            Err(Error::NotVanishing(_))
        ));
    }
}
