//! Exact multivariate polynomials with rational coefficients.

mod roots;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::jet::{Expr, Node};

pub use roots::{approx_real_roots, real_roots, RealRoot, UniPoly};

pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational reading of the shortest decimal form of `v`.
pub fn rational_from_f64(v: f64) -> Result<Rational> {
    if !v.is_finite() {
        return Err(Error::NotPolynomial(format!("non-finite constant {v}")));
    }
    let text = format!("{v}");
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let num: BigInt = format!("{int}{frac}")
        .parse()
        .map_err(|_| Error::NotPolynomial(format!("constant {v}")))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Sparse polynomial in `nvars` variables; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, Rational::one())
    }

    pub fn monomial(nvars: usize, exponents: Vec<u32>, c: Rational) -> Self {
        assert_eq!(exponents.len(), nvars);
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exponents, c);
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        use std::collections::btree_map::Entry;
        assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Rational {
        self.terms.get(exponents).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, v)| (e.clone(), v * c)))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Total degree of a monomial restricted to the variables in `block`.
    fn block_degree(e: &[u32], block: std::ops::Range<usize>) -> u32 {
        e[block].iter().sum()
    }

    /// Minimum over monomials of the total degree in `block`; `None` for zero.
    pub fn min_degree_in(&self, block: std::ops::Range<usize>) -> Option<u32> {
        self.terms.keys().map(|e| Self::block_degree(e, block.clone())).min()
    }

    pub fn max_degree_in(&self, block: std::ops::Range<usize>) -> Option<u32> {
        self.terms.keys().map(|e| Self::block_degree(e, block.clone())).max()
    }

    /// The part of degree exactly `k` in `block`.
    pub fn homogeneous_part(&self, block: std::ops::Range<usize>, k: u32) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(e, _)| Self::block_degree(e, block.clone()) == k)
                .map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    /// Exact division by `var^m`; fails if some monomial has lower degree in `var`.
    pub fn div_var_power(&self, var: usize, m: u32) -> Result<Self> {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] < m {
                return Err(Error::InvariantBreach(format!(
                    "monomial {e:?} is not divisible by variable {var} to power {m}"
                )));
            }
            let mut e = e.clone();
            e[var] -= m;
            out.terms.insert(e, c.clone());
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in point.iter().zip(e) {
                if k > 0 {
                    m *= num_traits::pow(x.clone(), k as usize);
                }
            }
            acc += m;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| point.iter().zip(e).fold(to_f64(c), |m, (x, &k)| m * x.powi(k as i32)))
            .sum()
    }

    /// Substitutes `args[i]` for variable `i`; all args share one variable count.
    pub fn substitute(&self, args: &[MultiPoly]) -> Self {
        assert_eq!(args.len(), self.nvars);
        let nv = args.first().map_or(0, |a| a.nvars);
        let mut out = Self::zero(nv);
        for (e, c) in &self.terms {
            let mut m = Self::constant(nv, c.clone());
            for (a, &k) in args.iter().zip(e) {
                if k > 0 {
                    m = &m * &a.pow(k);
                }
            }
            out = &out + &m;
        }
        out
    }

    /// Coefficients in `var` after fixing every other variable to `point`.
    pub fn univariate_at(&self, var: usize, point: &[Rational]) -> UniPoly {
        let mut coeffs: Vec<Rational> = Vec::new();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if i != var && k > 0 {
                    m *= num_traits::pow(point[i].clone(), k as usize);
                }
            }
            let d = e[var] as usize;
            if coeffs.len() <= d {
                coeffs.resize(d + 1, Rational::zero());
            }
            coeffs[d] += m;
        }
        UniPoly::new(coeffs)
    }

    /// Converts a parsed expression; only `+ - *`, nonnegative integer powers
    /// and division by nonzero constants are accepted.
    pub fn from_expr(expr: &Expr, nvars: usize) -> Result<Self> {
        let rec = |e: &Expr| Self::from_expr(e, nvars);
        Ok(match expr.node() {
            Node::Const(c) => Self::constant(nvars, rational_from_f64(*c)?),
            Node::Var(i) if *i < nvars => Self::var(nvars, *i),
            Node::Var(i) => {
                return Err(Error::ArityMismatch {
                    expected: nvars,
                    found: i + 1,
                })
            }
            Node::Neg(a) => -&rec(a)?,
            Node::Add(a, b) => &rec(a)? + &rec(b)?,
            Node::Sub(a, b) => &rec(a)? - &rec(b)?,
            Node::Mul(a, b) => &rec(a)? * &rec(b)?,
            Node::Powi(a, n) if *n >= 0 => rec(a)?.pow(*n as u32),
            Node::Div(a, b) => {
                let den = rec(b)?;
                match den.as_constant() {
                    Some(c) if !c.is_zero() => rec(a)?.scale(&c.recip()),
                    _ => return Err(Error::NotPolynomial(format!("division by {b}"))),
                }
            }
            _ => return Err(Error::NotPolynomial(format!("{expr}"))),
        })
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next()?;
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a MultiPoly,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest total degree first
        let mut terms: Vec<_> = self.poly.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (k, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| match p {
                    1 => self.names[i].clone(),
                    _ => format!("{}^{p}", self.names[i]),
                })
                .collect();
            let coeff = if mag.is_integer() {
                format!("{}", mag.numer())
            } else {
                format!("({}/{})", mag.numer(), mag.denom())
            };
            if vars.is_empty() {
                write!(f, "{coeff}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{coeff}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, o: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, o: &MultiPoly) -> MultiPoly {
        self + &(-o)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, o: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut acc: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        MultiPoly {
            nvars: self.nvars,
            terms: acc,
        }
    }
}
