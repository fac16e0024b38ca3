//! Real roots of univariate rational polynomials with multiplicities.
//!
//! Squarefree factors come from Yun's algorithm; rational roots are found
//! exactly by the rational-root test and the rest are isolated with Sturm
//! sequences and bisected to double precision.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{to_f64, Rational};

/// Dense univariate polynomial, coefficients from degree 0 upward, trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly(Vec<Rational>);

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly(coeffs)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn lead(&self) -> &Rational {
        self.0.last().expect("nonzero polynomial")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    fn monic(&self) -> UniPoly {
        let l = self.lead().clone();
        UniPoly(self.0.iter().map(|c| c / &l).collect())
    }

    /// Quotient and remainder of Euclidean division.
    pub fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut rem = self.0.clone();
        let n = self.0.len();
        if n <= dd {
            return (UniPoly(vec![]), self.clone());
        }
        let mut quot = vec![Rational::zero(); n - dd];
        let lead = d.lead();
        for k in (0..n - dd).rev() {
            let c = &rem[k + dd] / lead;
            if !c.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    fn sub(&self, o: &UniPoly) -> UniPoly {
        let n = self.0.len().max(o.0.len());
        UniPoly::new(
            (0..n)
                .map(|k| {
                    let a = self.0.get(k).cloned().unwrap_or_else(Rational::zero);
                    let b = o.0.get(k).cloned().unwrap_or_else(Rational::zero);
                    a - b
                })
                .collect(),
        )
    }

    pub fn gcd(&self, o: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Yun's squarefree decomposition: `(factor, multiplicity)` pairs with
    /// nonconstant squarefree factors.
    pub fn squarefree(&self) -> Vec<(UniPoly, u32)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b = f.div_rem(&a0).0;
        let mut c = df.div_rem(&a0).0;
        let mut d = c.sub(&b.derivative());
        let mut k = 1;
        while b.degree().unwrap_or(0) > 0 {
            let a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), k));
            }
            b = b.div_rem(&a).0;
            c = d.div_rem(&a).0;
            d = c.sub(&b.derivative());
            k += 1;
        }
        out
    }

    fn sign_at(&self, x: &Rational) -> i8 {
        let v = self.eval(x);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }

    /// Cauchy bound on the absolute value of every root.
    fn root_bound(&self) -> Rational {
        let lead = self.lead().abs();
        let m = self.0[..self.0.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .fold(Rational::zero(), |a, b| if b > a { b } else { a });
        m + Rational::one()
    }
}

/// A real root; `exact` is set when the root is rational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealRoot {
    pub value: f64,
    #[serde(skip)]
    pub exact: Option<Rational>,
    pub multiplicity: u32,
}

/// All distinct real roots of `p`, ascending. The zero polynomial has none
/// reported (callers treat it separately).
pub fn real_roots(p: &UniPoly) -> Vec<RealRoot> {
    let mut out = Vec::new();
    for (factor, mult) in p.squarefree() {
        let mut rest = factor;
        for r in rational_roots(&rest) {
            out.push(RealRoot {
                value: to_f64(&r),
                exact: Some(r.clone()),
                multiplicity: mult,
            });
            rest = rest.div_rem(&UniPoly(vec![-r, Rational::one()])).0;
        }
        if rest.degree().unwrap_or(0) > 0 {
            for v in irrational_roots(&rest) {
                out.push(RealRoot {
                    value: v,
                    exact: None,
                    multiplicity: mult,
                });
            }
        }
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    out
}

/// Integer-coefficient primitive form of `p`.
fn integer_coeffs(p: &UniPoly) -> Vec<BigInt> {
    let lcm = p.0.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    p.0.iter()
        .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
        .collect()
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs();
    // exhaustive search is only attempted for moderate coefficients
    if n > BigInt::from(100_000_000i64) {
        return None;
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            small.push(d.clone());
            let q = &n / &d;
            if q != d {
                large.push(q);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    Some(small)
}

fn rational_roots(p: &UniPoly) -> Vec<Rational> {
    let mut roots = Vec::new();
    let mut q = p.clone();
    while q.0.first().is_some_and(Zero::is_zero) {
        roots.push(Rational::zero());
        q = UniPoly::new(q.0[1..].to_vec());
    }
    if q.degree().unwrap_or(0) == 0 {
        return roots;
    }
    let ints = integer_coeffs(&q);
    let (Some(num), Some(den)) = (divisors(&ints[0]), divisors(ints.last().unwrap())) else {
        return roots;
    };
    for a in &num {
        for b in &den {
            for sign in [1, -1] {
                let cand = Rational::new(a * BigInt::from(sign), b.clone());
                if !roots.contains(&cand) && q.eval(&cand).is_zero() {
                    roots.push(cand);
                }
            }
        }
    }
    roots
}

fn sturm_chain(p: &UniPoly) -> Vec<UniPoly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        let r = chain[n - 2].div_rem(&chain[n - 1]).1;
        if r.is_zero() {
            break;
        }
        chain.push(UniPoly(r.0.iter().map(|c| -c).collect()));
    }
    chain
}

fn sign_changes(chain: &[UniPoly], x: &Rational) -> usize {
    let signs: Vec<i8> = chain.iter().map(|p| p.sign_at(x)).filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Roots of a squarefree polynomial without rational roots.
fn irrational_roots(p: &UniPoly) -> Vec<f64> {
    let chain = sturm_chain(p);
    let bound = p.root_bound();
    let mut stack = vec![(-bound.clone(), bound)];
    let mut out = Vec::new();
    let two = Rational::from_integer(BigInt::from(2));
    while let Some((a, b)) = stack.pop() {
        let count = sign_changes(&chain, &a) - sign_changes(&chain, &b);
        match count {
            0 => {}
            1 => out.push(bisect(p, a, b)),
            _ => {
                let m = (&a + &b) / &two;
                stack.push((a, m.clone()));
                stack.push((m, b));
            }
        }
    }
    out
}

/// Refines an isolating interval in double precision; the endpoint signs are
/// taken from exact evaluation.
fn bisect(p: &UniPoly, a: Rational, b: Rational) -> f64 {
    let coeffs: Vec<f64> = p.0.iter().map(to_f64).collect();
    let eval = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let sa = p.sign_at(&a);
    let (mut lo, mut hi) = (to_f64(&a), to_f64(&b));
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = eval(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (sa > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Real roots of `sum c_k s^k` in floating point: eigenvalues of the
/// companion matrix with small imaginary part, polished by Newton steps.
pub fn approx_real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|v| *v == 0.0) {
        c.pop();
    }
    let Some(deg) = c.len().checked_sub(1).filter(|d| *d > 0) else {
        return Vec::new();
    };
    let lead = c[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for k in 0..deg {
        companion[(0, k)] = -c[deg - 1 - k] / lead;
        if k + 1 < deg {
            companion[(k + 1, k)] = 1.0;
        }
    }
    let eval = |x: f64| c.iter().rev().fold((0.0, 0.0), |(v, d), ck| (v * x + ck, d * x + v));
    let mut out: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..4 {
                let (v, d) = eval(x);
                if d == 0.0 || v == 0.0 {
                    break;
                }
                x -= v / d;
            }
            x
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;

    fn poly(c: &[i64]) -> UniPoly {
        UniPoly::new(c.iter().map(|&v| rational(v, 1)).collect())
    }

    #[test]
    fn rational_roots_with_multiplicity() {
        // s^2 - 1
        let r = real_roots(&poly(&[-1, 0, 1]));
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].exact, Some(rational(-1, 1)));
        assert_eq!(r[1].exact, Some(rational(1, 1)));
        // s^2
        let r = real_roots(&poly(&[0, 0, 1]));
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].value, r[0].multiplicity), (0.0, 2));
        // (2s - 1)^3 (s + 3)
        let p = &poly(&[-1, 2]);
        let cube = UniPoly::new(vec![rational(-1, 1), rational(6, 1), rational(-12, 1), rational(8, 1)]);
        assert_eq!(cube.gcd(&p.clone()), p.monic());
        let mut prod = vec![Rational::zero(); 5];
        for (i, a) in cube.0.iter().enumerate() {
            for (j, b) in poly(&[3, 1]).0.iter().enumerate() {
                prod[i + j] += a * b;
            }
        }
        let r = real_roots(&UniPoly::new(prod));
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].exact.clone(), r[0].multiplicity), (Some(rational(-3, 1)), 1));
        assert_eq!((r[1].exact.clone(), r[1].multiplicity), (Some(rational(1, 2)), 3));
    }

    #[test]
    fn irrational_roots_are_isolated() {
        // s^2 - 2 and s^3 - 2
        let r = real_roots(&poly(&[-2, 0, 1]));
        assert_eq!(r.len(), 2);
        assert!((r[1].value - 2f64.sqrt()).abs() < 1e-15);
        assert!(r.iter().all(|x| x.exact.is_none()));
        let r = real_roots(&poly(&[-2, 0, 0, 1]));
        assert_eq!(r.len(), 1);
        assert!((r[0].value - 2f64.cbrt()).abs() < 1e-15);
        assert!(real_roots(&poly(&[1, 0, 1])).is_empty());
    }

    #[test]
    fn floating_roots() {
        let r = approx_real_roots(&[-2.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(approx_real_roots(&[1.0, 0.0, 1.0]), Vec::<f64>::new());
        assert_eq!(approx_real_roots(&[3.0, 0.0]), Vec::<f64>::new());
        let r = approx_real_roots(&[0.0, -1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn constants_have_no_roots() {
        assert!(real_roots(&poly(&[5])).is_empty());
        assert!(real_roots(&poly(&[])).is_empty());
    }
}
