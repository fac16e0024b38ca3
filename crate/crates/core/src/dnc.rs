//! Deformation to the normal cone in chart coordinates `(y, xi, t)`.
//!
//! A chart point `(y, xi, t)` with `t != 0` stands for the body point
//! `((y, t xi), t)` of `X x R^x`; with `t = 0` it is the normal vector `xi`
//! over `y`. [`DncMap`] is the induced map `DNC(h)`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Expr, Guard, SmoothMap};
use crate::pairs::{self, check_adapted, MapOfPairs, PairDims};
use crate::sampling::{self, norm};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DncPoint {
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub t: f64,
}

impl DncPoint {
    pub fn new(y: Vec<f64>, xi: Vec<f64>, t: f64) -> Self {
        DncPoint { y, xi, t }
    }

    /// `(y, xi, t)` flattened.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.y.clone();
        v.extend_from_slice(&self.xi);
        v.push(self.t);
        v
    }

    pub fn from_slice(dims: PairDims, v: &[f64]) -> Result<Self> {
        if v.len() != dims.n + 1 {
            return Err(Error::ArityMismatch {
                expected: dims.n + 1,
                found: v.len(),
            });
        }
        Ok(DncPoint {
            y: v[..dims.p].to_vec(),
            xi: v[dims.p..dims.n].to_vec(),
            t: v[dims.n],
        })
    }

    /// The ambient point `(y, t xi)`.
    pub fn ambient(&self) -> Vec<f64> {
        let mut v = self.y.clone();
        v.extend(self.xi.iter().map(|c| self.t * c));
        v
    }
}

/// A real number known to be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonZero(f64);

impl NonZero {
    pub fn new(v: f64) -> Option<Self> {
        (v != 0.0 && v.is_finite()).then_some(NonZero(v))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A point of `N(X,Y) x {0}  ⊔  X x R^x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DncAbstractPoint {
    NormalSlice { y: Vec<f64>, xi: Vec<f64> },
    Body { x: Vec<f64>, t: NonZero },
}

/// Local model `(U, U ∩ R^p)` with `U` given by guards on `R^n`.
#[derive(Debug, Clone)]
pub struct DncChart {
    pub dims: PairDims,
    domain: SmoothMap,
}

impl DncChart {
    pub fn new(dims: PairDims) -> Self {
        DncChart {
            dims,
            domain: SmoothMap::identity(dims.n),
        }
    }

    pub fn with_domain_guard(mut self, guard: Guard) -> Self {
        self.domain = self.domain.with_guard(guard);
        self
    }

    /// Membership in `Ω^U_V`: `(y, t xi) ∈ U`.
    pub fn contains(&self, z: &DncPoint) -> bool {
        z.y.len() == self.dims.p
            && z.xi.len() == self.dims.q()
            && z.t.is_finite()
            && self.domain.in_domain(&z.ambient())
    }

    fn check(&self, z: &DncPoint) -> Result<()> {
        if z.y.len() != self.dims.p || z.xi.len() != self.dims.q() {
            return Err(Error::ArityMismatch {
                expected: self.dims.n,
                found: z.y.len() + z.xi.len(),
            });
        }
        if !self.contains(z) {
            return Err(Error::DomainViolation(format!(
                "(y, t xi) = {:?} is outside the chart domain",
                z.ambient()
            )));
        }
        Ok(())
    }

    pub fn psi(&self, z: &DncPoint) -> Result<DncAbstractPoint> {
        self.check(z)?;
        Ok(match NonZero::new(z.t) {
            None => DncAbstractPoint::NormalSlice {
                y: z.y.clone(),
                xi: z.xi.clone(),
            },
            Some(t) => DncAbstractPoint::Body { x: z.ambient(), t },
        })
    }

    pub fn psi_inv(&self, a: &DncAbstractPoint) -> DncPoint {
        match a {
            DncAbstractPoint::NormalSlice { y, xi } => DncPoint::new(y.clone(), xi.clone(), 0.0),
            DncAbstractPoint::Body { x, t } => {
                let (y, normal) = self.dims.split(x);
                DncPoint::new(y.to_vec(), normal.iter().map(|c| c / t.get()).collect(), t.get())
            }
        }
    }

    /// `λ · (y, xi, t) = (y, xi / λ, λ t)`.
    pub fn rx_action(&self, lambda: NonZero, z: &DncPoint) -> Result<DncPoint> {
        let l = lambda.get();
        let out = DncPoint::new(z.y.clone(), z.xi.iter().map(|c| c / l).collect(), l * z.t);
        self.check(&out)?;
        Ok(out)
    }
}

/// The canonical submersion `DNC(X,Y) -> R`.
pub fn hat_t(z: &DncPoint) -> f64 {
    z.t
}

/// `DNC(h)` for a map of pairs `h = (h1, h2)` with `h2 = 0` on the slice.
#[derive(Debug, Clone)]
pub struct DncMap {
    h: MapOfPairs,
    body: SmoothMap,
}

impl DncMap {
    pub fn new(h: MapOfPairs) -> Result<Self> {
        Self::with_samples(h, pairs::DEFAULT_SLICE_SAMPLES, crate::sampling::DEFAULT_SEED)
    }

    pub fn with_samples(h: MapOfPairs, samples: usize, seed: u64) -> Result<Self> {
        let report = check_adapted(&h, samples, seed)?;
        if !report.adapted {
            return Err(Error::NotAdapted(format!(
                "h2 = {:e} at {:?}",
                report.worst_violation, report.worst_point
            )));
        }
        let body = body_expression(&h)?;
        Ok(DncMap { h, body })
    }

    pub fn source(&self) -> PairDims {
        self.h.source
    }

    pub fn target(&self) -> PairDims {
        self.h.target
    }

    pub fn map_of_pairs(&self) -> &MapOfPairs {
        &self.h
    }

    /// `(y, xi, t) -> (h1(y, t xi), h2(y, t xi) / t, t)`, valid for `t != 0`.
    pub fn body_expr(&self) -> &SmoothMap {
        &self.body
    }

    pub fn eval(&self, z: &DncPoint) -> Result<DncPoint> {
        let (src, tgt) = (self.h.source, self.h.target);
        if z.y.len() != src.p || z.xi.len() != src.q() {
            return Err(Error::ArityMismatch {
                expected: src.n + 1,
                found: z.y.len() + z.xi.len() + 1,
            });
        }
        if z.t != 0.0 {
            let v = self.body.eval(&z.to_vec())?;
            return DncPoint::from_slice(tgt, &v);
        }
        let slice = src.slice_point(&z.y);
        let jet = self.h.f.jet(&slice)?;
        let dn = pairs::normal_block(&jet.jacobian, src, tgt);
        let xi = dn * DVector::from_column_slice(&z.xi);
        Ok(DncPoint::new(
            jet.value[..tgt.p].to_vec(),
            xi.iter().copied().collect(),
            0.0,
        ))
    }
}

fn body_expression(h: &MapOfPairs) -> Result<SmoothMap> {
    let (src, tgt) = (h.source, h.target);
    let t = Expr::var(src.n);
    let args: Vec<Expr> = (0..src.n)
        .map(|i| if i < src.p { Expr::var(i) } else { &t * &Expr::var(i) })
        .collect();
    let pulled = h.f.substitute(src.n + 1, &args)?;
    let mut outs: Vec<Expr> = pulled.outputs().to_vec();
    for o in outs.iter_mut().skip(tgt.p) {
        *o = o.clone() / t.clone();
    }
    outs.push(t.clone());
    let mut body = SmoothMap::new(src.n + 1, outs)?.with_guard(Guard::non_zero(t));
    for g in pulled.guards() {
        body = body.with_guard(g.clone());
    }
    Ok(body)
}

/// The three canonical function classes on `DNC(X,Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionClass {
    /// `f0(y, t xi)` for any `f0`.
    HatF0,
    /// `f1(y, t xi) / t`, extended by `d_N f1(y) xi` at `t = 0`, for `f1 = 0` on the slice.
    DncF1,
    HatT,
}

/// Evaluates a scalar function `f: R^n -> R` lifted to `DNC(X,Y)`.
pub fn eval_function_class(dims: PairDims, kind: FunctionClass, f: &SmoothMap, z: &DncPoint) -> Result<f64> {
    if f.input_dim() != dims.n || f.output_dim() != 1 {
        return Err(Error::ArityMismatch {
            expected: dims.n,
            found: f.input_dim(),
        });
    }
    match kind {
        FunctionClass::HatT => Ok(z.t),
        FunctionClass::HatF0 => Ok(f.eval(&z.ambient())?[0]),
        FunctionClass::DncF1 => {
            let pair = MapOfPairs::new(f.clone(), dims, PairDims { n: 1, p: 0 })?;
            let rep = check_adapted(&pair, pairs::DEFAULT_SLICE_SAMPLES, sampling::DEFAULT_SEED)?;
            if !rep.adapted {
                return Err(Error::NotVanishing(rep.worst_violation));
            }
            if z.t == 0.0 {
                let dn = pairs::normal_derivative(&pair, &z.y)?;
                Ok(dn.row(0).iter().zip(&z.xi).map(|(a, b)| a * b).sum())
            } else {
                Ok(f.eval(&z.ambient())?[0] / z.t)
            }
        }
    }
}

/// Result of fitting `log |h(z_t) - h(z_0)|` against `log |t|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityFit {
    pub ts: Vec<f64>,
    pub diffs: Vec<f64>,
    /// `None` when every difference is at rounding level.
    pub slope: Option<f64>,
}

impl ContinuityFit {
    pub fn passes(&self, min_slope: f64) -> bool {
        self.slope.is_none_or(|s| s >= min_slope)
    }
}

pub const CONTINUITY_TS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Estimates the exponent in `|h~(y, xi, t) - h~(y, xi, 0)| ~ C |t|^a`.
pub fn continuity_fit(h: &DncMap, y: &[f64], xi: &[f64], ts: &[f64]) -> Result<ContinuityFit> {
    let base = h.eval(&DncPoint::new(y.to_vec(), xi.to_vec(), 0.0))?;
    let floor = 1e-13 * (1.0 + norm(&base.to_vec()));
    let mut diffs = Vec::new();
    for &t in ts {
        let v = h.eval(&DncPoint::new(y.to_vec(), xi.to_vec(), t))?;
        let mut d = sampling::max_abs_diff(&v.y, &base.y);
        d = d.max(sampling::max_abs_diff(&v.xi, &base.xi));
        diffs.push(d);
    }
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(&diffs)
        .filter(|(_, &d)| d > floor)
        .map(|(t, d)| (t.abs().ln(), d.ln()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });
    Ok(ContinuityFit {
        ts: ts.to_vec(),
        diffs,
        slope,
    })
}

/// `DNC(R x R, 0) -> DNC(R, 0) x_R DNC(R, 0)` induced by the two projections.
pub fn pair_fiber_product_map(z: &DncPoint) -> Result<(DncPoint, DncPoint)> {
    let (pr1, pr2) = pair_projections()?;
    Ok((pr1.eval(z)?, pr2.eval(z)?))
}

/// Inverse of [`pair_fiber_product_map`] on pairs lying over the same `t`.
pub fn pair_fiber_product_inverse(a: &DncPoint, b: &DncPoint) -> Result<DncPoint> {
    if a.t != b.t {
        return Err(Error::DomainViolation(format!(
            "points lie over different t ({} vs {})",
            a.t, b.t
        )));
    }
    Ok(DncPoint::new(vec![], vec![a.xi[0], b.xi[0]], a.t))
}

fn pair_projections() -> Result<(DncMap, DncMap)> {
    let plane = PairDims { n: 2, p: 0 };
    let line = PairDims { n: 1, p: 0 };
    let pr = |i: usize| -> Result<DncMap> {
        DncMap::with_samples(
            MapOfPairs::new(SmoothMap::new(2, vec![Expr::var(i)])?, plane, line)?,
            1,
            0,
        )
    };
    Ok((pr(0)?, pr(1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{parse_map, VarNames};

    fn map(src: &str, s: PairDims, t: PairDims) -> MapOfPairs {
        let outs = parse_map(src, &VarNames::indexed()).unwrap();
        MapOfPairs::new(SmoothMap::new(s.n, outs).unwrap(), s, t).unwrap()
    }

    const LINE: PairDims = PairDims { n: 2, p: 1 };
    const POINT_IN_R: PairDims = PairDims { n: 1, p: 0 };

    #[test]
    fn psi_examples() {
        let c = DncChart::new(LINE);
        assert_eq!(
            c.psi(&DncPoint::new(vec![1.0], vec![3.0], 0.0)).unwrap(),
            DncAbstractPoint::NormalSlice {
                y: vec![1.0],
                xi: vec![3.0]
            }
        );
        assert_eq!(
            c.psi(&DncPoint::new(vec![1.0], vec![3.0], 2.0)).unwrap(),
            DncAbstractPoint::Body {
                x: vec![1.0, 6.0],
                t: NonZero::new(2.0).unwrap()
            }
        );
        let body = |t: f64| DncAbstractPoint::Body {
            x: vec![1.0, 6.0],
            t: NonZero::new(t).unwrap(),
        };
        assert_eq!(c.psi_inv(&body(2.0)), DncPoint::new(vec![1.0], vec![3.0], 2.0));
        assert_eq!(c.psi_inv(&body(-2.0)), DncPoint::new(vec![1.0], vec![-3.0], -2.0));
        assert_eq!(
            c.psi_inv(&DncAbstractPoint::NormalSlice {
                y: vec![1.0],
                xi: vec![3.0]
            }),
            DncPoint::new(vec![1.0], vec![3.0], 0.0)
        );
    }

    #[test]
    fn psi_respects_domain() {
        let c = DncChart::new(LINE).with_domain_guard(Guard::positive(1.0 - Expr::var(1)));
        assert!(c.psi(&DncPoint::new(vec![0.0], vec![3.0], 0.5)).is_err());
        assert!(c.psi(&DncPoint::new(vec![0.0], vec![3.0], 0.0)).is_ok());
    }

    #[test]
    fn action_examples() {
        let c = DncChart::new(LINE);
        let z = DncPoint::new(vec![1.0], vec![3.0], 0.4);
        assert_eq!(c.rx_action(NonZero::new(1.0).unwrap(), &z).unwrap(), z);
        let w = c.rx_action(NonZero::new(2.0).unwrap(), &z).unwrap();
        assert_eq!(w, DncPoint::new(vec![1.0], vec![1.5], 0.8));
        assert_eq!(hat_t(&w), 2.0 * hat_t(&z));
        assert_eq!(hat_t(&DncPoint::new(vec![1.0], vec![3.0], 0.0)), 0.0);
        assert!(NonZero::new(0.0).is_none());
    }

    #[test]
    fn dnc_map_examples() {
        let id = DncMap::new(MapOfPairs::identity(LINE)).unwrap();
        for t in [0.0, 0.5, -3.0] {
            let z = DncPoint::new(vec![0.2], vec![-1.5], t);
            assert_eq!(id.eval(&z).unwrap(), z);
        }
        let lin = DncMap::new(map("x1, 3*x2", LINE, LINE)).unwrap();
        for t in [0.0, 0.25, -2.0] {
            let out = lin.eval(&DncPoint::new(vec![0.7], vec![2.0], t)).unwrap();
            assert_eq!(out, DncPoint::new(vec![0.7], vec![6.0], t));
        }
        let quad = DncMap::new(map("x1 + x1^2", POINT_IN_R, POINT_IN_R)).unwrap();
        let v = quad.eval(&DncPoint::new(vec![], vec![2.0], 0.5)).unwrap();
        assert_eq!(v.xi, vec![4.0]);
        let v0 = quad.eval(&DncPoint::new(vec![], vec![2.0], 0.0)).unwrap();
        assert_eq!(v0.xi, vec![2.0]);
    }

    #[test]
    fn dnc_map_rejects_non_adapted() {
        let bad = map("x1, x2 + 1", LINE, LINE);
        assert!(matches!(DncMap::new(bad), Err(Error::NotAdapted(_))));
    }

    #[test]
    fn function_classes() {
        let seven = SmoothMap::new(2, vec![Expr::constant(7.0)]).unwrap();
        let z = DncPoint::new(vec![2.0], vec![3.0], 0.5);
        assert_eq!(
            eval_function_class(LINE, FunctionClass::HatF0, &seven, &z).unwrap(),
            7.0
        );
        let yx = SmoothMap::new(2, vec![Expr::var(0) * Expr::var(1)]).unwrap();
        let z0 = DncPoint::new(vec![2.0], vec![3.0], 0.0);
        assert_eq!(eval_function_class(LINE, FunctionClass::DncF1, &yx, &z0).unwrap(), 6.0);
        assert_eq!(eval_function_class(LINE, FunctionClass::DncF1, &yx, &z).unwrap(), 6.0);
        assert_eq!(eval_function_class(LINE, FunctionClass::HatT, &yx, &z).unwrap(), 0.5);
        assert!(matches!(
            eval_function_class(LINE, FunctionClass::DncF1, &seven, &z),
            Err(Error::NotVanishing(_))
        ));
    }

    #[test]
    fn continuity_exponents() {
        let quad = DncMap::new(map("x1 + x1^2", POINT_IN_R, POINT_IN_R)).unwrap();
        let fit = continuity_fit(&quad, &[], &[2.0], &CONTINUITY_TS).unwrap();
        assert!((fit.slope.unwrap() - 1.0).abs() < 1e-3, "{fit:?}");
        let lin = DncMap::new(map("x1, 3*x2", LINE, LINE)).unwrap();
        let fit = continuity_fit(&lin, &[0.3], &[1.0], &CONTINUITY_TS).unwrap();
        assert!(fit.passes(0.99));
    }

    #[test]
    fn fiber_product_round_trip() {
        let z = DncPoint::new(vec![], vec![1.5, -2.0], 0.25);
        let (a, b) = pair_fiber_product_map(&z).unwrap();
        assert_eq!(a.t, b.t);
        assert_eq!(pair_fiber_product_inverse(&a, &b).unwrap(), z);
        let z0 = DncPoint::new(vec![], vec![1.5, -2.0], 0.0);
        let (a, b) = pair_fiber_product_map(&z0).unwrap();
        assert_eq!(pair_fiber_product_inverse(&a, &b).unwrap(), z0);
        let off = DncPoint::new(vec![], vec![1.0], 0.5);
        assert!(pair_fiber_product_inverse(&a, &off).is_err());
    }
}
