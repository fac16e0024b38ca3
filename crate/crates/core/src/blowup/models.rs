//! The algebraic model `{x_i l_j = l_i x_j} ⊂ R^n x RP^{q-1}` and the polar
//! model `(R^p x S^{q-1} x R) / Z_2`.

use nalgebra::DVector;
use serde::Serialize;

use super::{canonical_direction, check_len, BlowupPoint};
use crate::error::{Error, Result};
use crate::pairs::{self, MapOfPairs, PairDims};
use crate::sampling::{self, norm, numeric_rank};

/// Tolerance on the incidence relation `x_i l_j = l_i x_j`.
pub const INCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraicPoint {
    pub x: Vec<f64>,
    /// Canonical homogeneous coordinates of the normal line.
    pub line: Vec<f64>,
}

impl AlgebraicPoint {
    /// Largest `|x_i l_j - l_i x_j|` over the normal block.
    pub fn incidence_residual(&self, dims: PairDims) -> f64 {
        let n = dims.split(&self.x).1;
        let mut worst = 0.0f64;
        for i in 0..n.len() {
            for j in 0..n.len() {
                worst = worst.max((n[i] * self.line[j] - self.line[i] * n[j]).abs());
            }
        }
        worst
    }
}

pub fn to_algebraic(dims: PairDims, z: &BlowupPoint) -> Result<AlgebraicPoint> {
    z.check(dims)?;
    Ok(match z {
        BlowupPoint::Body { x } => AlgebraicPoint {
            x: x.clone(),
            line: canonical_direction(dims.split(x).1).ok_or(Error::CenterPoint)?,
        },
        BlowupPoint::Exceptional { y, dir } => AlgebraicPoint {
            x: dims.slice_point(y),
            line: dir.clone(),
        },
    })
}

pub fn from_algebraic(dims: PairDims, a: &AlgebraicPoint) -> Result<BlowupPoint> {
    check_len(dims.n, a.x.len())?;
    check_len(dims.q(), a.line.len())?;
    let residual = a.incidence_residual(dims);
    if residual > INCIDENCE_TOL * (1.0 + norm(&a.x)) * (1.0 + norm(&a.line)) {
        return Err(Error::DomainViolation(format!(
            "incidence relation fails by {residual:e}"
        )));
    }
    let (y, n) = dims.split(&a.x);
    if n.iter().all(|c| *c == 0.0) {
        BlowupPoint::exceptional(y.to_vec(), &a.line)
    } else {
        BlowupPoint::body(dims, a.x.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarPoint {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub t: f64,
}

impl PolarPoint {
    /// Canonical `Z_2` representative of `[x, θ, t]` with `θ` normalized.
    pub fn new(x: Vec<f64>, theta: &[f64], t: f64) -> Result<Self> {
        let n = norm(theta);
        if n == 0.0 {
            return Err(Error::CenterPoint);
        }
        let unit: Vec<f64> = theta.iter().map(|c| c / n).collect();
        let canon = canonical_direction(&unit).ok_or(Error::CenterPoint)?;
        let flipped = canon.iter().zip(&unit).any(|(a, b)| a * b < 0.0);
        Ok(PolarPoint {
            x,
            theta: canon,
            t: if flipped { -t } else { t },
        })
    }
}

pub fn to_polar(dims: PairDims, z: &BlowupPoint) -> Result<PolarPoint> {
    z.check(dims)?;
    match z {
        BlowupPoint::Body { x } => {
            let (y, n) = dims.split(x);
            PolarPoint::new(y.to_vec(), n, norm(n))
        }
        BlowupPoint::Exceptional { y, dir } => PolarPoint::new(y.clone(), dir, 0.0),
    }
}

pub fn from_polar(dims: PairDims, z: &PolarPoint) -> Result<BlowupPoint> {
    check_len(dims.p, z.x.len())?;
    check_len(dims.q(), z.theta.len())?;
    if z.t == 0.0 {
        BlowupPoint::exceptional(z.x.clone(), &z.theta)
    } else {
        let n: Vec<f64> = z.theta.iter().map(|c| z.t * c).collect();
        BlowupPoint::body(dims, dims.join(&z.x, &n))
    }
}

/// The induced map `h~` on polar models, defined for maps whose normal
/// derivative is injective on the slice.
#[derive(Debug, Clone)]
pub struct PolarMap {
    h: MapOfPairs,
}

impl PolarMap {
    pub fn new(h: MapOfPairs, samples: usize, seed: u64) -> Result<Self> {
        let rep = pairs::check_adapted(&h, samples, seed)?;
        if !rep.adapted {
            return Err(Error::NotAdapted(format!("h2 = {:e}", rep.worst_violation)));
        }
        let mut rng = sampling::rng(seed ^ 0x5eed);
        for k in 0..samples.max(1) {
            let y = if k == 0 {
                vec![0.0; h.source.p]
            } else {
                sampling::point_in_box(&mut rng, h.source.p, pairs::SAMPLE_RADIUS)
            };
            let dn = pairs::normal_derivative(&h, &y)?;
            if numeric_rank(&dn, pairs::RANK_REL_TOL) < h.source.q() {
                return Err(Error::NotImmersive(format!("at y = {y:?}")));
            }
        }
        Ok(PolarMap { h })
    }

    pub fn eval(&self, z: &PolarPoint) -> Result<PolarPoint> {
        let (src, tgt) = (self.h.source, self.h.target);
        check_len(src.p, z.x.len())?;
        check_len(src.q(), z.theta.len())?;
        if z.t == 0.0 {
            let slice = src.slice_point(&z.x);
            let jet = self.h.f.jet(&slice)?;
            let dn = pairs::normal_block(&jet.jacobian, src, tgt);
            let v = dn * DVector::from_column_slice(&z.theta);
            if v.norm() == 0.0 {
                return Err(Error::NotImmersive(format!("at {:?}", z.x)));
            }
            return PolarPoint::new(jet.value[..tgt.p].to_vec(), v.as_slice(), 0.0);
        }
        let n: Vec<f64> = z.theta.iter().map(|c| z.t * c).collect();
        let value = self.h.f.eval(&src.join(&z.x, &n))?;
        let (y, h2) = tgt.split(&value);
        let r = norm(h2);
        if r == 0.0 {
            return Err(Error::OutsideChart(format!("h2 vanishes at {:?}", z.x)));
        }
        let sign = z.t.signum();
        let theta: Vec<f64> = h2.iter().map(|c| sign * c / r).collect();
        PolarPoint::new(y.to_vec(), &theta, sign * r)
    }
}

pub fn polar_map(h: &MapOfPairs, z: &PolarPoint) -> Result<PolarPoint> {
    PolarMap::new(h.clone(), 16, sampling::DEFAULT_SEED)?.eval(z)
}

/// `|a - b|` in the polar model, comparing canonical representatives.
pub fn polar_distance(a: &PolarPoint, b: &PolarPoint) -> f64 {
    sampling::max_abs_diff(&a.x, &b.x)
        .max(sampling::max_abs_diff(&a.theta, &b.theta))
        .max((a.t - b.t).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{blowup_map, point_distance, sample_point};
    use crate::jet::{parse_map, SmoothMap, VarNames};

    const PLANE: PairDims = PairDims { n: 2, p: 0 };

    #[test]
    fn algebraic_examples() {
        let a = to_algebraic(PLANE, &BlowupPoint::Body { x: vec![2.0, 6.0] }).unwrap();
        let s = 10f64.sqrt();
        assert!(sampling::max_abs_diff(&a.line, &[1.0 / s, 3.0 / s]) < 1e-15);
        assert!(a.incidence_residual(PLANE) < 1e-12);
        assert_eq!(
            from_algebraic(PLANE, &a).unwrap(),
            BlowupPoint::Body { x: vec![2.0, 6.0] }
        );
        let e = BlowupPoint::exceptional(vec![], &[1.0, 4.0]).unwrap();
        let a = to_algebraic(PLANE, &e).unwrap();
        assert_eq!(a.x, vec![0.0, 0.0]);
        assert_eq!(from_algebraic(PLANE, &a).unwrap(), e);
        let bad = AlgebraicPoint {
            x: vec![1.0, 0.0],
            line: vec![0.0, 1.0],
        };
        assert!(from_algebraic(PLANE, &bad).is_err());
    }

    #[test]
    fn polar_examples() {
        let p = to_polar(PLANE, &BlowupPoint::Body { x: vec![3.0, 4.0] }).unwrap();
        assert_eq!((p.theta.clone(), p.t), (vec![0.6, 0.8], 5.0));
        let e = BlowupPoint::exceptional(vec![], &[0.6, 0.8]).unwrap();
        let q = to_polar(PLANE, &e).unwrap();
        assert_eq!(q.t, 0.0);
        let flipped = PolarPoint::new(vec![], &[-0.6, -0.8], -5.0).unwrap();
        assert_eq!(flipped, PolarPoint::new(vec![], &[0.6, 0.8], 5.0).unwrap());
        let neg = to_polar(PLANE, &BlowupPoint::Body { x: vec![-3.0, -4.0] }).unwrap();
        assert_eq!((neg.theta, neg.t), (vec![0.6, 0.8], -5.0));
    }

    #[test]
    fn model_round_trips() {
        for dims in [PLANE, PairDims { n: 3, p: 0 }, PairDims { n: 3, p: 1 }] {
            let mut rng = sampling::rng(11);
            for _ in 0..300 {
                let z = sample_point(dims, &mut rng, 2.0);
                let a = from_algebraic(dims, &to_algebraic(dims, &z).unwrap()).unwrap();
                assert!(point_distance(&a, &z) <= 1e-12);
                let p = from_polar(dims, &to_polar(dims, &z).unwrap()).unwrap();
                assert!(point_distance(&p, &z) <= 1e-12);
            }
        }
    }

    fn map(src: &str) -> MapOfPairs {
        let outs = parse_map(src, &VarNames::indexed()).unwrap();
        MapOfPairs::new(SmoothMap::new(2, outs).unwrap(), PLANE, PLANE).unwrap()
    }

    #[test]
    fn polar_maps() {
        let z = PolarPoint::new(vec![], &[0.6, 0.8], 5.0).unwrap();
        assert_eq!(polar_map(&MapOfPairs::identity(PLANE), &z).unwrap(), z);
        let doubled = polar_map(&map("2*x1, 2*x2"), &z).unwrap();
        assert_eq!((doubled.theta.clone(), doubled.t), (vec![0.6, 0.8], 10.0));
        let rot = map("0 - x2, x1");
        let r = polar_map(&rot, &z).unwrap();
        // R(0.6, 0.8) = (-0.8, 0.6), canonical form (0.8, -0.6) with t flipped
        assert!(sampling::max_abs_diff(&r.theta, &[0.8, -0.6]) < 1e-15);
        assert_eq!(r.t, -5.0);
        assert!(matches!(PolarMap::new(map("x1, 0"), 4, 1), Err(Error::NotImmersive(_))));
    }

    #[test]
    fn polar_map_agrees_with_quotient_map() {
        let h = map("x1 + x2^2, 3*x2 - x1*x2");
        let pm = PolarMap::new(h.clone(), 16, 2).unwrap();
        let mut rng = sampling::rng(4);
        for _ in 0..200 {
            let z = sample_point(PLANE, &mut rng, 0.2);
            let Ok(direct) = blowup_map(&h, &z) else { continue };
            let via = from_polar(PLANE, &pm.eval(&to_polar(PLANE, &z).unwrap()).unwrap()).unwrap();
            assert!(point_distance(&direct, &via) < 1e-10, "{direct:?} {via:?}");
        }
    }
}
