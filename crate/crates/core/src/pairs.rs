//! Maps of pairs between adapted local models and their normal derivatives.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::SmoothMap;
use crate::sampling::{self, numeric_rank};

/// Slice points are checked to this absolute tolerance.
pub const ADAPTED_TOL: f64 = 1e-12;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-8;
pub const DEFAULT_SLICE_SAMPLES: usize = 512;
/// Half-width of the sampling box for slice and ambient points.
pub const SAMPLE_RADIUS: f64 = 1.0;

/// Dimensions `(n, p)` of a local model `(R^n, R^p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairDims {
    pub n: usize,
    pub p: usize,
}

impl PairDims {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p > n {
            return Err(Error::ArityMismatch { expected: n, found: p });
        }
        Ok(PairDims { n, p })
    }

    /// Codimension `n - p`.
    pub fn q(&self) -> usize {
        self.n - self.p
    }

    /// `(y, x) -> y ++ x`.
    pub fn join(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.p);
        debug_assert_eq!(x.len(), self.q());
        let mut out = y.to_vec();
        out.extend_from_slice(x);
        out
    }

    pub fn split<'a>(&self, point: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        point.split_at(self.p)
    }

    pub fn slice_point(&self, y: &[f64]) -> Vec<f64> {
        self.join(y, &vec![0.0; self.q()])
    }
}

/// A smooth map `f: (R^n, R^p) -> (R^m, R^k)` meant to send the slice into the slice.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOfPairs {
    pub f: SmoothMap,
    pub source: PairDims,
    pub target: PairDims,
}

impl MapOfPairs {
    pub fn new(f: SmoothMap, source: PairDims, target: PairDims) -> Result<Self> {
        if f.input_dim() != source.n {
            return Err(Error::ArityMismatch {
                expected: source.n,
                found: f.input_dim(),
            });
        }
        if f.output_dim() != target.n {
            return Err(Error::ArityMismatch {
                expected: target.n,
                found: f.output_dim(),
            });
        }
        Ok(MapOfPairs { f, source, target })
    }

    pub fn identity(dims: PairDims) -> Self {
        MapOfPairs {
            f: SmoothMap::identity(dims.n),
            source: dims,
            target: dims,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MapOfPairs) -> Result<MapOfPairs> {
        if inner.target != self.source {
            return Err(Error::ArityMismatch {
                expected: self.source.n,
                found: inner.target.n,
            });
        }
        MapOfPairs::new(self.f.compose(&inner.f)?, inner.source, self.target)
    }

    /// Restriction to the slice, `y -> f_Y(y)`.
    pub fn on_slice(&self, y: &[f64]) -> Result<Vec<f64>> {
        let v = self.f.eval(&self.source.slice_point(y))?;
        Ok(v[..self.target.p].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedReport {
    pub adapted: bool,
    pub samples: usize,
    pub worst_violation: f64,
    pub worst_point: Vec<f64>,
}

/// Samples slice points `(y, 0)` and checks that `f` lands in the target slice.
pub fn check_adapted(f: &MapOfPairs, samples: usize, seed: u64) -> Result<AdaptedReport> {
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    let mut worst_point = Vec::new();
    for k in 0..samples.max(1) {
        // the first sample is always the origin of the slice
        let y = if k == 0 {
            vec![0.0; f.source.p]
        } else {
            sampling::point_in_box(&mut rng, f.source.p, SAMPLE_RADIUS)
        };
        let point = f.source.slice_point(&y);
        let value = f.f.eval(&point)?;
        let v = value[f.target.p..].iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        if v > worst || worst_point.is_empty() {
            worst = worst.max(v);
            worst_point = point;
        }
    }
    Ok(AdaptedReport {
        adapted: worst <= ADAPTED_TOL,
        samples: samples.max(1),
        worst_violation: worst,
        worst_point,
    })
}

/// Extracts the `dx'/dx` block of a full Jacobian.
pub fn normal_block(jacobian: &DMatrix<f64>, source: PairDims, target: PairDims) -> DMatrix<f64> {
    jacobian
        .view((target.p, source.p), (target.q(), source.q()))
        .into_owned()
}

/// The matrix of `d_N f(y)` in adapted coordinates: `dx'/dx` at `(y, 0)`.
pub fn normal_derivative(f: &MapOfPairs, y: &[f64]) -> Result<DMatrix<f64>> {
    let jet = f.f.jet(&f.source.slice_point(y))?;
    Ok(normal_block(&jet.jacobian, f.source, f.target))
}

/// Finite-difference estimate of the same block.
pub fn normal_derivative_fd(f: &MapOfPairs, y: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let jac = f.f.finite_diff_jacobian(&f.source.slice_point(y), step)?;
    Ok(normal_block(&jac, f.source, f.target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankRange {
    pub min: usize,
    pub max: usize,
}

impl RankRange {
    fn observe(acc: Option<RankRange>, r: usize) -> Option<RankRange> {
        Some(match acc {
            None => RankRange { min: r, max: r },
            Some(a) => RankRange {
                min: a.min.min(r),
                max: a.max.max(r),
            },
        })
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    /// Rank of `df` at ambient points.
    pub rank_f: RankRange,
    /// Rank of `d(f|_Y)` at slice points.
    pub rank_f_restricted: RankRange,
    /// Rank of `d_N f` at slice points.
    pub fiberwise_rank_dn: RankRange,
    pub constant: bool,
}

/// Estimates the three ranks at sampled points (always including the origin).
pub fn check_rank_conditions(f: &MapOfPairs, samples: usize, seed: u64) -> Result<RankReport> {
    let (src, tgt) = (f.source, f.target);
    let mut rng = sampling::rng(seed);
    let mut rank_f = None;
    let mut rank_res = None;
    let mut rank_dn = None;
    for k in 0..samples.max(1) {
        let (y, x) = if k == 0 {
            (vec![0.0; src.p], vec![0.0; src.q()])
        } else {
            (
                sampling::point_in_box(&mut rng, src.p, SAMPLE_RADIUS),
                sampling::point_in_box(&mut rng, src.q(), SAMPLE_RADIUS),
            )
        };
        let ambient = f.f.jet(&src.join(&y, &x))?;
        rank_f = RankRange::observe(rank_f, numeric_rank(&ambient.jacobian, RANK_REL_TOL));
        let slice = f.f.jet(&src.slice_point(&y))?;
        let restricted = slice.jacobian.view((0, 0), (tgt.p, src.p)).into_owned();
        rank_res = RankRange::observe(rank_res, numeric_rank(&restricted, RANK_REL_TOL));
        let dn = normal_block(&slice.jacobian, src, tgt);
        rank_dn = RankRange::observe(rank_dn, numeric_rank(&dn, RANK_REL_TOL));
    }
    let (rank_f, rank_f_restricted, fiberwise_rank_dn) = (rank_f.unwrap(), rank_res.unwrap(), rank_dn.unwrap());
    Ok(RankReport {
        constant: rank_f.is_constant() && rank_f_restricted.is_constant() && fiberwise_rank_dn.is_constant(),
        rank_f,
        rank_f_restricted,
        fiberwise_rank_dn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{max_abs, parse_map, VarNames};
    use nalgebra::dmatrix;

    fn map(src: &str, s: PairDims, t: PairDims) -> MapOfPairs {
        let outs = parse_map(src, &VarNames::indexed()).unwrap();
        MapOfPairs::new(SmoothMap::new(s.n, outs).unwrap(), s, t).unwrap()
    }

    fn line() -> PairDims {
        PairDims::new(2, 1).unwrap()
    }

    #[test]
    fn adaptedness() {
        let id = MapOfPairs::identity(line());
        assert!(check_adapted(&id, 64, 1).unwrap().adapted);
        let cubic = map("x1, x1*x2 + x2^3", line(), line());
        assert!(check_adapted(&cubic, 64, 1).unwrap().adapted);
        let shifted = map("x1, x2 + 1", line(), line());
        let rep = check_adapted(&shifted, 64, 1).unwrap();
        assert!(!rep.adapted);
        assert_eq!(rep.worst_violation, 1.0);
    }

    #[test]
    fn normal_derivatives() {
        let id = MapOfPairs::identity(line());
        assert_eq!(normal_derivative(&id, &[0.3]).unwrap(), dmatrix![1.0]);
        let cubic = map("x1, x1*x2 + x2^3", line(), line());
        assert_eq!(normal_derivative(&cubic, &[2.0]).unwrap(), dmatrix![2.0]);
        let d3 = PairDims::new(3, 1).unwrap();
        let swap = map("x1, x3, x2", d3, d3);
        assert_eq!(normal_derivative(&swap, &[0.5]).unwrap(), dmatrix![0.0, 1.0; 1.0, 0.0]);
        let fd = normal_derivative_fd(&cubic, &[2.0], 1e-6).unwrap();
        assert!(max_abs(&(fd - dmatrix![2.0])) < 1e-8);
    }

    #[test]
    fn ranks() {
        let id = MapOfPairs::identity(line());
        let r = check_rank_conditions(&id, 16, 3).unwrap();
        assert_eq!(
            (r.rank_f.max, r.rank_f_restricted.max, r.fiberwise_rank_dn.max),
            (2, 1, 1)
        );
        assert!(r.constant);

        let proj = map("x1", line(), PairDims::new(1, 1).unwrap());
        let r = check_rank_conditions(&proj, 16, 3).unwrap();
        assert_eq!(r.rank_f, RankRange { min: 1, max: 1 });
        assert_eq!(r.fiberwise_rank_dn, RankRange { min: 0, max: 0 });

        let square = map("x1, x2^2", line(), line());
        let r = check_rank_conditions(&square, 16, 3).unwrap();
        assert_eq!(r.fiberwise_rank_dn, RankRange { min: 0, max: 0 });
        // rank 2 off the slice, rank 1 at the origin
        assert_eq!(r.rank_f, RankRange { min: 1, max: 2 });
        assert!(!r.constant);
    }

    #[test]
    fn dims_validation() {
        assert!(PairDims::new(2, 3).is_err());
        let f = SmoothMap::identity(3);
        assert!(MapOfPairs::new(f, line(), line()).is_err());
    }
}
