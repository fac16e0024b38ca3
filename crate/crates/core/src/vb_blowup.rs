//! Blow-up of a pair of vector bundles `(E, F)` over `(R^n, R^p)` in a single
//! trivialization.
//!
//! A fiber vector `υ ∈ R^(k+l)` over `u` has bundle coordinates
//! `(f(u, υ), e(u, υ))`, linear in `υ`, and `F` is cut out over the slice by
//! `e = 0`. Over an exceptional base point `[v, ξ]` a fiber vector is a pair
//! `(υ0, ω)` with `υ0 ∈ F_v` and `ω ∈ E_v` representing the normal vector
//! `(ξ, ω)`; the splitting of normal vectors into base and fiber blocks is the
//! one given by the chart.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::blowup::{self, chart_phi, chart_phi_inv, BlowupPoint};
use crate::error::{Error, Result};
use crate::jet::{Expr, SmoothMap};
use crate::pairs::{PairDims, SAMPLE_RADIUS};
use crate::sampling::{self, max_abs_diff, numeric_rank};

/// Tolerance for `e(v, υ0) = 0` on exceptional fibers and for frame linearity.
pub const FIBER_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct VbPairModel {
    pub base: PairDims,
    pub rank_f: usize,
    pub rank_e: usize,
    /// `(u, υ) -> (f, e)`, with `n + k + l` inputs and `k + l` outputs.
    frame: SmoothMap,
}

impl VbPairModel {
    pub fn new(base: PairDims, rank_f: usize, rank_e: usize, frame: SmoothMap) -> Result<Self> {
        let m = rank_f + rank_e;
        if frame.input_dim() != base.n + m || frame.output_dim() != m {
            return Err(Error::ArityMismatch {
                expected: base.n + m,
                found: frame.input_dim(),
            });
        }
        let model = VbPairModel {
            base,
            rank_f,
            rank_e,
            frame,
        };
        model.validate(32, sampling::DEFAULT_SEED)?;
        Ok(model)
    }

    /// `E = R^n x R^(k+l)` with `F` the first `k` coordinates over the slice.
    pub fn trivial(base: PairDims, rank_f: usize, rank_e: usize) -> Self {
        let m = rank_f + rank_e;
        let outs = (0..m).map(|j| Expr::var(base.n + j)).collect();
        VbPairModel {
            base,
            rank_f,
            rank_e,
            frame: SmoothMap::new(base.n + m, outs).expect("arity"),
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.rank_f + self.rank_e
    }

    pub fn frame(&self) -> &SmoothMap {
        &self.frame
    }

    fn validate(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = sampling::rng(seed);
        let m = self.fiber_dim();
        for _ in 0..samples {
            let u = sampling::point_in_box(&mut rng, self.base.n, SAMPLE_RADIUS);
            let a = sampling::point_in_box(&mut rng, m, 1.0);
            let b = sampling::point_in_box(&mut rng, m, 1.0);
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let (fa, fb, fs) = (
                self.coordinates(&u, &a)?,
                self.coordinates(&u, &b)?,
                self.coordinates(&u, &sum)?,
            );
            let lin: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x + y).collect();
            if max_abs_diff(&fs, &lin) > FIBER_TOL {
                return Err(Error::InvalidModel("frame is not linear on fibers".into()));
            }
            if numeric_rank(&self.matrix_at(&u)?, 1e-10) < m {
                return Err(Error::InvalidModel(format!("frame is singular at {u:?}")));
            }
        }
        Ok(())
    }

    /// Bundle coordinates `(f, e)` of `υ` over `u`.
    pub fn coordinates(&self, u: &[f64], upsilon: &[f64]) -> Result<Vec<f64>> {
        let mut point = u.to_vec();
        point.extend_from_slice(upsilon);
        self.frame.eval(&point)
    }

    /// Matrix of `υ -> (f, e)(u, υ)`.
    pub fn matrix_at(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let mut point = u.to_vec();
        point.extend(std::iter::repeat_n(0.0, self.fiber_dim()));
        let jet = self.frame.jet(&point)?;
        Ok(jet.jacobian.columns(self.base.n, self.fiber_dim()).into_owned())
    }

    /// Columns spanning `F_v = ker e(v, ·)` over a slice point.
    pub fn sub_fiber_basis(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.fiber_dim();
        let full = self.matrix_at(&self.base.slice_point(y))?;
        let mut e = DMatrix::zeros(m, m);
        e.rows_mut(0, self.rank_e)
            .copy_from(&full.rows(self.rank_f, self.rank_e));
        let svd = e.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let smax = svd.singular_values.max().max(1.0);
        let cols: Vec<DVector<f64>> = (0..m)
            .filter(|&i| svd.singular_values[i] <= 1e-12 * smax)
            .map(|i| vt.row(i).transpose())
            .collect();
        Ok(DMatrix::from_columns(&cols).resize(m, cols.len(), 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum VbFiber {
    Body { upsilon: Vec<f64> },
    Exceptional { upsilon0: Vec<f64>, omega: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VbBlowupPoint {
    pub base: BlowupPoint,
    pub fiber: VbFiber,
}

/// Coordinates `(y, x~_r, f, e~_r)` on `V_r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VbChartCoords {
    pub base: Vec<f64>,
    pub f: Vec<f64>,
    pub e_tilde: Vec<f64>,
}

impl VbChartCoords {
    pub fn fiber(&self) -> Vec<f64> {
        let mut v = self.f.clone();
        v.extend_from_slice(&self.e_tilde);
        v
    }
}

fn check_fiber(model: &VbPairModel, z: &VbBlowupPoint) -> Result<()> {
    let m = model.fiber_dim();
    let lens = match &z.fiber {
        VbFiber::Body { upsilon } => vec![upsilon.len()],
        VbFiber::Exceptional { upsilon0, omega } => vec![upsilon0.len(), omega.len()],
    };
    match lens.iter().find(|&&l| l != m) {
        Some(&found) => Err(Error::ArityMismatch { expected: m, found }),
        None => Ok(()),
    }
}

pub fn vb_chart(model: &VbPairModel, r: usize, z: &VbBlowupPoint) -> Result<VbChartCoords> {
    check_fiber(model, z)?;
    let dims = model.base;
    let base = chart_phi(dims, r, &z.base)?;
    let k = model.rank_f;
    match (&z.base, &z.fiber) {
        (BlowupPoint::Body { x }, VbFiber::Body { upsilon }) => {
            let c = model.coordinates(x, upsilon)?;
            let xr = x[dims.p + r - 1];
            Ok(VbChartCoords {
                base,
                f: c[..k].to_vec(),
                e_tilde: c[k..].iter().map(|e| e / xr).collect(),
            })
        }
        (BlowupPoint::Exceptional { y, dir }, VbFiber::Exceptional { upsilon0, omega }) => {
            let mut point = dims.slice_point(y);
            point.extend_from_slice(upsilon0);
            let jet = model.frame.jet(&point)?;
            let off = jet.value[k..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if off > FIBER_TOL {
                return Err(Error::DomainViolation(format!("υ0 is not in F (|e| = {off:e})")));
            }
            let mut tangent = vec![0.0; dims.p];
            tangent.extend_from_slice(dir);
            tangent.extend_from_slice(omega);
            let de = jet.jacobian.rows(k, model.rank_e) * DVector::from_vec(tangent);
            let xr = dir[r - 1];
            Ok(VbChartCoords {
                base,
                f: jet.value[..k].to_vec(),
                e_tilde: de.iter().map(|e| e / xr).collect(),
            })
        }
        _ => Err(Error::DomainViolation(
            "fiber type does not match the base point".into(),
        )),
    }
}

/// Inverse of [`vb_chart`]; the exceptional `ω` is chosen with `f(v, ω) = 0`.
pub fn vb_chart_inv(model: &VbPairModel, r: usize, c: &VbChartCoords) -> Result<VbBlowupPoint> {
    let dims = model.base;
    let base = chart_phi_inv(dims, r, &c.base)?;
    let k = model.rank_f;
    let solve = |u: &[f64], rhs: Vec<f64>| -> Result<Vec<f64>> {
        model
            .matrix_at(u)?
            .lu()
            .solve(&DVector::from_vec(rhs))
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::InvalidModel(format!("frame is singular at {u:?}")))
    };
    let fiber = match &base {
        BlowupPoint::Body { x } => {
            let xr = x[dims.p + r - 1];
            let mut rhs = c.f.clone();
            rhs.extend(c.e_tilde.iter().map(|e| e * xr));
            VbFiber::Body {
                upsilon: solve(x, rhs)?,
            }
        }
        BlowupPoint::Exceptional { y, dir } => {
            let v = dims.slice_point(y);
            let mut rhs = c.f.clone();
            rhs.extend(std::iter::repeat_n(0.0, model.rank_e));
            let upsilon0 = solve(&v, rhs)?;
            let mut point = v.clone();
            point.extend_from_slice(&upsilon0);
            let jet = model.frame.jet(&point)?;
            let dx = jet.jacobian.view((k, dims.p), (model.rank_e, dims.q())) * DVector::from_column_slice(dir);
            let mut rhs = vec![0.0; k];
            rhs.extend(c.e_tilde.iter().zip(dx.iter()).map(|(e, d)| e * dir[r - 1] - d));
            VbFiber::Exceptional {
                upsilon0,
                omega: solve(&v, rhs)?,
            }
        }
    };
    Ok(VbBlowupPoint { base, fiber })
}

/// Random fiber vector over `base`.
pub fn sample_fiber(model: &VbPairModel, base: &BlowupPoint, rng: &mut sampling::SampleRng) -> Result<VbFiber> {
    let m = model.fiber_dim();
    Ok(match base {
        BlowupPoint::Body { .. } => VbFiber::Body {
            upsilon: sampling::point_in_box(rng, m, 1.0),
        },
        BlowupPoint::Exceptional { y, .. } => {
            let basis = model.sub_fiber_basis(y)?;
            let coeffs = DVector::from_vec(sampling::point_in_box(rng, basis.ncols(), 1.0));
            VbFiber::Exceptional {
                upsilon0: (&basis * coeffs).iter().copied().collect(),
                omega: sampling::point_in_box(rng, m, 1.0),
            }
        }
    })
}

fn combine(a: &VbFiber, b: &VbFiber, ca: f64, cb: f64) -> VbFiber {
    let lin = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| ca * x + cb * y).collect();
    match (a, b) {
        (VbFiber::Body { upsilon: u }, VbFiber::Body { upsilon: v }) => VbFiber::Body { upsilon: lin(u, v) },
        (
            VbFiber::Exceptional {
                upsilon0: u0,
                omega: w0,
            },
            VbFiber::Exceptional {
                upsilon0: u1,
                omega: w1,
            },
        ) => VbFiber::Exceptional {
            upsilon0: lin(u0, u1),
            omega: lin(w0, w1),
        },
        _ => panic!("fibers over different kinds of base points"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityReport {
    pub samples: usize,
    pub additivity: f64,
    pub homogeneity: f64,
}

impl LinearityReport {
    pub fn max_residual(&self) -> f64 {
        self.additivity.max(self.homogeneity)
    }
}

/// Checks that `(f, e~_r)` is linear on sampled fibers over `base`.
pub fn fiber_linearity_check(
    model: &VbPairModel,
    r: usize,
    base: &BlowupPoint,
    samples: usize,
    seed: u64,
) -> Result<LinearityReport> {
    let mut rng = sampling::rng(seed);
    let coords = |f: &VbFiber| -> Result<Vec<f64>> {
        Ok(vb_chart(
            model,
            r,
            &VbBlowupPoint {
                base: base.clone(),
                fiber: f.clone(),
            },
        )?
        .fiber())
    };
    let (mut add, mut hom) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = sample_fiber(model, base, &mut rng)?;
        let b = sample_fiber(model, base, &mut rng)?;
        let c = sampling::point_in_box(&mut rng, 1, 3.0)[0];
        let (ca, cb) = (coords(&a)?, coords(&b)?);
        let sum = coords(&combine(&a, &b, 1.0, 1.0))?;
        let lin: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| x + y).collect();
        add = add.max(max_abs_diff(&sum, &lin));
        let scaled = coords(&combine(&a, &b, c, 0.0))?;
        let expect: Vec<f64> = ca.iter().map(|x| c * x).collect();
        hom = hom.max(max_abs_diff(&scaled, &expect));
    }
    Ok(LinearityReport {
        samples,
        additivity: add,
        homogeneity: hom,
    })
}

/// Linearity of the chart change `V_r -> V_r2` on fibers over `base`.
pub fn transition_linearity_check(
    model: &VbPairModel,
    r: usize,
    r2: usize,
    base: &BlowupPoint,
    samples: usize,
    seed: u64,
) -> Result<LinearityReport> {
    let mut rng = sampling::rng(seed);
    let base_coords = chart_phi(model.base, r, base)?;
    let change = |fiber: &[f64]| -> Result<Vec<f64>> {
        let c = VbChartCoords {
            base: base_coords.clone(),
            f: fiber[..model.rank_f].to_vec(),
            e_tilde: fiber[model.rank_f..].to_vec(),
        };
        Ok(vb_chart(model, r2, &vb_chart_inv(model, r, &c)?)?.fiber())
    };
    let m = model.fiber_dim();
    let (mut add, mut hom) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = sampling::point_in_box(&mut rng, m, 1.0);
        let b = sampling::point_in_box(&mut rng, m, 1.0);
        let c = sampling::point_in_box(&mut rng, 1, 3.0)[0];
        let (ta, tb) = (change(&a)?, change(&b)?);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lin: Vec<f64> = ta.iter().zip(&tb).map(|(x, y)| x + y).collect();
        add = add.max(max_abs_diff(&change(&sum)?, &lin));
        let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
        let expect: Vec<f64> = ta.iter().map(|x| c * x).collect();
        hom = hom.max(max_abs_diff(&change(&ca)?, &expect));
    }
    Ok(LinearityReport {
        samples,
        additivity: add,
        homogeneity: hom,
    })
}

/// `Blup(α)` for a section `α: R^n -> R^(k+l)` (in the `υ` frame) whose
/// restriction to the slice lies in `F`.
pub fn section_blowup(model: &VbPairModel, alpha: &SmoothMap, z: &BlowupPoint) -> Result<VbBlowupPoint> {
    let dims = model.base;
    let m = model.fiber_dim();
    if alpha.input_dim() != dims.n || alpha.output_dim() != m {
        return Err(Error::ArityMismatch {
            expected: m,
            found: alpha.output_dim(),
        });
    }
    check_section_adapted(model, alpha, 64, sampling::DEFAULT_SEED)?;
    let fiber = match z {
        BlowupPoint::Body { x } => VbFiber::Body {
            upsilon: alpha.eval(x)?,
        },
        BlowupPoint::Exceptional { y, dir } => {
            let jet = alpha.jet(&dims.slice_point(y))?;
            let omega = jet.jacobian.columns(dims.p, dims.q()) * DVector::from_column_slice(dir);
            VbFiber::Exceptional {
                upsilon0: jet.value,
                omega: omega.iter().copied().collect(),
            }
        }
    };
    Ok(VbBlowupPoint { base: z.clone(), fiber })
}

fn check_section_adapted(model: &VbPairModel, alpha: &SmoothMap, samples: usize, seed: u64) -> Result<()> {
    let dims = model.base;
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    for k in 0..samples {
        let y = if k == 0 {
            vec![0.0; dims.p]
        } else {
            sampling::point_in_box(&mut rng, dims.p, SAMPLE_RADIUS)
        };
        let v = dims.slice_point(&y);
        let c = model.coordinates(&v, &alpha.eval(&v)?)?;
        worst = c[model.rank_f..].iter().fold(worst, |a, e| a.max(e.abs()));
    }
    if worst > FIBER_TOL {
        return Err(Error::NotAdapted(format!("section leaves F by {worst:e}")));
    }
    Ok(())
}

/// The map `ξ -> (ξ_j / ξ_i)_{j != i}` whose differential is the anchor.
fn projective_chart_map(q: usize, i: usize) -> SmoothMap {
    let pivot = Expr::var(i);
    let outs = (0..q)
        .filter(|&j| j != i)
        .map(|j| Expr::var(j) / pivot.clone())
        .collect();
    SmoothMap::new(q, outs).expect("arity")
}

/// Matrix of `η -> dq(y, ξ) η` at an exceptional point in blow-up chart `i`:
/// the `y` block passes through and the normal block maps to the tangent of
/// the projective chart (`n - 1` rows).
pub fn anchor_matrix(dims: PairDims, chart: usize, z: &BlowupPoint) -> Result<DMatrix<f64>> {
    let BlowupPoint::Exceptional { dir, .. } = z else {
        return Err(Error::DomainViolation(
            "anchor is evaluated at exceptional points".into(),
        ));
    };
    if !blowup::chart_contains(dims, chart, z) {
        return Err(Error::OutsideChart(format!("{z:?} is not in chart {chart}")));
    }
    let proj = projective_chart_map(dims.q(), chart - 1).jet(dir)?.jacobian;
    let mut out = DMatrix::zeros(dims.n - 1, dims.n);
    for k in 0..dims.p {
        out[(k, k)] = 1.0;
    }
    out.view_mut((dims.p, dims.p), (dims.q() - 1, dims.q()))
        .copy_from(&proj);
    Ok(out)
}

pub fn tangent_anchor(dims: PairDims, chart: usize, z: &BlowupPoint, eta: &[f64]) -> Result<Vec<f64>> {
    if eta.len() != dims.n {
        return Err(Error::ArityMismatch {
            expected: dims.n,
            found: eta.len(),
        });
    }
    let m = anchor_matrix(dims, chart, z)?;
    Ok((m * DVector::from_column_slice(eta)).iter().copied().collect())
}
