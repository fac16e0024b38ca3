//! The blow-up `Blup(R^n, R^p)` of the slice `{x = 0}`.
//!
//! Points are canonical representatives of `R^x`-orbits in
//! `DNC(R^n, R^p) \ (R^p x R)`: a body point is stored as its ambient
//! coordinates (the orbit representative with `t = 1`), an exceptional point
//! as a base point with a unit normal direction whose first nonzero entry is
//! positive.

pub mod curve;
pub mod models;
pub mod sphere;

use serde::Serialize;

use crate::dnc::DncPoint;
use crate::error::{Error, Result};
use crate::jet::{Expr, Guard, SmoothMap};
use crate::pairs::{self, MapOfPairs, PairDims};
use crate::sampling::{self, norm, SampleRng};

/// Entries below this magnitude never decide the sign of a direction.
pub const SIGN_TOL: f64 = 1e-12;
/// Exceptional points need `|xi_i| > CHART_TOL` to lie in chart `i`.
pub const CHART_TOL: f64 = 1e-12;
/// Grid used when comparing canonical representatives.
pub const ROUNDING: f64 = 1e-14;
/// Relative threshold for `d_N f(y) xi != 0`.
pub const BLUP_F_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BlowupPoint {
    Exceptional { y: Vec<f64>, dir: Vec<f64> },
    Body { x: Vec<f64> },
}

/// Unit vector along `v` with its first significant entry positive.
pub fn canonical_direction(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let mut d: Vec<f64> = v.iter().map(|c| c / n).collect();
    if d.iter().find(|c| c.abs() > SIGN_TOL).is_some_and(|c| *c < 0.0) {
        d.iter_mut().for_each(|c| *c = -*c);
    }
    Some(d)
}

fn round_to_grid(v: &[f64]) -> Vec<f64> {
    // adding 0.0 turns -0.0 into +0.0
    v.iter().map(|c| (c / ROUNDING).round() * ROUNDING + 0.0).collect()
}

impl BlowupPoint {
    /// `[y, xi]` on the exceptional divisor.
    pub fn exceptional(y: Vec<f64>, xi: &[f64]) -> Result<Self> {
        let dir = canonical_direction(xi).ok_or(Error::CenterPoint)?;
        Ok(BlowupPoint::Exceptional { y, dir })
    }

    /// The body point over `x`, which must lie off the slice.
    pub fn body(dims: PairDims, x: Vec<f64>) -> Result<Self> {
        check_len(dims.n, x.len())?;
        if dims.split(&x).1.iter().all(|c| *c == 0.0) {
            return Err(Error::CenterPoint);
        }
        Ok(BlowupPoint::Body { x })
    }

    pub fn is_exceptional(&self) -> bool {
        matches!(self, BlowupPoint::Exceptional { .. })
    }

    /// Coordinates snapped to a `1e-14` grid, for bitwise comparison.
    pub fn rounded(&self) -> Self {
        match self {
            BlowupPoint::Exceptional { y, dir } => BlowupPoint::Exceptional {
                y: round_to_grid(y),
                dir: round_to_grid(dir),
            },
            BlowupPoint::Body { x } => BlowupPoint::Body { x: round_to_grid(x) },
        }
    }

    /// The orbit representative `(y, x, 1)` or `(y, dir, 0)` in `DNC`.
    pub fn representative(&self, dims: PairDims) -> DncPoint {
        match self {
            BlowupPoint::Exceptional { y, dir } => DncPoint::new(y.clone(), dir.clone(), 0.0),
            BlowupPoint::Body { x } => {
                let (y, n) = dims.split(x);
                DncPoint::new(y.to_vec(), n.to_vec(), 1.0)
            }
        }
    }

    fn check(&self, dims: PairDims) -> Result<()> {
        match self {
            BlowupPoint::Exceptional { y, dir } => {
                check_len(dims.p, y.len())?;
                check_len(dims.q(), dir.len())
            }
            BlowupPoint::Body { x } => check_len(dims.n, x.len()),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ArityMismatch { expected, found })
    }
}

/// The class of a point of `DNC \ (Y x R)` under the `R^x`-action.
pub fn canonicalize(dims: PairDims, z: &DncPoint) -> Result<BlowupPoint> {
    check_len(dims.p, z.y.len())?;
    check_len(dims.q(), z.xi.len())?;
    if z.t == 0.0 {
        BlowupPoint::exceptional(z.y.clone(), &z.xi)
    } else {
        BlowupPoint::body(dims, z.ambient())
    }
}

fn check_chart(dims: PairDims, chart: usize) -> Result<usize> {
    if chart == 0 || chart > dims.q() {
        return Err(Error::OutsideChart(format!(
            "chart index {chart} not in 1..={}",
            dims.q()
        )));
    }
    Ok(chart - 1)
}

/// Whether `z` lies in the chart domain `U_chart`.
pub fn chart_contains(dims: PairDims, chart: usize, z: &BlowupPoint) -> bool {
    let Ok(i) = check_chart(dims, chart) else {
        return false;
    };
    match z {
        BlowupPoint::Exceptional { dir, .. } => dir.get(i).is_some_and(|c| c.abs() > CHART_TOL),
        BlowupPoint::Body { x } => x.get(dims.p + i).is_some_and(|c| *c != 0.0),
    }
}

/// Chart coordinates; `chart` runs over `1..=q`.
pub fn chart_phi(dims: PairDims, chart: usize, z: &BlowupPoint) -> Result<Vec<f64>> {
    z.check(dims)?;
    let i = check_chart(dims, chart)?;
    if !chart_contains(dims, chart, z) {
        return Err(Error::OutsideChart(format!("{z:?} is not in chart {chart}")));
    }
    Ok(match z {
        BlowupPoint::Exceptional { y, dir } => {
            let mut w = y.clone();
            w.extend(
                dir.iter()
                    .enumerate()
                    .map(|(k, c)| if k == i { 0.0 } else { c / dir[i] }),
            );
            w
        }
        BlowupPoint::Body { x } => {
            let (y, n) = dims.split(x);
            let mut w = y.to_vec();
            w.extend(n.iter().enumerate().map(|(k, c)| if k == i { *c } else { c / n[i] }));
            w
        }
    })
}

pub fn chart_phi_inv(dims: PairDims, chart: usize, w: &[f64]) -> Result<BlowupPoint> {
    check_len(dims.n, w.len())?;
    let i = check_chart(dims, chart)?;
    if w.iter().any(|c| !c.is_finite()) {
        return Err(Error::OutsideChart(format!("non-finite coordinates {w:?}")));
    }
    let (y, n) = dims.split(w);
    let wi = n[i];
    if wi == 0.0 {
        let xi: Vec<f64> = n
            .iter()
            .enumerate()
            .map(|(k, c)| if k == i { 1.0 } else { *c })
            .collect();
        return BlowupPoint::exceptional(y.to_vec(), &xi);
    }
    let mut x = y.to_vec();
    x.extend(n.iter().enumerate().map(|(k, c)| if k == i { wi } else { wi * c }));
    BlowupPoint::body(dims, x)
}

/// `Φ_ij = φ_i ∘ φ_j^{-1}` by composition.
pub fn transition(dims: PairDims, i: usize, j: usize, w: &[f64]) -> Result<Vec<f64>> {
    chart_phi(dims, i, &chart_phi_inv(dims, j, w)?)
}

/// Closed form of `Φ_ij` as a smooth map, valid on the whole overlap
/// (body and exceptional parts alike).
pub fn transition_map(dims: PairDims, i: usize, j: usize) -> Result<SmoothMap> {
    let (ii, jj) = (check_chart(dims, i)?, check_chart(dims, j)?);
    if ii == jj {
        return Ok(SmoothMap::identity(dims.n));
    }
    let wi = Expr::var(dims.p + ii);
    let wj = Expr::var(dims.p + jj);
    let outs = (0..dims.n)
        .map(|k| {
            if k < dims.p {
                Expr::var(k)
            } else if k == dims.p + ii {
                &wi * &wj
            } else if k == dims.p + jj {
                1.0 / wi.clone()
            } else {
                Expr::var(k) / wi.clone()
            }
        })
        .collect();
    Ok(SmoothMap::new(dims.n, outs)?.with_guard(Guard::non_zero(wi)))
}

/// A chart containing `z`: the index of the largest normal entry.
pub fn covering_chart(dims: PairDims, z: &BlowupPoint) -> usize {
    let normal: &[f64] = match z {
        BlowupPoint::Exceptional { dir, .. } => dir,
        BlowupPoint::Body { x } => dims.split(x).1,
    };
    let mut best = 0;
    for (k, c) in normal.iter().enumerate() {
        if c.abs() > normal[best].abs() {
            best = k;
        }
    }
    best + 1
}

/// The blow-down map `p`.
pub fn blowdown(dims: PairDims, z: &BlowupPoint) -> Vec<f64> {
    match z {
        BlowupPoint::Exceptional { y, .. } => dims.slice_point(y),
        BlowupPoint::Body { x } => x.clone(),
    }
}

/// `Blup(f)` on `Blup_f`.
pub fn blowup_map(f: &MapOfPairs, z: &BlowupPoint) -> Result<BlowupPoint> {
    z.check(f.source)?;
    let tgt = f.target;
    match z {
        BlowupPoint::Body { x } => {
            let fx = f.f.eval(x)?;
            if tgt.split(&fx).1.iter().all(|c| *c == 0.0) {
                return Err(Error::OutsideBlupF(format!("f({x:?}) lies on the center")));
            }
            Ok(BlowupPoint::Body { x: fx })
        }
        BlowupPoint::Exceptional { y, dir } => {
            let slice = f.source.slice_point(y);
            let jet = f.f.jet(&slice)?;
            let (fy, fn_) = tgt.split(&jet.value);
            let off = fn_.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if off > pairs::ADAPTED_TOL {
                return Err(Error::NotAdapted(format!("normal part {off:e} at {slice:?}")));
            }
            let dn = pairs::normal_block(&jet.jacobian, f.source, tgt);
            let v = &dn * nalgebra::DVector::from_column_slice(dir);
            if v.norm() <= BLUP_F_REL_TOL * dn.norm() * norm(dir) || v.norm() == 0.0 {
                return Err(Error::OutsideBlupF(format!(
                    "d_N f(y) xi vanishes at y = {y:?}, xi = {dir:?}"
                )));
            }
            BlowupPoint::exceptional(fy.to_vec(), v.as_slice())
        }
    }
}

/// `Blup(X x M, Y x M) -> Blup(X, Y) x M`; ambient coordinates of the product
/// are ordered `(y, m, x)`.
pub fn product_split(x_dims: PairDims, m_dim: usize, z: &BlowupPoint) -> Result<(BlowupPoint, Vec<f64>)> {
    let prod = PairDims {
        n: x_dims.n + m_dim,
        p: x_dims.p + m_dim,
    };
    z.check(prod)?;
    Ok(match z {
        BlowupPoint::Exceptional { y, dir } => (
            BlowupPoint::Exceptional {
                y: y[..x_dims.p].to_vec(),
                dir: dir.clone(),
            },
            y[x_dims.p..].to_vec(),
        ),
        BlowupPoint::Body { x } => {
            let mut base = x[..x_dims.p].to_vec();
            base.extend_from_slice(&x[prod.p..]);
            (BlowupPoint::Body { x: base }, x[x_dims.p..prod.p].to_vec())
        }
    })
}

pub fn product_join(x_dims: PairDims, z: &BlowupPoint, m: &[f64]) -> Result<BlowupPoint> {
    z.check(x_dims)?;
    Ok(match z {
        BlowupPoint::Exceptional { y, dir } => {
            let mut ym = y.clone();
            ym.extend_from_slice(m);
            BlowupPoint::Exceptional {
                y: ym,
                dir: dir.clone(),
            }
        }
        BlowupPoint::Body { x } => {
            let (y, n) = x_dims.split(x);
            let mut v = y.to_vec();
            v.extend_from_slice(m);
            v.extend_from_slice(n);
            BlowupPoint::Body { x: v }
        }
    })
}

/// The open embedding `DNC(X, Y) -> Blup(X x R, Y x {0})`; the new normal
/// coordinate `t` is last.
pub fn dnc_as_open_subset(dims: PairDims, z: &DncPoint) -> Result<BlowupPoint> {
    check_len(dims.p, z.y.len())?;
    check_len(dims.q(), z.xi.len())?;
    let big = PairDims {
        n: dims.n + 1,
        p: dims.p,
    };
    if z.t == 0.0 {
        let mut xi = z.xi.clone();
        xi.push(1.0);
        BlowupPoint::exceptional(z.y.clone(), &xi)
    } else {
        let mut x = z.ambient();
        x.push(z.t);
        BlowupPoint::body(big, x)
    }
}

/// A random point: body or exceptional with equal probability.
pub fn sample_point(dims: PairDims, rng: &mut SampleRng, radius: f64) -> BlowupPoint {
    use rand::Rng;
    let y = sampling::point_in_box(rng, dims.p, radius);
    if rng.gen_bool(0.5) {
        let dir = sampling::unit_vector(rng, dims.q());
        BlowupPoint::exceptional(y, &dir).expect("unit vector")
    } else {
        loop {
            let n = sampling::point_in_box(rng, dims.q(), radius);
            if let Ok(z) = BlowupPoint::body(dims, dims.join(&y, &n)) {
                return z;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperReport {
    pub targets: usize,
    pub preimages: usize,
    /// Largest norm of a canonical representative over all preimages.
    pub sup_representative: f64,
    pub bound: f64,
    /// Largest `|p(z) - target|` over the preimages.
    pub max_blowdown_error: f64,
    pub bounded: bool,
}

/// Sampled properness of the blow-down over the box `[-radius, radius]^n`:
/// every grid point and its projection to the slice are used as targets.
pub fn properness_report(
    dims: PairDims,
    per_axis: usize,
    radius: f64,
    fiber_samples: usize,
    seed: u64,
) -> ProperReport {
    let mut rng = sampling::rng(seed);
    let axis: Vec<f64> = (0..per_axis)
        .map(|k| -radius + 2.0 * radius * k as f64 / (per_axis.max(2) - 1) as f64)
        .collect();
    let mut targets = 0;
    let mut preimages = 0;
    let mut sup = 0.0f64;
    let mut err = 0.0f64;
    let total = per_axis.pow(dims.n as u32);
    for idx in 0..total {
        let mut x = Vec::with_capacity(dims.n);
        let mut r = idx;
        for _ in 0..dims.n {
            x.push(axis[r % per_axis]);
            r /= per_axis;
        }
        let center = dims.slice_point(dims.split(&x).0);
        for target in [x, center] {
            targets += 1;
            let fiber: Vec<BlowupPoint> = match BlowupPoint::body(dims, target.clone()) {
                Ok(z) => vec![z],
                Err(_) => (0..fiber_samples)
                    .map(|_| {
                        let dir = sampling::unit_vector(&mut rng, dims.q());
                        BlowupPoint::exceptional(dims.split(&target).0.to_vec(), &dir).expect("unit vector")
                    })
                    .collect(),
            };
            for z in fiber {
                preimages += 1;
                sup = sup.max(norm(&z.representative(dims).to_vec()));
                err = err.max(sampling::max_abs_diff(&blowdown(dims, &z), &target));
            }
        }
    }
    let bound = radius * (dims.n as f64).sqrt() + 1.0;
    ProperReport {
        targets,
        preimages,
        sup_representative: sup,
        bound,
        max_blowdown_error: err,
        bounded: sup <= bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodimOneReport {
    pub samples: usize,
    /// `max |p(s(x)) - x|` for the section `s` of the blow-down.
    pub section_error: f64,
    /// `max |s(p(z)) - z|` on sampled blow-up points.
    pub retraction_error: f64,
    /// `max |φ_1(s(x)) - x|`: the section is the identity in chart 1.
    pub chart_error: f64,
}

/// Inverse of the blow-down for a hypersurface `(R^n, R^{n-1})`.
pub fn codim_one_section(dims: PairDims, x: &[f64]) -> Result<BlowupPoint> {
    if dims.q() != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            found: dims.q(),
        });
    }
    check_len(dims.n, x.len())?;
    if x[dims.p] == 0.0 {
        BlowupPoint::exceptional(x[..dims.p].to_vec(), &[1.0])
    } else {
        BlowupPoint::body(dims, x.to_vec())
    }
}

pub fn codimension_one_report(n: usize, samples: usize, seed: u64) -> Result<CodimOneReport> {
    let dims = PairDims::new(n, n.saturating_sub(1))?;
    let mut rng = sampling::rng(seed);
    let (mut sec, mut ret, mut chart) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..samples {
        let mut x = sampling::point_in_box(&mut rng, n, 1.0);
        if k % 2 == 0 {
            x[dims.p] = 0.0;
        }
        let z = codim_one_section(dims, &x)?;
        sec = sec.max(sampling::max_abs_diff(&blowdown(dims, &z), &x));
        chart = chart.max(sampling::max_abs_diff(&chart_phi(dims, 1, &z)?, &x));
        let w = sample_point(dims, &mut rng, 1.0);
        let back = codim_one_section(dims, &blowdown(dims, &w))?;
        ret = ret.max(point_distance(&back, &w));
    }
    Ok(CodimOneReport {
        samples,
        section_error: sec,
        retraction_error: ret,
        chart_error: chart,
    })
}

/// Sup distance between two points of the same type; infinite otherwise.
pub fn point_distance(a: &BlowupPoint, b: &BlowupPoint) -> f64 {
    match (a, b) {
        (BlowupPoint::Body { x: u }, BlowupPoint::Body { x: v }) => sampling::max_abs_diff(u, v),
        (BlowupPoint::Exceptional { y: u, dir: d }, BlowupPoint::Exceptional { y: v, dir: e }) => {
            sampling::max_abs_diff(u, v).max(sampling::max_abs_diff(d, e))
        }
        _ => f64::INFINITY,
    }
}
