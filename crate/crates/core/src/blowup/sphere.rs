//! `Blup(S^2, +1) ≅ RP^2`, where `+1 = (0, 0, 1)` is the north pole.
//!
//! Chart 1 and 2 are the blow-up charts induced by the stereographic chart
//! `φ-(x) = (x0, x1) / (1 + x2)` around `+1`; charts 3 and 4 come from
//! `φ+(x) = (x0, x1) / (1 - x2)` and only see body points.

use serde::Serialize;

use super::{canonical_direction, chart_phi, chart_phi_inv, BlowupPoint};
use crate::error::{Error, Result};
use crate::pairs::PairDims;
use crate::sampling::{self, SampleRng};

const PLANE: PairDims = PairDims { n: 2, p: 0 };

/// A point of `Blup(S^2, +1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SphereBlowupPoint {
    /// `[x, 1]` for `x ∈ S^2 \ {+1}`.
    Body([f64; 3]),
    /// `[+1, ξ]` with `ξ = (ξ0, ξ1, 0)` tangent at the pole, canonical.
    Exceptional([f64; 2]),
}

pub fn phi_minus(x: &[f64; 3]) -> [f64; 2] {
    [x[0] / (1.0 + x[2]), x[1] / (1.0 + x[2])]
}

pub fn phi_plus(x: &[f64; 3]) -> [f64; 2] {
    [x[0] / (1.0 - x[2]), x[1] / (1.0 - x[2])]
}

pub fn phi_minus_inv(u: &[f64; 2]) -> [f64; 3] {
    let r = u[0] * u[0] + u[1] * u[1];
    [2.0 * u[0] / (1.0 + r), 2.0 * u[1] / (1.0 + r), (1.0 - r) / (1.0 + r)]
}

pub fn phi_plus_inv(v: &[f64; 2]) -> [f64; 3] {
    let r = v[0] * v[0] + v[1] * v[1];
    [2.0 * v[0] / (1.0 + r), 2.0 * v[1] / (1.0 + r), (r - 1.0) / (1.0 + r)]
}

fn canonical3(a: &[f64; 3]) -> Result<[f64; 3]> {
    let d = canonical_direction(a).ok_or_else(|| Error::OutsideChart("zero vector".into()))?;
    Ok([d[0], d[1], d[2]])
}

/// `f([x, 1]) = [x0 : x1 : 1 - x2]`, `f([+1, ξ]) = [ξ0 : ξ1 : 0]`, as a
/// canonical unit representative.
pub fn sphere_to_rp2(z: &SphereBlowupPoint) -> Result<[f64; 3]> {
    match z {
        SphereBlowupPoint::Body(x) => canonical3(&[x[0], x[1], 1.0 - x[2]]),
        SphereBlowupPoint::Exceptional(xi) => canonical3(&[xi[0], xi[1], 0.0]),
    }
}

/// Inverse of [`sphere_to_rp2`].
pub fn rp2_to_sphere(a: &[f64; 3]) -> Result<SphereBlowupPoint> {
    if a[2] == 0.0 {
        let d = canonical_direction(&a[..2]).ok_or_else(|| Error::OutsideChart("zero vector".into()))?;
        return Ok(SphereBlowupPoint::Exceptional([d[0], d[1]]));
    }
    let (a0, a1) = (a[0] / a[2], a[1] / a[2]);
    let r = a0 * a0 + a1 * a1;
    Ok(SphereBlowupPoint::Body([
        2.0 * a0 / (r + 1.0),
        2.0 * a1 / (r + 1.0),
        (r - 1.0) / (r + 1.0),
    ]))
}

fn check_chart(chart: usize) -> Result<()> {
    if (1..=4).contains(&chart) {
        Ok(())
    } else {
        Err(Error::OutsideChart(format!("sphere chart must be 1..=4, got {chart}")))
    }
}

/// The point with coordinates `w` in the given blow-up chart.
pub fn from_chart(chart: usize, w: &[f64; 2]) -> Result<SphereBlowupPoint> {
    check_chart(chart)?;
    match chart {
        1 | 2 => Ok(match chart_phi_inv(PLANE, chart, w)? {
            BlowupPoint::Body { x } => SphereBlowupPoint::Body(phi_minus_inv(&[x[0], x[1]])),
            // dφ- at the pole is half the identity on the tangent plane
            BlowupPoint::Exceptional { dir, .. } => SphereBlowupPoint::Exceptional([dir[0], dir[1]]),
        }),
        _ => {
            let (a, b) = (w[0], w[1]);
            let (v, pivot) = if chart == 3 { ([a, a * b], a) } else { ([a * b, b], b) };
            if pivot == 0.0 {
                return Err(Error::OutsideChart(format!("{w:?} not in sphere chart {chart}")));
            }
            Ok(SphereBlowupPoint::Body(phi_plus_inv(&v)))
        }
    }
}

pub fn to_chart(chart: usize, z: &SphereBlowupPoint) -> Result<[f64; 2]> {
    check_chart(chart)?;
    match (chart, z) {
        (1 | 2, SphereBlowupPoint::Body(x)) => {
            let u = phi_minus(x);
            let w = chart_phi(PLANE, chart, &BlowupPoint::body(PLANE, u.to_vec())?)?;
            Ok([w[0], w[1]])
        }
        (1 | 2, SphereBlowupPoint::Exceptional(xi)) => {
            let w = chart_phi(PLANE, chart, &BlowupPoint::exceptional(vec![], xi)?)?;
            Ok([w[0], w[1]])
        }
        (_, SphereBlowupPoint::Body(x)) => {
            let v = phi_plus(x);
            let pivot = if chart == 3 { v[0] } else { v[1] };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::OutsideChart(format!("{x:?} not in sphere chart {chart}")));
            }
            Ok(if chart == 3 {
                [v[0], v[1] / v[0]]
            } else {
                [v[0] / v[1], v[1]]
            })
        }
        (_, SphereBlowupPoint::Exceptional(_)) => Err(Error::OutsideChart(
            "exceptional points are not in the charts induced by φ+".into(),
        )),
    }
}

/// The affine chart of `RP^2` paired with each blow-up chart.
pub fn rp2_chart(chart: usize, a: &[f64; 3]) -> Result<[f64; 2]> {
    check_chart(chart)?;
    let (num, pivot) = match chart {
        1 => ([a[2], a[1]], a[0]),
        2 => ([a[0], a[2]], a[1]),
        _ => ([a[0], a[1]], a[2]),
    };
    if pivot == 0.0 {
        return Err(Error::OutsideChart(format!("{a:?} not in projective chart {chart}")));
    }
    Ok([num[0] / pivot, num[1] / pivot])
}

/// `f` in local coordinates, by composing the charts.
pub fn local_expression(chart: usize, w: &[f64; 2]) -> Result<[f64; 2]> {
    rp2_chart(chart, &sphere_to_rp2(&from_chart(chart, w)?)?)
}

/// The closed forms `(a(b²+1), b)`, `(a, b(a²+1))`, `(a, ab)`, `(ab, b)`.
pub fn local_expression_closed(chart: usize, w: &[f64; 2]) -> Result<[f64; 2]> {
    check_chart(chart)?;
    let (a, b) = (w[0], w[1]);
    Ok(match chart {
        1 => [a * (b * b + 1.0), b],
        2 => [a, b * (a * a + 1.0)],
        3 => [a, a * b],
        _ => [a * b, b],
    })
}

/// Uniform point on `S^2` away from the removed pole.
pub fn sample_sphere(rng: &mut SampleRng) -> [f64; 3] {
    loop {
        let v = sampling::unit_vector(rng, 3);
        if v[2] < 1.0 - 1e-6 {
            return [v[0], v[1], v[2]];
        }
    }
}

pub fn sphere_point_distance(a: &SphereBlowupPoint, b: &SphereBlowupPoint) -> f64 {
    match (a, b) {
        (SphereBlowupPoint::Body(x), SphereBlowupPoint::Body(y)) => sampling::max_abs_diff(x, y),
        (SphereBlowupPoint::Exceptional(x), SphereBlowupPoint::Exceptional(y)) => sampling::max_abs_diff(x, y),
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_local_expression_value() {
        assert_eq!(local_expression_closed(1, &[1.0, 2.0]).unwrap(), [5.0, 2.0]);
        let v = local_expression(1, &[1.0, 2.0]).unwrap();
        assert!(sampling::max_abs_diff(&v, &[5.0, 2.0]) < 1e-12);
    }

    #[test]
    fn exceptional_values() {
        let z = SphereBlowupPoint::Exceptional([1.0, 0.0]);
        assert_eq!(sphere_to_rp2(&z).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(rp2_to_sphere(&[1.0, 0.0, 0.0]).unwrap(), z);
        // on the exceptional line the first expression is (0, b) -> (0, b)
        let v = local_expression(1, &[0.0, 3.0]).unwrap();
        assert!(sampling::max_abs_diff(&v, &[0.0, 3.0]) < 1e-15);
    }

    #[test]
    fn expressions_match_closed_forms() {
        let mut rng = sampling::rng(8);
        for chart in 1..=4 {
            for _ in 0..100 {
                let x = sample_sphere(&mut rng);
                let z = SphereBlowupPoint::Body(x);
                let Ok(w) = to_chart(chart, &z) else { continue };
                let back = from_chart(chart, &w).unwrap();
                assert!(sphere_point_distance(&back, &z) < 1e-10);
                let a = local_expression(chart, &w).unwrap();
                let b = local_expression_closed(chart, &w).unwrap();
                assert!(
                    sampling::max_abs_diff(&a, &b) < 1e-10 * (1.0 + b[0].abs() + b[1].abs()),
                    "chart {chart}: {a:?} vs {b:?}"
                );
            }
        }
    }

    #[test]
    fn f_round_trips() {
        let mut rng = sampling::rng(2);
        for _ in 0..200 {
            let z = SphereBlowupPoint::Body(sample_sphere(&mut rng));
            let back = rp2_to_sphere(&sphere_to_rp2(&z).unwrap()).unwrap();
            assert!(sphere_point_distance(&back, &z) < 1e-10);
        }
        let e = SphereBlowupPoint::Exceptional([0.6, -0.8]);
        assert_eq!(rp2_to_sphere(&sphere_to_rp2(&e).unwrap()).unwrap(), e);
        assert!(to_chart(3, &e).is_err());
    }
}
