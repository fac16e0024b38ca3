//! Strict transforms of plane curves `g(x, y) = 0` under the blow-up of the
//! origin, in either of the two standard charts.
//!
//! Chart 1 has coordinates `(x, s)` with `(x, y) = (x, x s)`; chart 2 has
//! `(s, y)` with `(x, y) = (s y, y)`. The exceptional line is `x = 0`,
//! respectively `y = 0`.

use num_bigint::BigInt;
use serde::Serialize;

use super::{chart_phi, BlowupPoint};
use crate::error::{Error, Result};
use crate::jet::{parse_with_names, VarNames};
use crate::pairs::PairDims;
use crate::poly::{approx_real_roots, real_roots, to_f64, MultiPoly, Rational, RealRoot};

const PLANE: PairDims = PairDims { n: 2, p: 0 };

/// Half-width of the sampling window of the point cloud.
pub const CLOUD_RADIUS: f64 = 1.0;

/// Parses a polynomial in `x, y` (or `x1, x2`).
pub fn parse_curve(src: &str) -> Result<MultiPoly> {
    let names = VarNames::indexed().with_alias("x", 0).with_alias("y", 1);
    MultiPoly::from_expr(&parse_with_names(src, &names)?, 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictTransform {
    pub chart: usize,
    /// `g(x, y)` pulled back to chart coordinates.
    pub total: MultiPoly,
    /// Power of the exceptional coordinate divided out.
    pub exceptional_power: u32,
    pub strict: MultiPoly,
    /// Roots in `s` of the strict transform on the exceptional line.
    pub exceptional_points: Vec<RealRoot>,
}

impl StrictTransform {
    pub fn variable_names(&self) -> Vec<String> {
        chart_variables(self.chart)
    }

    pub fn strict_display(&self) -> String {
        self.strict.display_with(&self.variable_names()).to_string()
    }

    /// Index of the exceptional coordinate in chart coordinates.
    pub fn exceptional_var(&self) -> usize {
        exceptional_var(self.chart)
    }
}

pub fn chart_variables(chart: usize) -> Vec<String> {
    match chart {
        1 => vec!["x".into(), "s".into()],
        _ => vec!["s".into(), "y".into()],
    }
}

fn exceptional_var(chart: usize) -> usize {
    if chart == 1 {
        0
    } else {
        1
    }
}

fn check_chart(chart: usize) -> Result<()> {
    if chart == 1 || chart == 2 {
        Ok(())
    } else {
        Err(Error::OutsideChart(format!("curve chart must be 1 or 2, got {chart}")))
    }
}

pub fn strict_transform(g: &MultiPoly, chart: usize) -> Result<StrictTransform> {
    check_chart(chart)?;
    if g.nvars() != 2 {
        return Err(Error::ArityMismatch {
            expected: 2,
            found: g.nvars(),
        });
    }
    if g.is_zero() {
        return Err(Error::DegenerateCurve);
    }
    let a = MultiPoly::var(2, 0);
    let b = MultiPoly::var(2, 1);
    let ab = &a * &b;
    let total = match chart {
        1 => g.substitute(&[a, ab]),
        _ => g.substitute(&[ab, b]),
    };
    let e = exceptional_var(chart);
    let m = total.min_degree_in(e..e + 1).unwrap_or(0);
    let strict = total.div_var_power(e, m)?;
    let zero = Rational::from_integer(BigInt::from(0));
    let on_divisor = strict.univariate_at(1 - e, &[zero.clone(), zero]);
    let exceptional_points = if on_divisor.is_zero() {
        Vec::new()
    } else {
        real_roots(&on_divisor)
    };
    Ok(StrictTransform {
        chart,
        total,
        exceptional_power: m,
        strict,
        exceptional_points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveCloud {
    /// Points `(w1, w2)` in chart coordinates.
    pub points: Vec<[f64; 2]>,
    /// Largest `|g~(w)|` over the cloud.
    pub strict_residual: f64,
    /// Largest distance in `s` from a cloud point near the exceptional line
    /// to the nearest exceptional root.
    pub limit_gap: Option<f64>,
}

/// Samples `g = 0` away from the origin and maps the points into the chart.
/// Sweeps `x` (chart 1) or `y` (chart 2) over `samples` rational abscissae.
pub fn strict_transform_cloud(st: &StrictTransform, g: &MultiPoly, samples: usize) -> Result<CurveCloud> {
    let e = st.exceptional_var();
    let sweep = if st.chart == 1 { 0 } else { 1 };
    let mut points = Vec::new();
    let n = samples.max(1) as i64;
    let radius = Rational::from_integer(BigInt::from(CLOUD_RADIUS as i64));
    for k in 0..n {
        // odd numerator: the abscissa never vanishes
        let u = Rational::new(BigInt::from(4 * k + 3 - 2 * n), BigInt::from(2 * n)) * &radius;
        let mut at = vec![Rational::from_integer(BigInt::from(0)); 2];
        at[sweep] = u.clone();
        let uni = g.univariate_at(1 - sweep, &at);
        if uni.is_zero() {
            continue;
        }
        let uf = to_f64(&u);
        let coeffs: Vec<f64> = uni.coeffs().iter().map(to_f64).collect();
        for root in approx_real_roots(&coeffs) {
            let mut x = [0.0; 2];
            x[sweep] = uf;
            x[1 - sweep] = root;
            let w = chart_phi(PLANE, st.chart, &BlowupPoint::Body { x: x.to_vec() })?;
            points.push([w[0], w[1]]);
        }
    }
    let strict_residual = points.iter().map(|w| st.strict.eval_f64(w).abs()).fold(0.0, f64::max);
    let near = 2.0 * CLOUD_RADIUS / n as f64 + 1e-12;
    let gaps: Vec<f64> = points
        .iter()
        .filter(|w| w[e].abs() <= near)
        .filter_map(|w| {
            st.exceptional_points
                .iter()
                .map(|r| (w[1 - e] - r.value).abs())
                .min_by(f64::total_cmp)
        })
        .collect();
    Ok(CurveCloud {
        points,
        strict_residual,
        limit_gap: gaps.into_iter().reduce(f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;

    fn roots(st: &StrictTransform) -> Vec<(Option<Rational>, u32)> {
        st.exceptional_points
            .iter()
            .map(|r| (r.exact.clone(), r.multiplicity))
            .collect()
    }

    #[test]
    fn nodal_cubic() {
        let g = parse_curve("y^2 - x^2*(x+1)").unwrap();
        let st = strict_transform(&g, 1).unwrap();
        assert_eq!(st.exceptional_power, 2);
        assert_eq!(st.strict, parse_curve("y^2 - x - 1").unwrap());
        assert_eq!(st.strict_display(), "s^2 - x - 1");
        assert_eq!(roots(&st), vec![(Some(rational(-1, 1)), 1), (Some(rational(1, 1)), 1)]);
        let cloud = strict_transform_cloud(&st, &g, 400).unwrap();
        assert!(cloud.points.len() > 400);
        assert!(cloud.strict_residual < 1e-12);
        assert!(cloud.limit_gap.unwrap() < 1e-2);
    }

    #[test]
    fn cusp_and_line() {
        let cusp = strict_transform(&parse_curve("y^2 - x^3").unwrap(), 1).unwrap();
        assert_eq!(cusp.strict, parse_curve("y^2 - x").unwrap());
        assert_eq!(roots(&cusp), vec![(Some(rational(0, 1)), 2)]);
        let line = strict_transform(&parse_curve("y").unwrap(), 1).unwrap();
        assert_eq!(line.strict_display(), "s");
        assert_eq!(roots(&line), vec![(Some(rational(0, 1)), 1)]);
    }

    #[test]
    fn second_chart() {
        // in chart 2, x = s y, so the cusp becomes y^2 - s^3 y^3 = y^2 (1 - s^3 y)
        let st = strict_transform(&parse_curve("y^2 - x^3").unwrap(), 2).unwrap();
        assert_eq!(st.exceptional_power, 2);
        assert!(st.exceptional_points.is_empty());
        let node = strict_transform(&parse_curve("y^2 - x^2*(x+1)").unwrap(), 2).unwrap();
        assert_eq!(node.exceptional_points.len(), 2);
        let g = parse_curve("x^2 - y^2").unwrap();
        let st = strict_transform(&g, 2).unwrap();
        let cloud = strict_transform_cloud(&st, &g, 100).unwrap();
        assert!(cloud.strict_residual < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            strict_transform(&parse_curve("0").unwrap(), 1),
            Err(Error::DegenerateCurve)
        );
        assert!(strict_transform(&parse_curve("x").unwrap(), 3).is_err());
        assert!(parse_curve("y/x").is_err());
    }
}
