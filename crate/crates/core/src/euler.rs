//! Euler-like vector fields, the field `W_σ = σ/t + ∂_t` on the deformation
//! space, and the tubular embedding obtained by flowing out of `t = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{parse_map, Expr, SmoothMap, VarNames};
use crate::pairs::{PairDims, SAMPLE_RADIUS};
use crate::sampling::{self, max_abs_diff, norm};

/// Tolerance of the local Euler-like criterion.
pub const EULER_TOL: f64 = 1e-10;
/// Largest allowed gap between successive extrapolants of `χ`.
pub const EXTRAPOLATION_TOL: f64 = 1e-4;
pub const EPS_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Default RK4 step bound for flows of `W_σ`.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Steps never exceed `|t| / STEPS_PER_UNIT_LOG`.
const STEPS_PER_UNIT_LOG: f64 = 64.0;
const FD_STEP: f64 = 1e-3;

/// A vector field on an adapted local model `(R^n, R^p)`.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub dims: PairDims,
    pub components: SmoothMap,
}

impl VectorField {
    pub fn new(dims: PairDims, components: SmoothMap) -> Result<Self> {
        if components.input_dim() != dims.n || components.output_dim() != dims.n {
            return Err(Error::ArityMismatch {
                expected: dims.n,
                found: if components.input_dim() != dims.n {
                    components.input_dim()
                } else {
                    components.output_dim()
                },
            });
        }
        Ok(VectorField { dims, components })
    }

    /// Components written in `x1, ..., xn`, separated by commas.
    pub fn parse(dims: PairDims, src: &str) -> Result<Self> {
        Self::new(dims, SmoothMap::new(dims.n, parse_map(src, &VarNames::indexed())?)?)
    }

    /// `Σ x^i ∂/∂x^i` over the normal coordinates.
    pub fn euler(dims: PairDims) -> Self {
        let outputs = (0..dims.n)
            .map(|i| if i < dims.p { Expr::constant(0.0) } else { Expr::var(i) })
            .collect();
        VectorField {
            dims,
            components: SmoothMap::new(dims.n, outputs).expect("euler field arity"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerLikeReport {
    pub vanishes_on_y: bool,
    pub normal_block_is_identity: bool,
    pub max_violation: f64,
    pub samples: usize,
}

impl EulerLikeReport {
    pub fn is_euler_like(&self) -> bool {
        self.vanishes_on_y && self.normal_block_is_identity
    }
}

/// Checks `σ(y, 0) = 0` and `∂σ_x/∂x (y, 0) = I` at sampled slice points.
pub fn is_euler_like(sigma: &VectorField, slice_samples: usize, seed: u64) -> Result<EulerLikeReport> {
    let dims = sigma.dims;
    let mut rng = sampling::rng(seed);
    let (mut vanish, mut block) = (0.0f64, 0.0f64);
    let count = if dims.p == 0 { 1 } else { slice_samples.max(1) };
    for k in 0..count {
        let y = if k == 0 {
            vec![0.0; dims.p]
        } else {
            sampling::point_in_box(&mut rng, dims.p, SAMPLE_RADIUS)
        };
        let jet = sigma.components.jet(&dims.slice_point(&y))?;
        vanish = vanish.max(jet.value.iter().fold(0.0, |a, v| a.max(v.abs())));
        for i in dims.p..dims.n {
            for j in dims.p..dims.n {
                let want = if i == j { 1.0 } else { 0.0 };
                block = block.max((jet.jacobian[(i, j)] - want).abs());
            }
        }
    }
    Ok(EulerLikeReport {
        vanishes_on_y: vanish <= EULER_TOL,
        normal_block_is_identity: block <= EULER_TOL,
        max_violation: vanish.max(block),
        samples: count,
    })
}

fn finite(v: Vec<f64>) -> Result<Vec<f64>> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::DomainViolation(format!("trajectory left the chart at {v:?}")))
    }
}

/// Flows `(x, s)` along `W_σ` for time `tau` by RK4 on `ẋ = σ(x)/t`,
/// `ṫ = 1`. Steps are capped by `step` and by `min(|t|, |s + tau|)/64`.
pub fn w_sigma_flow(sigma: &VectorField, x: &[f64], s: f64, tau: f64, step: f64) -> Result<(Vec<f64>, f64)> {
    let end = s + tau;
    if s == 0.0 || end == 0.0 || s.signum() != end.signum() {
        return Err(Error::SliceCrossing { s, end });
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::DomainViolation(format!("step must be positive, got {step}")));
    }
    let rhs = |p: &[f64], t: f64| -> Result<Vec<f64>> { Ok(sigma.eval(p)?.into_iter().map(|c| c / t).collect()) };
    let axpy = |p: &[f64], k: &[f64], h: f64| -> Vec<f64> { p.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let mut p = finite(x.to_vec())?;
    let mut t = s;
    let dir = tau.signum();
    while (end - t) * dir > 0.0 {
        let cap = step.min(t.abs().min(end.abs()) / STEPS_PER_UNIT_LOG);
        let h = dir * cap.min((end - t).abs());
        let k1 = rhs(&p, t)?;
        let k2 = rhs(&axpy(&p, &k1, h / 2.0), t + h / 2.0)?;
        let k3 = rhs(&axpy(&p, &k2, h / 2.0), t + h / 2.0)?;
        let k4 = rhs(&axpy(&p, &k3, h), t + h)?;
        let next: Vec<f64> = (0..p.len())
            .map(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        p = finite(next)?;
        let stepped = t + h;
        t = if (end - stepped) * dir <= 0.0 { end } else { stepped };
    }
    Ok((p, end))
}

/// Distances of the RK4 flow of the Euler field from the two candidate
/// closed forms `x0 · exp(e)` with `e = log(1 + τ/s)` and `e = -log(1 - τ/s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentComparison {
    pub s: f64,
    pub tau: f64,
    pub log_one_plus: f64,
    pub minus_log_one_minus: f64,
}

pub fn exponent_comparison(dims: PairDims, x: &[f64], s: f64, tau: f64) -> Result<ExponentComparison> {
    let (flowed, _) = w_sigma_flow(&VectorField::euler(dims), x, s, tau, DEFAULT_STEP)?;
    let scaled = |e: f64| -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, c)| if i < dims.p { *c } else { c * e.exp() })
            .collect()
    };
    let minus = if tau / s < 1.0 {
        max_abs_diff(&flowed, &scaled(-(1.0 - tau / s).ln()))
    } else {
        f64::INFINITY
    };
    Ok(ExponentComparison {
        s,
        tau,
        log_one_plus: max_abs_diff(&flowed, &scaled((1.0 + tau / s).ln())),
        minus_log_one_minus: minus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubularValue {
    pub value: Vec<f64>,
    /// `χ_ε` for each `ε` of the schedule.
    pub estimates: Vec<Vec<f64>>,
    /// Linear extrapolants from consecutive pairs of the schedule.
    pub extrapolants: Vec<Vec<f64>>,
    pub spread: f64,
}

/// `χ_ε(y, ξ)`: the `W_σ` flow from `((y, εξ), ε)` to `t = 1`.
pub fn chi_eps(sigma: &VectorField, y: &[f64], xi: &[f64], eps: f64) -> Result<Vec<f64>> {
    let start: Vec<f64> = sigma.dims.join(y, &xi.iter().map(|c| eps * c).collect::<Vec<_>>());
    Ok(w_sigma_flow(sigma, &start, eps, 1.0 - eps, DEFAULT_STEP)?.0)
}

/// `χ(y, ξ)` by Richardson extrapolation of `χ_ε` to `ε = 0`.
pub fn tubular_from_euler(sigma: &VectorField, y: &[f64], xi: &[f64], eps_schedule: &[f64]) -> Result<TubularValue> {
    let dims = sigma.dims;
    if y.len() != dims.p || xi.len() != dims.q() {
        return Err(Error::ArityMismatch {
            expected: dims.n,
            found: y.len() + xi.len(),
        });
    }
    if eps_schedule.len() < 2
        || eps_schedule.iter().any(|e| !(*e > 0.0 && *e < 1.0))
        || eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::DomainViolation(format!(
            "ε schedule must hold at least two decreasing values in (0, 1), got {eps_schedule:?}"
        )));
    }
    let estimates = eps_schedule
        .iter()
        .map(|&e| chi_eps(sigma, y, xi, e))
        .collect::<Result<Vec<_>>>()?;
    let extrapolants: Vec<Vec<f64>> = (1..estimates.len())
        .map(|k| {
            let (ea, eb) = (eps_schedule[k - 1], eps_schedule[k]);
            let (ca, cb) = (&estimates[k - 1], &estimates[k]);
            ca.iter().zip(cb).map(|(a, b)| (ea * b - eb * a) / (ea - eb)).collect()
        })
        .collect();
    let spread = extrapolants
        .windows(2)
        .map(|w| max_abs_diff(&w[0], &w[1]))
        .fold(0.0, f64::max);
    if spread > EXTRAPOLATION_TOL {
        return Err(Error::NonConvergence(spread));
    }
    Ok(TubularValue {
        value: extrapolants.last().expect("at least one extrapolant").clone(),
        estimates,
        extrapolants,
        spread,
    })
}

fn chi(sigma: &VectorField, y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    Ok(tubular_from_euler(sigma, y, xi, &EPS_SCHEDULE)?.value)
}

/// Defining properties of `χ` at sampled `(y, ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubularReport {
    pub samples: usize,
    /// `|χ(y, 0) - (y, 0)|`.
    pub slice: f64,
    /// `|d_N χ(y) - I|` on the normal rows, by central differences.
    pub normal_derivative: f64,
    /// `|σ(χ(y, ξ)) - dχ(y, ξ) E(y, ξ)|`.
    pub relatedness: f64,
}

/// Samples `|ξ| <= radius` and measures the three properties.
pub fn tubular_report(sigma: &VectorField, samples: usize, radius: f64, seed: u64) -> Result<TubularReport> {
    let dims = sigma.dims;
    let q = dims.q();
    let mut rng = sampling::rng(seed);
    let mut r = TubularReport {
        samples,
        slice: 0.0,
        normal_derivative: 0.0,
        relatedness: 0.0,
    };
    for _ in 0..samples {
        let y = sampling::point_in_box(&mut rng, dims.p, SAMPLE_RADIUS);
        let zero = vec![0.0; q];
        r.slice = r
            .slice
            .max(max_abs_diff(&chi(sigma, &y, &zero)?, &dims.slice_point(&y)));
        for j in 0..q {
            let mut e = zero.clone();
            e[j] = FD_STEP;
            let plus = chi(sigma, &y, &e)?;
            e[j] = -FD_STEP;
            let minus = chi(sigma, &y, &e)?;
            for i in dims.p..dims.n {
                let d = (plus[i] - minus[i]) / (2.0 * FD_STEP);
                let want = if i == dims.p + j { 1.0 } else { 0.0 };
                r.normal_derivative = r.normal_derivative.max((d - want).abs());
            }
        }
        let dir = sampling::unit_vector(&mut rng, q);
        let scale = radius * sampling::point_in_box(&mut rng, 1, 1.0)[0].abs().max(0.1);
        let xi: Vec<f64> = dir.iter().map(|c| scale * c).collect();
        let at = chi(sigma, &y, &xi)?;
        let along = |f: f64| -> Vec<f64> { xi.iter().map(|c| f * c).collect() };
        let plus = chi(sigma, &y, &along(1.0 + FD_STEP))?;
        let minus = chi(sigma, &y, &along(1.0 - FD_STEP))?;
        // dχ · E with E(y, ξ) = ξ ∂_ξ is the derivative along the ray
        let push: Vec<f64> = plus
            .iter()
            .zip(&minus)
            .map(|(a, b)| (a - b) / (2.0 * FD_STEP))
            .collect();
        let rel = max_abs_diff(&sigma.eval(&at)?, &push) / (1.0 + norm(&push));
        r.relatedness = r.relatedness.max(rel);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANE: PairDims = PairDims { n: 2, p: 0 };
    const LINE: PairDims = PairDims { n: 1, p: 0 };

    #[test]
    fn euler_like_criterion() {
        assert!(is_euler_like(&VectorField::euler(PLANE), 8, 1).unwrap().is_euler_like());
        let strip = PairDims { n: 2, p: 1 };
        let good = VectorField::parse(strip, "0, x2 + x2^2").unwrap();
        assert!(is_euler_like(&good, 32, 1).unwrap().is_euler_like());
        let bad = VectorField::parse(strip, "0, 2*x2").unwrap();
        let r = is_euler_like(&bad, 32, 1).unwrap();
        assert!(r.vanishes_on_y && !r.normal_block_is_identity);
        assert!((r.max_violation - 1.0).abs() < 1e-15);
        let moved = VectorField::parse(strip, "1, x2").unwrap();
        assert!(!is_euler_like(&moved, 4, 1).unwrap().vanishes_on_y);
    }

    #[test]
    fn euler_flow_closed_form() {
        let e = VectorField::euler(PLANE);
        let (x, t) = w_sigma_flow(&e, &[3.0, 4.0], 1.0, 1.0, DEFAULT_STEP).unwrap();
        assert!(max_abs_diff(&x, &[6.0, 8.0]) < 1e-9, "{x:?}");
        assert_eq!(t, 2.0);
        let (x, t) = w_sigma_flow(&e, &[3.0, 4.0], 1.5, 0.0, DEFAULT_STEP).unwrap();
        assert_eq!((x, t), (vec![3.0, 4.0], 1.5));
        for (s, tau) in [(1.0, 0.5), (1.0, -0.5), (-2.0, 1.0), (0.3, 0.1), (0.7, 0.35)] {
            let (x, t) = w_sigma_flow(&e, &[3.0, -1.0], s, tau, DEFAULT_STEP).unwrap();
            assert_eq!(t, s + tau);
            let f = (s + tau) / s;
            assert!(max_abs_diff(&x, &[3.0 * f, -f]) < 1e-9);
        }
    }

    #[test]
    fn slice_crossing_is_refused() {
        let e = VectorField::euler(PLANE);
        assert!(matches!(
            w_sigma_flow(&e, &[1.0, 1.0], 1.0, -2.0, DEFAULT_STEP),
            Err(Error::SliceCrossing { .. })
        ));
        assert!(w_sigma_flow(&e, &[1.0, 1.0], 0.0, 1.0, DEFAULT_STEP).is_err());
        let blow = VectorField::parse(LINE, "x1 + x1^2").unwrap();
        assert!(matches!(
            w_sigma_flow(&blow, &[2.0], 1.0, 10.0, DEFAULT_STEP),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn rk4_matches_log_one_plus() {
        for (s, tau) in [(1.0, 0.5), (1.0, -0.5), (2.0, 0.7)] {
            let c = exponent_comparison(PLANE, &[3.0, 4.0], s, tau).unwrap();
            assert!(c.log_one_plus < 1e-9, "{c:?}");
            assert!(c.minus_log_one_minus > 1e-2, "{c:?}");
        }
    }

    #[test]
    fn tubular_examples() {
        let e = VectorField::euler(PLANE);
        let v = tubular_from_euler(&e, &[], &[0.3, -0.2], &EPS_SCHEDULE).unwrap();
        assert!(max_abs_diff(&v.value, &[0.3, -0.2]) < 1e-9);
        let sigma = VectorField::parse(LINE, "x1 + x1^2").unwrap();
        for xi in [0.5, -0.5, 0.2, -0.8] {
            let v = tubular_from_euler(&sigma, &[], &[xi], &EPS_SCHEDULE).unwrap();
            let want = xi / (1.0 - xi);
            assert!((v.value[0] - want).abs() < 1e-6 * (1.0 + want.abs()), "{xi}: {:?}", v);
        }
        assert!(tubular_from_euler(&sigma, &[], &[0.5], &[1e-3]).is_err());
        // close to the pole at ξ = 1 the second-order term dominates
        assert!(matches!(
            tubular_from_euler(&sigma, &[], &[0.8], &EPS_SCHEDULE),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn tubular_properties() {
        let strip = PairDims { n: 2, p: 1 };
        let sigma = VectorField::parse(strip, "x1*x2, x2 + x2^2 + x1*x2^2").unwrap();
        assert!(is_euler_like(&sigma, 16, 3).unwrap().is_euler_like());
        let r = tubular_report(&sigma, 10, 0.3, 4).unwrap();
        assert!(r.slice <= 1e-10, "{r:?}");
        assert!(r.normal_derivative <= 1e-4, "{r:?}");
        assert!(r.relatedness <= 1e-4, "{r:?}");
    }
}
