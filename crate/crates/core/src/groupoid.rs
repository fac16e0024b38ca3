//! Groupoids whose structure maps are smooth expressions, with sampled
//! axiom checks.
//!
//! The main instance is the blow-up of the pair groupoid `R x R ⇉ R` along
//! `{(0, 0)} ⇉ {0}`, with arrows `[ξ1, ξ2, t]` coordinatized by
//! `(λ, a) = (ξ1/ξ2, ξ2 t)`. It coincides with the action groupoid of
//! `R^×` acting on `R` by multiplication.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::blowup::{blowdown, blowup_map, canonicalize, point_distance, sample_point, BlowupPoint};
use crate::dnc::DncPoint;
use crate::error::{Error, Result};
use crate::jet::{parse_map, Expr, Guard, SmoothMap, VarNames};
use crate::pairs::{self, MapOfPairs, PairDims};
use crate::sampling::{self, max_abs_diff, SampleRng};

/// Two arrows compose when `|s(g) - t(h)|` is below this.
pub const COMPOSABILITY_TOL: f64 = 1e-10;
/// Default bound for every axiom residual.
pub const AXIOM_TOL: f64 = 1e-9;
/// Agreement of the polar and `(λ, a)` presentations.
pub const PRESENTATION_TOL: f64 = 1e-10;
/// Bound for the action axioms of the rotation example.
pub const ACTION_TOL: f64 = 1e-10;

const BASE_RADIUS: f64 = 2.0;
const FIBER_RADIUS: f64 = 2.0;
/// Sampled scale factors stay at least this far from zero.
const MIN_SCALE: f64 = 0.1;

fn fixed_map(n: usize, src: &str) -> SmoothMap {
    let outputs = parse_map(src, &VarNames::indexed()).expect("structure map parses");
    SmoothMap::new(n, outputs).expect("structure map arity")
}

fn non_zero(src: &str) -> Guard {
    Guard::non_zero(parse_map(src, &VarNames::indexed()).expect("guard parses")[0].clone())
}

fn positive(src: &str) -> Guard {
    Guard::positive(parse_map(src, &VarNames::indexed()).expect("guard parses")[0].clone())
}

/// Structure maps `(s, t, m, i, u)` of a groupoid `G ⇉ M` in coordinates.
///
/// `mult` takes `(g, h)` concatenated and returns `g h`, defined when
/// `s(g) = t(h)`. `source_fiber` parametrizes `s^{-1}(x)` by
/// `(x, ρ) ∈ M x R^fiber_dim` and drives the sampling.
#[derive(Debug, Clone)]
pub struct GroupoidSpec {
    pub name: String,
    pub arrow_dim: usize,
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub source: SmoothMap,
    pub target: SmoothMap,
    pub mult: SmoothMap,
    pub inv: SmoothMap,
    pub unit: SmoothMap,
    pub source_fiber: SmoothMap,
    pub composability_tol: f64,
}

impl GroupoidSpec {
    /// Checks that every map has the arity its role requires.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.arrow_dim, self.base_dim);
        let shapes = [
            ("source", &self.source, a, b),
            ("target", &self.target, a, b),
            ("mult", &self.mult, 2 * a, a),
            ("inv", &self.inv, a, a),
            ("unit", &self.unit, b, a),
            ("source_fiber", &self.source_fiber, b + self.fiber_dim, a),
        ];
        for (role, map, inputs, outputs) in shapes {
            if map.input_dim() != inputs || map.output_dim() != outputs {
                return Err(Error::InvalidModel(format!(
                    "{role} is {} -> {}, expected {inputs} -> {outputs}",
                    map.input_dim(),
                    map.output_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn composable(&self, g: &[f64], h: &[f64]) -> Result<bool> {
        let sg = self.source.eval(g)?;
        let th = self.target.eval(h)?;
        Ok(max_abs_diff(&sg, &th) < self.composability_tol)
    }

    /// `g h`, refusing pairs that fail the composability predicate.
    pub fn multiply(&self, g: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        if !self.composable(g, h)? {
            return Err(Error::DomainViolation(format!("{g:?} and {h:?} are not composable")));
        }
        let mut pair = g.to_vec();
        pair.extend_from_slice(h);
        self.mult.eval(&pair)
    }

    /// The same groupoid with the factors of `mult` exchanged.
    pub fn with_swapped_mult(&self) -> Result<Self> {
        let a = self.arrow_dim;
        let swap = SmoothMap::identity(2 * a).select((a..2 * a).chain(0..a));
        Ok(GroupoidSpec {
            name: format!("{} (swapped mult)", self.name),
            mult: self.mult.compose(&swap)?,
            ..self.clone()
        })
    }

    fn arrow_from(&self, rng: &mut SampleRng, x: &[f64]) -> Option<Vec<f64>> {
        for _ in 0..64 {
            let mut input = x.to_vec();
            input.extend(sampling::point_in_box(rng, self.fiber_dim, FIBER_RADIUS));
            if let Ok(g) = self.source_fiber.eval(&input) {
                if self.source.in_domain(&g) {
                    return Some(g);
                }
            }
        }
        None
    }

    fn base_point(&self, rng: &mut SampleRng) -> Vec<f64> {
        sampling::point_in_box(rng, self.base_dim, BASE_RADIUS)
    }
}

/// Pair groupoid `R x R ⇉ R`: arrows `(x, y)` from `y` to `x`.
pub fn pair_groupoid() -> GroupoidSpec {
    GroupoidSpec {
        name: "pair groupoid".into(),
        arrow_dim: 2,
        base_dim: 1,
        fiber_dim: 1,
        source: fixed_map(2, "x2"),
        target: fixed_map(2, "x1"),
        mult: fixed_map(4, "x1, x4"),
        inv: fixed_map(2, "x2, x1"),
        unit: fixed_map(1, "x1, x1"),
        source_fiber: fixed_map(2, "x2, x1"),
        composability_tol: COMPOSABILITY_TOL,
    }
}

/// `R^× ⋉ R`: arrows `(λ, a)` from `a` to `λ a`.
pub fn action_groupoid() -> GroupoidSpec {
    let arrow = non_zero("x1");
    GroupoidSpec {
        name: "action groupoid".into(),
        arrow_dim: 2,
        base_dim: 1,
        fiber_dim: 1,
        source: fixed_map(2, "x2").with_guard(arrow.clone()),
        target: fixed_map(2, "x1*x2").with_guard(arrow.clone()),
        mult: fixed_map(4, "x1*x3, x4")
            .with_guard(non_zero("x1"))
            .with_guard(non_zero("x3")),
        inv: fixed_map(2, "1/x1, x1*x2").with_guard(arrow),
        unit: fixed_map(1, "1, x1"),
        source_fiber: fixed_map(2, "x2, x1").with_guard(positive(&format!("x2^2 - {}", MIN_SCALE * MIN_SCALE))),
        composability_tol: COMPOSABILITY_TOL,
    }
}

/// Normal-cone level formulas for the pair groupoid, on representatives
/// `(ξ1, ξ2, t)` of arrows and `(ξ, t)` of units.
mod normal_cone {
    use super::{fixed_map, non_zero, SmoothMap};

    /// `(λ, a) -> (λ, 1, a)`.
    pub fn arrow_rep() -> SmoothMap {
        fixed_map(2, "x1, 1, x2")
    }

    /// `[ξ1, ξ2, t] -> (ξ1/ξ2, ξ2 t)`, defined off `ξ2 = 0`.
    pub fn arrow_coords() -> SmoothMap {
        fixed_map(3, "x1/x2, x2*x3").with_guard(non_zero("x2"))
    }

    /// `a -> (1, a)`.
    pub fn base_rep() -> SmoothMap {
        fixed_map(1, "1, x1")
    }

    /// `[ξ, t] -> ξ t`, the identification `Blup(R, 0) = R`.
    pub fn base_coords() -> SmoothMap {
        fixed_map(2, "x1*x2")
    }

    pub fn source() -> SmoothMap {
        fixed_map(3, "x2, x3")
    }

    pub fn target() -> SmoothMap {
        fixed_map(3, "x1, x3")
    }

    pub fn inv() -> SmoothMap {
        fixed_map(3, "x2, x1, x3")
    }

    pub fn unit() -> SmoothMap {
        fixed_map(2, "x1, x1, x2")
    }

    /// `((ξ1, ξ2, t), (ξ2, ξ3, t)) -> (ξ1, ξ3, t)`.
    pub fn mult() -> SmoothMap {
        fixed_map(6, "x1, x5, x6")
    }

    /// Representatives of `(μ, b)` and `(λ, a)` sharing the middle
    /// coordinate: `(μ, b)` is rescaled by `1/λ` to `(μλ, λ, b/λ)`.
    pub fn composable_rep() -> SmoothMap {
        fixed_map(4, "x1*x3, x3, x2/x3, x3, 1, x4").with_guard(non_zero("x3"))
    }
}

/// The blow-up of the pair groupoid of `R` along the origin, obtained by
/// pushing the normal-cone structure maps through the arrow coordinates.
pub fn blowup_pair_groupoid() -> GroupoidSpec {
    use normal_cone as nc;
    let arrow = non_zero("x1");
    let through = |level: SmoothMap, rep: SmoothMap, coords: SmoothMap| {
        coords
            .compose(&level)
            .and_then(|m| m.compose(&rep))
            .expect("normal-cone composition")
    };
    GroupoidSpec {
        name: "blow-up groupoid".into(),
        arrow_dim: 2,
        base_dim: 1,
        fiber_dim: 1,
        source: through(nc::source(), nc::arrow_rep(), nc::base_coords()).with_guard(arrow.clone()),
        target: through(nc::target(), nc::arrow_rep(), nc::base_coords()).with_guard(arrow.clone()),
        mult: through(nc::mult(), nc::composable_rep(), nc::arrow_coords()).with_guard(non_zero("x1")),
        inv: through(nc::inv(), nc::arrow_rep(), nc::arrow_coords()).with_guard(arrow),
        unit: through(nc::unit(), nc::base_rep(), nc::arrow_coords()),
        source_fiber: fixed_map(2, "x2, x1").with_guard(positive(&format!("x2^2 - {}", MIN_SCALE * MIN_SCALE))),
        composability_tol: COMPOSABILITY_TOL,
    }
}

/// `(u, v) -> (a(u), b(v))`.
fn block_product(a: &SmoothMap, b: &SmoothMap) -> SmoothMap {
    let n = a.input_dim() + b.input_dim();
    let left: Vec<Expr> = (0..a.input_dim()).map(Expr::var).collect();
    let right: Vec<Expr> = (a.input_dim()..n).map(Expr::var).collect();
    a.substitute(n, &left)
        .and_then(|l| l.concat(&b.substitute(n, &right)?))
        .expect("block product arity")
}

/// `(θ1, θ2, t) -> (θ1/θ2, t θ2)`, off the removed axes.
fn polar_coords() -> SmoothMap {
    fixed_map(3, "x1/x2, x3*x2")
        .with_guard(non_zero("x1"))
        .with_guard(non_zero("x2"))
}

/// `(λ, a) -> (|λ|, sgn λ, sgn λ · a r) / (r, r, 1)` with `r = sqrt(1 + λ²)`,
/// the representative whose first angle coordinate is positive.
fn polar_rep() -> SmoothMap {
    fixed_map(
        2,
        "sqrt(x1^2)/sqrt(1 + x1^2), (x1/sqrt(x1^2))/sqrt(1 + x1^2), (x1/sqrt(x1^2))*x2*sqrt(1 + x1^2)",
    )
    .with_guard(non_zero("x1"))
}

/// Arrows `[θ, t] ∈ (S^1 x R)/Z_2` of the blow-up groupoid, stored as
/// `(θ1, θ2, t)` with `θ1 > 0`; `s = t θ2` and `t = t θ1`.
pub fn polar_blowup_groupoid() -> GroupoidSpec {
    let action = blowup_pair_groupoid();
    let conv = polar_coords();
    let rep = polar_rep();
    let pair_conv = block_product(&conv, &conv);
    let compose = |outer: &SmoothMap, inner: &SmoothMap| outer.compose(inner).expect("polar composition");
    GroupoidSpec {
        name: "polar blow-up groupoid".into(),
        arrow_dim: 3,
        base_dim: 1,
        fiber_dim: 1,
        source: fixed_map(3, "x3*x2").with_guard(non_zero("x1*x2")),
        target: fixed_map(3, "x3*x1").with_guard(non_zero("x1*x2")),
        mult: compose(&compose(&rep, &action.mult), &pair_conv),
        inv: compose(&compose(&rep, &action.inv), &conv),
        unit: compose(&rep, &action.unit),
        source_fiber: compose(&rep, &action.source_fiber),
        composability_tol: COMPOSABILITY_TOL,
    }
}

/// Largest violation of each groupoid axiom over the sampled tuples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub name: String,
    pub samples: usize,
    pub composable_tuples: usize,
    pub rejected: usize,
    /// `|s(gh) - s(h)|`.
    pub product_source: f64,
    /// `|t(gh) - t(g)|`.
    pub product_target: f64,
    /// `|(fg)h - f(gh)|`.
    pub associativity: f64,
    /// `u(t g) g = g = g u(s g)` and `s u = t u = id`.
    pub units: f64,
    /// `g^{-1} g = u(s g)`, `g g^{-1} = u(t g)`.
    pub inverses: f64,
}

impl AxiomReport {
    pub fn violations(&self) -> [(&'static str, f64); 5] {
        [
            ("product_source", self.product_source),
            ("product_target", self.product_target),
            ("associativity", self.associativity),
            ("units", self.units),
            ("inverses", self.inverses),
        ]
    }

    pub fn max_violation(&self) -> f64 {
        self.violations().iter().map(|v| v.1).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.violations().iter().all(|v| v.1 <= tol)
    }
}

struct Triple {
    f: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
}

fn sample_triple(spec: &GroupoidSpec, rng: &mut SampleRng) -> Option<Triple> {
    let x = spec.base_point(rng);
    let h = spec.arrow_from(rng, &x)?;
    let g = spec.arrow_from(rng, &spec.target.eval(&h).ok()?)?;
    let f = spec.arrow_from(rng, &spec.target.eval(&g).ok()?)?;
    Some(Triple { f, g, h })
}

fn product(spec: &GroupoidSpec, g: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let mut pair = g.to_vec();
    pair.extend_from_slice(h);
    spec.mult.eval(&pair)
}

/// Only the sampled pairs `(f, g)` and `(g, h)` are tested for
/// composability; derived products go straight through `mult` so that a
/// broken law shows up as a residual rather than a rejection.
fn triple_residuals(spec: &GroupoidSpec, tr: &Triple) -> Result<[f64; 5]> {
    let Triple { f, g, h } = tr;
    let gh = spec.multiply(g, h)?;
    let fg = spec.multiply(f, g)?;
    let product_source = max_abs_diff(&spec.source.eval(&gh)?, &spec.source.eval(h)?);
    let product_target = max_abs_diff(&spec.target.eval(&gh)?, &spec.target.eval(g)?);
    let associativity = max_abs_diff(&product(spec, &fg, h)?, &product(spec, f, &gh)?);

    let (sg, tg) = (spec.source.eval(g)?, spec.target.eval(g)?);
    let (us, ut) = (spec.unit.eval(&sg)?, spec.unit.eval(&tg)?);
    let mut units = max_abs_diff(&product(spec, &ut, g)?, g).max(max_abs_diff(&product(spec, g, &us)?, g));
    for (x, u) in [(&sg, &us), (&tg, &ut)] {
        units = units
            .max(max_abs_diff(&spec.source.eval(u)?, x))
            .max(max_abs_diff(&spec.target.eval(u)?, x));
    }

    let gi = spec.inv.eval(g)?;
    let inverses = max_abs_diff(&product(spec, &gi, g)?, &us)
        .max(max_abs_diff(&product(spec, g, &gi)?, &ut))
        .max(max_abs_diff(&spec.source.eval(&gi)?, &tg))
        .max(max_abs_diff(&spec.target.eval(&gi)?, &sg));
    Ok([product_source, product_target, associativity, units, inverses])
}

/// Samples composable triples `(f, g, h)` and measures every axiom.
pub fn check_axioms(spec: &GroupoidSpec, samples: usize, seed: u64) -> Result<AxiomReport> {
    spec.validate()?;
    let mut rng = sampling::rng(seed);
    let mut worst = [0.0f64; 5];
    let (mut accepted, mut rejected) = (0, 0);
    let mut attempts = 0;
    while accepted < samples && attempts < 20 * samples.max(1) {
        attempts += 1;
        let Some(tr) = sample_triple(spec, &mut rng) else {
            rejected += 1;
            continue;
        };
        match triple_residuals(spec, &tr) {
            Ok(r) => {
                accepted += 1;
                for (w, v) in worst.iter_mut().zip(r) {
                    // a NaN residual must not be swallowed by max
                    *w = if v.is_nan() { f64::INFINITY } else { w.max(v) };
                }
            }
            Err(_) => rejected += 1,
        }
    }
    if accepted == 0 {
        return Err(Error::SamplingFailure(format!(
            "no composable tuples for {} in {attempts} attempts",
            spec.name
        )));
    }
    Ok(AxiomReport {
        name: spec.name.clone(),
        samples,
        composable_tuples: accepted,
        rejected,
        product_source: worst[0],
        product_target: worst[1],
        associativity: worst[2],
        units: worst[3],
        inverses: worst[4],
    })
}

/// `(θ, t) -> (θ1/θ2, t θ2)`.
pub fn polar_to_action(theta: [f64; 2], t: f64) -> Result<[f64; 2]> {
    if theta[0] * theta[1] == 0.0 {
        return Err(Error::OutsideChart(format!("θ = {theta:?} lies on a removed axis")));
    }
    Ok([theta[0] / theta[1], t * theta[1]])
}

/// Inverse of [`polar_to_action`], returning the representative with `θ1 > 0`.
pub fn action_to_polar(arrow: [f64; 2]) -> Result<([f64; 2], f64)> {
    let v = polar_rep().eval(&arrow)?;
    Ok(([v[0], v[1]], v[2]))
}

/// Largest disagreement between the polar formulas and the `(λ, a)`
/// presentation after conversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarCheckReport {
    pub samples: usize,
    pub source: f64,
    pub target: f64,
    pub mult: f64,
    pub inv: f64,
    pub unit: f64,
    /// Change of every output under `(θ, t) -> (-θ, -t)`.
    pub flip: f64,
}

impl PolarCheckReport {
    pub fn max_violation(&self) -> f64 {
        [self.source, self.target, self.mult, self.inv, self.unit, self.flip]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

fn sample_polar_arrow(rng: &mut SampleRng) -> ([f64; 2], f64) {
    loop {
        let th = sampling::unit_vector(rng, 2);
        if th[0].abs() > MIN_SCALE && th[1].abs() > MIN_SCALE {
            let t = rng_value(rng, BASE_RADIUS);
            return ([th[0], th[1]], t);
        }
    }
}

fn rng_value(rng: &mut SampleRng, r: f64) -> f64 {
    sampling::point_in_box(rng, 1, r)[0]
}

/// Compares the polar presentation against [`blowup_pair_groupoid`].
pub fn polar_groupoid_check(samples: usize, seed: u64) -> Result<PolarCheckReport> {
    let polar = polar_blowup_groupoid();
    let action = blowup_pair_groupoid();
    let mut rng = sampling::rng(seed);
    let mut r = PolarCheckReport {
        samples,
        source: 0.0,
        target: 0.0,
        mult: 0.0,
        inv: 0.0,
        unit: 0.0,
        flip: 0.0,
    };
    let conv = |g: &[f64]| polar_to_action([g[0], g[1]], g[2]);
    for _ in 0..samples {
        let (theta, t) = sample_polar_arrow(&mut rng);
        let h = vec![theta[0], theta[1], t];
        let flipped = vec![-theta[0], -theta[1], -t];
        let ha = conv(&h)?;
        r.source = r
            .source
            .max(max_abs_diff(&polar.source.eval(&h)?, &action.source.eval(&ha)?));
        r.target = r
            .target
            .max(max_abs_diff(&polar.target.eval(&h)?, &action.target.eval(&ha)?));
        r.flip = r
            .flip
            .max(max_abs_diff(&polar.source.eval(&flipped)?, &polar.source.eval(&h)?))
            .max(max_abs_diff(&polar.target.eval(&flipped)?, &polar.target.eval(&h)?))
            .max(max_abs_diff(&conv(&flipped)?, &ha));

        let th = polar.target.eval(&h)?;
        let g = polar
            .arrow_from(&mut rng, &th)
            .ok_or_else(|| Error::SamplingFailure("no arrow out of t(h)".into()))?;
        let ga = conv(&g)?;
        let prod = conv(&polar.multiply(&g, &h)?)?;
        r.mult = r.mult.max(max_abs_diff(&prod, &action.multiply(&ga, &ha)?));
        r.inv = r
            .inv
            .max(max_abs_diff(&conv(&polar.inv.eval(&h)?)?, &action.inv.eval(&ha)?));
        let x = [rng_value(&mut rng, BASE_RADIUS)];
        r.unit = r
            .unit
            .max(max_abs_diff(&conv(&polar.unit.eval(&x)?)?, &action.unit.eval(&x)?));
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropyReport {
    pub base_point: Vec<f64>,
    pub isotropy_dim: usize,
    pub orbit_dim: usize,
    /// Sampled arrows in the isotropy group (units included).
    pub isotropy_samples: usize,
    /// Largest `|s - x|, |t - x|` over products and inverses of sampled
    /// isotropy arrows.
    pub closure_residual: f64,
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(1.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > pairs::RANK_REL_TOL * smax).count()
}

/// Orbit dimension as the rank of `t` along `s^{-1}(x)`; the isotropy
/// group `s^{-1}(x) ∩ t^{-1}(x)` then has the complementary dimension.
pub fn isotropy_orbit_report(
    spec: &GroupoidSpec,
    base_point: &[f64],
    samples: usize,
    seed: u64,
) -> Result<IsotropyReport> {
    spec.validate()?;
    if base_point.len() != spec.base_dim {
        return Err(Error::ArityMismatch {
            expected: spec.base_dim,
            found: base_point.len(),
        });
    }
    let target_on_fiber = spec.target.compose(&spec.source_fiber)?;
    let mut rng = sampling::rng(seed);
    let mut orbit_dim = None;
    let mut isotropy = vec![spec.unit.eval(base_point)?];
    for _ in 0..samples.max(1) {
        let mut input = base_point.to_vec();
        input.extend(sampling::point_in_box(&mut rng, spec.fiber_dim, FIBER_RADIUS));
        let Ok(jet) = target_on_fiber.jet(&input) else { continue };
        let along = jet.jacobian.columns(spec.base_dim, spec.fiber_dim).into_owned();
        let r = rank(&along);
        orbit_dim = Some(orbit_dim.map_or(r, |d: usize| d.max(r)));
        if max_abs_diff(&jet.value, base_point) < spec.composability_tol {
            isotropy.push(spec.source_fiber.eval(&input)?);
        }
    }
    let orbit_dim =
        orbit_dim.ok_or_else(|| Error::SamplingFailure(format!("no source-fiber samples at {base_point:?}")))?;
    let mut closure = 0.0f64;
    let at_base = |g: &[f64]| -> Result<f64> {
        Ok(max_abs_diff(&spec.source.eval(g)?, base_point).max(max_abs_diff(&spec.target.eval(g)?, base_point)))
    };
    for (k, g) in isotropy.iter().enumerate() {
        closure = closure.max(at_base(&spec.inv.eval(g)?)?);
        let h = &isotropy[(k + 1) % isotropy.len()];
        closure = closure.max(at_base(&spec.multiply(g, h)?)?);
    }
    Ok(IsotropyReport {
        base_point: base_point.to_vec(),
        isotropy_dim: spec.fiber_dim - orbit_dim,
        orbit_dim,
        isotropy_samples: isotropy.len(),
        closure_residual: closure,
    })
}

/// Compares the blow-up groupoid with the pair groupoid over `a ≠ 0, λa ≠ 0`
/// through the blow-down `(λ, a) -> (λa, a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionReport {
    pub samples: usize,
    pub max_residual: f64,
}

/// `(λ, a) = [λ, 1, a] -> (λa, a)`.
fn blowdown_arrow(g: &[f64]) -> Result<Vec<f64>> {
    let z = canonicalize(PLANE, &DncPoint::new(vec![], vec![g[0], 1.0], g[1]))?;
    Ok(blowdown(PLANE, &z))
}

pub fn restriction_report(samples: usize, seed: u64) -> Result<RestrictionReport> {
    let blup = blowup_pair_groupoid();
    let pair = pair_groupoid();
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let Some(tr) = sample_triple(&blup, &mut rng) else {
            continue;
        };
        let (g, h) = (&tr.g, &tr.h);
        if h[1].abs() < MIN_SCALE {
            continue;
        }
        done += 1;
        let (pg, ph) = (blowdown_arrow(g)?, blowdown_arrow(h)?);
        worst = worst
            .max(max_abs_diff(
                &blowdown_arrow(&blup.multiply(g, h)?)?,
                &pair.multiply(&pg, &ph)?,
            ))
            .max(max_abs_diff(&blowdown_arrow(&blup.inv.eval(h)?)?, &pair.inv.eval(&ph)?))
            .max(max_abs_diff(&blup.source.eval(h)?, &pair.source.eval(&ph)?))
            .max(max_abs_diff(&blup.target.eval(h)?, &pair.target.eval(&ph)?));
        let x = [h[1]];
        worst = worst.max(max_abs_diff(
            &blowdown_arrow(&blup.unit.eval(&x)?)?,
            &pair.unit.eval(&x)?,
        ));
    }
    Ok(RestrictionReport {
        samples,
        max_residual: worst,
    })
}

const PLANE: PairDims = PairDims { n: 2, p: 0 };

/// Rotation of the plane by `angle`, a map of pairs fixing the origin.
pub fn rotation(angle: f64) -> MapOfPairs {
    let (c, s) = (angle.cos(), angle.sin());
    let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    MapOfPairs::new(SmoothMap::linear(&m), PLANE, PLANE).expect("rotation is a map of pairs")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotatedPoint {
    pub point: BlowupPoint,
    /// The rotated direction had to be negated to become canonical.
    pub flipped: bool,
}

/// The induced `SO(2)` action on `Blup(R^2, 0)`.
pub fn rotate_blowup(angle: f64, z: &BlowupPoint) -> Result<RotatedPoint> {
    let point = blowup_map(&rotation(angle), z)?;
    let flipped = match (z, &point) {
        (BlowupPoint::Exceptional { dir, .. }, BlowupPoint::Exceptional { dir: out, .. }) => {
            let (c, s) = (angle.cos(), angle.sin());
            let raw = [c * dir[0] - s * dir[1], s * dir[0] + c * dir[1]];
            raw[0] * out[0] + raw[1] * out[1] < 0.0
        }
        _ => false,
    };
    Ok(RotatedPoint { point, flipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturatedActionReport {
    pub samples: usize,
    /// `|0 · z - z|`.
    pub identity: f64,
    /// `|g · (h · z) - (g h) · z|`.
    pub composition: f64,
    /// `|p(g · z) - g · p(z)|`.
    pub blowdown_equivariance: f64,
}

impl SaturatedActionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.identity <= tol && self.composition <= tol && self.blowdown_equivariance <= tol
    }
}

/// Checks the induced rotation action on a sample of body and exceptional
/// points.
pub fn saturated_action_blowup(samples: usize, seed: u64) -> Result<SaturatedActionReport> {
    let mut rng = sampling::rng(seed);
    let mut r = SaturatedActionReport {
        samples,
        identity: 0.0,
        composition: 0.0,
        blowdown_equivariance: 0.0,
    };
    let tau = std::f64::consts::TAU;
    for _ in 0..samples {
        let z = sample_point(PLANE, &mut rng, BASE_RADIUS);
        let a = rng_value(&mut rng, tau);
        let b = rng_value(&mut rng, tau);
        let id = rotate_blowup(0.0, &z)?.point;
        r.identity = r.identity.max(point_distance(&id, &z));
        let step = rotate_blowup(a, &rotate_blowup(b, &z)?.point)?.point;
        let once = rotate_blowup(a + b, &z)?.point;
        r.composition = r.composition.max(point_distance(&step, &once));
        let down = blowdown(PLANE, &rotate_blowup(a, &z)?.point);
        let rotated = rotation(a).f.eval(&blowdown(PLANE, &z))?;
        r.blowdown_equivariance = r.blowdown_equivariance.max(max_abs_diff(&down, &rotated));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnc::DncMap;

    #[test]
    fn reference_instances_satisfy_axioms() {
        let pair = check_axioms(&pair_groupoid(), 1000, 1).unwrap();
        assert_eq!(pair.max_violation(), 0.0);
        assert_eq!(pair.composable_tuples, 1000);
        let action = check_axioms(&action_groupoid(), 1000, 2).unwrap();
        assert!(action.passes(1e-12), "{action:?}");
        for spec in [blowup_pair_groupoid(), polar_blowup_groupoid()] {
            let r = check_axioms(&spec, 1000, 3).unwrap();
            assert!(r.passes(AXIOM_TOL), "{r:?}");
        }
    }

    #[test]
    fn swapped_mult_is_caught() {
        for spec in [action_groupoid(), pair_groupoid()] {
            let r = check_axioms(&spec.with_swapped_mult().unwrap(), 200, 4).unwrap();
            assert!(!r.passes(AXIOM_TOL), "{r:?}");
            assert!(r.product_source > 1e-3 && r.product_target > 1e-3, "{r:?}");
            // the opposite multiplication is still associative
            assert!(r.associativity < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn blowup_structure_map_values() {
        let g = blowup_pair_groupoid();
        assert_eq!(g.source.eval(&[0.6, 4.0]).unwrap(), vec![4.0]);
        assert!((g.target.eval(&[0.6, 4.0]).unwrap()[0] - 2.4).abs() < 1e-15);
        assert_eq!(g.multiply(&[2.0, 3.0], &[3.0, 1.0]).unwrap(), vec![6.0, 1.0]);
        assert_eq!(g.inv.eval(&[4.0, 0.5]).unwrap(), vec![0.25, 2.0]);
        assert_eq!(g.unit.eval(&[7.0]).unwrap(), vec![1.0, 7.0]);
        // (1, a)(λ, a') needs a = λ a'
        assert!(g.multiply(&[1.0, 2.0], &[2.0, 1.0]).is_ok());
        assert!(g.multiply(&[1.0, 2.0], &[3.0, 1.0]).is_err());
    }

    #[test]
    fn normal_cone_maps_match_dnc_functor() {
        let names = VarNames::indexed();
        let f = |src: &str, tgt_n: usize| {
            let m = SmoothMap::new(2, parse_map(src, &names).unwrap()).unwrap();
            DncMap::new(MapOfPairs::new(m, PLANE, PairDims { n: tgt_n, p: 0 }).unwrap()).unwrap()
        };
        let (s, t, i) = (f("x2", 1), f("x1", 1), f("x2, x1", 2));
        for z in [[0.3, -1.2, 0.0], [2.0, 0.5, -1.5], [-0.7, 0.1, 3.0]] {
            let p = DncPoint::new(vec![], z[..2].to_vec(), z[2]);
            for (dnc, level) in [
                (&s, normal_cone::source()),
                (&t, normal_cone::target()),
                (&i, normal_cone::inv()),
            ] {
                let a = dnc.eval(&p).unwrap().to_vec();
                let b = level.eval(&z).unwrap();
                assert!(max_abs_diff(&a, &b) < 1e-12, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn polar_examples() {
        let p = polar_blowup_groupoid();
        let s = p.source.eval(&[0.6, 0.8, 5.0]).unwrap()[0];
        let t = p.target.eval(&[0.6, 0.8, 5.0]).unwrap()[0];
        assert!((s - 4.0).abs() < 1e-15 && (t - 3.0).abs() < 1e-15);
        let a = polar_to_action([0.8, 0.6], 5.0).unwrap();
        assert!(max_abs_diff(&a, &[4.0 / 3.0, 3.0]) < 1e-15);
        assert_eq!(polar_to_action([-0.8, -0.6], -5.0).unwrap(), a);
        assert!(matches!(polar_to_action([1.0, 0.0], 1.0), Err(Error::OutsideChart(_))));
        let (th, t) = action_to_polar(a).unwrap();
        assert!(max_abs_diff(&th, &[0.8, 0.6]) < 1e-15 && (t - 5.0).abs() < 1e-14);
        let (th, t) = action_to_polar([-4.0 / 3.0, 3.0]).unwrap();
        assert!(th[0] > 0.0 && th[1] < 0.0 && t < 0.0);
        let r = polar_groupoid_check(500, 5).unwrap();
        assert!(r.passes(PRESENTATION_TOL), "{r:?}");
    }

    #[test]
    fn isotropy_dimensions() {
        let blup = blowup_pair_groupoid();
        let at_one = isotropy_orbit_report(&blup, &[1.0], 100, 6).unwrap();
        assert_eq!((at_one.isotropy_dim, at_one.orbit_dim), (0, 1));
        let at_zero = isotropy_orbit_report(&blup, &[0.0], 100, 6).unwrap();
        assert_eq!((at_zero.isotropy_dim, at_zero.orbit_dim), (1, 0));
        assert!(at_zero.isotropy_samples > 50);
        assert_eq!(at_zero.closure_residual, 0.0);
        let pair = isotropy_orbit_report(&pair_groupoid(), &[0.4], 100, 6).unwrap();
        assert_eq!((pair.isotropy_dim, pair.orbit_dim), (0, 1));
    }

    #[test]
    fn restriction_to_the_body() {
        let r = restriction_report(500, 7).unwrap();
        assert!(r.max_residual < 1e-12, "{r:?}");
    }

    #[test]
    fn rotation_action() {
        let pi = std::f64::consts::PI;
        let e = BlowupPoint::exceptional(vec![], &[1.0, 0.0]).unwrap();
        let r = rotate_blowup(pi, &e).unwrap();
        assert!(r.flipped);
        assert!(point_distance(&r.point, &e) < 1e-15);
        let b = rotate_blowup(pi / 2.0, &BlowupPoint::Body { x: vec![1.0, 0.0] }).unwrap();
        assert!(point_distance(&b.point, &BlowupPoint::Body { x: vec![0.0, 1.0] }) < 1e-15);
        let rep = saturated_action_blowup(500, 8).unwrap();
        assert!(rep.passes(ACTION_TOL), "{rep:?}");
    }
}
