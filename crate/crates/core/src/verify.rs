//! Named verification suites covering every property the crate claims.
//!
//! Each suite is a list of checks with a measured value and a bound.
//! Sample counts scale with [`VerifyConfig::samples`], whose default of 1000
//! reproduces the reference counts of every suite.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::Serialize;

use crate::blowup::{
    self, blowdown, blowup_map, chart_contains, chart_phi, chart_phi_inv, covering_chart, curve, models,
    point_distance, product_join, product_split, sample_point, sphere, BlowupPoint,
};
use crate::dnc::{self, DncChart, DncMap, DncPoint, NonZero};
use crate::dnc_algebra::{self as alg, LaurentElement};
use crate::error::{Error, Result};
use crate::euler::{self, VectorField};
use crate::groupoid;
use crate::jet::{max_abs, parse_map, SmoothMap, VarNames};
use crate::pairs::{self, MapOfPairs, PairDims};
use crate::poly::{rational, Rational};
use crate::sampling::{self, max_abs_diff, numeric_rank, SampleRng};
use crate::vb_blowup::{self, VbBlowupPoint, VbPairModel};

pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: usize,
    /// Per-suite replacement for every upper bound of that suite.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: sampling::DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tolerances: BTreeMap::new(),
        }
    }
}

impl VerifyConfig {
    /// `reference` samples at the default size, scaled proportionally.
    pub fn count(&self, reference: usize) -> usize {
        (reference * self.samples).div_ceil(DEFAULT_SAMPLES).max(1)
    }

    fn seed_for(&self, offset: u64) -> u64 {
        self.seed.wrapping_mul(0x9e37_79b9).wrapping_add(offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
    /// `value` counts failures; passes when zero.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: Bound,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    /// Largest value among the upper-bounded checks.
    pub max_residual: f64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

struct Suite {
    name: &'static str,
    tol: Option<f64>,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str, cfg: &VerifyConfig) -> Self {
        Suite {
            name,
            tol: cfg.tolerances.get(name).copied(),
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, value: f64, bound: f64, kind: Bound, note: Option<String>) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        let passed = match kind {
            Bound::AtMost => value <= bound,
            Bound::AtLeast => value >= bound,
            Bound::Exact => value == 0.0,
        };
        self.checks.push(Check {
            name: name.to_string(),
            value,
            bound,
            kind,
            passed,
            note,
        });
    }

    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, self.tol.unwrap_or(bound), Bound::AtMost, None);
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, Bound::AtLeast, None);
    }

    fn exact(&mut self, name: &str, failures: usize, note: Option<String>) {
        self.push(name, failures as f64, 0.0, Bound::Exact, note);
    }

    fn holds(&mut self, name: &str, ok: bool, note: impl Into<String>) {
        let note = note.into();
        self.exact(name, usize::from(!ok), (!note.is_empty()).then_some(note));
    }

    fn finish(self) -> SuiteReport {
        let max_residual = self
            .checks
            .iter()
            .filter(|c| c.kind == Bound::AtMost)
            .map(|c| c.value)
            .fold(0.0, f64::max);
        SuiteReport {
            name: self.name.to_string(),
            passed: self.checks.iter().all(|c| c.passed),
            max_residual,
            checks: self.checks,
        }
    }
}

type SuiteFn = fn(&VerifyConfig, &mut Suite) -> Result<()>;

/// Every suite, in report order.
const SUITES: [(&str, SuiteFn); 12] = [
    ("atlas", atlas),
    ("blowup", blowup_maps),
    ("curves", curves),
    ("dnc", dnc_suite),
    ("dnc_algebra", dnc_algebra),
    ("euler", euler_suite),
    ("groupoid", groupoid_suite),
    ("jet", jet),
    ("models", model_equivalence),
    ("normal_derivative", normal_derivative),
    ("sphere", sphere_suite),
    ("vb_blowup", vb_suite),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Runs one suite; an internal error becomes a failed `error` check.
pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let (key, f) = SUITES
        .iter()
        .find(|s| s.0 == name)
        .ok_or_else(|| Error::DomainViolation(format!("unknown suite {name:?}")))?;
    let mut suite = Suite::new(key, cfg);
    if let Err(e) = f(cfg, &mut suite) {
        suite.push("error", f64::INFINITY, 0.0, Bound::Exact, Some(e.to_string()));
    }
    Ok(suite.finish())
}

pub fn run_all(cfg: &VerifyConfig) -> VerifyReport {
    let suites: Vec<SuiteReport> = SUITES
        .iter()
        .map(|(name, _)| run_suite(name, cfg).expect("registered suite"))
        .collect();
    VerifyReport {
        seed: cfg.seed,
        samples: cfg.samples,
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

const PLANE: PairDims = PairDims { n: 2, p: 0 };
const LINE: PairDims = PairDims { n: 2, p: 1 };
const POINT: PairDims = PairDims { n: 1, p: 0 };
const SPACE: PairDims = PairDims { n: 3, p: 0 };
const SPACE_LINE: PairDims = PairDims { n: 3, p: 1 };

fn pair_map(src: &str, dims: PairDims) -> MapOfPairs {
    let outs = parse_map(src, &VarNames::indexed()).expect("suite map parses");
    MapOfPairs::new(SmoothMap::new(dims.n, outs).expect("suite map arity"), dims, dims).expect("suite map dims")
}

/// Composable pairs `(f, g)` of adapted maps with invertible normal
/// derivatives on the sampled region.
pub fn suite_map_pairs() -> Vec<(&'static str, MapOfPairs, MapOfPairs)> {
    vec![
        (
            "plane",
            pair_map("x1 + x2^2, 3*x2 - x1*x2", PLANE),
            pair_map("2*x1 - x2 + x1*x2, x1 + x2 + x1^2", PLANE),
        ),
        (
            "line",
            pair_map("x1 + x2^2, 3*x2 - x1*x2", LINE),
            pair_map("x1 + x1^2, x2 + x1^2*x2 + x2^2", LINE),
        ),
        ("point", pair_map("x1 + x1^2", POINT), pair_map("2*x1 - x1^3", POINT)),
        (
            "space_line",
            pair_map("x1 + x2*x3, x2 + x1*x2, x3 - x2^2 + x1*x3", SPACE_LINE),
            pair_map("x1^2 + x1, x2 + x3, x3 - x2*x3", SPACE_LINE),
        ),
        (
            "space",
            pair_map("x1 + x2*x3, x2 - x1^2, x3 + x1*x2", SPACE),
            pair_map("x1 - x3^2, 2*x2 + x1*x3, x3 + x2^2", SPACE),
        ),
    ]
}

fn suite_maps() -> Vec<(String, MapOfPairs)> {
    suite_map_pairs()
        .into_iter()
        .flat_map(|(n, f, g)| [(format!("{n}/f"), f), (format!("{n}/g"), g)])
        .collect()
}

/// Sampling box for suite maps; keeps `1 ± x` factors away from zero.
const MAP_RADIUS: f64 = 0.5;

/// Central differences of `1/w` lose accuracy like `h^2 / w^3`.
const POLE_MARGIN: f64 = 0.05;

/// The rank-(1, 2) bundle over `(R^3, R^1)` with `f = υ1 + x1 υ2`,
/// `e1 = υ2 + x2 υ3`, `e2 = υ3 - y υ2 / 2`.
pub fn example_vb_model() -> VbPairModel {
    let outs = parse_map("x4 + x2*x5, x5 + x3*x6, x6 - 0.5*x1*x5", &VarNames::indexed()).expect("frame parses");
    VbPairModel::new(SPACE_LINE, 1, 2, SmoothMap::new(6, outs).expect("frame arity")).expect("frame is invertible")
}

fn relative_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b)) / (1.0 + max_abs(b))
}

/// Every smooth map the crate evaluates, with a sampling radius and a lower
/// bound on `|x_k|` keeping finite differences away from poles.
fn all_smooth_maps() -> Vec<(String, SmoothMap, f64, f64)> {
    let mut out: Vec<(String, SmoothMap, f64, f64)> = suite_maps()
        .into_iter()
        .map(|(n, m)| (n, m.f, MAP_RADIUS, 0.0))
        .collect();
    for dims in [PLANE, SPACE, PairDims { n: 4, p: 1 }] {
        for i in 1..=dims.q() {
            for j in 1..=dims.q() {
                if i != j {
                    let t = blowup::transition_map(dims, i, j).expect("transition");
                    out.push((format!("transition{}/{i}{j}", dims.n), t, 2.0, POLE_MARGIN));
                }
            }
        }
    }
    for spec in [
        groupoid::pair_groupoid(),
        groupoid::action_groupoid(),
        groupoid::blowup_pair_groupoid(),
        groupoid::polar_blowup_groupoid(),
    ] {
        for (role, m) in [
            ("source", &spec.source),
            ("target", &spec.target),
            ("mult", &spec.mult),
            ("inv", &spec.inv),
            ("unit", &spec.unit),
        ] {
            out.push((format!("{}/{role}", spec.name), m.clone(), 1.0, 0.0));
        }
    }
    out.push(("vb frame".into(), example_vb_model().frame().clone(), 1.0, 0.0));
    for (name, field, dims) in euler_fields() {
        out.push((
            format!("field/{name}"),
            field.components,
            if dims.n == 1 { 0.5 } else { 1.0 },
            0.0,
        ));
    }
    out
}

fn jet(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(1));
    let mut chain = 0.0f64;
    for (_, f, g) in suite_map_pairs() {
        let gf = g.f.compose(&f.f)?;
        for _ in 0..cfg.count(100) {
            let x = sampling::point_in_box(&mut rng, f.source.n, MAP_RADIUS);
            let jf = f.f.jet(&x)?;
            let jg = g.f.jet(&jf.value)?;
            let product = &jg.jacobian * &jf.jacobian;
            chain = chain.max(relative_gap(&gf.jet(&x)?.jacobian, &product));
        }
    }
    s.at_most("chain_rule", chain, 1e-12);

    let mut fd = 0.0f64;
    let mut evaluated = 0usize;
    for (_, m, radius, margin) in all_smooth_maps() {
        let mut hits = 0;
        let mut tries = 0;
        while hits < cfg.count(100) && tries < 20 * cfg.count(100) {
            tries += 1;
            let x = sampling::point_in_box(&mut rng, m.input_dim(), radius);
            if x.iter().any(|c| c.abs() < margin) {
                continue;
            }
            let step = SmoothMap::default_fd_step(&x);
            let (Ok(jet), Ok(num)) = (m.jet(&x), m.finite_diff_jacobian(&x, step)) else {
                continue;
            };
            hits += 1;
            fd = fd.max(max_abs(&(&jet.jacobian - &num)) / (1.0 + max_abs(&jet.jacobian)));
        }
        evaluated += usize::from(hits > 0);
    }
    s.at_most("ad_vs_fd", fd, 1e-6);
    let total = all_smooth_maps().len();
    s.exact(
        "maps_sampled",
        total - evaluated,
        Some(format!("{evaluated} of {total} maps")),
    );
    Ok(())
}

fn normal_derivative(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(2));
    let (mut chain, mut fd) = (0.0f64, 0.0f64);
    for (_, f, g) in suite_map_pairs() {
        let gf = g.compose(&f)?;
        for _ in 0..cfg.count(50) {
            let y = sampling::point_in_box(&mut rng, f.source.p, MAP_RADIUS);
            let lhs = pairs::normal_derivative(&gf, &y)?;
            let rhs = pairs::normal_derivative(&g, &f.on_slice(&y)?)? * pairs::normal_derivative(&f, &y)?;
            chain = chain.max(max_abs(&(lhs - rhs)));
        }
    }
    for (_, m) in suite_maps() {
        for _ in 0..cfg.count(100) {
            let y = sampling::point_in_box(&mut rng, m.source.p, MAP_RADIUS);
            let ad = pairs::normal_derivative(&m, &y)?;
            let num = pairs::normal_derivative_fd(&m, &y, SmoothMap::default_fd_step(&m.source.slice_point(&y)))?;
            fd = fd.max(max_abs(&(&ad - &num)) / (1.0 + max_abs(&ad)));
        }
    }
    s.at_most("chain_rule", chain, 1e-10);
    s.at_most("ad_vs_fd", fd, 1e-6);

    let submersion = MapOfPairs::new(
        SmoothMap::new(3, parse_map("x1 + x2^2, x3*(2 + x1) + x2^2", &VarNames::indexed())?)?,
        SPACE_LINE,
        LINE,
    )?;
    let ranks = pairs::check_rank_conditions(&submersion, cfg.count(100), cfg.seed_for(3))?;
    let dn = ranks.fiberwise_rank_dn;
    s.holds(
        "submersion_fiber_rank",
        dn.min == LINE.q() && dn.max == LINE.q(),
        format!("rank of d_N in [{}, {}]", dn.min, dn.max),
    );
    Ok(())
}

fn random_nonzero(rng: &mut SampleRng) -> f64 {
    sampling::nonzero(rng, 0.25, 2.0)
}

fn dnc_point(rng: &mut SampleRng, dims: PairDims, k: usize) -> DncPoint {
    let y = sampling::point_in_box(rng, dims.p, MAP_RADIUS);
    let xi = sampling::point_in_box(rng, dims.q(), 1.0);
    // every fourth point sits on the normal-bundle slice
    let t = if k.is_multiple_of(4) {
        0.0
    } else {
        sampling::point_in_box(rng, 1, MAP_RADIUS)[0]
    };
    DncPoint::new(y, xi, t)
}

fn dnc_gap(a: &DncPoint, b: &DncPoint) -> f64 {
    max_abs_diff(&a.to_vec(), &b.to_vec())
}

fn dnc_suite(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(4));
    let pairs = suite_map_pairs();
    let (mut comp, mut equi) = (0.0f64, 0.0f64);
    let mut slice_failures = 0;
    let per = cfg.count(500).div_ceil(pairs.len());
    for (_, f, g) in &pairs {
        let (df, dg, dgf) = (
            DncMap::new(f.clone())?,
            DncMap::new(g.clone())?,
            DncMap::new(g.compose(f)?)?,
        );
        let chart = DncChart::new(f.source);
        for k in 0..per {
            let z = dnc_point(&mut rng, f.source, k);
            let img = df.eval(&z)?;
            comp = comp.max(dnc_gap(&dgf.eval(&z)?, &dg.eval(&img)?));
            let l = NonZero::new(random_nonzero(&mut rng)).expect("nonzero sample");
            let lhs = df.eval(&chart.rx_action(l, &z)?)?;
            let rhs = DncChart::new(f.target).rx_action(l, &img)?;
            equi = equi.max(dnc_gap(&lhs, &rhs));
            slice_failures += usize::from(dnc::hat_t(&img) != dnc::hat_t(&z));
        }
    }
    s.at_most("functoriality", comp, 1e-10);
    s.at_most("equivariance", equi, 1e-10);
    s.exact("slice_compatibility", slice_failures, None);

    let mut slope = f64::INFINITY;
    for (_, m) in suite_maps() {
        let h = DncMap::new(m.clone())?;
        for _ in 0..3 {
            let y = sampling::point_in_box(&mut rng, m.source.p, MAP_RADIUS);
            let xi = sampling::unit_vector(&mut rng, m.source.q());
            let fit = dnc::continuity_fit(&h, &y, &xi, &dnc::CONTINUITY_TS)?;
            // a fit with no measurable difference is exactly continuous
            slope = slope.min(fit.slope.unwrap_or(f64::INFINITY));
        }
    }
    s.at_least("continuity_slope", slope, 0.99);

    let mut fiber = 0.0f64;
    for k in 0..cfg.count(500) {
        let z = dnc_point(&mut rng, PLANE, k);
        let (a, b) = dnc::pair_fiber_product_map(&z)?;
        fiber = fiber.max(dnc_gap(&dnc::pair_fiber_product_inverse(&a, &b)?, &z));
    }
    s.at_most("fiber_product_round_trip", fiber, 1e-12);
    Ok(())
}

fn model_equivalence(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    for (n, offset) in [(2, 10), (3, 11)] {
        let dims = PairDims { n, p: 0 };
        let mut rng = sampling::rng(cfg.seed_for(offset));
        let (mut algebraic, mut polar) = (0.0f64, 0.0f64);
        for _ in 0..cfg.count(1000) {
            let z = sample_point(dims, &mut rng, 2.0);
            let a = models::from_algebraic(dims, &models::to_algebraic(dims, &z)?)?;
            algebraic = algebraic.max(point_distance(&a, &z));
            let p = models::from_polar(dims, &models::to_polar(dims, &z)?)?;
            polar = polar.max(point_distance(&p, &z));
        }
        s.at_most(&format!("algebraic_round_trip_n{n}"), algebraic, 1e-12);
        s.at_most(&format!("polar_round_trip_n{n}"), polar, 1e-12);
    }
    Ok(())
}

fn atlas(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(20));
    let (mut charts, mut inverse, mut trans) = (0.0f64, 0.0f64, 0.0f64);
    let mut uncovered = 0;
    let mut points = 0;
    for dims in [PLANE, SPACE, PairDims { n: 3, p: 1 }] {
        let q = dims.q();
        for _ in 0..cfg.count(1000) {
            let z = sample_point(dims, &mut rng, 2.0);
            points += 1;
            let c = covering_chart(dims, &z);
            let strong = match &z {
                BlowupPoint::Exceptional { dir, .. } => dir[c - 1].abs() >= 1.0 / (q as f64).sqrt() - 1e-15,
                BlowupPoint::Body { .. } => true,
            };
            uncovered += usize::from(!chart_contains(dims, c, &z) || !strong);
            for chart in 1..=q {
                if chart_contains(dims, chart, &z) {
                    let back = chart_phi_inv(dims, chart, &chart_phi(dims, chart, &z)?)?;
                    charts = charts.max(point_distance(&back, &z));
                }
            }
        }
        for i in 1..=q {
            for j in 1..=q {
                if i == j {
                    continue;
                }
                for k in 0..cfg.count(1000) {
                    let mut w = sampling::point_in_box(&mut rng, dims.n, 2.0);
                    if k % 3 == 0 {
                        w[dims.p + j - 1] = 0.0;
                    }
                    let z = chart_phi_inv(dims, j, &w)?;
                    inverse = inverse.max(max_abs_diff(&chart_phi(dims, j, &z)?, &w));
                    if !chart_contains(dims, i, &z) {
                        continue;
                    }
                    let there = blowup::transition(dims, i, j, &w)?;
                    let back = blowup::transition(dims, j, i, &there)?;
                    trans = trans.max(max_abs_diff(&back, &w) / (1.0 + sampling::norm(&w)));
                }
            }
        }
    }
    s.at_most("chart_round_trip", charts, 1e-10);
    s.at_most("chart_inverse_round_trip", inverse, 1e-10);
    s.at_most("transition_inverse", trans, 1e-10);
    s.exact("exceptional_coverage", uncovered, Some(format!("{points} points")));
    Ok(())
}

fn blowup_maps(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(30));
    let mut square = 0.0f64;
    for (_, m) in suite_maps() {
        let mut done = 0;
        while done < cfg.count(100) {
            let z = sample_point(m.source, &mut rng, MAP_RADIUS);
            let Ok(w) = blowup_map(&m, &z) else { continue };
            done += 1;
            let lhs = blowdown(m.target, &w);
            let rhs = m.f.eval(&blowdown(m.source, &z))?;
            square = square.max(max_abs_diff(&lhs, &rhs));
        }
    }
    s.at_most("blowdown_square", square, 1e-10);

    let codim = blowup::codimension_one_report(3, cfg.count(500), cfg.seed_for(31))?;
    s.at_most(
        "codim_one_bijection",
        codim.section_error.max(codim.retraction_error).max(codim.chart_error),
        1e-12,
    );

    let proper = blowup::properness_report(SPACE, 10, 1.0, 4, cfg.seed_for(32));
    s.holds(
        "blowdown_properness",
        proper.bounded && proper.targets >= 1000,
        format!(
            "{} targets, sup |rep| = {:.3} <= {:.3}",
            proper.targets, proper.sup_representative, proper.bound
        ),
    );
    s.at_most("blowdown_of_preimages", proper.max_blowdown_error, 1e-12);

    let mut product = 0.0f64;
    for _ in 0..cfg.count(500) {
        let z = sample_point(PairDims { n: 3, p: 1 }, &mut rng, 2.0);
        let (b, m) = product_split(PLANE, 1, &z)?;
        product = product.max(point_distance(&product_join(PLANE, &b, &m)?, &z));
    }
    s.at_most("product_round_trip", product, 1e-15);
    Ok(())
}

fn exact_roots(st: &curve::StrictTransform) -> Vec<(Option<Rational>, u32)> {
    st.exceptional_points
        .iter()
        .map(|r| (r.exact.clone(), r.multiplicity))
        .collect()
}

fn curves(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let one = |n| Some(rational(n, 1));
    let cases = [
        ("nodal_cubic", "y^2 - x^2*(x+1)", vec![(one(-1), 1), (one(1), 1)]),
        ("cusp", "y^2 - x^3", vec![(one(0), 2)]),
        ("line", "y", vec![(one(0), 1)]),
    ];
    for (name, src, want) in cases {
        let g = curve::parse_curve(src)?;
        let st = curve::strict_transform(&g, 1)?;
        let got = exact_roots(&st);
        let shown: Vec<String> = got
            .iter()
            .map(|(r, m)| format!("{}^{m}", r.as_ref().map_or("?".into(), |v| v.to_string())))
            .collect();
        s.holds(&format!("{name}_exceptional_points"), got == want, shown.join(", "));
        let cloud = curve::strict_transform_cloud(&st, &g, cfg.count(400))?;
        s.at_most(&format!("{name}_cloud_residual"), cloud.strict_residual, 1e-10);
    }
    Ok(())
}

fn sphere_suite(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(40));
    let (mut local, mut back, mut round) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..cfg.count(500) {
        let z = if k % 5 == 0 {
            let d = sampling::unit_vector(&mut rng, 2);
            let d = blowup::canonical_direction(&d).expect("unit vector");
            sphere::SphereBlowupPoint::Exceptional([d[0], d[1]])
        } else {
            sphere::SphereBlowupPoint::Body(sphere::sample_sphere(&mut rng))
        };
        for chart in 1..=4 {
            let Ok(w) = sphere::to_chart(chart, &z) else { continue };
            back = back.max(sphere::sphere_point_distance(&sphere::from_chart(chart, &w)?, &z));
            let direct = sphere::local_expression(chart, &w)?;
            let closed = sphere::local_expression_closed(chart, &w)?;
            local = local.max(max_abs_diff(&direct, &closed) / (1.0 + sampling::norm(&closed)));
        }
        let there = sphere::rp2_to_sphere(&sphere::sphere_to_rp2(&z)?)?;
        round = round.max(sphere::sphere_point_distance(&there, &z));
        let a = blowup::canonical_direction(&sampling::unit_vector(&mut rng, 3)).expect("unit vector");
        let a = [a[0], a[1], a[2]];
        round = round.max(max_abs_diff(&sphere::sphere_to_rp2(&sphere::rp2_to_sphere(&a)?)?, &a));
    }
    s.at_most("local_expressions", local, 1e-10);
    s.at_most("chart_round_trip", back, 1e-10);
    s.at_most("f_inverse_round_trip", round, 1e-10);
    let first = sphere::local_expression(1, &[1.0, 2.0])?;
    s.at_most("first_chart_at_1_2", max_abs_diff(&first, &[5.0, 2.0]), 1e-12);
    Ok(())
}

fn groupoid_suite(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let specs = [
        ("pair", groupoid::pair_groupoid()),
        ("action", groupoid::action_groupoid()),
        ("blowup", groupoid::blowup_pair_groupoid()),
        ("polar", groupoid::polar_blowup_groupoid()),
    ];
    for (k, (name, spec)) in specs.iter().enumerate() {
        let r = groupoid::check_axioms(spec, cfg.count(1000), cfg.seed_for(50 + k as u64))?;
        s.at_most(&format!("{name}_axioms"), r.max_violation(), groupoid::AXIOM_TOL);
        s.exact(
            &format!("{name}_composable_tuples"),
            cfg.count(1000).saturating_sub(r.composable_tuples),
            Some(format!("{} tuples", r.composable_tuples)),
        );
    }
    let polar = groupoid::polar_groupoid_check(cfg.count(500), cfg.seed_for(55))?;
    s.at_most("polar_intertwining", polar.max_violation(), groupoid::PRESENTATION_TOL);

    let blup = groupoid::blowup_pair_groupoid();
    let dims_at = |spec: &groupoid::GroupoidSpec, x: f64| {
        groupoid::isotropy_orbit_report(spec, &[x], cfg.count(100), cfg.seed_for(56))
    };
    for (label, spec, x, want) in [
        ("blowup_at_0", &blup, 0.0, (1, 0)),
        ("blowup_at_1", &blup, 1.0, (0, 1)),
        ("pair_at_0.4", &groupoid::pair_groupoid(), 0.4, (0, 1)),
    ] {
        let r = dims_at(spec, x)?;
        let got = (r.isotropy_dim, r.orbit_dim);
        s.holds(
            &format!("isotropy_orbit_{label}"),
            got == want,
            format!("(isotropy, orbit) = {got:?}"),
        );
        s.at_most(
            &format!("isotropy_closure_{label}"),
            r.closure_residual,
            groupoid::AXIOM_TOL,
        );
    }
    let r = groupoid::restriction_report(cfg.count(500), cfg.seed_for(57))?;
    s.at_most("restriction_to_pair_groupoid", r.max_residual, 1e-12);
    let act = groupoid::saturated_action_blowup(cfg.count(500), cfg.seed_for(58))?;
    s.at_most(
        "rotation_action",
        act.identity.max(act.composition).max(act.blowdown_equivariance),
        groupoid::ACTION_TOL,
    );
    Ok(())
}

fn vb_suite(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let model = example_vb_model();
    let dims = model.base;
    let mut rng = sampling::rng(cfg.seed_for(60));
    let (mut lin, mut trans, mut cover) = (0.0f64, 0.0f64, 0.0f64);
    let mut branches = [0usize; 2];
    for k in 0..cfg.count(100) {
        let y = sampling::point_in_box(&mut rng, dims.p, 1.0);
        let base = if k % 2 == 0 {
            BlowupPoint::exceptional(y, &sampling::unit_vector(&mut rng, dims.q()))?
        } else {
            BlowupPoint::body(dims, dims.join(&y, &sampling::unit_vector(&mut rng, dims.q())))?
        };
        branches[k % 2] += 1;
        let r = covering_chart(dims, &base);
        let seed = cfg.seed_for(1000 + k as u64);
        lin = lin.max(vb_blowup::fiber_linearity_check(&model, r, &base, 4, seed)?.max_residual());
        for other in 1..=dims.q() {
            if other != r && chart_contains(dims, other, &base) {
                trans =
                    trans.max(vb_blowup::transition_linearity_check(&model, r, other, &base, 4, seed)?.max_residual());
            }
        }
        let fiber = vb_blowup::sample_fiber(&model, &base, &mut rng)?;
        let z = VbBlowupPoint { base, fiber };
        let c = vb_blowup::vb_chart(&model, r, &z)?;
        let again = vb_blowup::vb_chart(&model, r, &vb_blowup::vb_chart_inv(&model, r, &c)?)?;
        cover = cover.max(max_abs_diff(&again.fiber(), &c.fiber()));
    }
    s.at_most("fiber_linearity", lin, 1e-11);
    s.at_most("transition_linearity", trans, 1e-11);
    s.at_most("chart_cover_round_trip", cover, 1e-12);
    s.holds(
        "both_branches",
        branches.iter().all(|&b| b > 0),
        format!("{} exceptional, {} body", branches[0], branches[1]),
    );

    let mut rank_failures = 0;
    let mut kernel = 0.0f64;
    let anchor_dims = [PairDims { n: 4, p: 0 }, SPACE_LINE];
    for k in 0..cfg.count(100) {
        let d = anchor_dims[k % 2];
        let y = sampling::point_in_box(&mut rng, d.p, 1.0);
        let z = BlowupPoint::exceptional(y, &sampling::unit_vector(&mut rng, d.q()))?;
        let c = covering_chart(d, &z);
        let m = vb_blowup::anchor_matrix(d, c, &z)?;
        rank_failures += usize::from(numeric_rank(&m, pairs::RANK_REL_TOL) != d.n - 1);
        let BlowupPoint::Exceptional { dir, .. } = &z else {
            unreachable!()
        };
        let scale = random_nonzero(&mut rng);
        let radial: Vec<f64> = vec![0.0; d.p]
            .into_iter()
            .chain(dir.iter().map(|v| scale * v))
            .collect();
        let image = vb_blowup::tangent_anchor(d, c, &z, &radial)?;
        kernel = kernel.max(image.iter().fold(0.0, |a, v| a.max(v.abs())));
        let full = &m * DVector::from_column_slice(&radial);
        kernel = kernel.max(full.amax());
    }
    s.exact(
        "anchor_rank",
        rank_failures,
        Some("rank n - 1, i.e. q - 1 on the normal block".into()),
    );
    s.at_most("anchor_kernel_radial", kernel, 1e-12);
    Ok(())
}

fn euler_fields() -> Vec<(&'static str, VectorField, PairDims)> {
    let strip = PairDims { n: 2, p: 1 };
    vec![
        ("euler_plane", VectorField::euler(PLANE), PLANE),
        (
            "x+x^2",
            VectorField::parse(POINT, "x1 + x1^2").expect("field parses"),
            POINT,
        ),
        (
            "strip",
            VectorField::parse(strip, "x1*x2, x2 + x2^2 + x1*x2^2").expect("field parses"),
            strip,
        ),
    ]
}

fn euler_suite(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(70));
    let fields = euler_fields();
    let mut not_euler = 0;
    for (_, f, _) in &fields {
        not_euler += usize::from(!euler::is_euler_like(f, 32, cfg.seed_for(71))?.is_euler_like());
    }
    let doubled = VectorField::parse(LINE, "0, 2*x2")?;
    not_euler += usize::from(euler::is_euler_like(&doubled, 32, cfg.seed_for(71))?.is_euler_like());
    s.exact("euler_like_criterion", not_euler, None);

    let e = VectorField::euler(PLANE);
    let mut identity = 0.0f64;
    for _ in 0..cfg.count(10) {
        let xi = sampling::point_in_box(&mut rng, 2, 1.0);
        let v = euler::tubular_from_euler(&e, &[], &xi, &euler::EPS_SCHEDULE)?;
        identity = identity.max(max_abs_diff(&v.value, &xi));
    }
    s.at_most("euler_field_chi_identity", identity, 1e-10);

    let perturbed = &fields[1].1;
    let mut closed = 0.0f64;
    for xi in [0.1, 0.2, 0.3] {
        let v = euler::tubular_from_euler(perturbed, &[], &[xi], &euler::EPS_SCHEDULE)?;
        closed = closed.max((v.value[0] - xi / (1.0 - xi)).abs());
    }
    s.at_most("perturbed_chi_closed_form", closed, 1e-4);

    let (mut slice, mut dn, mut related) = (0.0f64, 0.0f64, 0.0f64);
    for (k, (_, f, _)) in fields.iter().enumerate().skip(1) {
        let r = euler::tubular_report(f, cfg.count(5), 0.3, cfg.seed_for(72 + k as u64))?;
        slice = slice.max(r.slice);
        dn = dn.max(r.normal_derivative);
        related = related.max(r.relatedness);
    }
    s.at_most("chi_slice_identity", slice, 1e-4);
    s.at_most("chi_normal_derivative", dn, 1e-4);
    s.at_most("chi_relatedness", related, 1e-4);

    let mut flow = 0.0f64;
    for _ in 0..cfg.count(50) {
        let x0 = sampling::point_in_box(&mut rng, 2, 2.0);
        let sv = random_nonzero(&mut rng);
        let tau = sampling::point_in_box(&mut rng, 1, sv.abs() / 2.0)[0];
        let (x, t) = euler::w_sigma_flow(&e, &x0, sv, tau, euler::DEFAULT_STEP)?;
        let f = (sv + tau) / sv;
        let want: Vec<f64> = x0.iter().map(|c| c * f).collect();
        flow = flow.max(max_abs_diff(&x, &want));
        flow = flow.max((t - (sv + tau)).abs());
    }
    s.at_most("euler_flow_closed_form", flow, 1e-9);

    let cmp = euler::exponent_comparison(PLANE, &[3.0, 4.0], 1.0, 0.5)?;
    s.at_most("flow_exponent_log_one_plus", cmp.log_one_plus, 1e-9);
    Ok(())
}

fn dnc_algebra(cfg: &VerifyConfig, s: &mut Suite) -> Result<()> {
    let mut rng = sampling::rng(cfg.seed_for(80));
    let dims_list = [PLANE, LINE, SPACE_LINE];
    let (mut closure, mut hom, mut quotient) = (0usize, 0usize, 0usize);
    let pairs_total = cfg.count(10_000);
    let mut pts = Vec::new();
    for (k, d) in dims_list.iter().enumerate() {
        pts.push(alg::sample_consistency_points(*d, 4, cfg.seed_for(81 + k as u64)));
    }
    for k in 0..pairs_total {
        let di = k % dims_list.len();
        let d = dims_list[di];
        let a = alg::random_element(d, &mut rng);
        let b = alg::random_element(d, &mut rng);
        let (sum, prod) = match (a.add(&b), a.mul(&b)) {
            (Ok(x), Ok(y)) => (x, y),
            _ => {
                closure += 1;
                continue;
            }
        };
        closure += usize::from(!sum.satisfies_filtration() || !prod.satisfies_filtration());
        let pt = &pts[di][k % 4];
        let (y, xi) = pt.x.split_at(d.p);
        let cx = |e: &LaurentElement| alg::char_xs(e, &pt.x, &pt.s);
        let cy = |e: &LaurentElement| alg::char_yxi(e, y, xi);
        let (ax, bx, ay, by) = (cx(&a)?, cx(&b)?, cy(&a)?, cy(&b)?);
        hom += usize::from(cx(&sum)? != &ax + &bx || cx(&prod)? != &ax * &bx);
        hom += usize::from(cy(&sum)? != &ay + &by || cy(&prod)? != &ay * &by);
        quotient += usize::from(ax != a.at_t(&pt.s)?.eval(&pt.x));
    }
    for (di, d) in dims_list.iter().enumerate() {
        let one = LaurentElement::one(*d);
        let pt = &pts[di][0];
        let (y, xi) = pt.x.split_at(d.p);
        hom += usize::from(alg::char_xs(&one, &pt.x, &pt.s)? != rational(1, 1));
        hom += usize::from(alg::char_yxi(&one, y, xi)? != rational(1, 1));
    }
    s.exact("filtration_closure", closure, Some(format!("{pairs_total} pairs")));
    s.exact("character_homomorphism", hom, None);
    s.exact("quotient_consistency", quotient, None);

    let mut grading = 0;
    for k in 0..cfg.count(200) {
        let d = dims_list[k % dims_list.len()];
        let a = alg::random_element(d, &mut rng);
        let pt = &alg::sample_consistency_points(d, 1, cfg.seed_for(2000 + k as u64))[0];
        let (y, xi) = pt.x.split_at(d.p);
        let lambda = rational((k as i64 % 7) - 3, 2 + (k as i64 % 3));
        for (deg, f) in a.coefficients().filter(|(deg, _)| *deg >= 0) {
            let pure = LaurentElement::term(d, f.clone(), deg)?;
            let scaled: Vec<Rational> = xi.iter().map(|c| c * &lambda).collect();
            let lhs = alg::char_yxi(&pure, y, &scaled)?;
            let rhs = alg::char_yxi(&pure, y, xi)? * num_traits::pow(lambda.clone(), deg as usize);
            grading += usize::from(lhs != rhs);
        }
    }
    s.exact("grading_homogeneity", grading, None);

    let mut geo = 0.0f64;
    for (di, (d, src)) in [
        (LINE, "y1*x1"),
        (LINE, "x1 + y1*x1^2"),
        (PLANE, "x1*x2 - 3*x2"),
        (SPACE_LINE, "x2^2 + y1*x1"),
    ]
    .into_iter()
    .enumerate()
    {
        let f = alg::parse_element(d, src)?.coefficient(0);
        let points = alg::sample_consistency_points(d, cfg.count(20), cfg.seed_for(90 + di as u64));
        let r = alg::geometric_consistency(d, &f, &points)?;
        geo = geo.max(r.body_residual).max(r.slice_residual);
    }
    s.at_most("geometric_consistency", geo, alg::CONSISTENCY_TOL);
    let zero = alg::char_yxi(&LaurentElement::t(LINE), &[rational(1, 2)], &[rational(3, 1)])?;
    s.holds("t_vanishes_on_the_slice", zero.is_zero(), "");
    Ok(())
}
