//! Subcommand bodies. Each returns the rendered output and whether every
//! property it reports holds.

use conecut::blowup::{curve, sphere};
use conecut::dnc::{self, DncMap, DncPoint};
use conecut::dnc_algebra::{self as alg};
use conecut::error::Error;
use conecut::euler::{self, VectorField};
use conecut::groupoid;
use conecut::jet::{parse_map, SmoothMap, VarNames};
use conecut::pairs::{self, MapOfPairs, PairDims};
use conecut::poly::{rational_from_f64, to_f64, Rational};
use conecut::sampling::{self, max_abs_diff};
use conecut::verify::{self, VerifyReport};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, UsageError};
use crate::output::{csv_rows, to_json};

pub struct Outcome {
    pub body: String,
    pub passed: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                Error::Parse { .. } | Error::NotPolynomial(_) | Error::ArityMismatch { .. } | Error::DegenerateCurve,
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e.0)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn json_only(cfg: &RunConfig, command: &str) -> Result<()> {
    match cfg.format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Usage(format!(
            "{command} only emits JSON; csv is for point clouds"
        ))),
    }
}

fn dims(n: usize, p: usize) -> Result<PairDims> {
    PairDims::new(n, p).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_vector(flag: &str, src: &str) -> Result<Vec<f64>> {
    src.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{flag} expects comma-separated numbers, got {src:?}")))
}

/// `a/b`, integers, or decimals (read exactly from their shortest form).
fn parse_rational(src: &str) -> Result<Rational> {
    let s = src.trim();
    if let Ok(r) = s.parse::<Rational>() {
        return Ok(r);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("not a rational number: {s:?}")))?;
    Ok(rational_from_f64(v)?)
}

fn parse_rationals(src: &str) -> Result<Vec<Rational>> {
    if src.trim().is_empty() {
        return Ok(Vec::new());
    }
    src.split(',').map(parse_rational).collect()
}

fn parse_pair_map(src: &str, n: usize, p: usize, target_p: usize) -> Result<MapOfPairs> {
    let outs = parse_map(src, &VarNames::indexed())?;
    let m = outs.len();
    let f = SmoothMap::new(n, outs)?;
    Ok(MapOfPairs::new(f, dims(n, p)?, dims(m, target_p)?)?)
}

/// Input dimension of a map: the largest `x<k>` mentioned, at least `min`.
fn inferred_dim(src: &str, min: usize) -> usize {
    let bytes = src.as_bytes();
    let mut best = min;
    for (k, &b) in bytes.iter().enumerate() {
        let starts = b == b'x' && (k == 0 || !bytes[k - 1].is_ascii_alphanumeric());
        if !starts {
            continue;
        }
        let digits: String = src[k + 1..].chars().take_while(|c| c.is_ascii_digit()).collect();
        if let Ok(i) = digits.parse::<usize>() {
            best = best.max(i);
        }
    }
    best
}

pub fn resolve_curve(cfg: &RunConfig, poly: &str, chart: usize) -> Result<Outcome> {
    let g = curve::parse_curve(poly)?;
    let st = curve::strict_transform(&g, chart)?;
    let cloud = curve::strict_transform_cloud(&st, &g, cfg.samples)?;
    let passed = cloud.strict_residual <= 1e-10;
    let body = match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<f64>> = cloud.points.iter().map(|w| w.to_vec()).collect();
            csv_rows(&st.variable_names(), &rows)
        }
        Format::Json => to_json(&json!({
            "chart": st.chart,
            "variables": st.variable_names(),
            "strict_transform_poly": st.strict_display(),
            "exceptional_power": st.exceptional_power,
            "exceptional_points": st.exceptional_points.iter().map(|r| r.value).collect::<Vec<_>>(),
            "exceptional_exact": st.exceptional_points.iter()
                .map(|r| r.exact.as_ref().map(|v| v.to_string()))
                .collect::<Vec<_>>(),
            "multiplicities": st.exceptional_points.iter().map(|r| r.multiplicity).collect::<Vec<_>>(),
            "cloud": cloud.points,
            "strict_residual": cloud.strict_residual,
        })),
    };
    Ok(Outcome { body, passed })
}

pub fn verify(cfg: &RunConfig, suites: &[String]) -> Result<Outcome> {
    json_only(cfg, "verify")?;
    let vcfg = cfg.verify_config();
    let report = if suites.is_empty() {
        verify::run_all(&vcfg)
    } else {
        let mut names: Vec<&String> = suites.iter().collect();
        names.sort();
        names.dedup();
        let reports = names
            .into_iter()
            .map(|n| verify::run_suite(n, &vcfg).map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        VerifyReport {
            seed: vcfg.seed,
            samples: vcfg.samples,
            passed: reports.iter().all(|r| r.passed),
            suites: reports,
        }
    };
    let summary: serde_json::Map<String, Value> = report
        .suites
        .iter()
        .map(|s| (s.name.clone(), json!(s.max_residual)))
        .collect();
    Ok(Outcome {
        passed: report.passed,
        body: to_json(&json!({
            "seed": report.seed,
            "samples": report.samples,
            "passed": report.passed,
            "max_residuals": summary,
            "suites": report.suites,
        })),
    })
}

pub fn sphere_demo(cfg: &RunConfig) -> Result<Outcome> {
    json_only(cfg, "sphere-demo")?;
    let mut rng = sampling::rng(cfg.seed);
    let points: Vec<_> = (0..cfg.samples.max(1))
        .map(|_| sphere::SphereBlowupPoint::Body(sphere::sample_sphere(&mut rng)))
        .collect();
    let mut charts = Vec::new();
    let mut worst = 0.0f64;
    for chart in 1..=4 {
        let (mut used, mut residual) = (0usize, 0.0f64);
        for z in &points {
            let Ok(w) = sphere::to_chart(chart, z) else { continue };
            let direct = sphere::local_expression(chart, &w)?;
            let closed = sphere::local_expression_closed(chart, &w)?;
            residual = residual.max(max_abs_diff(&direct, &closed) / (1.0 + sampling::norm(&closed)));
            used += 1;
        }
        worst = worst.max(residual);
        charts.push(json!({"chart": chart, "points": used, "max_residual": residual}));
    }
    let mut round = 0.0f64;
    for z in &points {
        let back = sphere::rp2_to_sphere(&sphere::sphere_to_rp2(z)?)?;
        round = round.max(sphere::sphere_point_distance(&back, z));
    }
    let example = sphere::local_expression(1, &[1.0, 2.0])?;
    Ok(Outcome {
        passed: worst <= 1e-10 && round <= 1e-10,
        body: to_json(&json!({
            "local_expressions": charts,
            "inverse_round_trip": round,
            "example": {"chart": 1, "w": [1.0, 2.0], "value": example},
        })),
    })
}

pub fn groupoid_demo(cfg: &RunConfig) -> Result<Outcome> {
    json_only(cfg, "groupoid-demo")?;
    let specs = [
        groupoid::pair_groupoid(),
        groupoid::action_groupoid(),
        groupoid::blowup_pair_groupoid(),
        groupoid::polar_blowup_groupoid(),
    ];
    let mut passed = true;
    let mut axioms = Vec::new();
    for spec in &specs {
        let r = groupoid::check_axioms(spec, cfg.samples, cfg.seed)?;
        passed &= r.passes(groupoid::AXIOM_TOL);
        axioms.push(r);
    }
    let blup = groupoid::blowup_pair_groupoid();
    let mut isotropy = Vec::new();
    for (a, want) in [(0.0, (1, 0)), (1.0, (0, 1))] {
        let r = groupoid::isotropy_orbit_report(&blup, &[a], cfg.samples.clamp(1, 200), cfg.seed)?;
        passed &= (r.isotropy_dim, r.orbit_dim) == want;
        isotropy.push(r);
    }
    let polar = groupoid::polar_groupoid_check(cfg.samples, cfg.seed)?;
    passed &= polar.passes(groupoid::PRESENTATION_TOL);
    Ok(Outcome {
        passed,
        body: to_json(&json!({
            "axioms": axioms,
            "blowup_isotropy": isotropy,
            "polar_presentation": polar,
        })),
    })
}

pub struct DncDemoArgs<'a> {
    pub map: Option<&'a str>,
    pub slice_dim: Option<usize>,
    pub target_slice_dim: Option<usize>,
    pub points: usize,
}

pub fn dnc_demo(cfg: &RunConfig, args: &DncDemoArgs) -> Result<Outcome> {
    json_only(cfg, "dnc-demo")?;
    let src = args.map.unwrap_or("x1 + x2^2, 3*x2 - x1*x2");
    let p = args.slice_dim.unwrap_or(if args.map.is_some() { 0 } else { 1 });
    let n = inferred_dim(src, p.max(1));
    let h = DncMap::new(parse_pair_map(src, n, p, args.target_slice_dim.unwrap_or(p))?)?;
    let source = h.source();
    let mut rng = sampling::rng(cfg.seed);
    let mut evaluations = Vec::new();
    for k in 0..args.points {
        let y = sampling::point_in_box(&mut rng, source.p, 0.5);
        let xi = sampling::point_in_box(&mut rng, source.q(), 1.0);
        let t = if k % 2 == 0 {
            0.0
        } else {
            sampling::point_in_box(&mut rng, 1, 0.5)[0]
        };
        let z = DncPoint::new(y, xi, t);
        let image = h.eval(&z)?;
        evaluations.push(json!({"point": z, "image": image}));
    }
    let mut continuity = Vec::new();
    let mut passed = true;
    let y = vec![0.0; source.p];
    for j in 0..source.q() {
        let mut xi = vec![0.0; source.q()];
        xi[j] = 1.0;
        let fit = dnc::continuity_fit(&h, &y, &xi, &dnc::CONTINUITY_TS)?;
        passed &= fit.passes(0.99);
        continuity.push(json!({"y": y, "xi": xi, "fit": fit}));
    }
    Ok(Outcome {
        passed,
        body: to_json(&json!({
            "map": h.body_expr().to_string(),
            "source": source,
            "target": h.target(),
            "evaluations": evaluations,
            "continuity": continuity,
        })),
    })
}

pub struct EulerDemoArgs<'a> {
    pub field: Option<&'a str>,
    pub xi: &'a str,
    pub y: Option<&'a str>,
    pub slice_dim: usize,
}

pub fn euler_demo(cfg: &RunConfig, args: &EulerDemoArgs) -> Result<Outcome> {
    json_only(cfg, "euler-demo")?;
    let xi = parse_vector("--xi", args.xi)?;
    let y = match args.y {
        Some(src) => parse_vector("--y", src)?,
        None => vec![0.0; args.slice_dim],
    };
    if y.len() != args.slice_dim {
        return Err(CliError::Usage(format!(
            "--y has {} entries, slice dimension is {}",
            y.len(),
            args.slice_dim
        )));
    }
    let d = dims(args.slice_dim + xi.len(), args.slice_dim)?;
    let sigma = match args.field {
        Some(src) => VectorField::parse(d, src)?,
        None => VectorField::euler(d),
    };
    let like = euler::is_euler_like(&sigma, 64, cfg.seed)?;
    let mut out = json!({
        "dims": d,
        "field": sigma.components.to_string(),
        "euler_like": like,
    });
    if !like.is_euler_like() {
        return Ok(Outcome {
            body: to_json(&out),
            passed: false,
        });
    }
    let chi = euler::tubular_from_euler(&sigma, &y, &xi, &euler::EPS_SCHEDULE)?;
    let identity_residual = max_abs_diff(&chi.value, &xi);
    let props = euler::tubular_report(&sigma, cfg.samples.div_ceil(200).max(1), 0.3, cfg.seed)?;
    let passed = props.slice <= 1e-10 && props.normal_derivative <= 1e-4 && props.relatedness <= 1e-4;
    out["y"] = json!(y);
    out["xi"] = json!(xi);
    out["chi"] = json!(chi);
    out["chi_identity_residual"] = json!(identity_residual);
    out["properties"] = json!(props);
    Ok(Outcome {
        body: to_json(&out),
        passed,
    })
}

pub struct RingDemoArgs<'a> {
    pub element: &'a str,
    pub dim: usize,
    pub slice_dim: usize,
    pub x: Option<&'a str>,
    pub s: &'a str,
    pub y: Option<&'a str>,
    pub xi: Option<&'a str>,
}

fn exact(r: &Rational) -> Value {
    json!({"exact": r.to_string(), "approx": to_f64(r)})
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(|r| r.to_string()).collect()
}

pub fn dnc_ring_demo(cfg: &RunConfig, args: &RingDemoArgs) -> Result<Outcome> {
    json_only(cfg, "dnc-ring-demo")?;
    let d = dims(args.dim, args.slice_dim)?;
    let a = alg::parse_element(d, args.element).map_err(|e| match e {
        Error::DomainViolation(m) => CliError::Usage(format!("not an element of the ring: {m}")),
        other => CliError::Core(other),
    })?;
    let ones = |k: usize| vec![Rational::from_integer(1.into()); k];
    let x = args.x.map(parse_rationals).transpose()?.unwrap_or_else(|| ones(d.n));
    let s = parse_rational(args.s)?;
    let y = args.y.map(parse_rationals).transpose()?.unwrap_or_else(|| ones(d.p));
    let xi = args.xi.map(parse_rationals).transpose()?.unwrap_or_else(|| ones(d.q()));
    let names = a.variable_names();
    let coefficients: serde_json::Map<String, Value> = a
        .coefficients()
        .map(|(k, f)| (k.to_string(), json!(f.display_with(&names).to_string())))
        .collect();
    let at_xs = alg::char_xs(&a, &x, &s)?;
    let at_yxi = alg::char_yxi(&a, &y, &xi)?;
    Ok(Outcome {
        passed: a.satisfies_filtration(),
        body: to_json(&json!({
            "element": a.to_string(),
            "dims": d,
            "coefficients": coefficients,
            "satisfies_filtration": a.satisfies_filtration(),
            "char_xs": {"x": strings(&x), "s": s.to_string(), "value": exact(&at_xs)},
            "char_yxi": {"y": strings(&y), "xi": strings(&xi), "value": exact(&at_yxi)},
        })),
    })
}

pub struct CheckMapArgs<'a> {
    pub map: &'a str,
    pub dim: Option<usize>,
    pub slice_dim: usize,
    pub target_slice_dim: Option<usize>,
}

pub fn check_map(cfg: &RunConfig, args: &CheckMapArgs) -> Result<Outcome> {
    json_only(cfg, "check-map")?;
    let n = args
        .dim
        .unwrap_or_else(|| inferred_dim(args.map, args.slice_dim.max(1)));
    let f = parse_pair_map(
        args.map,
        n,
        args.slice_dim,
        args.target_slice_dim.unwrap_or(args.slice_dim),
    )?;
    let adapted = pairs::check_adapted(&f, cfg.samples, cfg.seed)?;
    let mut out = json!({"source": f.source, "target": f.target, "adapted": adapted});
    if adapted.adapted {
        out["ranks"] = json!(pairs::check_rank_conditions(&f, cfg.samples, cfg.seed)?);
        let dn = pairs::normal_derivative(&f, &vec![0.0; f.source.p])?;
        let rows: Vec<Vec<f64>> = dn.row_iter().map(|r| r.iter().copied().collect()).collect();
        out["normal_derivative_at_origin"] = json!(rows);
    }
    Ok(Outcome {
        passed: adapted.adapted,
        body: to_json(&out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_inference_and_number_parsing() {
        assert_eq!(inferred_dim("x1 + x3^2, exp(x2)", 1), 3);
        assert_eq!(inferred_dim("2*x1", 2), 2);
        assert_eq!(inferred_dim("max1 + x10", 1), 10);
        assert_eq!(parse_rational("-3/4").unwrap().to_string(), "-3/4");
        assert_eq!(parse_rational("0.25").unwrap().to_string(), "1/4");
        assert!(parse_rational("one").is_err());
        assert_eq!(parse_vector("--xi", "0.5, -1").unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn input_errors_are_usage_errors() {
        let parse = CliError::from(Error::Parse {
            pos: 3,
            msg: "x".into(),
        });
        assert_eq!(parse.exit_code(), 2);
        assert_eq!(CliError::from(Error::NonConvergence(1.0)).exit_code(), 1);
    }
}
