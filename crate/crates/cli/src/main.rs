//! `conecut`: demos, point-cloud export and the verification runner.
//!
//! Exit codes: 0 when everything reported holds, 1 on a failed property,
//! 2 on usage or parse errors.

mod config;
mod demos;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{extract_tolerances, Format, Overrides, RunConfig, SEED_ENV};
use demos::{CheckMapArgs, CliError, DncDemoArgs, EulerDemoArgs, Outcome, RingDemoArgs};

#[derive(Parser, Debug)]
#[command(name = "conecut", version, about = "Normal-cone deformation and blow-up kernels")]
#[command(after_help = "Tolerance overrides: --tol.<suite> <value> (e.g. --tol.atlas 1e-8).")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every sampler [default: 42, or $CONECUT_SEED]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample count (suites scale from 1000)
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// File of key=value lines (seed, samples, out, format, tol.<suite>)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Strict transform of a plane curve in one blow-up chart.
    ResolveCurve {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        chart: u8,
    },
    /// Run the verification suites.
    Verify {
        /// Restrict to these suites (repeatable)
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// List suite names and exit
        #[arg(long)]
        list: bool,
    },
    /// Local expressions of the sphere-to-projective-plane map.
    SphereDemo,
    /// Groupoid axioms, isotropy and the polar presentation.
    GroupoidDemo,
    /// Evaluations of the induced map on the deformation and its continuity table.
    DncDemo {
        /// Map in x1..xn (default: x1 + x2^2, 3*x2 - x1*x2 on (R^2, R))
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        slice_dim: Option<usize>,
        #[arg(long)]
        target_slice_dim: Option<usize>,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Euler-like test and tubular embedding of a vector field.
    EulerDemo {
        /// Components in x1..xn (default: the Euler field)
        #[arg(long)]
        field: Option<String>,
        /// Normal vector, comma separated
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        /// Slice point, comma separated (default: origin)
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long, default_value_t = 0)]
        slice_dim: usize,
    },
    /// Characters of a Laurent element of the algebraic deformation ring.
    DncRingDemo {
        /// Element such as "x1^2*t^-2 + y1*x1*t^-1 + 3"
        #[arg(long, allow_hyphen_values = true)]
        element: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        slice_dim: usize,
        /// Ambient point for the body character (default: all ones)
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, default_value = "2", allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
    },
    /// Adaptedness and rank report for a map of pairs.
    CheckMap {
        #[arg(long)]
        map: String,
        /// Input dimension (default: largest variable index)
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        slice_dim: usize,
        #[arg(long)]
        target_slice_dim: Option<usize>,
    },
}

fn run(cli: Cli, tolerances: std::collections::BTreeMap<String, f64>) -> Result<Outcome, CliError> {
    let Common {
        seed,
        samples,
        mut out,
        mut format,
        config,
    } = cli.common;
    // `--out csv|json` names a format for resolve-curve
    if matches!(cli.command, Command::ResolveCurve { .. }) {
        if let Some(f) = out.as_deref().and_then(|o| o.parse::<Format>().ok()) {
            format.get_or_insert(f);
            out = None;
        }
    }
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = RunConfig::resolve(
        env_seed.as_deref(),
        config.as_deref(),
        Overrides {
            seed,
            samples,
            out: out.map(PathBuf::from),
            format,
            tolerances,
        },
    )?;
    let outcome = match &cli.command {
        Command::ResolveCurve { poly, chart } => demos::resolve_curve(&cfg, poly, usize::from(*chart))?,
        Command::Verify { list: true, .. } => Outcome {
            body: conecut::verify::suite_names().join("\n") + "\n",
            passed: true,
        },
        Command::Verify { suites, .. } => demos::verify(&cfg, suites)?,
        Command::SphereDemo => demos::sphere_demo(&cfg)?,
        Command::GroupoidDemo => demos::groupoid_demo(&cfg)?,
        Command::DncDemo {
            map,
            slice_dim,
            target_slice_dim,
            points,
        } => demos::dnc_demo(
            &cfg,
            &DncDemoArgs {
                map: map.as_deref(),
                slice_dim: *slice_dim,
                target_slice_dim: *target_slice_dim,
                points: *points,
            },
        )?,
        Command::EulerDemo {
            field,
            xi,
            y,
            slice_dim,
        } => demos::euler_demo(
            &cfg,
            &EulerDemoArgs {
                field: field.as_deref(),
                xi,
                y: y.as_deref(),
                slice_dim: *slice_dim,
            },
        )?,
        Command::DncRingDemo {
            element,
            dim,
            slice_dim,
            x,
            s,
            y,
            xi,
        } => demos::dnc_ring_demo(
            &cfg,
            &RingDemoArgs {
                element,
                dim: *dim,
                slice_dim: *slice_dim,
                x: x.as_deref(),
                s,
                y: y.as_deref(),
                xi: xi.as_deref(),
            },
        )?,
        Command::CheckMap {
            map,
            dim,
            slice_dim,
            target_slice_dim,
        } => demos::check_map(
            &cfg,
            &CheckMapArgs {
                map,
                dim: *dim,
                slice_dim: *slice_dim,
                target_slice_dim: *target_slice_dim,
            },
        )?,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", outcome.body),
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (args, tolerances) = match extract_tolerances(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    match run(cli, tolerances) {
        Ok(o) if o.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
