mod cache;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde_json::{json, Value};

use riley_core::certify::{certify_slope, interval_report, transfer_interval, CertifyPolicy};
use riley_core::continuation::{
    discover_branches, find_seeds, seed_psi, trace_branch, Band, Direction, Parameterization, TraceConfig,
};
use riley_core::identities::identity_suite;
use riley_core::knotspec::{cf_to_pq, double_twist_to_pq};
use riley_core::numeric::{format_decimal, parse_decimal, parse_rational};
use riley_core::riley::slope_of_point;
use riley_core::{validate_knot, ContinuedFraction, ErrorClass, Precision, RileySystem, TwoBridgeKnot, WangFamilySpec};

const MIN_DIGITS: u32 = 30;

#[derive(Parser, Debug)]
#[command(
    name = "riley",
    version,
    about = "Riley polynomials, branch traces and slope certificates for 2-bridge knots"
)]
struct Cli {
    /// Working precision in decimal digits (at least 30).
    #[arg(long, global = true, default_value_t = 50)]
    precision: u32,
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Directory for cached Riley systems.
    #[arg(long, global = true, env = "RILEY_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct KnotArgs {
    /// K(p, q) by its parameters.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], allow_negative_numbers = true)]
    pq: Option<Vec<i64>>,
    /// Continued fraction entries, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cf: Option<Vec<i64>>,
    /// Double-twist knot C(k, m).
    #[arg(long, num_args = 2, value_names = ["K", "M"], allow_negative_numbers = true)]
    double_twist: Option<Vec<i64>>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ParamArg {
    ByT,
    ByU,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DirectionArg {
    Increasing,
    Decreasing,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BandArg {
    None,
    InverseQuartic,
    SqrtShell,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical text of the Riley polynomial.
    Poly {
        #[command(flatten)]
        knot: KnotArgs,
    },
    /// Trace one real branch and write it as CSV.
    Trace {
        #[command(flatten)]
        knot: KnotArgs,
        #[arg(long, value_enum, default_value = "by-t")]
        param: ParamArg,
        #[arg(long, value_enum, default_value = "increasing")]
        direction: DirectionArg,
        #[arg(long, value_enum, default_value = "none")]
        band: BandArg,
        /// Start from the n-th discovered seed instead of the largest root of P(t, 0).
        #[arg(long)]
        seed_index: Option<usize>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        u_max: Option<f64>,
    },
    /// Slope realized at a point (t, u) of the Riley curve.
    Slope {
        #[command(flatten)]
        knot: KnotArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
    },
    /// Certificate for one slope.
    Certify {
        #[command(flatten)]
        knot: KnotArgs,
        #[arg(long, allow_hyphen_values = true)]
        slope: String,
    },
    /// Certificates for sample slopes and the claimed interval.
    Report {
        #[command(flatten)]
        knot: KnotArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        samples: Vec<String>,
    },
    /// Carry a slope interval along a Wang family map.
    Transfer {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        eps: Vec<i8>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        c: Vec<i64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "3,1,2")]
        base: Vec<i64>,
        /// Source interval `lo,hi`.
        #[arg(long, allow_hyphen_values = true, default_value = "-4,8")]
        source: String,
    },
    /// Exact identity suite for every knot up to a bound.
    Selftest {
        #[arg(long, default_value_t = 13)]
        max_p: i64,
    },
}

/// A failure raised by the front end itself.
#[derive(Debug)]
struct CliError {
    code: &'static str,
    class: ErrorClass,
    message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn config_error(message: impl Into<String>) -> anyhow::Error {
    CliError {
        code: "InvalidConfig",
        class: ErrorClass::Domain,
        message: message.into(),
    }
    .into()
}

fn core<T, E: Into<riley_core::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(e.into()))
}

fn select_knot(args: &KnotArgs) -> Result<TwoBridgeKnot> {
    if let Some(pq) = &args.pq {
        return core(validate_knot(pq[0], pq[1]));
    }
    if let Some(cf) = &args.cf {
        let cf = core(ContinuedFraction::new(cf.clone()))?;
        return core(cf_to_pq(&cf));
    }
    if let Some(km) = &args.double_twist {
        return core(double_twist_to_pq(km[0], km[1]));
    }
    Err(config_error("no knot selector given"))
}

struct Job {
    precision: Precision,
    cache_dir: Option<PathBuf>,
}

impl Job {
    fn system(&self, knot: &TwoBridgeKnot) -> Result<Arc<RileySystem>> {
        cache::load_or_compute(self.cache_dir.as_deref(), knot)
    }

    fn trace_config(&self) -> TraceConfig {
        TraceConfig::for_precision(self.precision)
    }
}

fn knot_json(knot: &TwoBridgeKnot) -> Value {
    json!({ "p": knot.p(), "q": knot.q() })
}

fn to_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn parse_slope(text: &str) -> Result<Rational> {
    core(parse_rational(text))
}

fn run(cli: &Cli) -> Result<String> {
    if cli.precision < MIN_DIGITS {
        return Err(config_error(format!(
            "precision must be at least {MIN_DIGITS} digits, got {}",
            cli.precision
        )));
    }
    let job = Job {
        precision: Precision::digits(cli.precision),
        cache_dir: cli.cache_dir.clone(),
    };
    match &cli.command {
        Command::Poly { knot } => {
            let sys = job.system(&select_knot(knot)?)?;
            Ok(sys.p.to_canonical())
        }
        Command::Trace {
            knot,
            param,
            direction,
            band,
            seed_index,
            max_steps,
            t_max,
            u_max,
        } => {
            let sys = job.system(&select_knot(knot)?)?;
            let mut cfg = job.trace_config();
            cfg.band = match band {
                BandArg::None => Band::None,
                BandArg::InverseQuartic => Band::InverseQuarticStrip,
                BandArg::SqrtShell => Band::SqrtShell,
            };
            if let Some(n) = max_steps {
                cfg.max_steps = *n;
            }
            if let Some(t) = t_max {
                cfg.t_max = *t;
            }
            if let Some(u) = u_max {
                cfg.u_max = *u;
            }
            let seed = match seed_index {
                None => core(seed_psi(&sys, job.precision))?,
                Some(i) => {
                    let seeds = core(find_seeds(&sys, None, &cfg))?;
                    let count = seeds.len();
                    seeds
                        .into_iter()
                        .nth(*i)
                        .ok_or_else(|| config_error(format!("seed index {i} out of range ({count} seeds)")))?
                }
            };
            let param = match param {
                ParamArg::ByT => Parameterization::ByT,
                ParamArg::ByU => Parameterization::ByU,
            };
            let direction = match direction {
                DirectionArg::Increasing => Direction::Increasing,
                DirectionArg::Decreasing => Direction::Decreasing,
            };
            let branch = core(trace_branch(&sys, &seed, param, direction, &cfg))?;
            Ok(branch.to_csv())
        }
        Command::Slope { knot, t, u } => {
            let knot = select_knot(knot)?;
            let sys = job.system(&knot)?;
            let bits = job.precision.bits();
            let tf = core(parse_decimal(t, bits))?;
            let uf = core(parse_decimal(u, bits))?;
            let slope = core(slope_of_point(&sys, &tf, &uf, job.precision))?;
            Ok(to_text(&json!({
                "knot": knot_json(&knot),
                "point": { "t": t, "u": u },
                "slope": format_decimal(&slope, job.precision.decimal_digits()),
            })))
        }
        Command::Certify { knot, slope } => {
            let knot = select_knot(knot)?;
            let r = parse_slope(slope)?;
            let sys = job.system(&knot)?;
            let cfg = job.trace_config();
            let branches = core(discover_branches(&sys, &cfg))?;
            let policy = CertifyPolicy::for_precision(job.precision);
            let cert = core(certify_slope(&sys, &branches, &r, &policy, &cfg))?;
            Ok(to_text(&cert.to_json()))
        }
        Command::Report { knot, samples } => {
            let knot = select_knot(knot)?;
            let samples = samples.iter().map(|s| parse_slope(s)).collect::<Result<Vec<_>>>()?;
            let sys = job.system(&knot)?;
            let cfg = job.trace_config();
            let policy = CertifyPolicy::for_precision(job.precision);
            // torus knots are refused before any tracing
            let branches = if knot.is_torus() {
                Vec::new()
            } else {
                core(discover_branches(&sys, &cfg))?
            };
            let report = core(interval_report(&sys, &branches, &samples, &policy, &cfg))?;
            Ok(to_text(&report.to_json()))
        }
        Command::Transfer { eps, c, base, source } => {
            let base = core(ContinuedFraction::new(base.clone()))?;
            let family = core(WangFamilySpec::new(base, c.clone(), eps.clone()))?;
            let (lo, hi) = source
                .split_once(',')
                .ok_or_else(|| config_error(format!("source interval {source:?} is not `lo,hi`")))?;
            let source = (parse_slope(lo)?, parse_slope(hi)?);
            if source.0 >= source.1 {
                return Err(config_error("source interval is empty"));
            }
            let cert = core(transfer_interval(&family, &source))?;
            Ok(to_text(&cert.to_json()))
        }
        Command::Selftest { max_p } => {
            let reports = identity_suite(*max_p);
            let failures: Vec<Value> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| serde_json::to_value(r).expect("report serializes"))
                .collect();
            let summary = json!({
                "max_p": max_p,
                "knots": reports.len(),
                "failures": failures,
                "passed": failures.is_empty(),
            });
            if failures.is_empty() {
                Ok(to_text(&summary))
            } else {
                Err(CliError {
                    code: "IdentityFailure",
                    class: ErrorClass::Numerical,
                    message: serde_json::to_string(&summary).expect("json"),
                }
                .into())
            }
        }
    }
}

/// `(code, class)` of a failure, looking through the error chain.
fn classify(err: &anyhow::Error) -> (&'static str, ErrorClass) {
    if let Some(e) = err.downcast_ref::<riley_core::Error>() {
        return (e.code(), e.class());
    }
    if let Some(e) = err.downcast_ref::<CliError>() {
        return (e.code, e.class);
    }
    ("IoError", ErrorClass::Domain)
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = run(&cli).and_then(|text| emit(&cli, &text));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, class) = classify(&err);
            let class_name = match class {
                ErrorClass::Domain => "domain",
                ErrorClass::Numerical => "numerical",
            };
            let body = json!({ "error": { "code": code, "class": class_name, "message": format!("{err:#}") } });
            println!("{}", serde_json::to_string(&body).expect("json"));
            ExitCode::from(match class {
                ErrorClass::Domain => 1,
                ErrorClass::Numerical => 2,
            })
        }
    }
}
