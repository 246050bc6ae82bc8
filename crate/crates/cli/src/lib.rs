//! Argument parsing and dispatch for the `renyi-clt` executable.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use renyi_clt::attraction::classify;
use renyi_clt::density::{zn_density, CumulantSet, Family, GridSpec};
use renyi_clt::divergence::{divergence, DivergenceKind};
use renyi_clt::edgeworth::{expansion_coefficients, predict_tsallis, q_polys};
use renyi_clt::exp_series::{chi2_parseval, chi2_partial_sums, normal_moments};
use renyi_clt::harness::{local_limit_on, sweep_on, SweepReport};
use renyi_clt::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "renyi-clt", version, about = "Rényi divergence in the central limit theorem")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Family spec, e.g. `gaussian_mixture components=0.7:0.5,1.3:0.5`
    #[arg(long, num_args = 1..)]
    family: Vec<String>,
    /// Worker threads (default: all available)
    #[arg(long, env = "RENYI_CLT_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    /// Write to FILE instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Divergences of Z_n from the standard normal
    Divergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "renyi")]
        kind: Vec<String>,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Normal moments and the Parseval series for chi-squared
    Series {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        order: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Expansion coefficients b_j and predicted Tsallis values
    Edgeworth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 4)]
        s: usize,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Cumulants γ_3, γ_4, … instead of a family
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        cumulants: Vec<f64>,
    },
    /// Subgaussian attraction verdict
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Measured against predicted divergences over a list of n
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128,256")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        s: usize,
    },
    /// Weighted sup distance of p_n from the normal density
    LocalLimit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "128")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        s: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Divergence { kinds: Vec<DivergenceKind>, alpha: f64, n: usize },
    Series { order: usize, n: usize },
    Edgeworth { alpha: f64, s: usize, n: Vec<usize>, cumulants: Option<CumulantSet> },
    Classify { alpha: f64 },
    Sweep { alpha: f64, n: Vec<usize>, s: usize },
    LocalLimit { alpha: f64, n: Vec<usize>, s: usize },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub family: Family,
    pub spec: GridSpec,
    pub output: OutputFormat,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

fn check_alpha_gt1(flag: &str, alpha: f64) -> Result<(), CliError> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(CliError::input(format!("--{flag}: {alpha} must exceed 1 (use `divergence --kind kl` for alpha = 1)")))
    }
}

fn check_ns(ns: &[usize]) -> Result<(), CliError> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::input("--n: values must be positive integers"));
    }
    Ok(())
}

fn check_s(s: usize) -> Result<(), CliError> {
    if !(3..=8).contains(&s) {
        return Err(CliError::input(format!("--s: {s} is outside 3..=8")));
    }
    Ok(())
}

/// Parses and validates everything before any computation runs.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
        let text = e.to_string();
        let message = if code == 0 {
            text
        } else {
            text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string()
        };
        CliError { code, message }
    })?;
    let (common, command, default_output) = match cli.command {
        Cmd::Divergence { common, kind, alpha, n } => {
            let kinds = kind
                .iter()
                .map(|k| k.parse::<DivergenceKind>().map_err(|e| CliError::input(format!("--kind: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            for k in &kinds {
                if k.takes_alpha() {
                    k.validate_alpha(alpha).map_err(|e| CliError::input(format!("--alpha: {e}")))?;
                }
            }
            check_ns(&[n])?;
            (common, Command::Divergence { kinds, alpha, n }, OutputFormat::Csv)
        }
        Cmd::Series { common, order, n } => {
            if !(1..=170).contains(&order) {
                return Err(CliError::input(format!("--order: {order} is outside 1..=170")));
            }
            check_ns(&[n])?;
            (common, Command::Series { order, n }, OutputFormat::Csv)
        }
        Cmd::Edgeworth { common, alpha, s, n, cumulants } => {
            check_alpha_gt1("alpha", alpha)?;
            check_s(s)?;
            if n.contains(&0) {
                return Err(CliError::input("--n: values must be positive integers"));
            }
            if cumulants.iter().any(|g| !g.is_finite()) {
                return Err(CliError::input("--cumulants: values must be finite"));
            }
            if !cumulants.is_empty() && cumulants.len() + 2 < 2 * s - 3 {
                return Err(CliError::input(format!(
                    "--cumulants: order s = {s} needs gamma_3 through gamma_{}",
                    2 * s - 3
                )));
            }
            let cumulants = match (cumulants.is_empty(), common.family.is_empty()) {
                (true, _) => None,
                (false, true) => Some(CumulantSet::new(cumulants)),
                (false, false) => return Err(CliError::input("--cumulants: conflicts with --family")),
            };
            (common, Command::Edgeworth { alpha, s, n, cumulants }, OutputFormat::Csv)
        }
        Cmd::Classify { common, alpha } => {
            check_alpha_gt1("alpha", alpha)?;
            (common, Command::Classify { alpha }, OutputFormat::Json)
        }
        Cmd::Sweep { common, alpha, n, s } => {
            check_alpha_gt1("alpha", alpha)?;
            check_ns(&n)?;
            check_s(s)?;
            (common, Command::Sweep { alpha, n, s }, OutputFormat::Csv)
        }
        Cmd::LocalLimit { common, alpha, n, s } => {
            check_alpha_gt1("alpha", alpha)?;
            check_ns(&n)?;
            check_s(s)?;
            (common, Command::LocalLimit { alpha, n, s }, OutputFormat::Csv)
        }
    };
    let family: Family = if common.family.is_empty() {
        match command {
            Command::Edgeworth { cumulants: Some(_), .. } => Family::standard_normal(),
            _ => return Err(CliError::input("--family: required")),
        }
    } else {
        common.family.join(" ").parse().map_err(|e: Error| CliError::input(format!("--family: {e}")))?
    };
    let default = GridSpec::default();
    let spec = GridSpec::new(
        common.half_width.unwrap_or(default.half_width()),
        common.grid_points.unwrap_or(default.points()),
    )
    .map_err(|e| CliError::input(format!("--grid-points/--half-width: {e}")))?;
    if common.threads == Some(0) {
        return Err(CliError::input("--threads: must be at least 1"));
    }
    Ok(RunConfig {
        command,
        family,
        spec,
        output: common.output.unwrap_or(default_output),
        out: common.out,
        threads: common.threads,
    })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. }
        | Error::Aliasing { .. }
        | Error::TailMass { .. }
        | Error::Inconclusive(_)
        | Error::NonPositive { .. } => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

/// Twelve significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

fn jnum(v: f64) -> Value {
    if v.is_finite() {
        let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
        json!(rounded)
    } else {
        Value::String(fmt_num(v))
    }
}

fn jopt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, jnum)
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// Runs the command and renders its output.
pub fn execute(cfg: &RunConfig) -> Result<String, Error> {
    let f = &cfg.family;
    let spec = &cfg.spec;
    let json_out = cfg.output == OutputFormat::Json;
    Ok(match &cfg.command {
        Command::Divergence { kinds, alpha, n } => {
            let d = zn_density(f, *n, spec)?;
            let vals = kinds.iter().map(|&k| divergence(&d, k, *alpha)).collect::<Result<Vec<_>, _>>()?;
            if json_out {
                let results: Vec<Value> = vals
                    .iter()
                    .map(|v| {
                        json!({
                            "kind": v.kind.name(),
                            "alpha": jopt(v.alpha),
                            "value": jnum(v.value),
                            "truncation_error_bound": jnum(v.truncation_error_bound),
                        })
                    })
                    .collect();
                render_json(&json!({ "family": f.to_string(), "n": n, "results": results }))
            } else {
                csv(
                    "kind,alpha,value,trunc_bound",
                    vals.iter().map(|v| {
                        vec![
                            v.kind.name().to_string(),
                            v.alpha.map(fmt_num).unwrap_or_default(),
                            fmt_num(v.value),
                            fmt_num(v.truncation_error_bound),
                        ]
                    }),
                )
            }
        }
        Command::Series { order, n } => {
            let d = zn_density(f, *n, spec)?;
            let c = normal_moments(&d, *order);
            let partial = chi2_partial_sums(&c);
            if json_out {
                let quad = divergence(&d, DivergenceKind::Chi2, 2.0).map(|v| v.value);
                render_json(&json!({
                    "family": f.to_string(),
                    "n": n,
                    "order": order,
                    "chi2_series": jnum(chi2_parseval(&c)),
                    "chi2_quadrature": quad.map_or(Value::Null, jnum),
                    "remainder_estimate": jnum(c.remainder_estimate()),
                    "c": c.as_slice().iter().map(|&v| jnum(v)).collect::<Vec<_>>(),
                    "partial_sums": partial.iter().map(|&v| jnum(v)).collect::<Vec<_>>(),
                }))
            } else {
                csv(
                    "k,c_k,partial_sum",
                    (0..=*order).map(|k| vec![k.to_string(), fmt_num(c.get(k)), fmt_num(partial[k])]),
                )
            }
        }
        Command::Edgeworth { alpha, s, n, cumulants } => {
            let gamma = match cumulants {
                Some(g) => g.clone(),
                None => f.cumulants((2 * s - 3).max(*s))?,
            };
            let coeffs = expansion_coefficients(*s, *alpha, &gamma)?;
            let q = q_polys(&gamma, s - 2)?;
            if json_out {
                let preds = n
                    .iter()
                    .map(|&m| Ok(json!({ "n": m, "talpha": jnum(predict_tsallis(m, *s, *alpha, &gamma)?) })))
                    .collect::<Result<Vec<_>, Error>>()?;
                let qs: Vec<Value> = q
                    .q
                    .iter()
                    .map(|terms| {
                        Value::Array(
                            terms.iter().map(|&(k, c)| json!({ "hermite": k, "coefficient": jnum(c) })).collect(),
                        )
                    })
                    .collect();
                render_json(&json!({
                    "family": if cumulants.is_some() { Value::Null } else { json!(f.to_string()) },
                    "alpha": jnum(*alpha),
                    "s": s,
                    "q": qs,
                    "cumulants": gamma.as_slice().iter().map(|&v| jnum(v)).collect::<Vec<_>>(),
                    "b": coeffs.b.iter().map(|&v| jnum(v)).collect::<Vec<_>>(),
                    "predictions": preds,
                }))
            } else {
                csv("j,b_j", coeffs.b.iter().enumerate().map(|(j, b)| vec![(j + 1).to_string(), fmt_num(*b)]))
            }
        }
        Command::Classify { alpha } => {
            let v = classify(f, *alpha)?;
            let status = serde_json::to_value(v.status).expect("status serializes");
            if json_out {
                render_json(&json!({
                    "family": f.to_string(),
                    "status": status,
                    "witness": jopt(v.witness),
                    "alpha": jnum(v.alpha),
                    "psi_max": jopt(v.psi_max),
                    "window": jnum(v.window),
                    "scan_resolution": jnum(v.scan_resolution),
                    "evaluations": v.evaluations,
                }))
            } else {
                csv(
                    "status,witness,alpha,psi_max,window,scan_resolution,evaluations",
                    [vec![
                        status.as_str().unwrap_or_default().to_string(),
                        v.witness.map(fmt_num).unwrap_or_default(),
                        fmt_num(v.alpha),
                        v.psi_max.map(fmt_num).unwrap_or_default(),
                        fmt_num(v.window),
                        fmt_num(v.scan_resolution),
                        v.evaluations.to_string(),
                    ]],
                )
            }
        }
        Command::Sweep { alpha, n, s } => {
            let r = sweep_on(f, *alpha, n, *s, spec)?;
            if json_out {
                let rows: Vec<Value> = r
                    .rows
                    .iter()
                    .map(|row| {
                        json!({
                            "n": row.n,
                            "talpha": jnum(row.talpha),
                            "chi2": jnum(row.chi2),
                            "pred_s3": jnum(row.pred_s3),
                            "pred_s4": jnum(row.pred_s4),
                            "lower_bound": jnum(row.lower_bound),
                            "trunc_bound": jnum(row.trunc_bound),
                            "half_width": jnum(row.half_width),
                        })
                    })
                    .collect();
                let fit = |fit: Option<renyi_clt::harness::RateFit>| {
                    fit.map_or(Value::Null, |f| json!({ "exponent": jnum(f.exponent), "amplitude": jnum(f.amplitude) }))
                };
                render_json(&json!({
                    "family": r.family,
                    "alpha": jnum(r.alpha),
                    "s": r.s,
                    "status": r.status.map_or(Value::Null, |s| serde_json::to_value(s).expect("status serializes")),
                    "rows": rows,
                    "fit": fit(r.fit),
                    "chi2_fit": fit(r.chi2_fit),
                }))
            } else {
                csv(
                    SweepReport::CSV_HEADER,
                    r.rows.iter().map(|row| {
                        vec![
                            row.n.to_string(),
                            fmt_num(row.talpha),
                            fmt_num(row.chi2),
                            fmt_num(row.pred_s3),
                            fmt_num(row.pred_s4),
                            fmt_num(row.lower_bound),
                            fmt_num(row.trunc_bound),
                        ]
                    }),
                )
            }
        }
        Command::LocalLimit { alpha, n, s } => {
            let res = n
                .iter()
                .map(|&m| local_limit_on(f, m, *alpha, *s, spec).map(|l| (m, l)))
                .collect::<Result<Vec<_>, _>>()?;
            if json_out {
                let rows: Vec<Value> = res
                    .iter()
                    .map(|(m, l)| {
                        json!({
                            "n": m,
                            "sup": jnum(l.sup),
                            "predicted": jnum(l.predicted),
                            "ratio": jnum(l.ratio),
                            "argmax": jnum(l.argmax),
                        })
                    })
                    .collect();
                render_json(&json!({ "family": f.to_string(), "alpha": jnum(*alpha), "s": s, "rows": rows }))
            } else {
                csv(
                    "n,sup,predicted,ratio,argmax",
                    res.iter().map(|(m, l)| {
                        vec![m.to_string(), fmt_num(l.sup), fmt_num(l.predicted), fmt_num(l.ratio), fmt_num(l.argmax)]
                    }),
                )
            }
        }
    })
}

/// Executes on a dedicated pool and writes the output; returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_INPUT;
        }
    };
    let text = match pool.install(|| execute(cfg)) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            return exit_code(&e);
        }
    };
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: --out {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => print!("{text}"),
    }
    0
}

fn one_line(s: &str) -> String {
    let mut out = String::new();
    for (i, l) in s.lines().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", l.trim());
    }
    out
}

/// Entry point used by the binary.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cfg) => run(&cfg),
        Err(e) if e.code == 0 => {
            print!("{}", e.message);
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
