//! Command-line front end.
//!
//! Exit codes: 0 on success or a passing check, 1 on a violation or an engine
//! failure, 2 on a usage error (including inputs the oracles refuse to scale to).

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::betafn::{corollary_bound, lemma1_bound_holds, lemma2_bound_holds, negbin_ccdf_oracle, reg_beta, BetaParams};
use crate::exactnum::{log2_interval, rational_to_decimal, LogInterval, Rational, DEFAULT_PRECISION};
use crate::oracle::{self, exhaustive_lcsz_check, monte_carlo_prob, LcszReport, OracleError};
use crate::primes::{is_prime, primes_up_to};
use crate::threshold::{
    analytic_corollary, analytic_threshold, check_density_monotonicity, default_epsilon,
    greedy_threshold, threshold_table, MonotonicityReport, MonotonicityStatus, ThresholdError, ThresholdResult,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_TABLE_MU: &str = "1..30,50";

#[derive(Parser, Debug)]
#[command(name = "lcsz", version)]
#[command(about = "Modulus-size thresholds and brute-force checks for the multilinear composite Schwartz-Zippel bound")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Upper bound on log2 t(lambda, mu) and the modulus that attains it
    Threshold(ThresholdArgs),
    /// Threshold table, one row per mu and one column per lambda
    Table(TableArgs),
    /// Exact I_{1/p}(r, mu), its -log2 enclosure and the closed-form bound
    Beta(BetaArgs),
    /// Closed-form threshold 4 mu^(2+eps) + (1 + 1/eps) lambda
    Analytic(AnalyticArgs),
    /// Exhaustive zero counts against the bound for small moduli
    VerifyLcsz(VerifyLcszArgs),
    /// Density ordering checks the greedy search relies on
    VerifyMonotonicity(VerifyMonotonicityArgs),
    /// Beta values against the convolution oracle and the closed-form bounds
    VerifyBeta(VerifyBetaArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Working precision of log enclosures, in bits
    #[arg(long, default_value_t = DEFAULT_PRECISION, value_parser = clap::value_parser!(u32).range(64..=1 << 16))]
    pub precision: u32,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub mu: u32,

    /// Target error exponent: the bound must drop to 2^-lambda
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub lambda: u32,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long, conflicts_with = "mu_range", value_parser = clap::value_parser!(u32).range(1..))]
    pub mu: Option<u32>,

    /// Inclusive ranges and single values, e.g. 1..30,50
    #[arg(long)]
    pub mu_range: Option<MuSet>,

    #[arg(long, conflicts_with = "lambdas", value_parser = clap::value_parser!(u32).range(1..))]
    pub lambda: Option<u32>,

    #[arg(long, value_delimiter = ',', default_values_t = [40, 100, 120, 240],
          value_parser = clap::value_parser!(u32).range(1..))]
    pub lambdas: Vec<u32>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BetaArgs {
    #[arg(long)]
    pub p: u64,

    #[arg(long)]
    pub r: u32,

    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub mu: u32,

    /// Fractional digits in decimal renderings
    #[arg(long, default_value_t = 30)]
    pub digits: usize,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    pub mu: u32,

    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub lambda: u32,

    /// Defaults to log_mu 2, the smallest admissible value
    #[arg(long)]
    pub epsilon: Option<f64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyLcszArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=5))]
    pub mu: u32,

    #[arg(long, value_delimiter = ',', required = true)]
    pub moduli: Vec<u64>,

    #[arg(long, default_value_t = 2)]
    pub m_min: u64,

    #[arg(long, default_value_t = 12)]
    pub m_max: u64,

    /// Also sample each maximizer this many times and report the estimate
    #[arg(long)]
    pub samples: Option<u64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyMonotonicityArgs {
    #[arg(long, conflicts_with = "mu_range", value_parser = clap::value_parser!(u32).range(1..))]
    pub mu: Option<u32>,

    /// Inclusive ranges and single values; defaults to 2..10
    #[arg(long)]
    pub mu_range: Option<MuSet>,

    #[arg(long, default_value_t = 1000)]
    pub p_max: u64,

    /// Steps r = 1..=r_max are compared
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(2..))]
    pub r_max: u32,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyBetaArgs {
    /// Primes up to 7, r in 0..=13, mu in 1..=6
    #[arg(long, conflicts_with_all = ["p_max", "r_max", "mu_max"])]
    pub grid_default: bool,

    #[arg(long, default_value_t = 7)]
    pub p_max: u64,

    #[arg(long, default_value_t = 13)]
    pub r_max: u32,

    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub mu_max: u32,

    #[command(flatten)]
    pub output: OutputArgs,
}

/// Sorted, deduplicated set of `mu` values parsed from `1..30,50`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuSet(pub Vec<u32>);

impl FromStr for MuSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| format!("bad mu value {t:?}: {e}"))
        };
        let mut values = Vec::new();
        for segment in s.split(',') {
            if let Some((a, b)) = segment.split_once("..") {
                let (a, b) = (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?);
                if a > b {
                    return Err(format!("empty range {segment:?}"));
                }
                values.extend(a..=b);
            } else {
                values.push(parse(segment)?);
            }
        }
        if values.contains(&0) {
            return Err("mu must be at least 1".into());
        }
        values.sort_unstable();
        values.dedup();
        Ok(MuSet(values))
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

impl From<ThresholdError> for CliError {
    fn from(e: ThresholdError) -> Self {
        match e {
            ThresholdError::InvalidParameter(_)
            | ThresholdError::NotPrime(_)
            | ThresholdError::EpsilonTooSmall { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return e.exit_code();
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let (code, text) = match command {
        Command::Threshold(a) => (EXIT_PASS, cmd_threshold(a)?),
        Command::Table(a) => (EXIT_PASS, cmd_table(a)?),
        Command::Beta(a) => (EXIT_PASS, cmd_beta(a)?),
        Command::Analytic(a) => (EXIT_PASS, cmd_analytic(a)?),
        Command::VerifyLcsz(a) => cmd_verify_lcsz(a)?,
        Command::VerifyMonotonicity(a) => cmd_verify_monotonicity(a)?,
        Command::VerifyBeta(a) => cmd_verify_beta(a)?,
    };
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(code)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn interval_text(iv: &LogInterval, digits: usize) -> String {
    let (lo, hi) = iv.to_decimal_strings(digits);
    format!("[{lo}, {hi}]")
}

#[derive(Serialize)]
struct ThresholdReport {
    mu: u32,
    lambda: u32,
    log2_t_upper: u64,
    factorization: Vec<(u64, u32)>,
    weight_consumed_lo: f64,
    precision_bits: u32,
}

impl From<&ThresholdResult> for ThresholdReport {
    fn from(r: &ThresholdResult) -> Self {
        ThresholdReport {
            mu: r.mu,
            lambda: r.lambda,
            log2_t_upper: r.v_bits,
            factorization: r.items.clone(),
            weight_consumed_lo: r.w_consumed.lo_f64_down(),
            precision_bits: r.precision,
        }
    }
}

fn cmd_threshold(a: &ThresholdArgs) -> Result<String, CliError> {
    let res = greedy_threshold(a.mu, a.lambda, a.output.precision)?;
    let mut s = String::new();
    match a.output.format {
        Format::Json => s = to_json(&ThresholdReport::from(&res)),
        Format::Csv => {
            s.push_str("mu,lambda,log2_t_upper,factorization,weight_consumed_lo,precision_bits\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                res.mu,
                res.lambda,
                res.v_bits,
                res.factorization_text(),
                res.w_consumed.lo_f64_down(),
                res.precision
            );
        }
        Format::Text => {
            let _ = writeln!(s, "log2 t(lambda = {}, mu = {}) <= {}", res.lambda, res.mu, res.v_bits);
            let _ = writeln!(s, "N = {}", res.factorization_text());
            let _ = writeln!(s, "sum r log2 p in {}", interval_text(&res.v_exact, 6));
            let _ = writeln!(s, "weight consumed in {}", interval_text(&res.w_consumed, 6));
            let _ = writeln!(s, "precision: {} bits", res.precision);
        }
    }
    Ok(s)
}

#[derive(Serialize)]
struct TableRow {
    mu: u32,
    log2_t_upper: Vec<u64>,
}

#[derive(Serialize)]
struct TableReport {
    precision_bits: u32,
    lambdas: Vec<u32>,
    rows: Vec<TableRow>,
}

fn cmd_table(a: &TableArgs) -> Result<String, CliError> {
    let mus = match (&a.mu, &a.mu_range) {
        (Some(mu), _) => vec![*mu],
        (None, Some(set)) => set.0.clone(),
        (None, None) => DEFAULT_TABLE_MU.parse::<MuSet>().expect("default range parses").0,
    };
    let lambdas = match a.lambda {
        Some(l) => vec![l],
        None => a.lambdas.clone(),
    };
    if mus.is_empty() || lambdas.is_empty() {
        return Err(CliError::Usage("empty mu or lambda list".into()));
    }
    let grid = threshold_table(&mus, &lambdas, a.output.precision)?;
    let mut s = String::new();
    match a.output.format {
        Format::Json => {
            let rows = mus
                .iter()
                .zip(grid)
                .map(|(&mu, log2_t_upper)| TableRow { mu, log2_t_upper })
                .collect();
            s = to_json(&TableReport {
                precision_bits: a.output.precision,
                lambdas,
                rows,
            });
        }
        Format::Csv => {
            s.push_str("mu");
            for l in &lambdas {
                let _ = write!(s, ",lambda_{l}");
            }
            s.push('\n');
            for (mu, row) in mus.iter().zip(&grid) {
                let _ = write!(s, "{mu}");
                for v in row {
                    let _ = write!(s, ",{v}");
                }
                s.push('\n');
            }
        }
        Format::Text => {
            let _ = write!(s, "{:>4}", "mu");
            for l in &lambdas {
                let _ = write!(s, " {:>9}", format!("l={l}"));
            }
            s.push('\n');
            for (mu, row) in mus.iter().zip(&grid) {
                let _ = write!(s, "{mu:>4}");
                for v in row {
                    let _ = write!(s, " {v:>9}");
                }
                s.push('\n');
            }
        }
    }
    Ok(s)
}

#[derive(Serialize)]
struct BetaReport {
    p: u64,
    r: u32,
    mu: u32,
    value: String,
    decimal: String,
    neg_log2_lo: String,
    neg_log2_hi: String,
    bound: String,
    bound_decimal: String,
    precision_bits: u32,
}

fn cmd_beta(a: &BetaArgs) -> Result<String, CliError> {
    if !is_prime(a.p) {
        return Err(CliError::Usage(format!("--p {} is not prime", a.p)));
    }
    let params = BetaParams::reciprocal(a.p, a.r, a.mu).map_err(|e| CliError::Usage(e.to_string()))?;
    let value = reg_beta(&params);
    let neg_log = -&log2_interval(&value, a.output.precision).expect("I is positive");
    let (lo, hi) = neg_log.to_decimal_strings(a.digits);
    let bound = corollary_bound(a.p, a.r, a.mu);
    let report = BetaReport {
        p: a.p,
        r: a.r,
        mu: a.mu,
        value: value.to_string(),
        decimal: rational_to_decimal(&value, a.digits),
        neg_log2_lo: lo,
        neg_log2_hi: hi,
        bound: bound.to_string(),
        bound_decimal: rational_to_decimal(&bound, a.digits),
        precision_bits: a.output.precision,
    };
    let mut s = String::new();
    match a.output.format {
        Format::Json => s = to_json(&report),
        Format::Csv => {
            s.push_str("p,r,mu,value,decimal,neg_log2_lo,neg_log2_hi,bound\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                report.p,
                report.r,
                report.mu,
                report.value,
                report.decimal,
                report.neg_log2_lo,
                report.neg_log2_hi,
                report.bound
            );
        }
        Format::Text => {
            let _ = writeln!(s, "I_{{1/{}}}({}, {}) = {}", a.p, a.r, a.mu, report.value);
            let _ = writeln!(s, "            ~ {}", report.decimal);
            let _ = writeln!(s, "-log2 I in [{}, {}]", report.neg_log2_lo, report.neg_log2_hi);
            let _ = writeln!(s, "closed-form bound = {} ~ {}", report.bound, report.bound_decimal);
        }
    }
    Ok(s)
}

#[derive(Serialize)]
struct AnalyticReport {
    mu: u32,
    lambda: u32,
    epsilon: f64,
    bound: f64,
    rounded: u64,
    corollary: f64,
}

fn cmd_analytic(a: &AnalyticArgs) -> Result<String, CliError> {
    let epsilon = a.epsilon.unwrap_or_else(|| default_epsilon(a.mu));
    let bound = analytic_threshold(a.mu, a.lambda, epsilon)?;
    let report = AnalyticReport {
        mu: a.mu,
        lambda: a.lambda,
        epsilon,
        bound,
        rounded: bound.round() as u64,
        corollary: analytic_corollary(a.mu, a.lambda),
    };
    let mut s = String::new();
    match a.output.format {
        Format::Json => s = to_json(&report),
        Format::Csv => {
            s.push_str("mu,lambda,epsilon,bound,rounded,corollary\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                report.mu, report.lambda, report.epsilon, report.bound, report.rounded, report.corollary
            );
        }
        Format::Text => {
            let _ = writeln!(s, "eps = {epsilon}");
            let _ = writeln!(
                s,
                "4 mu^(2+eps) + (1+1/eps) lambda <= {bound:.6} (rounds to {})",
                report.rounded
            );
            let _ = writeln!(s, "8 mu^2 + log2(2 mu) lambda <= {:.6}", report.corollary);
        }
    }
    Ok(s)
}

#[derive(Serialize)]
struct McReport {
    samples: u64,
    estimate: f64,
    half_width: f64,
    covers_exact: bool,
}

#[derive(Serialize)]
struct BoxRow {
    m: u64,
    max_ratio: String,
    bound: String,
    maximizer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<McReport>,
}

#[derive(Serialize)]
struct ViolationRow {
    poly: String,
    m: u64,
    ratio: String,
    bound: String,
}

#[derive(Serialize)]
struct ModulusReport {
    modulus: u64,
    factorization: String,
    polys_checked: u64,
    violation_count: u64,
    boxes: Vec<BoxRow>,
    violations: Vec<ViolationRow>,
}

#[derive(Serialize)]
struct LcszSuiteReport {
    mu: u32,
    passed: bool,
    violation_count: u64,
    moduli: Vec<ModulusReport>,
}

fn rational_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

fn modulus_report(report: &LcszReport, a: &VerifyLcszArgs) -> Result<ModulusReport, CliError> {
    let mut boxes = Vec::with_capacity(report.boxes.len());
    for b in &report.boxes {
        let monte_carlo = match a.samples {
            Some(samples) => {
                let est = monte_carlo_prob(&b.maximizer, report.modulus, b.m, samples, a.seed)?;
                Some(McReport {
                    samples,
                    estimate: est.estimate,
                    half_width: est.half_width,
                    covers_exact: est.covers(rational_f64(&b.max_ratio)),
                })
            }
            None => None,
        };
        boxes.push(BoxRow {
            m: b.m,
            max_ratio: b.max_ratio.to_string(),
            bound: b.bound.to_string(),
            maximizer: b.maximizer.to_string(),
            monte_carlo,
        });
    }
    Ok(ModulusReport {
        modulus: report.modulus,
        factorization: oracle::factorize(report.modulus)?.to_string(),
        polys_checked: report.polys_checked,
        violation_count: report.violation_count,
        boxes,
        violations: report
            .violations
            .iter()
            .map(|v| ViolationRow {
                poly: v.poly.to_string(),
                m: v.m,
                ratio: v.ratio.to_string(),
                bound: v.bound.to_string(),
            })
            .collect(),
    })
}

fn cmd_verify_lcsz(a: &VerifyLcszArgs) -> Result<(i32, String), CliError> {
    if a.m_min < 2 || a.m_min > a.m_max {
        return Err(CliError::Usage(format!(
            "need 2 <= --m-min <= --m-max, got {}..{}",
            a.m_min, a.m_max
        )));
    }
    let m_range: Vec<u64> = (a.m_min..=a.m_max).collect();
    let reports = a
        .moduli
        .par_iter()
        .map(|&n| exhaustive_lcsz_check(a.mu, n, &m_range))
        .collect::<Result<Vec<_>, _>>()?;
    let moduli = reports
        .iter()
        .map(|r| modulus_report(r, a))
        .collect::<Result<Vec<_>, _>>()?;
    let violation_count = moduli.iter().map(|m| m.violation_count).sum();
    let suite = LcszSuiteReport {
        mu: a.mu,
        passed: violation_count == 0,
        violation_count,
        moduli,
    };

    let mut s = String::new();
    match a.output.format {
        Format::Json => s = to_json(&suite),
        Format::Csv => {
            s.push_str("modulus,m,polys_checked,max_ratio,bound,maximizer,violations\n");
            for m in &suite.moduli {
                for b in &m.boxes {
                    let violations = m.violations.iter().filter(|v| v.m == b.m).count();
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        m.modulus, b.m, m.polys_checked, b.max_ratio, b.bound, b.maximizer, violations
                    );
                }
            }
        }
        Format::Text => {
            for m in &suite.moduli {
                let _ = writeln!(
                    s,
                    "mu = {}, N = {} = {}: {} coprime polynomials",
                    suite.mu, m.modulus, m.factorization, m.polys_checked
                );
                let _ = writeln!(s, "  {:>3}  {:<12} {:<16} maximizer", "m", "max ratio", "bound");
                for b in &m.boxes {
                    let _ = write!(s, "  {:>3}  {:<12} {:<16} {}", b.m, b.max_ratio, b.bound, b.maximizer);
                    if let Some(mc) = &b.monte_carlo {
                        let _ = write!(s, "  (sampled {:.4} +- {:.4})", mc.estimate, mc.half_width);
                    }
                    s.push('\n');
                }
                for v in &m.violations {
                    let _ = writeln!(s, "  VIOLATION m = {}: {} has ratio {} > {}", v.m, v.poly, v.ratio, v.bound);
                }
            }
            let _ = writeln!(s, "violations: {}", suite.violation_count);
            let _ = writeln!(s, "{}", if suite.passed { "PASS" } else { "FAIL" });
        }
    }
    Ok((if suite.passed { EXIT_PASS } else { EXIT_FAIL }, s))
}

#[derive(Serialize)]
struct MonotonicityRow {
    mu: u32,
    status: &'static str,
    primes_checked: usize,
    comparisons: usize,
    violation: Option<String>,
}

#[derive(Serialize)]
struct MonotonicitySuiteReport {
    p_max: u64,
    r_max: u32,
    passed: bool,
    results: Vec<MonotonicityRow>,
}

impl From<&MonotonicityReport> for MonotonicityRow {
    fn from(r: &MonotonicityReport) -> Self {
        let (status, violation) = match &r.status {
            MonotonicityStatus::Pass => ("pass", None),
            MonotonicityStatus::Inapplicable => ("inapplicable", None),
            MonotonicityStatus::Fail(v) => ("fail", Some(v.to_string())),
        };
        MonotonicityRow {
            mu: r.mu,
            status,
            primes_checked: r.primes_checked,
            comparisons: r.comparisons,
            violation,
        }
    }
}

fn cmd_verify_monotonicity(a: &VerifyMonotonicityArgs) -> Result<(i32, String), CliError> {
    let mus = match (&a.mu, &a.mu_range) {
        (Some(mu), _) => vec![*mu],
        (None, Some(set)) => set.0.clone(),
        (None, None) => (2..=10).collect(),
    };
    let reports = mus
        .par_iter()
        .map(|&mu| check_density_monotonicity(mu, a.p_max, a.r_max, a.output.precision))
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<MonotonicityRow> = reports.iter().map(MonotonicityRow::from).collect();
    let passed = results.iter().all(|r| r.status != "fail");
    let suite = MonotonicitySuiteReport {
        p_max: a.p_max,
        r_max: a.r_max,
        passed,
        results,
    };

    let mut s = String::new();
    match a.output.format {
        Format::Json => s = to_json(&suite),
        Format::Csv => {
            s.push_str("mu,status,primes_checked,comparisons,violation\n");
            for r in &suite.results {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.mu,
                    r.status,
                    r.primes_checked,
                    r.comparisons,
                    r.violation.as_deref().unwrap_or("")
                );
            }
        }
        Format::Text => {
            for r in &suite.results {
                let _ = write!(s, "mu = {}: {}", r.mu, r.status);
                match &r.violation {
                    Some(v) => {
                        let _ = writeln!(s, ", {v}");
                    }
                    None if r.status == "inapplicable" => s.push('\n'),
                    None => {
                        let _ = writeln!(
                            s,
                            " ({} primes <= {}, r <= {}, {} comparisons)",
                            r.primes_checked, suite.p_max, suite.r_max, r.comparisons
                        );
                    }
                }
            }
            let _ = writeln!(s, "{}", if suite.passed { "PASS" } else { "FAIL" });
        }
    }
    Ok((if suite.passed { EXIT_PASS } else { EXIT_FAIL }, s))
}

/// Tally for one family of exact checks on the beta grid.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CheckTally {
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl CheckTally {
    fn new(name: &'static str) -> Self {
        CheckTally {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }
}

/// Exact checks over primes `p <= p_max`, `0 <= r <= r_max`, `1 <= mu <= mu_max`.
pub fn beta_grid_checks(p_max: u64, r_max: u32, mu_max: u32) -> Vec<CheckTally> {
    let primes: Vec<u64> = primes_up_to(p_max).collect();
    let values: HashMap<(u64, u32, u32), Rational> = primes
        .par_iter()
        .flat_map_iter(|&p| {
            (0..=r_max).flat_map(move |r| {
                (1..=mu_max).map(move |mu| {
                    let params = BetaParams::reciprocal(p, r, mu).expect("prime p, mu >= 1");
                    ((p, r, mu), reg_beta(&params))
                })
            })
        })
        .collect();
    let oracle: Vec<((u64, u32, u32), bool)> = values
        .par_iter()
        .map(|(&(p, r, mu), v)| ((p, r, mu), negbin_ccdf_oracle(p, r, mu) == *v))
        .collect();

    let mut equivalence = CheckTally::new("oracle equivalence");
    let mut range = CheckTally::new("between 0 and 1");
    let mut mono_r = CheckTally::new("nonincreasing in r");
    let mut mono_mu = CheckTally::new("nondecreasing in mu");
    let mut mono_eps = CheckTally::new("nondecreasing in 1/p");
    let mut corollary = CheckTally::new("closed-form bound");
    let mut lemma1 = CheckTally::new("(mu/p)^r bound");
    let mut lemma2 = CheckTally::new("r^mu / p^r bound");

    let mut oracle = oracle;
    oracle.sort_unstable_by_key(|&(key, _)| key);
    for ((p, r, mu), ok) in oracle {
        equivalence.record(ok, || format!("p={p} r={r} mu={mu}"));
    }
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    for (pi, &p) in primes.iter().enumerate() {
        for r in 0..=r_max {
            for mu in 1..=mu_max {
                let v = &values[&(p, r, mu)];
                let at = || format!("p={p} r={r} mu={mu}");
                range.record(*v >= zero && *v <= one, at);
                if r > 0 {
                    mono_r.record(*v <= values[&(p, r - 1, mu)], at);
                }
                if mu > 1 {
                    mono_mu.record(*v >= values[&(p, r, mu - 1)], at);
                }
                if pi > 0 {
                    mono_eps.record(*v <= values[&(primes[pi - 1], r, mu)], at);
                }
                corollary.record(*v <= corollary_bound(p, r, mu), at);
                let params = BetaParams::reciprocal(p, r, mu).expect("valid");
                if let Some(ok) = lemma1_bound_holds(&params).holds() {
                    lemma1.record(ok, at);
                }
                if let Some(ok) = lemma2_bound_holds(&params).holds() {
                    lemma2.record(ok, at);
                }
            }
        }
    }
    vec![equivalence, range, mono_r, mono_mu, mono_eps, corollary, lemma1, lemma2]
}

#[derive(Serialize)]
struct BetaSuiteReport {
    p_max: u64,
    r_max: u32,
    mu_max: u32,
    passed: bool,
    checks: Vec<CheckTally>,
}

fn cmd_verify_beta(a: &VerifyBetaArgs) -> Result<(i32, String), CliError> {
    if a.p_max < 2 {
        return Err(CliError::Usage("--p-max must be at least 2".into()));
    }
    let checks = beta_grid_checks(a.p_max, a.r_max, a.mu_max);
    let passed = checks.iter().all(|c| c.failures == 0);
    let suite = BetaSuiteReport {
        p_max: a.p_max,
        r_max: a.r_max,
        mu_max: a.mu_max,
        passed,
        checks,
    };
    let mut s = String::new();
    match a.output.format {
        Format::Json => s = to_json(&suite),
        Format::Csv => {
            s.push_str("check,cases,failures,first_failure\n");
            for c in &suite.checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    c.name,
                    c.cases,
                    c.failures,
                    c.first_failure.as_deref().unwrap_or("")
                );
            }
        }
        Format::Text => {
            let _ = writeln!(
                s,
                "grid: primes <= {}, 0 <= r <= {}, 1 <= mu <= {}",
                suite.p_max, suite.r_max, suite.mu_max
            );
            for c in &suite.checks {
                let _ = write!(s, "{:<22} {:>6} cases, {} failures", c.name, c.cases, c.failures);
                if let Some(f) = &c.first_failure {
                    let _ = write!(s, " (first at {f})");
                }
                s.push('\n');
            }
            let _ = writeln!(s, "{}", if suite.passed { "PASS" } else { "FAIL" });
        }
    }
    Ok((if suite.passed { EXIT_PASS } else { EXIT_FAIL }, s))
}
