mod common;

use std::io::{self, Write};
use std::process::{Command, Output};

use common::{parse_table, MU20_LAMBDA120, PUBLISHED_TABLE};
use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde_json::Value;

fn lcsz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcsz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn threshold_json_reconstructs_modulus() {
    for (mu, lambda) in [("20", "120"), ("5", "100"), ("13", "40")] {
        let out = lcsz(&["threshold", "--mu", mu, "--lambda", lambda, "--format", "json"]);
        assert_eq!(out.status.code(), Some(0));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        let n = v["factorization"]
            .as_array()
            .unwrap()
            .iter()
            .fold(BigUint::one(), |acc, pr| {
                let p = pr[0].as_u64().unwrap();
                let r = pr[1].as_u64().unwrap() as u32;
                acc * Pow::pow(BigUint::from(p), r)
            });
        // ceil(log2 N) = bits(N - 1) for N >= 2
        let ceil_log = (n - 1u32).bits();
        assert_eq!(v["log2_t_upper"].as_u64().unwrap(), ceil_log);
        assert!(v["weight_consumed_lo"].as_f64().unwrap() >= lambda.parse::<f64>().unwrap());
        assert_eq!(v["precision_bits"], 128);
    }
}

#[test]
fn threshold_text_matches_published_factorization() {
    let out = lcsz(&["threshold", "--mu", "20", "--lambda", "120"]);
    let text = stdout(&out);
    let line = text.lines().find_map(|l| l.strip_prefix("N = ")).unwrap();
    assert_eq!(line, MU20_LAMBDA120.trim());
    assert!(text.starts_with("log2 t(lambda = 120, mu = 20) <= 416\n"));
}

#[test]
fn table_output_is_byte_identical_across_runs() {
    for format in ["csv", "json", "text"] {
        let args = ["table", "--mu-range", "1..8,50", "--lambdas", "40,240", "--format", format];
        let a = lcsz(&args);
        let b = lcsz(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
}

#[test]
fn default_table_matches_published_csv() {
    let out = lcsz(&["table", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(!text.contains('\r'));
    assert_eq!(parse_table(&text), parse_table(PUBLISHED_TABLE));
}

#[test]
fn table_json_shape() {
    let out = lcsz(&["table", "--mu", "30", "--lambda", "240", "--format", "json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["lambdas"], serde_json::json!([240]));
    assert_eq!(v["rows"][0]["mu"], 30);
    assert_eq!(v["rows"][0]["log2_t_upper"], serde_json::json!([831]));
}

#[test]
fn exit_code_contract() {
    let cases: &[(&[&str], i32)] = &[
        (&["threshold", "--mu", "1", "--lambda", "240"], 0),
        (&["beta", "--p", "2", "--r", "2", "--mu", "2"], 0),
        (&["analytic", "--mu", "20", "--lambda", "120"], 0),
        (&["verify-lcsz", "--mu", "2", "--moduli", "4,6", "--m-max", "6"], 0),
        (&["verify-monotonicity", "--mu", "3", "--p-max", "1000", "--r-max", "30"], 0),
        (&["verify-beta", "--grid-default"], 0),
        (&["threshold", "--mu", "2"], 2),
        (&["threshold", "--mu", "2", "--lambda", "0"], 2),
        (&["threshold", "--mu", "2", "--lambda", "5", "--precision", "63"], 2),
        (&["threshold", "--mu", "2", "--lambda", "5", "--format", "xml"], 2),
        (&["beta", "--p", "9", "--r", "2", "--mu", "2"], 2),
        (&["analytic", "--mu", "20", "--lambda", "120", "--epsilon", "0.1"], 2),
        (&["verify-lcsz", "--mu", "2", "--moduli", "40"], 2),
        (&["verify-lcsz", "--mu", "2", "--moduli", "1"], 2),
        (&["verify-lcsz", "--mu", "2", "--moduli", "4", "--m-min", "9", "--m-max", "3"], 2),
        (&["table", "--mu-range", "3..1"], 2),
        (&["frobnicate"], 2),
    ];
    for (args, code) in cases {
        let out = lcsz(args);
        assert_eq!(out.status.code(), Some(*code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        if *code == 2 {
            assert!(!out.stderr.is_empty(), "{args:?} explains itself");
        }
    }
}

#[test]
fn scale_refusal_explains_estimate() {
    let out = lcsz(&["verify-lcsz", "--mu", "2", "--moduli", "40"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("40^4"), "{err}");
}

struct BrokenPipe;

impl Write for BrokenPipe {
    fn write(&mut self, _: &[u8]) -> io::Result<usize> {
        Err(io::Error::new(io::ErrorKind::BrokenPipe, "closed"))
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[test]
fn output_failure_exits_one() {
    let mut err = Vec::new();
    let code = lcsz::cli::run(["lcsz", "beta", "--p", "3", "--r", "1", "--mu", "1"], &mut BrokenPipe, &mut err);
    assert_eq!(code, lcsz::cli::EXIT_FAIL);
    assert!(String::from_utf8(err).unwrap().contains("closed"));
}

#[test]
fn beta_reports() {
    let out = lcsz(&["beta", "--p", "3", "--r", "4", "--mu", "2", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,r,mu,value,decimal,neg_log2_lo,neg_log2_hi,bound"));
    // I_{1/3}(4, 2) = 1 - (4/9)(1 + 2/3 + 3/9 + 4/27) = 11/243
    assert!(lines.next().unwrap().starts_with("3,4,2,11/243,0.045267489"));
}

#[test]
fn verify_outputs_parse() {
    let out = lcsz(&["verify-lcsz", "--mu", "2", "--moduli", "4,9", "--m-max", "5", "--format", "json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["moduli"][1]["factorization"], "3^2");
    assert_eq!(v["moduli"][0]["boxes"].as_array().unwrap().len(), 4);

    let out = lcsz(&["verify-monotonicity", "--mu-range", "2..4", "--p-max", "50", "--format", "csv"]);
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("mu,status,primes_checked,comparisons,violation"));
    assert_eq!(text.lines().filter(|l| l.contains(",pass,")).count(), 3);

    let out = lcsz(&["verify-beta", "--p-max", "11", "--r-max", "20", "--mu-max", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
}
