//! Command-line front end of the `holotor` binary.
//!
//! Three subcommands are provided. `compute` evaluates invariants of one
//! link spec or a batch (a JSON array, evaluated in parallel with the input
//! order kept). `burau` prints a twisted Burau matrix and `det(1 − B)`.
//! `verify` runs one of the randomized suites of [`suites`].
//!
//! All output is JSON. Complex numbers are `[re, im]` pairs and every report
//! records the tool version, seed and tolerance. Exit status is 0 on
//! success, 1 for usage or parse errors and 2 when a mathematical
//! precondition fails (singular meridian, inadmissible colors, …).

pub mod spec;
pub mod suites;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::burau::{burau, det_one_minus, Variant};
use crate::error::Error;
use crate::holonomy::{find_admissible_gauge, gauge_transform, is_admissible};
use crate::invariants::{evaluate, InvariantReport, Policy, Selection};
use crate::numerics::Matrix;
use spec::{Input, LinkSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "HOLOTOR_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MATH: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "holotor", version, about = "Torsion and quantum holonomy invariants of SL2(C)-colored braid closures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate invariants of a colored link (or a JSON array of them).
    Compute(ComputeArgs),
    /// Run a randomized verification suite.
    Verify(VerifyArgs),
    /// Print a twisted Burau matrix and det(1 - B).
    Burau(BurauArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InvariantArg {
    Torsion,
    #[value(name = "T")]
    T,
    #[value(name = "F")]
    F,
    #[value(name = "K")]
    K,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Boundary,
    Reduced,
    Nice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Auto,
    Off,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Auto => Policy::Auto,
            PolicyArg::Off => Policy::Off,
        }
    }
}

/// Flags shared by the subcommands. Values given here override the
/// `options` block of the input spec.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Residual tolerance [default: 1e-9]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for gauge searches and random trials [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compact JSON output (the default)
    #[arg(long, conflicts_with = "pretty")]
    pub json: bool,
    /// Indented JSON output
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug, Clone)]
pub struct LinkArgs {
    /// Input file with a link spec or an array of them; stdin if absent or "-"
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Search for an admissible gauge when needed
    #[arg(long, value_enum)]
    pub gauge: Option<PolicyArg>,
    /// Add Markov stabilizations when the total holonomy is singular
    #[arg(long, value_enum)]
    pub stabilize: Option<PolicyArg>,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub invariant: InvariantArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct BurauArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long, value_enum, default_value = "reduced")]
    pub variant: VariantArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// One of: braid-relations, biquandle-ybe, schur-weyl, clifford,
    /// braiding-residuals, torsion-theorem
    pub suite: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Machine-readable error kind.
pub fn error_kind(e: &Error) -> &'static str {
    match e.root() {
        Error::Dimension(_) => "dimension",
        Error::InvalidBraid(_) => "invalid_braid",
        Error::DegenerateCharacter => "degenerate_character",
        Error::InadmissibleElement => "inadmissible_element",
        Error::InadmissibleTuple { .. } => "inadmissible_tuple",
        Error::InadmissibleCrossing { .. } => "inadmissible_crossing",
        Error::SingularMeridian { .. } => "singular_meridian",
        Error::SingularTotalHolonomy => "singular_total_holonomy",
        Error::NotClosure { .. } => "not_closure",
        Error::NoAdmissibleGauge { .. } => "no_admissible_gauge",
        Error::NoSimpleModule => "no_simple_module",
        Error::BadFractionalEigenvalue { .. } => "bad_fractional_eigenvalue",
        Error::LocalizationLocus => "localization_locus",
        Error::BraidingNotUnique { .. } => "braiding_not_unique",
        Error::NormalizationFailure => "normalization_failure",
        Error::TraceNotScalar { .. } => "trace_not_scalar",
        Error::LiftFailed { .. } => "lift_failed",
        Error::ClosureSolveFailed { .. } => "closure_solve_failed",
        Error::TooLarge(_) => "too_large",
        Error::Context { .. } => "context",
    }
}

/// Exit status for a library error: malformed input is a usage error,
/// everything else a failed mathematical precondition.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Dimension(_) | Error::InvalidBraid(_) => EXIT_USAGE,
        _ => EXIT_MATH,
    }
}

fn error_value(e: &Error) -> Value {
    json!({ "kind": error_kind(e), "message": e.to_string() })
}

fn to_text(v: &impl Serialize, pretty: bool) -> String {
    let text = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) };
    text.expect("reports serialize")
}

fn header(seed: u64, tol: f64) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(VERSION));
    m.insert("seed".into(), json!(seed));
    m.insert("tol".into(), json!(tol));
    m
}

fn merge(mut base: serde_json::Map<String, Value>, body: Value) -> Value {
    if let Value::Object(fields) = body {
        base.extend(fields);
    }
    Value::Object(base)
}

fn read_input(path: &Option<PathBuf>) -> Result<String, String> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display())),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| format!("cannot read stdin: {e}"))?;
            Ok(s)
        }
    }
}

fn parse_input(text: &str) -> Result<Vec<LinkSpec>, String> {
    match serde_json::from_str::<Input>(text) {
        Ok(Input::Single(s)) => Ok(vec![*s]),
        Ok(Input::Batch(v)) => Ok(v),
        Err(_) => {
            // re-parse as a single spec for a more specific message
            serde_json::from_str::<LinkSpec>(text).map(|s| vec![s]).map_err(|e| format!("invalid link spec: {e}"))
        }
    }
}

fn apply_flags(spec: &LinkSpec, link: &LinkArgs, common: &CommonArgs) -> LinkSpec {
    let mut s = spec.clone();
    if let Some(t) = common.tol {
        s.options.tol = t;
    }
    if let Some(seed) = common.seed {
        s.options.seed = seed;
    }
    if let Some(g) = link.gauge {
        s.options.gauge = g.into();
    }
    if let Some(p) = link.stabilize {
        s.options.stabilize = p.into();
    }
    s
}

/// One entry of `compute` output: the report or the error, with the code.
fn compute_one(spec: &LinkSpec, sel: Selection, invariant: InvariantArg) -> (Value, i32) {
    let head = header(spec.options.seed, spec.options.tol);
    let mut body = serde_json::Map::new();
    if let Some(name) = &spec.name {
        body.insert("name".into(), json!(name));
    }
    body.insert("invariant".into(), json!(invariant.to_possible_value().expect("no skipped values").get_name()));
    let result: Result<InvariantReport, Error> = spec.to_link().and_then(|l| evaluate(&l, sel));
    let code = match result {
        Ok(report) => {
            let v = serde_json::to_value(&report).expect("reports serialize");
            if let Value::Object(fields) = v {
                body.extend(fields.into_iter().filter(|(_, v)| !v.is_null()));
            }
            EXIT_OK
        }
        Err(e) => {
            body.insert("error".into(), error_value(&e));
            exit_code(&e)
        }
    };
    (merge(head, Value::Object(body)), code)
}

fn selection(i: InvariantArg) -> Selection {
    match i {
        InvariantArg::Torsion => Selection::Torsion,
        InvariantArg::T => Selection::T,
        InvariantArg::F => Selection::F,
        InvariantArg::K => Selection::K,
        InvariantArg::All => Selection::All,
    }
}

fn cmd_compute(args: &ComputeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let pretty = args.common.pretty;
    let (specs, batch) = match read_input(&args.link.input).and_then(|t| {
        let batch = t.trim_start().starts_with('[');
        parse_input(&t).map(|s| (s, batch))
    }) {
        Ok(v) => v,
        Err(msg) => return usage_error(&msg, &args.common, out, err),
    };
    let sel = selection(args.invariant);
    let results: Vec<(Value, i32)> = specs
        .par_iter()
        .map(|s| compute_one(&apply_flags(s, &args.link, &args.common), sel, args.invariant))
        .collect();
    let code = results.iter().map(|r| r.1).max().unwrap_or(EXIT_OK);
    for (v, c) in &results {
        if *c != EXIT_OK {
            let _ = writeln!(err, "holotor: {}", v["error"]["message"].as_str().unwrap_or("error"));
        }
    }
    let text = if batch {
        to_text(&results.into_iter().map(|r| r.0).collect::<Vec<_>>(), pretty)
    } else {
        to_text(&results[0].0, pretty)
    };
    let _ = writeln!(out, "{text}");
    code
}

fn matrix_value(m: &Matrix) -> Value {
    json!((0..m.rows()).map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn burau_one(spec: &LinkSpec, variant: VariantArg) -> Result<Value, Error> {
    let link = spec.to_link()?;
    let n = link.word.strands();
    let mut body = serde_json::Map::new();
    body.insert("variant".into(), json!(format!("{variant:?}").to_lowercase()));
    body.insert("strands".into(), json!(n));
    body.insert("word".into(), json!(link.word.letters()));
    let matrix = if n < 2 {
        Matrix::zeros(0, 0)
    } else {
        let v = match variant {
            VariantArg::Boundary => Variant::Boundary,
            VariantArg::Reduced => Variant::Reduced,
            VariantArg::Nice => Variant::Nice,
        };
        let colors = if v == Variant::Nice && !is_admissible(&link.colors, 10.0 * link.options.tol) {
            if link.options.gauge == Policy::Off {
                return Err(Error::InadmissibleTuple { index: 0 });
            }
            let g = find_admissible_gauge(&link.colors, link.options.seed, link.options.tol)?;
            body.insert("gauge".into(), json!([[g.get(0, 0), g.get(0, 1)], [g.get(1, 0), g.get(1, 1)]]));
            gauge_transform(&link.colors, &g)
        } else {
            link.colors.clone()
        };
        burau(&link.word, &colors, v)?.matrix
    };
    let det = det_one_minus(&matrix)?;
    body.insert("matrix".into(), matrix_value(&matrix));
    body.insert("det".into(), json!([det.re, det.im]));
    Ok(Value::Object(body))
}

fn cmd_burau(args: &BurauArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let pretty = args.common.pretty;
    let (specs, batch) = match read_input(&args.link.input).and_then(|t| {
        let batch = t.trim_start().starts_with('[');
        parse_input(&t).map(|s| (s, batch))
    }) {
        Ok(v) => v,
        Err(msg) => return usage_error(&msg, &args.common, out, err),
    };
    let results: Vec<(Value, i32)> = specs
        .par_iter()
        .map(|s| {
            let s = apply_flags(s, &args.link, &args.common);
            let head = header(s.options.seed, s.options.tol);
            match burau_one(&s, args.variant) {
                Ok(body) => (merge(head, body), EXIT_OK),
                Err(e) => (merge(head, json!({ "error": error_value(&e) })), exit_code(&e)),
            }
        })
        .collect();
    let code = results.iter().map(|r| r.1).max().unwrap_or(EXIT_OK);
    for (v, c) in &results {
        if *c != EXIT_OK {
            let _ = writeln!(err, "holotor: {}", v["error"]["message"].as_str().unwrap_or("error"));
        }
    }
    let text = if batch {
        to_text(&results.into_iter().map(|r| r.0).collect::<Vec<_>>(), pretty)
    } else {
        to_text(&results[0].0, pretty)
    };
    let _ = writeln!(out, "{text}");
    code
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let seed = args.common.seed.unwrap_or(0);
    let tol = args.common.tol.unwrap_or(1e-9);
    match suites::run_suite(&args.suite, args.trials, seed) {
        Ok(report) => {
            let body = serde_json::to_value(&report).expect("reports serialize");
            let _ = writeln!(out, "{}", to_text(&merge(header(seed, tol), body), args.common.pretty));
            let status = if report.passed { "pass" } else { "FAIL" };
            for c in &report.checks {
                let _ = writeln!(err, "{status:>4} {}/{}: max {:.3e} (threshold {:.0e})", report.suite, c.name, c.max, c.threshold);
            }
            if report.passed {
                EXIT_OK
            } else {
                EXIT_MATH
            }
        }
        Err(e) => usage_error(&e.to_string(), &args.common, out, err),
    }
}

fn usage_error(msg: &str, common: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let body = json!({ "error": { "kind": "usage", "message": msg } });
    let v = merge(header(common.seed.unwrap_or(0), common.tol.unwrap_or(1e-9)), body);
    let _ = writeln!(out, "{}", to_text(&v, common.pretty));
    let _ = writeln!(err, "holotor: {msg}");
    EXIT_USAGE
}

/// Size the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a pool may already exist when called twice in one process
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parse `args` and run, writing the report to `out` and diagnostics to
/// `err`. Returns the process exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match &cli.command {
        Command::Compute(a) => cmd_compute(a, out, err),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::Burau(a) => cmd_burau(a, out, err),
    }
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    configure_threads();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_on(args: &[&str], input: &str) -> (i32, Value, String) {
        let mut file = std::env::temp_dir();
        file.push(format!("holotor-unit-{}-{}.json", std::process::id(), rand::random::<u64>()));
        std::fs::File::create(&file).unwrap().write_all(input.as_bytes()).unwrap();
        let mut full: Vec<String> = vec!["holotor".into()];
        full.extend(args.iter().map(|s| s.to_string()));
        full.push("--input".into());
        full.push(file.display().to_string());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(full, &mut out, &mut err);
        std::fs::remove_file(&file).ok();
        let v = serde_json::from_slice(&out).unwrap_or(Value::Null);
        (code, v, String::from_utf8(err).unwrap())
    }

    const TREFOIL: &str = r#"{"strands":2,"word":[1,1,1],"colors":[[[4,0],[0,0.25]],[[4,0],[0,0.25]]]}"#;

    #[test]
    fn compute_torsion() {
        let (code, v, _) = run_on(&["compute", "--invariant", "torsion"], TREFOIL);
        assert_eq!(code, 0);
        assert!((v["torsion"][0].as_f64().unwrap() + 4225.0 / 900.0).abs() < 1e-9);
        assert_eq!(v["torsion"][1].as_f64().unwrap(), 0.0);
        assert!(v.get("T").is_none());
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["seed"], 0);
    }

    #[test]
    fn flags_override_spec_options() {
        let (_, v, _) = run_on(&["compute", "--invariant", "torsion", "--tol", "1e-8", "--seed", "5"], TREFOIL);
        assert_eq!(v["seed"], 5);
        assert_eq!(v["tol"].as_f64().unwrap(), 1e-8);
    }

    #[test]
    fn usage_and_math_exit_codes() {
        let (code, v, _) = run_on(&["compute"], "{not json");
        assert_eq!(code, EXIT_USAGE);
        assert_eq!(v["error"]["kind"], "usage");
        let singular = r#"{"strands":1,"word":[],"colors":[[[1,1],[0,1]]]}"#;
        let (code, v, err) = run_on(&["compute", "--invariant", "T"], singular);
        assert_eq!(code, EXIT_MATH);
        assert!(v["error"]["message"].as_str().unwrap().contains("singular meridian"));
        assert!(err.contains("singular meridian"));
        let (code, _, _) = run_on(&["compute", "--invariant", "X"], TREFOIL);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn burau_reduced_and_trivial() {
        let (code, v, _) = run_on(&["burau", "--variant", "reduced"], TREFOIL);
        assert_eq!(code, 0);
        assert!((v["det"][0].as_f64().unwrap() - 66.015625).abs() < 1e-9);
        let one = r#"{"strands":1,"word":[],"colors":[[[4,0],[0,0.25]]]}"#;
        let (_, v, _) = run_on(&["burau", "--variant", "reduced"], one);
        assert_eq!(v["matrix"], json!([]));
        assert_eq!(v["det"], json!([1.0, 0.0]));
    }

    #[test]
    fn batch_preserves_order() {
        let unknot = r#"{"name":"u","strands":1,"word":[],"colors":[[[4,0],[0,0.25]]]}"#;
        let (code, v, _) = run_on(&["compute", "--invariant", "torsion"], &format!("[{TREFOIL},{unknot},{TREFOIL}]"));
        assert_eq!(code, 0);
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 3);
        assert_eq!(arr[1]["name"], "u");
        assert!((arr[1]["torsion"][0].as_f64().unwrap() + 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_suite_is_a_usage_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["holotor", "verify", "bogus"], &mut out, &mut err), EXIT_USAGE);
    }
}
