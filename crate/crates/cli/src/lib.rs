//! Command-line front end for `ecp-core`: argument parsing, report
//! rendering and exit-code mapping.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecp_core::oracle::{self, adjudicate, certify_grid, Certification, FormulaVerdict};
use ecp_core::protocol::{BranchCategory, DEFAULT_ROUNDS};
use ecp_core::{
    p_total_curve_with, ConcentrationReport, CurvePoint, Engine, Error, Execution, Grid, ProtocolParams,
};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ecp", version, about = "Single-photon entanglement concentration simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Linear-optics protocol, one run.
    Ecp1(ProtocolArgs),
    /// Recycling QND protocol over several rounds.
    Ecp2(ProtocolArgs),
    /// Total success probability of the QND protocol over a grid of |α|².
    Sweep(SweepArgs),
    /// Certify the engine against the dense oracle.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long = "alpha-sq")]
    pub alpha_sq: f64,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    pub rounds: u32,
    /// Fixed VBS transmittance instead of the optimal schedule.
    #[arg(long = "t")]
    pub t_override: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.005)]
    pub min: f64,
    #[arg(long, default_value_t = 0.995)]
    pub max: f64,
    #[arg(long, default_value_t = 181)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    pub rounds: u32,
    /// Evaluate grid points on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Certify a single point instead of the standard grid.
    #[arg(long = "alpha-sq")]
    pub alpha_sq: Option<f64>,
    #[arg(long, default_value_t = oracle::STANDARD_ROUNDS)]
    pub rounds: u32,
    #[arg(long)]
    pub sequential: bool,
    #[cfg(feature = "fault-injection")]
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Result of a command: the rendered document, optional diagnostics for
/// stderr and the exit code.
#[derive(Debug)]
pub struct Rendered {
    pub body: String,
    pub diagnostics: String,
    pub code: i32,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CertificationFailed { .. } => EXIT_VERIFY_FAILED,
        _ => EXIT_INVALID,
    }
}

/// Parses, executes and writes output. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (rendered, target) = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    if !rendered.diagnostics.is_empty() {
        let _ = stderr.write_all(rendered.diagnostics.as_bytes());
    }
    let written = match target {
        Some(path) => std::fs::write(path, rendered.body.as_bytes()),
        None => stdout.write_all(rendered.body.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_IO;
    }
    rendered.code
}

fn execute(command: &Command) -> Result<(Rendered, Option<PathBuf>), Error> {
    match command {
        Command::Ecp1(a) => {
            let report = Engine::new().run_ecp1(&protocol_params(a)?)?;
            let body = match a.out.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report),
                Format::Csv => ecp1_csv(&report),
            };
            Ok((ok(body), a.out.output.clone()))
        }
        Command::Ecp2(a) => {
            let report = Engine::new().run_ecp2(&protocol_params(a)?)?;
            let body = match a.out.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report),
                Format::Csv => ecp2_csv(&report),
            };
            Ok((ok(body), a.out.output.clone()))
        }
        Command::Sweep(a) => {
            let grid = Grid::new(a.min, a.max, a.steps)?;
            let curve = p_total_curve_with(&grid.points(), a.rounds, execution(a.sequential))?;
            let body = match a.out.format.unwrap_or(Format::Csv) {
                Format::Csv => sweep_csv(&curve, a.rounds),
                Format::Json => to_json(&SweepDocument { grid: &grid, rounds: a.rounds, points: &curve }),
            };
            Ok((ok(body), a.out.output.clone()))
        }
        Command::Verify(a) => {
            #[cfg(feature = "fault-injection")]
            let engine = if a.inject_fault {
                Engine::with_fault(ecp_core::protocol::Fault::FlippedSplitterSign)
            } else {
                Engine::new()
            };
            #[cfg(not(feature = "fault-injection"))]
            let engine = Engine::new();
            let rendered = verify(&engine, a.alpha_sq, a.rounds, execution(a.sequential), a.out.format)?;
            Ok((rendered, a.out.output.clone()))
        }
    }
}

fn ok(body: String) -> Rendered {
    Rendered {
        body,
        diagnostics: String::new(),
        code: EXIT_OK,
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn protocol_params(a: &ProtocolArgs) -> Result<ProtocolParams, Error> {
    let mut params = ProtocolParams::new(a.alpha_sq, a.rounds)?;
    params.theta = a.theta;
    if let Some(t) = a.t_override {
        params = params.with_transmittance(t)?;
    }
    params.validate()?;
    Ok(params)
}

/// Runs certification on the standard grid, or on one point when `alpha_sq`
/// is given. Exit code 3 if any point diverges.
pub fn verify(
    engine: &Engine,
    alpha_sq: Option<f64>,
    rounds: u32,
    execution: Execution,
    format: Option<Format>,
) -> Result<Rendered, Error> {
    let grid = match alpha_sq {
        Some(a) => vec![a],
        None => oracle::standard_alpha_grid(),
    };
    let records = certify_grid(engine, &grid, rounds, execution)?;
    let verdict = adjudicate(&records);
    let passed = records.iter().all(|r| r.passed);
    let max_deviation = records.iter().map(|r| r.max_deviation).fold(0.0, f64::max);

    let mut diagnostics = String::new();
    for r in records.iter().filter(|r| !r.passed) {
        if let Some(d) = &r.first_divergence {
            let _ = writeln!(
                diagnostics,
                "divergence at alpha_sq={}: {} engine={} oracle={} deviation={}",
                num(r.alpha_sq),
                d.quantity,
                num(d.engine),
                num(d.oracle),
                num(d.deviation)
            );
        }
    }
    let _ = writeln!(
        diagnostics,
        "verify: {} (max deviation {}, tolerance {})",
        if passed { "PASS" } else { "FAIL" },
        num(max_deviation),
        num(oracle::CERTIFY_TOLERANCE)
    );
    let _ = writeln!(diagnostics, "P_N formula verdict: {}", verdict.verdict);

    let body = match format.unwrap_or(Format::Json) {
        Format::Json => to_json(&VerifyDocument {
            rounds,
            passed,
            max_deviation,
            tolerance: oracle::CERTIFY_TOLERANCE,
            formula_verdict: &verdict,
            records: &records,
        }),
        Format::Csv => verify_csv(&records),
    };
    Ok(Rendered {
        body,
        diagnostics,
        code: if passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
    })
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    inner: &'a T,
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    grid: &'a Grid,
    rounds: u32,
    points: &'a [CurvePoint],
}

#[derive(Serialize)]
struct VerifyDocument<'a> {
    rounds: u32,
    passed: bool,
    max_deviation: f64,
    tolerance: f64,
    formula_verdict: &'a FormulaVerdict,
    records: &'a [Certification],
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let doc = Versioned {
        schema_version: SCHEMA_VERSION,
        inner: value,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

fn schema_line() -> String {
    format!("# schema_version={SCHEMA_VERSION}\n")
}

/// Shortest decimal that round-trips to the same `f64`; scientific notation
/// outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_owned()
    } else if (1e-5..1e16).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Header `alpha_sq,alpha,rounds,p_total,p_1..p_N`; short rows leave the
/// trailing cells empty.
pub fn sweep_csv(curve: &[CurvePoint], rounds: u32) -> String {
    let mut s = schema_line();
    s.push_str("alpha_sq,alpha,rounds,p_total");
    for k in 1..=rounds {
        let _ = write!(s, ",p_{k}");
    }
    s.push('\n');
    for p in curve {
        let _ = write!(s, "{},{},{},{}", num(p.alpha_sq), num(p.alpha), p.rounds, num(p.p_total));
        for k in 0..rounds as usize {
            let _ = write!(s, ",{}", opt(p.p_k.get(k).copied()));
        }
        s.push('\n');
    }
    s
}

pub fn ecp1_csv(report: &ConcentrationReport) -> String {
    let mut s = schema_line();
    s.push_str("alpha_sq,t_used,success_probability,analytic_success,output_fidelity,p_no_click,p_two_photon,p_coincidence,p_other\n");
    let round = &report.rounds[0];
    let cat = |c: BranchCategory| -> f64 {
        round
            .branches
            .iter()
            .filter(|b| b.category == c)
            .map(|b| b.probability)
            .fold(0.0, |acc, p| acc + p)
    };
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{}",
        num(report.params.alpha_sq),
        num(round.t_used),
        num(round.success_prob_unconditional),
        opt(report.analytic_p.first().copied()),
        opt(round.output_fidelity),
        num(cat(BranchCategory::NoClick)),
        num(cat(BranchCategory::TwoPhoton)),
        num(cat(BranchCategory::Coincidence)),
        num(cat(BranchCategory::Other)),
    );
    s
}

/// Per-round table; `p_total` and `discrepancy_max` go in header comments.
pub fn ecp2_csv(report: &ConcentrationReport) -> String {
    let mut s = schema_line();
    let _ = writeln!(s, "# p_total={}", num(report.p_total));
    let _ = writeln!(s, "# discrepancy_max={}", num(report.discrepancy_max));
    s.push_str("k,t_k,p_k_simulated,p_k_analytic,cumulative\n");
    let mut cumulative = 0.0;
    for (r, analytic) in report.rounds.iter().zip(&report.analytic_p) {
        cumulative += r.success_prob_unconditional;
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.round_index,
            num(r.t_used),
            num(r.success_prob_unconditional),
            num(*analytic),
            num(cumulative)
        );
    }
    s
}

pub fn verify_csv(records: &[Certification]) -> String {
    let mut s = schema_line();
    s.push_str("alpha_sq,rounds,passed,max_deviation,comparisons,first_divergence\n");
    for r in records {
        let first = r.first_divergence.as_ref().map(|d| d.quantity.as_str()).unwrap_or("");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.alpha_sq),
            r.rounds,
            r.passed,
            num(r.max_deviation),
            r.comparisons,
            first
        );
    }
    s
}

pub fn main_with_stdio() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.32, 0.9990234375, 1e-10, 6.240435372079537e-21, 1.0, 123456.789, 1e20] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(2.5e-7), "2.5e-7");
    }

    #[test]
    fn sweep_csv_pads_missing_rounds() {
        let curve = [CurvePoint {
            alpha_sq: 0.5,
            alpha: 0.5f64.sqrt(),
            rounds: 3,
            p_total: 0.875,
            p_k: vec![0.5, 0.25],
        }];
        let s = sweep_csv(&curve, 3);
        assert_eq!(
            s,
            "# schema_version=1\nalpha_sq,alpha,rounds,p_total,p_1,p_2,p_3\n0.5,0.7071067811865476,3,0.875,0.5,0.25,\n"
        );
    }

    #[test]
    fn json_carries_schema_version() {
        let report = Engine::new().run_ecp1(&ProtocolParams::new(0.5, 1).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&report)).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["protocol"], "ecp1");
        assert!(v["discrepancy_max"].is_number());
    }

    #[test]
    fn certification_failure_maps_to_three() {
        let e = Error::CertificationFailed {
            quantity: "q".into(),
            engine: 0.0,
            oracle: 1.0,
            deviation: 1.0,
        };
        assert_eq!(exit_code(&e), EXIT_VERIFY_FAILED);
        assert_eq!(exit_code(&Error::DegenerateInput(1.0)), EXIT_INVALID);
    }

    #[test]
    fn help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["ecp", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8(out).unwrap().contains("sweep"));
    }
}
