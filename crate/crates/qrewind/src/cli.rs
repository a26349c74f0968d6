// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Command-line front end. Four batch subcommands over circuit files:
//!
//! * `prob`      exact acceptance probability of a verifier on one witness
//! * `transform` build the rewinding protocol for one (witness, k) claim
//! * `verify`    certify perfect completeness or the soundness ceiling
//! * `sweep`     table over every count claim k that survives the pre-check
//!
//! Exit codes: 0 pass, 1 usage or parse error, 2 promise violation or
//! certificate failure. All probabilities are printed exactly; decimal
//! columns are marked `approx`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::amp::{Dyadic, Rational};
use crate::analysis::{
    exact_acceptance_prob, p_acc_formula, predicted_p, verify_theorem, witness_report,
    AnalysisError, Classification, InstanceReport,
};
use crate::circuit::{Circuit, CircuitError};
use crate::sim::{defer_measurements, deferred_acceptance_prob, run_protocol, SimError};
use crate::transform::{
    build_protocol, compute_l, step1_check, LMode, Step1, TransformError, LABEL_O1,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CERT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    ParseCircuit {
        path: String,
        #[source]
        source: CircuitError,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "qrewind",
    version,
    about = "Exact simulation and perfect-completeness transformation of {H, X, CCX} verifier circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact acceptance probability of a verifier on one witness.
    Prob(ProbArgs),
    /// Build the rewinding protocol for one (witness, k) claim and report
    /// measured against predicted statistics.
    Transform(TransformArgs),
    /// Sweep every witness and count claim, then certify the theorem's
    /// completeness and soundness statements for this instance.
    Verify(VerifyArgs),
    /// Report every surviving count claim k for one witness.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ProbArgs {
    /// Circuit file in the textual format.
    #[arg(long, value_name = "PATH")]
    circuit: PathBuf,
    /// Witness bits, most significant first, e.g. 1101.
    #[arg(long, value_name = "BITS")]
    witness: String,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long, value_name = "PATH")]
    circuit: PathBuf,
    #[arg(long, value_name = "BITS")]
    witness: String,
    /// Claimed count, 1 <= k <= 2^l.
    #[arg(long, value_name = "INT")]
    k: u64,
    /// Completeness threshold as a fraction, e.g. 2/3.
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    c: Rational,
    #[arg(long, value_enum, default_value_t = LModeArg::Hadamard)]
    l_mode: LModeArg,
    /// Which measurement semantics to simulate.
    #[arg(long, value_enum, default_value_t = SemanticsArg::Branching)]
    semantics: SemanticsArg,
    #[arg(long)]
    json: bool,
    /// Write the deferred-measurement unitary as a circuit file.
    #[arg(long, value_name = "PATH")]
    emit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    circuit: PathBuf,
    /// Completeness threshold, e.g. 2/3.
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    c: Rational,
    /// Soundness threshold, e.g. 1/3.
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    s: Rational,
    #[arg(long, value_enum, default_value_t = LModeArg::Hadamard)]
    l_mode: LModeArg,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    circuit: PathBuf,
    #[arg(long, value_name = "BITS")]
    witness: String,
    /// Completeness threshold; claims below c * 2^l are dropped at step 1.
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    c: Rational,
    #[arg(long, value_enum, default_value_t = LModeArg::Hadamard)]
    l_mode: LModeArg,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LModeArg {
    /// l = max(1, Hadamard count of the hardcoded verifier).
    Hadamard,
    /// l = max(1, total gate count of the hardcoded verifier).
    Gatecount,
}

impl From<LModeArg> for LMode {
    fn from(arg: LModeArg) -> LMode {
        match arg {
            LModeArg::Hadamard => LMode::HadamardCount,
            LModeArg::Gatecount => LMode::GateCount,
        }
    }
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    Branching,
    Deferred,
    Both,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn l_mode_name(mode: LMode) -> &'static str {
    match mode {
        LMode::HadamardCount => "hadamard",
        LMode::GateCount => "gatecount",
    }
}

fn show_witness(w: &str) -> &str {
    if w.is_empty() {
        "(empty)"
    } else {
        w
    }
}

/// Parses the command line and runs one subcommand, mapping every outcome
/// onto the documented exit codes. Help and version requests exit 0.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Prob(args) => cmd_prob(&args),
        Command::Transform(args) => cmd_transform(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Circuit::parse(&text).map_err(|source| CliError::ParseCircuit {
        path: path.display().to_string(),
        source,
    })
}

fn approx(d: &Dyadic) -> String {
    format!("{:.6}", d.to_f64())
}

/// Reports go through one writer so a consumer that hangs up early (for
/// example `qrewind ... | head`) ends the process quietly with the shell's
/// SIGPIPE convention instead of a panic.
fn write_stdout(text: &str) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    let result = out.write_all(text.as_bytes()).and_then(|()| out.flush());
    if let Err(err) = result {
        if err.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(128 + 13);
        }
    }
}

fn write_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_stdout(&text);
    Ok(())
}

#[derive(Debug, Serialize)]
struct ConventionRow {
    l_mode: LMode,
    l: usize,
    /// p_v rescaled to numerator over 2^l, as a decimal string.
    k: String,
}

#[derive(Debug, Serialize)]
struct ProbReport {
    schema_version: u32,
    circuit: String,
    witness: String,
    p_v: Dyadic,
    p_v_approx: f64,
    conventions: Vec<ConventionRow>,
}

fn cmd_prob(args: &ProbArgs) -> Result<i32, CliError> {
    let v = load_circuit(&args.circuit)?;
    let p_v = exact_acceptance_prob(&v, &args.witness)?;
    let hardcoded = v.hardcode_witness(&args.witness)?;

    let conventions: Vec<ConventionRow> = [LMode::HadamardCount, LMode::GateCount]
        .into_iter()
        .map(|mode| {
            let l = compute_l(&hardcoded, mode);
            let k = p_v
                .numerator_at_exp(l as u32)
                .expect("denominator exponent is bounded by the Hadamard count");
            ConventionRow {
                l_mode: mode,
                l,
                k: k.to_string(),
            }
        })
        .collect();

    let report = ProbReport {
        schema_version: crate::analysis::REPORT_SCHEMA_VERSION,
        circuit: args.circuit.display().to_string(),
        witness: args.witness.clone(),
        p_v: p_v.clone(),
        p_v_approx: p_v.to_f64(),
        conventions,
    };

    if args.json {
        write_json(&report)?;
    } else {
        let mut out = String::new();
        let _ = writeln!(out, "circuit: {}", report.circuit);
        let _ = writeln!(out, "witness: {}", show_witness(&report.witness));
        let _ = writeln!(out, "p_v: {} (approx {})", report.p_v, approx(&report.p_v));
        for row in &report.conventions {
            let _ = writeln!(
                out,
                "{} convention: l = {}, k = {}",
                l_mode_name(row.l_mode),
                row.l,
                row.k
            );
        }
        write_stdout(&out);
    }
    Ok(EXIT_PASS)
}

#[derive(Debug, Serialize)]
struct SemanticsReport {
    /// First-measurement marginal; only the branching run observes it.
    p_measured: Option<Dyadic>,
    p_acc: Dyadic,
}

#[derive(Debug, Serialize)]
struct TransformReport {
    schema_version: u32,
    circuit: String,
    witness: String,
    k: u64,
    c: Rational,
    l_mode: LMode,
    l: usize,
    step1_pass: bool,
    k_v: u64,
    p_predicted: Option<Dyadic>,
    p_acc_predicted: Option<Dyadic>,
    branching: Option<SemanticsReport>,
    deferred: Option<SemanticsReport>,
    formulas_match: Option<bool>,
    semantics_match: Option<bool>,
    perfect: bool,
    emitted: Option<String>,
}

fn cmd_transform(args: &TransformArgs) -> Result<i32, CliError> {
    let v = load_circuit(&args.circuit)?;
    let l_mode = LMode::from(args.l_mode);
    let tp = build_protocol(&v, &args.witness, args.k, &args.c, l_mode)?;
    let l = tp.params.l;
    let pass = step1_check(args.k, l, &args.c) == Step1::Proceed;

    let p_v = exact_acceptance_prob(&v, &args.witness)?;
    let k_v_big = p_v
        .numerator_at_exp(l as u32)
        .expect("denominator exponent is bounded by the Hadamard count");
    let k_v = u64::try_from(&k_v_big).expect("wire plan is capped at 64 qubits");

    let p_predicted = pass.then(|| predicted_p(args.k, k_v, l));
    let p_acc_predicted = p_predicted.as_ref().map(p_acc_formula);

    let want_branching = matches!(args.semantics, SemanticsArg::Branching | SemanticsArg::Both);
    let want_deferred = matches!(args.semantics, SemanticsArg::Deferred | SemanticsArg::Both);

    let branching = if want_branching {
        let run = run_protocol(&tp.protocol)?;
        Some(SemanticsReport {
            p_measured: pass.then(|| run.label_marginals[LABEL_O1].clone()),
            p_acc: run.p_accept,
        })
    } else {
        None
    };
    let deferred = if want_deferred {
        Some(SemanticsReport {
            p_measured: None,
            p_acc: deferred_acceptance_prob(&tp.protocol)?,
        })
    } else {
        None
    };

    let emitted = match &args.emit {
        Some(path) => {
            let compiled = defer_measurements(&tp.protocol)?;
            fs::write(path, compiled.to_text()).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let p_acc_observed = branching
        .as_ref()
        .or(deferred.as_ref())
        .map(|r| r.p_acc.clone())
        .expect("at least one semantics always runs");
    let formulas_match = p_acc_predicted.as_ref().map(|predicted| {
        let acc_ok = *predicted == p_acc_observed;
        let p_ok = match branching.as_ref().and_then(|r| r.p_measured.as_ref()) {
            Some(measured) => Some(measured) == p_predicted.as_ref(),
            None => true,
        };
        acc_ok && p_ok
    });
    let semantics_match = match (&branching, &deferred) {
        (Some(b), Some(d)) => Some(b.p_acc == d.p_acc),
        _ => None,
    };
    let perfect = p_acc_observed.is_one();

    let report = TransformReport {
        schema_version: crate::analysis::REPORT_SCHEMA_VERSION,
        circuit: args.circuit.display().to_string(),
        witness: args.witness.clone(),
        k: args.k,
        c: args.c.clone(),
        l_mode,
        l,
        step1_pass: pass,
        k_v,
        p_predicted,
        p_acc_predicted,
        branching,
        deferred,
        formulas_match,
        semantics_match,
        perfect,
        emitted,
    };

    if args.json {
        write_json(&report)?;
    } else {
        write_stdout(&render_transform(&report));
    }

    if report.semantics_match == Some(false) || report.formulas_match == Some(false) {
        return Ok(EXIT_CERT);
    }
    Ok(EXIT_PASS)
}

fn render_transform(r: &TransformReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit: {}", r.circuit);
    let _ = writeln!(
        out,
        "witness: {}, claimed k: {}, c: {}, l: {} ({} mode)",
        show_witness(&r.witness),
        r.k,
        r.c,
        r.l,
        l_mode_name(r.l_mode)
    );
    if r.step1_pass {
        let _ = writeln!(out, "step 1: pass (k/2^l = {}/2^{} >= c)", r.k, r.l);
    } else {
        let _ = writeln!(
            out,
            "step 1: rejected at step 1 (k/2^l = {}/2^{} < c); every run rejects",
            r.k, r.l
        );
    }
    let _ = writeln!(out, "k_v: {}", r.k_v);
    if let Some(p) = &r.p_predicted {
        let _ = writeln!(out, "p predicted:     {} (approx {})", p, approx(p));
    }
    if let Some(b) = &r.branching {
        if let Some(p) = &b.p_measured {
            let _ = writeln!(out, "p measured:      {} (approx {})", p, approx(p));
        }
        let _ = writeln!(
            out,
            "p_acc branching: {} (approx {})",
            b.p_acc,
            approx(&b.p_acc)
        );
    }
    if let Some(d) = &r.deferred {
        let _ = writeln!(
            out,
            "p_acc deferred:  {} (approx {})",
            d.p_acc,
            approx(&d.p_acc)
        );
    }
    if let Some(p) = &r.p_acc_predicted {
        let _ = writeln!(out, "p_acc predicted: {} (approx {})", p, approx(p));
    }
    if let Some(ok) = r.formulas_match {
        let _ = writeln!(out, "measured == predicted: {}", if ok { "yes" } else { "NO" });
    }
    if let Some(ok) = r.semantics_match {
        let _ = writeln!(
            out,
            "branching == deferred: {}",
            if ok { "yes" } else { "NO" }
        );
    }
    if r.perfect {
        let _ = writeln!(out, "flag: PERFECT (accepts with certainty)");
    }
    if let Some(path) = &r.emitted {
        let _ = writeln!(out, "emitted deferred circuit: {path}");
    }
    out
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let v = load_circuit(&args.circuit)?;
    let m = v.witness_qubits().len();
    let report = verify_theorem(&v, m, &args.c, &args.s, args.l_mode.into())?;

    if args.json {
        write_json(&report)?;
    } else {
        write_stdout(&render_verify(
            &args.circuit.display().to_string(),
            m,
            &report,
        ));
    }

    match report.verdict {
        Some(true) => Ok(EXIT_PASS),
        _ => Ok(EXIT_CERT),
    }
}

fn render_verify(circuit: &str, m: usize, r: &InstanceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit: {circuit} ({m} witness bits)");
    let _ = writeln!(
        out,
        "c = {}, s = {}, soundness ceiling = {}, l mode: {}",
        r.bounds.c,
        r.bounds.s,
        r.bounds.s_prime,
        l_mode_name(r.l_mode)
    );
    let class = match r.classification {
        Classification::Yes => "yes (some witness reaches c)",
        Classification::No => "no (every witness stays at or below s)",
        Classification::PromiseViolating => "promise-violating (best witness falls in the gap)",
    };
    let _ = writeln!(out, "classification: {class}");
    for wr in &r.witnesses {
        let _ = writeln!(
            out,
            "  witness {}: p_v = {} (k_v = {} of 2^{})",
            show_witness(&wr.w),
            wr.p_v,
            wr.k_v,
            wr.l
        );
    }
    let _ = writeln!(
        out,
        "formula rows consistent: {}",
        if r.formula_consistent { "yes" } else { "NO" }
    );
    for check in &r.completeness {
        let _ = writeln!(
            out,
            "completeness w = {}, k = {}: p_acc = {} -> {}",
            show_witness(&check.w),
            check.k,
            check.p_acc,
            if check.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(sound) = &r.soundness {
        let best = match (&sound.max_w, sound.max_k, &sound.max_p_acc) {
            (Some(w), Some(k), Some(p)) => format!(
                "best dishonest pair w = {}, k = {k}: p_acc = {p} (approx {})",
                show_witness(w),
                approx(p)
            ),
            _ => "no claim survives the pre-check".to_string(),
        };
        let _ = writeln!(
            out,
            "soundness: {best}, ceiling {} -> {}",
            sound.ceiling,
            if sound.pass { "PASS" } else { "FAIL" }
        );
    }
    let verdict = match r.verdict {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "PROMISE VIOLATION (no certificate applies)",
    };
    let _ = writeln!(out, "verdict: {verdict}");
    out
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let v = load_circuit(&args.circuit)?;
    let report = witness_report(&v, &args.witness, &args.c, args.l_mode.into())?;

    if args.json {
        write_json(&report)?;
    } else {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "witness: {}, l = {}, p_v = {}, k_v = {}, c = {}",
            show_witness(&report.w),
            report.l,
            report.p_v,
            report.k_v,
            args.c
        );
        let header = [
            "k",
            "p measured",
            "p predicted",
            "p_acc measured",
            "p_acc predicted",
            "p_acc approx",
            "match",
        ];
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .filter(|row| row.step1_pass)
            .map(|row| {
                vec![
                    row.k.to_string(),
                    row.p_measured
                        .as_ref()
                        .map_or_else(|| "-".to_string(), |p| p.to_string()),
                    row.p_predicted.to_string(),
                    row.p_acc_measured.to_string(),
                    row.p_acc_predicted.to_string(),
                    approx(&row.p_acc_measured),
                    if row.equal { "yes" } else { "NO" }.to_string(),
                ]
            })
            .collect();
        out.push_str(&render_table(&header, &rows));
        write_stdout(&out);
    }

    let all_equal = report
        .rows
        .iter()
        .filter(|row| row.step1_pass)
        .all(|row| row.equal);
    Ok(if all_equal { EXIT_PASS } else { EXIT_CERT })
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<width$}", width = *w))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&render_row(header.to_vec()));
    out.push('\n');
    for row in rows {
        out.push_str(&render_row(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
