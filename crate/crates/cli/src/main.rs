//! Command-line driver for the coherence toolkit.
//!
//! Verbs:
//! - `compute`   — evaluate one measure on a density-state JSON file
//! - `verify`    — run verification suites and emit a JSON report array
//! - `reproduce` — recompute a named reference result and compare against
//!   its closed form
//! - `mk-state`  — write density-state JSON documents
//!
//! Exit codes: 0 success / all conditions hold; 1 a verified condition
//! failed (a result, not an error); 2 invalid arguments or input documents;
//! 3 the optimizer did not converge.

mod md;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coherence_core::diagopt::OptError;
use coherence_core::framework::{
    check_condition, reports_to_json, reproduce_counterexample, reproduce_entropy_additivity,
    reproduce_flag_identities, reproduce_uniform_values, SuiteConfig, VerificationReport,
};
use coherence_core::jsonio;
use coherence_core::measures::{EvalCtx, MeasureError, MeasureHandle, MeasureKind};
use coherence_core::states::{self, DENSITY_TOL};
use serde::Serialize;

const EXIT_CONDITION_FAILED: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

/// Conditions that take a basis measure, in canonical order.
const BASIS_CONDITIONS: [&str; 6] = ["c1", "c2", "c3", "b3", "b4", "flag"];
/// The condition that takes an observable measure.
const OBSERVABLE_CONDITION: &str = "ms";

#[derive(Parser)]
#[command(
    name = "coherence",
    version,
    about = "Compute and verify coherence measures on density-matrix JSON documents",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a measure on a state file; prints {"measure","value","dim","tol","seed"}.
    Compute(ComputeArgs),
    /// Run verification suites; writes a JSON array of reports.
    Verify(VerifyArgs),
    /// Recompute a named reference result and compare with its closed form.
    Reproduce(ReproduceArgs),
    /// Write a density-state JSON document.
    MkState(MkStateArgs),
}

#[derive(Args)]
struct ComputeArgs {
    /// One of: rel-entropy, l1, trace-norm, mod-trace-norm, skew-info.
    #[arg(long)]
    measure: String,
    /// Density-state JSON document ({"dim", "re", "im"}).
    #[arg(long)]
    state: PathBuf,
    /// Hermitian observable JSON document; required by skew-info only.
    #[arg(long)]
    observable: Option<PathBuf>,
    /// Optimizer tolerance (optimizer-backed measures only).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Optimizer restart seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of: rel-entropy, l1, trace-norm, mod-trace-norm, skew-info.
    #[arg(long)]
    measure: String,
    /// Comma-separated subset of: c1,c2,c3,b3,b4,flag,ms.
    #[arg(long, value_delimiter = ',', required = true)]
    suite: Vec<String>,
    /// State dimensions the samplers cycle through (each at least 2).
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4])]
    dims: Vec<usize>,
    /// Sampled trials per condition (named constructions are extra).
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Base seed; every trial derives its own generator from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report array here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a human-readable markdown report (next to --out, or on
    /// standard error when reports go to standard output).
    #[arg(long)]
    md: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Named case to recompute.
    #[arg(long, value_enum)]
    case: ReproCase,
    /// Seed for the sampled cases and optimizer restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON record here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a human-readable markdown report (next to --out, or on
    /// standard error when the record goes to standard output).
    #[arg(long)]
    md: bool,
}

/// Reference results with fixed, documented tolerances.
#[derive(Clone, Copy, ValueEnum)]
enum ReproCase {
    /// Trace-distance coherence of the uniform superposition states,
    /// d = 2..5, against 2(d-1)/d; tolerance 1e-5.
    Eq17,
    /// The five-dimensional two-block mixture on which trace-distance
    /// coherence loses block additivity; tolerance 1e-5.
    Eq18,
    /// Entropy decomposition over 500 random two-block mixtures;
    /// tolerance 1e-8.
    EntropyAdditivity,
    /// Flag/merge channel output identities and the embed/truncate round
    /// trip over 100 seeded trials; tolerance 1e-10.
    FlagIdentities,
}

impl ReproCase {
    fn name(self) -> &'static str {
        match self {
            ReproCase::Eq17 => "eq17",
            ReproCase::Eq18 => "eq18",
            ReproCase::EntropyAdditivity => "entropy-additivity",
            ReproCase::FlagIdentities => "flag-identities",
        }
    }
}

#[derive(Args)]
struct MkStateArgs {
    /// Kind of state to construct.
    #[arg(long, value_enum)]
    kind: StateKind,
    /// State dimension (max-coherent and random).
    #[arg(long)]
    dim: Option<usize>,
    /// Rank of the random state; defaults to full rank (random only).
    #[arg(long)]
    rank: Option<usize>,
    /// Generator seed (random only).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the state document here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKind {
    /// Uniform superposition: every matrix entry equals 1/dim.
    MaxCoherent,
    /// Seeded random density matrix of the given rank.
    Random,
    /// The fixed five-dimensional two-block mixture used by the
    /// trace-distance additivity refutation.
    Counterexample,
}

/// Errors that terminate a verb; each maps to a documented exit code.
enum CliError {
    /// Invalid arguments or input documents (exit 2).
    Input(String),
    /// The optimizer exhausted its budget (exit 3).
    NotConverged(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_BAD_INPUT,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::NotConverged(m) => m,
        }
    }
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Maps measure-evaluation errors: optimizer exhaustion is its own exit
/// code, everything else is an input problem.
fn measure_err(e: MeasureError) -> CliError {
    match e {
        MeasureError::Opt(OptError::NotConverged { partial }) => CliError::NotConverged(format!(
            "optimizer did not converge (best value {:.6e} after {} iterations)",
            partial.value, partial.iterations
        )),
        other => input_err(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compute(a) => run_compute(&a),
        Command::Verify(a) => run_verify(&a),
        Command::Reproduce(a) => run_reproduce(&a),
        Command::MkState(a) => run_mk_state(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

// ---------------------------------------------------------------------------
// compute
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ComputeOutput<'a> {
    measure: &'a str,
    value: f64,
    dim: usize,
    tol: f64,
    seed: u64,
}

fn run_compute(a: &ComputeArgs) -> Result<u8, CliError> {
    let m = lookup_measure(&a.measure)?;
    if !(a.tol > 0.0) {
        return Err(input_err("tolerance must be positive"));
    }
    let rho = read_state(&a.state)?;
    let value = match m.kind() {
        MeasureKind::Basis => {
            if a.observable.is_some() {
                return Err(input_err(format!(
                    "--observable does not apply to '{}'; it is only used by skew-info",
                    m.name()
                )));
            }
            let ctx = EvalCtx {
                tol: a.tol,
                seed: a.seed,
            };
            m.eval(&rho, &ctx).map_err(measure_err)?
        }
        MeasureKind::Observable => {
            let path = a.observable.as_ref().ok_or_else(|| {
                input_err(format!("'{}' requires --observable <file>", m.name()))
            })?;
            let text = read_file(path)?;
            let h = jsonio::observable_from_json(&text)
                .map_err(|e| input_err(format!("invalid observable document: {e}")))?;
            m.eval_with_observable(&rho, &h).map_err(measure_err)?
        }
    };
    let out = ComputeOutput {
        measure: m.name(),
        value,
        dim: rho.dim(),
        tol: a.tol,
        seed: a.seed,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("output serialization never fails")
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn run_verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let m = lookup_measure(&a.measure)?;
    let suites = validate_suites(&m, &a.suite)?;
    let cfg = SuiteConfig {
        dims: a.dims.clone(),
        samples: a.samples,
        seed: a.seed,
        ..SuiteConfig::default()
    };
    cfg.validate().map_err(input_err)?;
    let reports: Vec<VerificationReport> = suites
        .iter()
        .map(|s| check_condition(&m, s, &cfg).expect("suite names were validated"))
        .collect();
    let json = reports_to_json(&reports);
    emit(a.out.as_deref(), &json, a.md.then(|| md::verify_md(&reports)))?;
    if reports.iter().all(|r| r.passed) {
        Ok(0)
    } else {
        Ok(EXIT_CONDITION_FAILED)
    }
}

/// Checks suite names against the known set and the measure's kind,
/// dropping duplicates while preserving order.
fn validate_suites(m: &MeasureHandle, raw: &[String]) -> Result<Vec<String>, CliError> {
    let mut seen = Vec::new();
    for s in raw {
        let name = s.trim();
        let basis = BASIS_CONDITIONS.contains(&name);
        if !basis && name != OBSERVABLE_CONDITION {
            return Err(input_err(format!(
                "unknown suite '{name}'; expected a subset of c1,c2,c3,b3,b4,flag,ms"
            )));
        }
        match m.kind() {
            MeasureKind::Basis if !basis => {
                return Err(input_err(format!(
                    "suite 'ms' requires an observable measure (skew-info), got '{}'",
                    m.name()
                )));
            }
            MeasureKind::Observable if basis => {
                return Err(input_err(format!(
                    "suite '{name}' requires a basis measure, got '{}'",
                    m.name()
                )));
            }
            _ => {}
        }
        if !seen.iter().any(|x| x == name) {
            seen.push(name.to_string());
        }
    }
    Ok(seen)
}

// ---------------------------------------------------------------------------
// reproduce
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ReproduceOutput {
    case: &'static str,
    passed: bool,
    record: serde_json::Value,
}

fn run_reproduce(a: &ReproduceArgs) -> Result<u8, CliError> {
    let (passed, record) = match a.case {
        ReproCase::Eq17 => {
            let rec = reproduce_uniform_values(1e-5, a.seed).map_err(measure_err)?;
            (rec.passed, to_value(&rec))
        }
        ReproCase::Eq18 => {
            let rec = reproduce_counterexample(1e-5, a.seed).map_err(measure_err)?;
            (rec.reproduced(), to_value(&rec))
        }
        ReproCase::EntropyAdditivity => {
            let rec = reproduce_entropy_additivity(500, 1e-8, a.seed);
            (rec.passed, to_value(&rec))
        }
        ReproCase::FlagIdentities => {
            let rec = reproduce_flag_identities(100, 1e-10, a.seed);
            (rec.passed, to_value(&rec))
        }
    };
    let output = ReproduceOutput {
        case: a.case.name(),
        passed,
        record,
    };
    let json = serde_json::to_string_pretty(&output).expect("output serialization never fails");
    emit(a.out.as_deref(), &json, a.md.then(|| md::reproduce_md(&output.case, passed, &output.record)))?;
    if passed {
        Ok(0)
    } else {
        Ok(EXIT_CONDITION_FAILED)
    }
}

fn to_value<T: Serialize>(rec: &T) -> serde_json::Value {
    serde_json::to_value(rec).expect("record serialization never fails")
}

// ---------------------------------------------------------------------------
// mk-state
// ---------------------------------------------------------------------------

fn run_mk_state(a: &MkStateArgs) -> Result<u8, CliError> {
    let state = match a.kind {
        StateKind::MaxCoherent => {
            let dim = a
                .dim
                .ok_or_else(|| input_err("--kind max-coherent requires --dim"))?;
            if a.rank.is_some() {
                return Err(input_err("--rank only applies to --kind random"));
            }
            states::max_coherent(dim).map_err(|e| input_err(e.to_string()))?
        }
        StateKind::Random => {
            let dim = a
                .dim
                .ok_or_else(|| input_err("--kind random requires --dim"))?;
            let rank = a.rank.unwrap_or(dim);
            states::random_density(dim, rank, a.seed).map_err(|e| input_err(e.to_string()))?
        }
        StateKind::Counterexample => {
            if a.dim.is_some() || a.rank.is_some() {
                return Err(input_err(
                    "--kind counterexample takes no --dim or --rank (the state is fixed, dimension 5)",
                ));
            }
            states::counterexample_state().0
        }
    };
    let json = jsonio::density_to_json(&state);
    emit(a.out.as_deref(), &json, None)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn lookup_measure(name: &str) -> Result<MeasureHandle, CliError> {
    MeasureHandle::from_name(name).ok_or_else(|| {
        input_err(format!(
            "unknown measure '{name}'; expected one of rel-entropy, l1, trace-norm, mod-trace-norm, skew-info"
        ))
    })
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

fn read_state(path: &Path) -> Result<coherence_core::states::DensityState, CliError> {
    let text = read_file(path)?;
    jsonio::density_from_json(&text, DENSITY_TOL)
        .map_err(|e| input_err(format!("invalid state document: {e}")))
}

/// Writes the JSON payload to `out` or standard output. The optional
/// markdown rendering goes next to `out` (extension replaced with `md`), or
/// to standard error when the JSON goes to standard output, keeping the
/// machine-readable stream clean.
fn emit(out: Option<&Path>, json: &str, markdown: Option<String>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_file(path, json)?;
            if let Some(text) = markdown {
                write_file(&sibling_md_path(path), &text)?;
            }
        }
        None => {
            println!("{json}");
            if let Some(text) = markdown {
                eprint!("{text}");
            }
        }
    }
    Ok(())
}

/// The markdown path next to a JSON output path; never the same file.
fn sibling_md_path(out: &Path) -> PathBuf {
    let candidate = out.with_extension("md");
    if candidate == out {
        PathBuf::from(format!("{}.md", out.display()))
    } else {
        candidate
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    let mut text = content.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}
