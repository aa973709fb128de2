// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! `ddopt`: evaluate, generate, optimize and validate two-qubit decoupling
//! sequences, and rerun the built-in table rows.
//!
//! Exit status: 0 success, 1 input error, 2 numeric error, 3 a reproduced
//! row or Monte Carlo comparison outside tolerance.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddopt::decoherence::{
    evolve, gammas, mean_fidelity, performance_phi, trace_fidelity, TwoQubitState,
};
use ddopt::mc_oracle::{self, compare, MonteCarloConfig};
use ddopt::optimizer::{
    scan_m, search_allocations, InitialGuess, Method, OptimizationResult, OptimizerConfig,
};
use ddopt::reproduce::{outcomes_csv, run_row, select_rows, TableId};
use ddopt::sequences::{cpmg_times, nested_udd, udd_times, Allocation, PulseSequence, Qubit};
use ddopt::{Error, SpectrumTriple};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "ddopt",
    version,
    about = "Two-qubit dynamical decoupling: filter functions, optimization, Monte Carlo checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay exponents, Φ and fidelities of a sequence.
    Eval(EvalArgs),
    /// Write a pulse sequence (nested UDD, UDD, CPMG or equally spaced).
    Generate(GenerateArgs),
    /// Optimize pulse times for one `m` or scan all of them.
    Optimize(OptimizeArgs),
    /// Compare analytic exponents with a Monte Carlo simulation.
    Montecarlo(MonteCarloArgs),
    /// Rerun built-in table rows and check them against published values.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct SpectraArgs {
    /// Spectrum triple JSON file (`{"s1": .., "s2": .., "s3": ..}`).
    #[arg(long, conflicts_with = "preset")]
    spectra: Option<PathBuf>,
    /// Built-in spectrum triple, e.g. `t2_row1`.
    #[arg(long)]
    preset: Option<String>,
}

impl SpectraArgs {
    fn load(&self) -> Result<SpectrumTriple, CliError> {
        match (&self.spectra, &self.preset) {
            (Some(path), _) => {
                SpectrumTriple::from_json(&read(path)?).map_err(|e| CliError::file(path, e))
            }
            (None, Some(name)) => Ok(SpectrumTriple::preset(name)?),
            (None, None) => Err(CliError::usage("one of --spectra or --preset is required")),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Pulse sequence JSON file.
    #[arg(long)]
    sequence: PathBuf,
    #[command(flatten)]
    spectra: SpectraArgs,
    /// Absolute quadrature tolerance per exponent.
    #[arg(long, default_value_t = ddopt::decoherence::DEFAULT_TOL)]
    tol: f64,
    /// Initial state for the trace fidelity: bell, equal or basis00.
    #[arg(long, default_value = "equal")]
    state: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Nested UDD with INNER qubit-1 pulses per interval and OUTER qubit-2 pulses.
    #[arg(long, num_args = 2, value_names = ["INNER", "OUTER"])]
    nested_udd: Option<Vec<usize>>,
    /// N-pulse UDD on one qubit.
    #[arg(long, value_name = "N")]
    udd: Option<usize>,
    /// N-pulse CPMG on one qubit.
    #[arg(long, value_name = "N")]
    cpmg: Option<usize>,
    /// TOTAL equally spaced pulses; qubit-2 ordinals from --q2.
    #[arg(long, value_name = "TOTAL")]
    equal: Option<usize>,
    /// Target qubit for --udd and --cpmg.
    #[arg(long, default_value_t = 1)]
    qubit: u8,
    /// Comma-separated 1-based qubit-2 ordinals for --equal.
    #[arg(long, value_delimiter = ',')]
    q2: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bfgs,
    Steepest,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    total: usize,
    /// Number of qubit-2 pulses.
    #[arg(long, conflicts_with = "scan_m")]
    m: Option<usize>,
    /// Optimize every m in 0..=total.
    #[arg(long)]
    scan_m: bool,
    #[command(flatten)]
    spectra: SpectraArgs,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    symmetric: Switch,
    /// Stop when max |dΦ/dt| falls below this.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Bfgs)]
    method: MethodArg,
    /// Extra random starts per allocation.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Worker threads (default: all cores).
    #[arg(long, env = "DD_OPT_JOBS")]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the best sequence as `index,t,qubit` CSV.
    #[arg(long)]
    timings: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    /// Covariance scale 1/2, consistent with the analytic exponents.
    Oracle,
    /// Uncorrected 1/π scale; expected to fail.
    NegativeControl,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long)]
    sequence: PathBuf,
    #[command(flatten)]
    spectra: SpectraArgs,
    #[arg(long, default_value_t = 10_000)]
    trajectories: usize,
    #[arg(long, default_value_t = mc_oracle::DEFAULT_GRID_STEP)]
    grid_step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// bell, equal or basis00.
    #[arg(long, default_value = "equal")]
    state: String,
    #[arg(long, value_enum, default_value_t = ScaleArg::Oracle)]
    scale: ScaleArg,
    #[arg(long, env = "DD_OPT_JOBS")]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// T1 .. T6.
    #[arg(long)]
    table: String,
    /// `all`, `nested`, `optimized`, or comma-separated row numbers or labels.
    #[arg(long, default_value = "all")]
    rows: String,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "DD_OPT_JOBS")]
    jobs: Option<usize>,
    /// CSV output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write full row outcomes as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn file(path: &Path, e: Error) -> Self {
        let msg = format!("{}: {e}", path.display());
        if e.is_input_error() {
            CliError::Input(msg)
        } else {
            CliError::Numeric(msg)
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Outcome of a command that ran to completion.
enum Verdict {
    Ok,
    OutOfTolerance,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn set_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {n} workers: {e}")))?;
    }
    Ok(())
}

fn load_sequence(path: &Path) -> Result<PulseSequence, CliError> {
    PulseSequence::from_json(&read(path)?).map_err(|e| CliError::file(path, e))
}

fn eval(a: EvalArgs) -> Result<Verdict, CliError> {
    let seq = load_sequence(&a.sequence)?;
    let spectra = a.spectra.load()?;
    let state = TwoQubitState::preset(&a.state)?;
    let g = gammas(&seq, &spectra, a.tol)?;
    let rho = evolve(&state, &g);
    let out = json!({
        "pulses": seq.len(),
        "gammas": g.as_array(),
        "errors": g.errors,
        "phi": performance_phi(&g),
        "mean_fidelity": mean_fidelity(&g),
        "state": a.state,
        "trace_fidelity": trace_fidelity(&rho, &state),
    });
    write(a.out.as_deref(), &pretty(&out))?;
    Ok(Verdict::Ok)
}

fn generate(a: GenerateArgs) -> Result<Verdict, CliError> {
    let single = |times: Vec<f64>, q: u8| -> Result<PulseSequence, CliError> {
        let q = Qubit::from_index(q)
            .map_err(|_| CliError::usage(format!("--qubit must be 1 or 2, got {q}")))?;
        Ok(PulseSequence::from_layout(&times, &vec![q; times.len()])?)
    };
    let chosen = [
        a.nested_udd.is_some(),
        a.udd.is_some(),
        a.cpmg.is_some(),
        a.equal.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if chosen != 1 {
        return Err(CliError::usage(
            "give exactly one of --nested-udd, --udd, --cpmg, --equal",
        ));
    }
    let seq = if let Some(v) = &a.nested_udd {
        nested_udd(v[0], v[1])
    } else if let Some(n) = a.udd {
        single(udd_times(n), a.qubit)?
    } else if let Some(n) = a.cpmg {
        single(cpmg_times(n), a.qubit)?
    } else {
        let total = a.equal.expect("one generator chosen");
        let alloc = Allocation::new(total, a.q2.clone())?;
        ddopt::sequences::equal_spaced(total, &alloc)?
    };
    let text = match a.format {
        Format::Json => {
            let mut s = seq.to_json();
            s.push('\n');
            s
        }
        Format::Csv => seq.to_csv(),
    };
    write(a.out.as_deref(), &text)?;
    Ok(Verdict::Ok)
}

fn result_json(r: &OptimizationResult) -> Value {
    let mut v = serde_json::to_value(r).expect("result serializes");
    v["phi_q2_ordinals"] = json!(r.allocation.q2_positions);
    v["first_half_q2_ordinals"] = json!(r.allocation.first_half());
    v
}

fn optimize(a: OptimizeArgs) -> Result<Verdict, CliError> {
    set_jobs(a.jobs)?;
    let spectra = a.spectra.load()?;
    let mut cfg = OptimizerConfig {
        symmetric: matches!(a.symmetric, Switch::On),
        method: match a.method {
            MethodArg::Bfgs => Method::Bfgs,
            MethodArg::Steepest => Method::SteepestDescent,
        },
        random_restarts: a.restarts,
        initial_guesses: vec![InitialGuess::EqualSpaced, InitialGuess::NestedUdd],
        ..OptimizerConfig::default()
    };
    if let Some(t) = a.tol {
        cfg.gradient_tolerance = t;
    }
    if let Some(n) = a.max_iter {
        cfg.max_iterations = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let (best, body) = if a.scan_m {
        let scan = scan_m(a.total, &spectra, &cfg)?;
        let per_m: Vec<Value> = scan
            .results
            .iter()
            .enumerate()
            .map(|(m, r)| json!({"m": m, "result": r.as_ref().map(result_json)}))
            .collect();
        let best = scan.results[scan.best_m]
            .clone()
            .expect("best m has a result");
        let body = json!({
            "total": a.total,
            "best_m": scan.best_m,
            "best": result_json(&best),
            "per_m": per_m,
        });
        (best, body)
    } else {
        let m =
            a.m.ok_or_else(|| CliError::usage("one of --m or --scan-m is required"))?;
        let search = search_allocations(a.total, m, &spectra, &cfg)?;
        let body = json!({
            "total": a.total,
            "m": m,
            "best": result_json(&search.best),
            "leaderboard": search.leaderboard.iter().map(result_json).collect::<Vec<_>>(),
            "allocations_tried": search.results.len(),
            "ordering_violations": search.ordering_violations,
        });
        (search.best, body)
    };
    write(a.out.as_deref(), &pretty(&body))?;
    if let Some(path) = &a.timings {
        write(Some(path), &best.timings_csv())?;
    }
    Ok(Verdict::Ok)
}

fn montecarlo(a: MonteCarloArgs) -> Result<Verdict, CliError> {
    set_jobs(a.jobs)?;
    let seq = load_sequence(&a.sequence)?;
    let spectra = a.spectra.load()?;
    let state = TwoQubitState::preset(&a.state)?;
    let cfg = MonteCarloConfig {
        trajectories: a.trajectories,
        grid_step: a.grid_step,
        seed: a.seed,
        scale: match a.scale {
            ScaleArg::Oracle => mc_oracle::ORACLE_SCALE,
            ScaleArg::NegativeControl => mc_oracle::NEGATIVE_CONTROL_SCALE,
        },
        ..MonteCarloConfig::default()
    };
    let report = mc_oracle::simulate_with(&seq, &spectra, &state, &cfg)?;
    let analytic = gammas(&seq, &spectra, ddopt::decoherence::DEFAULT_TOL)?;
    let cmp = compare(&analytic, &report.empirical);
    let grid = mc_oracle::grid_check(&seq, &spectra, a.grid_step, cfg.scale)?;
    let out = json!({
        "trajectories": report.trajectories,
        "grid_step": report.grid_step,
        "scale": report.scale,
        "state": a.state,
        "seed": a.seed,
        "analytic": cmp.analytic,
        "analytic_phi": performance_phi(&analytic),
        "empirical": cmp.empirical,
        "standard_errors": cmp.errors,
        "empirical_phi": report.empirical.phi(),
        "pair_sums": report.empirical.pair_sums,
        "z": cmp.z,
        "pass": cmp.pass,
        "grid_check": grid,
    });
    write(a.out.as_deref(), &pretty(&out))?;
    Ok(if cmp.pass {
        Verdict::Ok
    } else {
        Verdict::OutOfTolerance
    })
}

fn reproduce(a: ReproduceArgs) -> Result<Verdict, CliError> {
    set_jobs(a.jobs)?;
    let table: TableId = a.table.parse()?;
    let rows = select_rows(table, &a.rows)?;
    let mut cfg = OptimizerConfig::default();
    if let Some(n) = a.max_iter {
        cfg.max_iterations = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let mut outcomes = Vec::with_capacity(rows.len());
    for row in &rows {
        let o = run_row(row, &cfg)?;
        eprintln!(
            "{} {}: phi {:.4e} (table {:.3e}, {}) {}",
            table,
            row.label,
            o.phi,
            o.table_phi,
            o.tolerance,
            if o.pass { "pass" } else { "FAIL" }
        );
        outcomes.push(o);
    }
    write(a.out.as_deref(), &outcomes_csv(&outcomes))?;
    if let Some(path) = &a.json {
        let v = serde_json::to_value(&outcomes).expect("outcomes serialize");
        write(Some(path), &pretty(&v))?;
    }
    Ok(if outcomes.iter().all(|o| o.pass) {
        Verdict::Ok
    } else {
        Verdict::OutOfTolerance
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Generate(a) => generate(a),
        Command::Optimize(a) => optimize(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Reproduce(a) => reproduce(a),
    };
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::OutOfTolerance) => ExitCode::from(3),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            ExitCode::from(2)
        }
    }
}
