//! Command implementations behind the `relayopt` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use relayopt_core::assign::PairingMode;
use relayopt_core::dual::{DcdmOptions, DcdmReport};
use relayopt_core::oracle::{assignment_count, brute_force_solve, DEFAULT_BUDGET};
use relayopt_core::sim::{random_scenario, run_experiment, ExperimentConfig, ResultTable};
use relayopt_core::{
    dcdm_solve_with, solve_scheme, Assignment, DualDiagnostics, Error, Multipliers,
    PowerAllocation, RegionUsed, Scenario, Scheme, SolveResult, Strategy,
};
use serde::{Deserialize, Serialize};

pub mod presets;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Unreadable or schema-invalid input, bad flags or configuration.
    pub const INPUT: u8 = 1;
    /// The solver did not converge.
    pub const NON_CONVERGENCE: u8 = 2;
    /// Oracle enumeration exceeds the budget.
    pub const BUDGET: u8 = 3;
    /// `verify` found an instance outside the tolerance.
    pub const MISMATCH: u8 = 4;
}

/// Environment variable overriding the oracle enumeration budget.
pub const BUDGET_ENV: &str = "RELAYOPT_BUDGET";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> CliError {
        CliError { code, error: error.into() }
    }

    pub fn input(msg: impl fmt::Display) -> CliError {
        CliError::new(exit::INPUT, anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = match e {
            Error::BudgetExceeded { .. } => exit::BUDGET,
            Error::OracleNonConvergence(_) | Error::UnboundedSubproblem => exit::NON_CONVERGENCE,
            _ => exit::INPUT,
        };
        CliError::new(code, e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Solution document printed by `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub scheme: Scheme,
    pub assignment: Assignment,
    pub powers: PowerAllocation,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub region: Option<RegionUsed>,
    pub converged: bool,
    pub multipliers: Option<Multipliers>,
    pub per_path_rates: Vec<f64>,
    pub diagnostics: Option<DualDiagnostics>,
}

impl Solution {
    pub fn new(scheme: Scheme, r: SolveResult) -> Solution {
        Solution {
            scheme,
            assignment: r.assignment,
            powers: r.powers,
            primal: r.primal_value,
            dual: r.dual_value,
            gap: r.gap,
            iterations: r.iterations,
            region: r.region_used,
            converged: r.converged,
            multipliers: r.multipliers,
            per_path_rates: r.per_path_rates,
            diagnostics: r.diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Solution> {
        serde_json::from_str(text)
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| CliError::input(format!("reading stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("reading {}: {e}", path.display())))
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = read_text(path)?;
    let s = Scenario::from_json(&text)
        .map_err(|e| CliError::input(format!("{}: invalid scenario: {e}", path.display())))?;
    s.validate().map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(s)
}

/// Oracle budget, from the environment when set.
pub fn budget() -> CliResult<u128> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{BUDGET_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

#[derive(Clone, Debug)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    pub scheme: Scheme,
    pub tolerance: Option<f64>,
    pub max_iter: Option<usize>,
    pub trace: Option<PathBuf>,
}

pub struct SolveOutput {
    pub solution: Solution,
    /// Lines for stderr.
    pub notes: Vec<String>,
}

fn dual_options(args: &SolveArgs) -> CliResult<DcdmOptions> {
    let mut opts = DcdmOptions::default();
    if let Some(t) = args.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::input(format!("tolerance must be positive, got {t}")));
        }
        opts.solve.tol = t;
    }
    if let Some(m) = args.max_iter {
        if m == 0 {
            return Err(CliError::input("max-iter must be positive"));
        }
        opts.solve.max_iter = m;
    }
    if args.scheme == Scheme::NoPairing {
        opts.solve.pairing = PairingMode::Identity;
    }
    Ok(opts)
}

fn write_trace(path: &Path, report: &DcdmReport) -> CliResult<()> {
    #[derive(Serialize)]
    struct Row {
        run: usize,
        region: String,
        direct_links_removed: bool,
        iteration: usize,
        g: f64,
        theta_norm: f64,
        ls: f64,
        lr: f64,
        lt: f64,
    }
    let io = |e: csv::Error| CliError::input(format!("writing trace {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for (i, run) in report.runs.iter().enumerate() {
        for t in &run.outcome.trace {
            w.serialize(Row {
                run: i,
                region: format!("{:?}", run.region.kind),
                direct_links_removed: run.direct_links_removed,
                iteration: t.iteration,
                g: t.g,
                theta_norm: t.theta_norm,
                ls: t.ls,
                lr: t.lr,
                lt: t.lt,
            })
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::input(format!("writing trace {}: {e}", path.display())))?;
    Ok(())
}

/// Solves one scenario file. Non-convergence of a dual scheme is reported
/// through `SolveOutput::solution.converged`.
pub fn cmd_solve(args: &SolveArgs) -> CliResult<SolveOutput> {
    let scenario = load_scenario(&args.scenario)?;
    let mut notes = Vec::new();
    let result = match args.scheme {
        Scheme::Joint | Scheme::NoPairing => {
            let report = dcdm_solve_with(&scenario, &dual_options(args)?)?;
            if let Some(p) = &args.trace {
                write_trace(p, &report)?;
            }
            report.result
        }
        other => {
            if args.trace.is_some() {
                notes.push(format!("note: scheme {other} has no dual iterations; no trace written"));
            }
            solve_scheme(&scenario, other)?
        }
    };
    if let Some(d) = &result.diagnostics {
        if d.gap_flag {
            notes.push(format!(
                "warning: relative duality gap above 1e-3 (primal {}, dual {})",
                result.primal_value,
                result.dual_value.unwrap_or(f64::NAN)
            ));
        }
        if !d.region_consistent {
            notes.push("warning: final multipliers fail the region consistency check".into());
        }
    }
    if !result.converged {
        notes.push(format!("error: dual iterations did not converge after {} iterations", result.iterations));
    }
    Ok(SolveOutput { solution: Solution::new(args.scheme, result), notes })
}

#[derive(Clone, Debug)]
pub enum VerifySource {
    File(PathBuf),
    Random { n: usize, k: usize, count: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct VerifyArgs {
    pub source: VerifySource,
    pub tolerance: f64,
    pub budget: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyCase {
    pub index: usize,
    pub n_channels: usize,
    pub n_users: usize,
    pub dcdm: f64,
    pub oracle: f64,
    pub rel_diff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub cases: Vec<VerifyCase>,
}

impl VerifyReport {
    pub fn passed(&self) -> usize {
        self.cases.iter().filter(|c| c.pass).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.cases {
            out += &format!(
                "instance {:>4}  N={} K={}  dcdm {:.9}  oracle {:.9}  rel_diff {:.3e}  {}\n",
                c.index,
                c.n_channels,
                c.n_users,
                c.dcdm,
                c.oracle,
                c.rel_diff,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        out += &format!("{}/{} pass\n", self.passed(), self.cases.len());
        out
    }
}

/// Seed of instance `i` of a `--random` batch.
pub fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

pub fn relative_difference(dcdm: f64, oracle: f64) -> f64 {
    (dcdm - oracle).abs() / oracle.abs().max(1e-12)
}

/// Compares the dual solver against exhaustive search.
pub fn cmd_verify(args: &VerifyArgs) -> CliResult<VerifyReport> {
    let instances: Vec<Scenario> = match &args.source {
        VerifySource::File(p) => vec![load_scenario(p)?],
        VerifySource::Random { n, k, count, seed } => {
            if *n == 0 || *k == 0 {
                return Err(CliError::input("N and K must be positive"));
            }
            let count_needed = assignment_count(*n, *k);
            if count_needed > args.budget {
                return Err(Error::BudgetExceeded { count: count_needed, budget: args.budget }.into());
            }
            (0..*count).map(|i| random_scenario(*n, *k, Strategy::Df, instance_seed(*seed, i))).collect()
        }
    };
    let mut cases = Vec::new();
    for (index, s) in instances.iter().enumerate() {
        let oracle = brute_force_solve(s, args.budget)?;
        let dcdm = dcdm_solve_with(s, &DcdmOptions::default())?.result;
        let rel_diff = relative_difference(dcdm.primal_value, oracle.primal_value);
        cases.push(VerifyCase {
            index,
            n_channels: s.n_channels,
            n_users: s.n_users,
            dcdm: dcdm.primal_value,
            oracle: oracle.primal_value,
            rel_diff,
            pass: rel_diff <= args.tolerance,
        });
    }
    Ok(VerifyReport { cases })
}

#[derive(Clone, Debug)]
pub struct ExperimentArgs {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub output: PathBuf,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

pub fn load_experiment(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let text = match (&args.config, &args.preset) {
        (Some(p), None) => read_text(p)?,
        (None, Some(name)) => presets::get(name)
            .ok_or_else(|| CliError::input(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", "))))?
            .to_string(),
        _ => return Err(CliError::input("give exactly one of a config file or --preset")),
    };
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Sidecar path holding the run metadata.
pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Runs an experiment, writing the CSV table and its metadata sidecar.
pub fn cmd_experiment(args: &ExperimentArgs) -> CliResult<ResultTable> {
    let cfg = load_experiment(args)?;
    let table = run_experiment(&cfg)?;
    let csv = table.to_csv_string();
    std::fs::write(&args.output, csv)
        .map_err(|e| CliError::input(format!("writing {}: {e}", args.output.display())))?;
    let meta = serde_json::to_string_pretty(&table.meta).expect("metadata serializes");
    let mp = meta_path(&args.output);
    std::fs::write(&mp, meta + "\n").map_err(|e| CliError::input(format!("writing {}: {e}", mp.display())))?;
    Ok(table)
}

pub fn render_summary(table: &ResultTable) -> String {
    let mut out = String::new();
    for r in &table.rows {
        out += &format!(
            "{}={:<6} {:<11} mean {:.6} +- {:.6}  ({} ok, {} failed)\n",
            r.grid_param_name, r.grid_value, r.scheme.id(), r.mean_rate, r.stderr, r.trials_ok, r.trials_failed
        );
    }
    out
}
