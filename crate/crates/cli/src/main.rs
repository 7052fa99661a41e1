use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relayopt_cli::{
    budget, cmd_experiment, cmd_solve, cmd_verify, exit, presets, render_summary, CliError,
    CliResult, ExperimentArgs, SolveArgs, VerifyArgs, VerifySource,
};
use relayopt_core::Scheme;

/// Joint channel pairing, user assignment and power allocation for
/// dual-hop relay networks.
#[derive(Parser, Debug)]
#[command(name = "relayopt", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a scenario file and print the solution as JSON.
    Solve(SolveCmd),
    /// Check the dual solver against exhaustive search.
    Verify(VerifyCmd),
    /// Run a Monte Carlo experiment and write its result table as CSV.
    Experiment(ExperimentCmd),
}

#[derive(Args, Debug)]
struct SolveCmd {
    /// Scenario JSON file, or `-` for stdin.
    scenario: PathBuf,
    /// joint, no_pairing, no_pa, separate or max_gain.
    #[arg(long, default_value = "joint")]
    scheme: Scheme,
    /// Relative stopping tolerance of the dual iterations.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Iteration cap per region solve.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Write the dual iterates to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Accepted for uniformity; solving is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct VerifyCmd {
    /// Scenario JSON file.
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    scenario: Option<PathBuf>,
    /// Random instances: N K COUNT.
    #[arg(long, num_args = 3, value_names = ["N", "K", "COUNT"])]
    random: Option<Vec<usize>>,
    /// Seed of the random instances.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest relative difference counted as a pass.
    #[arg(long, default_value_t = 1e-2)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct ExperimentCmd {
    /// Experiment configuration JSON.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration: fig3, fig4, fig5, fig6 or fig7.
    #[arg(long)]
    preset: Option<String>,
    /// Output CSV path; metadata goes to `<output>.meta.json`.
    #[arg(long, short)]
    output: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured trial count.
    #[arg(long)]
    trials: Option<usize>,
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let n = match threads {
        Some(0) => return Err(CliError::input("--threads must be positive")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<u8> {
    let pool = pool(cli.threads)?;
    let mut stdout = std::io::stdout().lock();
    let out = |s: &mut std::io::StdoutLock, text: &str| {
        s.write_all(text.as_bytes()).map_err(|e| CliError::input(format!("stdout: {e}")))
    };
    match cli.command {
        Command::Solve(c) => {
            let args = SolveArgs {
                scenario: c.scenario,
                scheme: c.scheme,
                tolerance: c.tolerance,
                max_iter: c.max_iter,
                trace: c.trace,
            };
            let res = pool.install(|| cmd_solve(&args))?;
            out(&mut stdout, &(res.solution.to_json() + "\n"))?;
            for n in &res.notes {
                eprintln!("{n}");
            }
            Ok(if res.solution.converged { exit::OK } else { exit::NON_CONVERGENCE })
        }
        Command::Verify(c) => {
            let source = match (c.scenario, c.random) {
                (Some(p), None) => VerifySource::File(p),
                (None, Some(v)) => VerifySource::Random { n: v[0], k: v[1], count: v[2], seed: c.seed },
                _ => return Err(CliError::input("give a scenario file or --random N K COUNT")),
            };
            let args = VerifyArgs { source, tolerance: c.tolerance, budget: budget()? };
            let report = pool.install(|| cmd_verify(&args))?;
            out(&mut stdout, &report.render())?;
            Ok(if report.passed() == report.cases.len() { exit::OK } else { exit::MISMATCH })
        }
        Command::Experiment(c) => {
            let args = ExperimentArgs {
                config: c.config,
                preset: c.preset,
                output: c.output,
                seed: c.seed,
                trials: c.trials,
            };
            if let Some(p) = &args.preset {
                if !presets::NAMES.contains(&p.as_str()) {
                    return Err(CliError::input(format!("unknown preset {p:?}")));
                }
            }
            let table = pool.install(|| cmd_experiment(&args))?;
            out(&mut stdout, &render_summary(&table))?;
            out(&mut stdout, &format!("wrote {}\n", args.output.display()))?;
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
