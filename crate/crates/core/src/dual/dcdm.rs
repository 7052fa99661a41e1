//! Divide-and-conquer dual minimization.
//!
//! A dual optimum lies in R1 when an optimal assignment uses a direct link
//! and in R2 otherwise. The dual is minimized over R1 on the original
//! instance and over R2 with direct links removed; the better region wins.
//! Primal solutions are then recovered from the dual iterates.

use std::collections::HashSet;

use crate::assign::PairingMode;
use crate::dual::bounds::{bounds, lambda_max};
use crate::dual::region::{region_thresholds, Region, RegionKind, RegionThresholds};
use crate::dual::solve::{subgradient_solve_with, SolveOptions, SubgradientOutcome};
use crate::dual::evaluate;
use crate::error::{Error, Result};
use crate::model::{
    Assignment, DualDiagnostics, Multipliers, PowerAllocation, RegionUsed, Scenario, SolveResult,
    Strategy, ALPHA,
};
use crate::power::allocate_fixed;
use crate::rates::{per_path_rates, weighted_sum_rate};

#[derive(Clone, Debug, PartialEq)]
pub struct DcdmOptions {
    pub solve: SolveOptions,
    /// Re-optimize powers for the most promising assignments seen during
    /// the dual iterations.
    pub polish: bool,
    /// Assignments per region kept for polishing.
    pub max_candidates: usize,
    /// Rounds of the primal-dual certification loop.
    pub polish_rounds: usize,
}

impl Default for DcdmOptions {
    fn default() -> Self {
        DcdmOptions { solve: SolveOptions::default(), polish: true, max_candidates: 8, polish_rounds: 6 }
    }
}

/// One region solve.
#[derive(Clone, Debug)]
pub struct RegionRun {
    pub region: Region,
    /// Whether direct links were removed for this solve.
    pub direct_links_removed: bool,
    pub outcome: SubgradientOutcome,
    /// Dual value of the original instance at this run's multipliers.
    pub g_original: f64,
    pub theta_max: f64,
}

#[derive(Clone, Debug)]
pub struct DcdmReport {
    pub result: SolveResult,
    pub runs: Vec<RegionRun>,
    pub thresholds: Option<RegionThresholds>,
}

/// Primal solution read off the dual maximizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub assignment: Assignment,
    pub powers: PowerAllocation,
    pub primal_value: f64,
    /// Factor applied to restore feasibility (1 when already feasible).
    pub scale: f64,
}

/// Maximizer of the Lagrangian at `multipliers`, scaled into the feasible
/// set and evaluated with the scenario's reporting rate.
pub fn recover_primal(scenario: &Scenario, multipliers: &Multipliers) -> Result<Recovery> {
    scenario.validate()?;
    recover_with(scenario, multipliers, PairingMode::Optimal)
}

fn recover_with(scenario: &Scenario, l: &Multipliers, mode: PairingMode) -> Result<Recovery> {
    let point = evaluate(scenario, l, mode)?;
    let mut powers = point.powers;
    let scale = powers.feasibility_scale(scenario);
    if scale < 1.0 {
        powers.scale(scale);
    }
    let primal_value = weighted_sum_rate(scenario, &point.assignment, &powers);
    Ok(Recovery { assignment: point.assignment, powers, primal_value, scale })
}

/// Solves with default options.
pub fn dcdm_solve(scenario: &Scenario) -> Result<SolveResult> {
    Ok(dcdm_solve_with(scenario, &DcdmOptions::default())?.result)
}

fn run_region(
    original: &Scenario,
    solved: &Scenario,
    region: Region,
    removed: bool,
    opts: &SolveOptions,
) -> Result<RegionRun> {
    let outcome = subgradient_solve_with(solved, &region, opts)?;
    // Zero source price with direct links present makes the original dual
    // unbounded.
    let g_original = if removed {
        match evaluate(original, &outcome.lambda, opts.pairing) {
            Ok(p) => p.value,
            Err(Error::UnboundedSubproblem) => f64::INFINITY,
            Err(e) => return Err(e),
        }
    } else {
        outcome.best_g
    };
    let theta_max = bounds(solved, &region).theta_max;
    Ok(RegionRun { region, direct_links_removed: removed, outcome, g_original, theta_max })
}

/// True if some selected, non-degenerate path has a direct link.
fn uses_direct_link(scenario: &Scenario, asg: &Assignment) -> bool {
    (0..scenario.n_channels).any(|m| {
        let k = asg.users[m];
        scenario.w[k] > 0.0 && scenario.a[m] > 0.0 && scenario.c[m][k] > 0.0
    })
}

struct Best {
    value: f64,
    optimized: f64,
    assignment: Assignment,
    powers: PowerAllocation,
    lambda_hat: Option<Multipliers>,
}

pub fn dcdm_solve_with(scenario: &Scenario, opts: &DcdmOptions) -> Result<DcdmReport> {
    scenario.validate()?;
    let mode = opts.solve.pairing;
    let mut runs = Vec::new();
    let mut thresholds = None;
    match scenario.strategy {
        Strategy::Df => {
            let th = region_thresholds(scenario)?;
            thresholds = Some(th);
            match th.r1() {
                Some(r1) => {
                    runs.push(run_region(scenario, scenario, r1, false, &opts.solve)?);
                    let zeroed = scenario.without_direct_links();
                    if let (Some(r2), Ok(())) = (th.r2(), zeroed.validate()) {
                        runs.push(run_region(scenario, &zeroed, r2, true, &opts.solve)?);
                    }
                }
                None => {
                    let r2 = th.r2().expect("a validated instance without direct links has relay gain");
                    runs.push(run_region(scenario, scenario, r2, false, &opts.solve)?);
                }
            }
        }
        Strategy::Af | Strategy::AfUpper => {
            let w_min = scenario.w.iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
            let g_max = scenario
                .a
                .iter()
                .chain(scenario.c.iter().flatten())
                .copied()
                .fold(0.0, f64::max);
            let p_min = scenario.p_s.min(scenario.p_t);
            let floor = 1e-6 * w_min / (ALPHA * (p_min + 1.0 / g_max));
            let region = Region::non_neg_with_floor(floor);
            runs.push(run_region(scenario, scenario, region, false, &opts.solve)?);
        }
    }

    // Region selection on the original dual.
    let g_min = runs.iter().map(|r| r.g_original).fold(f64::INFINITY, f64::min);
    let winners: Vec<&RegionRun> = runs.iter().filter(|r| r.g_original == g_min).collect();
    let chosen = winners[0];
    let region_used = match (winners.len(), chosen.region.kind) {
        (n, _) if n > 1 => RegionUsed::Both,
        (_, RegionKind::R1) => RegionUsed::R1,
        (_, RegionKind::R2) => RegionUsed::R2,
        (_, RegionKind::NonNeg) => RegionUsed::NonNeg,
    };

    let recovered = recover_with(scenario, &chosen.outcome.lambda, mode)?;
    let mut best = Best {
        value: recovered.primal_value,
        optimized: optimized_value(scenario, &recovered.assignment, &recovered.powers),
        assignment: recovered.assignment.clone(),
        powers: recovered.powers.clone(),
        lambda_hat: None,
    };
    let mut dual_best = g_min;
    let mut dual_lambda = chosen.outcome.lambda;

    if opts.polish {
        let mut tried = HashSet::new();
        let mut polish = |asg: &Assignment, best: &mut Best| -> Result<()> {
            if !tried.insert(asg.clone()) {
                return Ok(());
            }
            let fa = allocate_fixed(scenario, asg)?;
            let optimized = optimized_value(scenario, asg, &fa.powers);
            if fa.value > best.value || best.lambda_hat.is_none() && fa.value >= best.value {
                *best = Best {
                    value: fa.value,
                    optimized,
                    assignment: asg.clone(),
                    powers: fa.powers,
                    lambda_hat: Some(fa.multipliers),
                };
            }
            Ok(())
        };
        polish(&recovered.assignment, &mut best)?;
        for run in &runs {
            if run.direct_links_removed {
                let asg = match evaluate(scenario, &run.outcome.lambda, mode) {
                    Ok(p) => p.assignment,
                    Err(_) => run.outcome.best_point.assignment.clone(),
                };
                polish(&asg, &mut best)?;
            }
            for (_, asg) in run.outcome.candidates.iter().take(opts.max_candidates) {
                polish(asg, &mut best)?;
            }
        }
        for _ in 0..opts.polish_rounds {
            let Some(lh) = best.lambda_hat else { break };
            let point = evaluate(scenario, &lh, mode)?;
            if point.value < dual_best {
                dual_best = point.value;
                dual_lambda = lh;
            }
            if dual_best - best.optimized <= 1e-9 * best.optimized.abs().max(1.0) {
                break;
            }
            let before = best.assignment.clone();
            polish(&point.assignment, &mut best)?;
            if best.assignment == before {
                break;
            }
        }
    }

    let primal = best.value;
    let gap = dual_best - primal;
    let rel_gap = (dual_best - best.optimized) / best.optimized.abs().max(1e-12);
    let certified = rel_gap <= 1e-6;
    let region_consistent = match (scenario.strategy, thresholds) {
        (Strategy::Df, Some(th)) => {
            let target = if uses_direct_link(scenario, &best.assignment) { th.r1() } else { th.r2() };
            target.is_none_or(|r| r.contains(&dual_lambda, 1e-6))
        }
        _ => true,
    };
    let max_theta_ratio = runs
        .iter()
        .map(|r| if r.theta_max.is_finite() { r.outcome.max_theta_norm / r.theta_max } else { 0.0 })
        .fold(0.0, f64::max);
    let diagnostics = DualDiagnostics {
        lambda_max: lambda_max(scenario),
        max_theta_ratio,
        region_consistent,
        min_weak_duality_slack: dual_best - best.optimized,
        gap_flag: rel_gap > 1e-3,
        repair_scale: recovered.scale,
    };
    let result = SolveResult {
        per_path_rates: per_path_rates(scenario, &best.assignment, &best.powers),
        assignment: best.assignment,
        powers: best.powers,
        primal_value: primal,
        dual_value: Some(dual_best),
        gap: Some(gap),
        iterations: runs.iter().map(|r| r.outcome.iterations).sum(),
        region_used: Some(region_used),
        multipliers: Some(dual_lambda),
        converged: certified || runs.iter().all(|r| r.outcome.converged),
        diagnostics: Some(diagnostics),
    };
    Ok(DcdmReport { result, runs, thresholds })
}

fn optimized_value(scenario: &Scenario, asg: &Assignment, powers: &PowerAllocation) -> f64 {
    match scenario.strategy {
        Strategy::Af => {
            let mut s = scenario.clone();
            s.strategy = Strategy::AfUpper;
            weighted_sum_rate(&s, asg, powers)
        }
        _ => weighted_sum_rate(scenario, asg, powers),
    }
}
