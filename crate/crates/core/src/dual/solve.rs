use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::assign::PairingMode;
use crate::dual::region::Region;
use crate::dual::step::StepRule;
use crate::dual::{bounds, evaluate, DualPoint};
use crate::error::Result;
use crate::model::{Assignment, Multipliers, Scenario};
use crate::numeric::golden_min;

/// Options of a projected subgradient run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// `None` selects the default hybrid rule scaled to the starting point.
    pub step_rule: Option<StepRule>,
    pub max_iter: usize,
    /// Relative improvement of the best dual value over `window`
    /// iterations below which the run stops.
    pub tol: f64,
    pub window: usize,
    pub pairing: PairingMode,
    /// `None` starts from a line search along the diagonal.
    pub lambda0: Option<Multipliers>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            step_rule: None,
            max_iter: 10_000,
            tol: 1e-6,
            window: 50,
            pairing: PairingMode::Optimal,
            lambda0: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub g: f64,
    pub theta_norm: f64,
    pub ls: f64,
    pub lr: f64,
    pub lt: f64,
}

#[derive(Clone, Debug)]
pub struct SubgradientOutcome {
    /// Iterate with the smallest dual value.
    pub lambda: Multipliers,
    pub best_g: f64,
    pub best_point: DualPoint,
    pub iterations: usize,
    pub converged: bool,
    pub step_rule: StepRule,
    pub trace: Vec<TraceRecord>,
    /// Distinct maximizing assignments seen, with the smallest dual value
    /// at which each appeared, sorted by that value.
    pub candidates: Vec<(f64, Assignment)>,
    pub max_theta_norm: f64,
}

/// Projected subgradient minimization of the dual over `region`.
pub fn subgradient_solve(
    scenario: &Scenario,
    region: &Region,
    step_rule: StepRule,
    max_iter: usize,
    tol: f64,
) -> Result<SubgradientOutcome> {
    let opts = SolveOptions { step_rule: Some(step_rule), max_iter, tol, ..SolveOptions::default() };
    subgradient_solve_with(scenario, region, &opts)
}

/// Starting point: the best multiple of `(1, 1, 1)` inside the region,
/// no farther than half the dual-optimum radius.
fn diagonal_start(scenario: &Scenario, region: &Region, mode: PairingMode) -> Result<[f64; 3]> {
    let hi = 0.5 * bounds::lambda_max(scenario);
    let dir = [1.0 / 3f64.sqrt(); 3];
    let q_dir: f64 = region.coeffs.iter().zip(&dir).map(|(q, d)| q * d).sum();
    let enter = if q_dir > 0.0 { region.threshold / q_dir } else { 0.0 };
    let lo = enter.max(hi * 1e-12);
    if lo >= hi {
        return Ok(region.project(dir.map(|d| d * hi)));
    }
    let mut err = None;
    let (t, _) = golden_min(
        |lt| {
            let p = region.project(dir.map(|d| d * lt.exp()));
            match evaluate(scenario, &Multipliers::from_array(p), mode) {
                Ok(dp) => dp.value,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::INFINITY
                }
            }
        },
        lo.ln(),
        hi.ln(),
        1e-3,
        48,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(region.project(dir.map(|d| d * t.exp())))
}

pub fn subgradient_solve_with(
    scenario: &Scenario,
    region: &Region,
    opts: &SolveOptions,
) -> Result<SubgradientOutcome> {
    scenario.validate()?;
    let mode = opts.pairing;
    let start = match opts.lambda0 {
        Some(l) => region.project(l.to_array()),
        None => diagonal_start(scenario, region, mode)?,
    };
    let mut lam = start;
    let first = evaluate(scenario, &Multipliers::from_array(lam), mode)?;
    let theta_max = bounds::bounds(scenario, region).theta_max;
    let rule = opts.step_rule.unwrap_or_else(|| {
        let norm = Multipliers::from_array(start).norm();
        let eps = 1e-3 * first.value.abs();
        StepRule::Hybrid {
            nu: 0.5 * norm.max(region.threshold),
            floor: if theta_max.is_finite() { eps / theta_max } else { 0.0 },
        }
    });

    let mut best_lambda = lam;
    let mut best_point = first.clone();
    let mut best_hist: Vec<f64> = Vec::with_capacity(opts.max_iter);
    let mut trace = Vec::with_capacity(opts.max_iter);
    let mut seen: HashMap<Assignment, f64> = HashMap::new();
    let mut order: Vec<Assignment> = Vec::new();
    let mut max_theta_norm = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    let mut point = first;

    for l in 1..=opts.max_iter.max(1) {
        iterations = l;
        if l > 1 {
            point = evaluate(scenario, &Multipliers::from_array(lam), mode)?;
        }
        let theta = point.subgradient(scenario);
        let norm = (theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]).sqrt();
        max_theta_norm = max_theta_norm.max(norm);
        trace.push(TraceRecord {
            iteration: l,
            g: point.value,
            theta_norm: norm,
            ls: lam[0],
            lr: lam[1],
            lt: lam[2],
        });
        match seen.get_mut(&point.assignment) {
            Some(v) => *v = v.min(point.value),
            None => {
                seen.insert(point.assignment.clone(), point.value);
                order.push(point.assignment.clone());
            }
        }
        if point.value < best_point.value || l == 1 {
            best_lambda = lam;
            best_point = point.clone();
        }
        best_hist.push(best_point.value);
        if norm == 0.0 {
            converged = true;
            break;
        }
        if l > opts.window {
            let old = best_hist[l - 1 - opts.window];
            if old - best_point.value <= opts.tol * best_point.value.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
        let s = rule.factor(l, norm);
        lam = region.project([lam[0] - s * theta[0], lam[1] - s * theta[1], lam[2] - s * theta[2]]);
    }

    let mut candidates: Vec<(f64, Assignment)> =
        order.into_iter().map(|a| (seen[&a], a)).collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));

    Ok(SubgradientOutcome {
        lambda: Multipliers::from_array(best_lambda),
        best_g: best_point.value,
        best_point,
        iterations,
        converged,
        step_rule: rule,
        trace,
        candidates,
        max_theta_norm,
    })
}
