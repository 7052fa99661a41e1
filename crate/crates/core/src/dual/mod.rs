//! Dual function, projected subgradient minimization, and the
//! divide-and-conquer dual solver.

mod bounds;
mod dcdm;
mod region;
mod solve;
mod step;

pub use bounds::{bounds, lambda_max, Bounds};
pub use dcdm::{dcdm_solve, dcdm_solve_with, recover_primal, DcdmOptions, DcdmReport, Recovery, RegionRun};
pub use region::{project, region_thresholds, Region, RegionKind, RegionThresholds};
pub use solve::{subgradient_solve, subgradient_solve_with, SolveOptions, SubgradientOutcome, TraceRecord};
pub use step::StepRule;

use crate::assign::{PairingMode, ProfitTensor};
use crate::error::Result;
use crate::model::{Assignment, Multipliers, PowerAllocation, Scenario};

/// The dual function at one multiplier vector, with its maximizer.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    pub value: f64,
    pub assignment: Assignment,
    /// Powers of the selected paths.
    pub powers: PowerAllocation,
}

impl DualPoint {
    /// `(p_s, p_r, p_t)` minus the power the maximizer uses.
    pub fn subgradient(&self, scenario: &Scenario) -> [f64; 3] {
        let t = self.powers.totals();
        [scenario.p_s - t[0], scenario.p_r - t[1], scenario.p_t - t[2]]
    }
}

pub(crate) fn evaluate(scenario: &Scenario, l: &Multipliers, mode: PairingMode) -> Result<DualPoint> {
    let tensor = ProfitTensor::build(scenario, l)?;
    let (assignment, profit) = tensor.assign(mode);
    let n = scenario.n_channels;
    let mut powers = PowerAllocation::zeros(n);
    for m in 0..n {
        let p = tensor.path(m, assignment.pairing[m], assignment.users[m]);
        powers.ps[m] = p.ps_unit;
        powers.pr[m] = p.pr_unit;
    }
    Ok(DualPoint { value: profit + l.dot_limits(scenario), assignment, powers })
}

/// `g(lambda)`, the maximizing assignment and its powers.
pub fn dual_value(scenario: &Scenario, multipliers: &Multipliers) -> Result<DualPoint> {
    scenario.validate()?;
    evaluate(scenario, multipliers, PairingMode::Optimal)
}

/// Dual function with the pairing restricted by `mode`.
pub fn dual_value_with(
    scenario: &Scenario,
    multipliers: &Multipliers,
    mode: PairingMode,
) -> Result<DualPoint> {
    scenario.validate()?;
    evaluate(scenario, multipliers, mode)
}

/// A subgradient of `g` at `multipliers`.
pub fn subgradient(scenario: &Scenario, multipliers: &Multipliers) -> Result<[f64; 3]> {
    Ok(dual_value(scenario, multipliers)?.subgradient(scenario))
}
