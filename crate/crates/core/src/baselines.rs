//! Suboptimal comparison schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assign::{best_user_per_pair, hungarian_max, PairingMode};
use crate::dual::{dcdm_solve_with, DcdmOptions};
use crate::error::Result;
use crate::model::{Assignment, PowerAllocation, Scenario, SolveResult};
use crate::power::allocate_fixed;
use crate::rates::{per_path_rates, reported_rate, weighted_sum_rate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Joint optimization by divide-and-conquer dual minimization.
    Joint,
    /// Joint user selection and power allocation, identity pairing.
    NoPairing,
    /// Optimal pairing and user selection at uniform power.
    NoPa,
    /// Max-gain users, sorted pairing, then optimal power.
    Separate,
    /// Max-gain users, identity pairing, uniform power.
    MaxGain,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::Joint, Scheme::NoPairing, Scheme::NoPa, Scheme::Separate, Scheme::MaxGain];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::Joint => "joint",
            Scheme::NoPairing => "no_pairing",
            Scheme::NoPa => "no_pa",
            Scheme::Separate => "separate",
            Scheme::MaxGain => "max_gain",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

pub fn solve_scheme(scenario: &Scenario, scheme: Scheme) -> Result<SolveResult> {
    match scheme {
        Scheme::Joint => crate::dual::dcdm_solve(scenario),
        Scheme::NoPairing => no_pairing_solve(scenario),
        Scheme::NoPa => no_pa_solve(scenario),
        Scheme::Separate => separate_opt_solve(scenario),
        Scheme::MaxGain => max_gain_solve(scenario),
    }
}

pub fn no_pairing_solve(scenario: &Scenario) -> Result<SolveResult> {
    let mut opts = DcdmOptions::default();
    opts.solve.pairing = PairingMode::Identity;
    Ok(dcdm_solve_with(scenario, &opts)?.result)
}

/// Per-channel `(ps, pr)` of the uniform split.
pub fn uniform_powers(scenario: &Scenario) -> (f64, f64) {
    let n = scenario.n_channels as f64;
    let share = scenario.p_t / (scenario.p_s + scenario.p_r);
    (
        scenario.p_s.min(share * scenario.p_s) / n,
        scenario.p_r.min(share * scenario.p_r) / n,
    )
}

fn heuristic_result(scenario: &Scenario, assignment: Assignment, powers: PowerAllocation) -> SolveResult {
    SolveResult {
        primal_value: weighted_sum_rate(scenario, &assignment, &powers),
        per_path_rates: per_path_rates(scenario, &assignment, &powers),
        assignment,
        powers,
        dual_value: None,
        gap: None,
        iterations: 0,
        region_used: None,
        multipliers: None,
        converged: true,
        diagnostics: None,
    }
}

/// Uniform power, then the best pairing and users for that power.
pub fn no_pa_solve(scenario: &Scenario) -> Result<SolveResult> {
    scenario.validate()?;
    let (n, k) = (scenario.n_channels, scenario.n_users);
    let (ps, pr) = uniform_powers(scenario);
    let mut reduced = vec![vec![0.0; n]; n];
    let mut best_user = vec![vec![0usize; n]; n];
    let mut slice = vec![0.0; k];
    for m in 0..n {
        for nn in 0..n {
            for (kk, v) in slice.iter_mut().enumerate() {
                *v = scenario.w[kk]
                    * reported_rate(scenario.strategy, scenario.a[m], scenario.b[nn][kk], scenario.c[m][kk], ps, pr);
            }
            let (u, v) = best_user_per_pair(&slice);
            reduced[m][nn] = v;
            best_user[m][nn] = u;
        }
    }
    let (pairing, _) = hungarian_max(&reduced);
    let users = pairing.iter().enumerate().map(|(m, &nn)| best_user[m][nn]).collect();
    let powers = PowerAllocation { ps: vec![ps; n], pr: vec![pr; n] };
    Ok(heuristic_result(scenario, Assignment { pairing, users }, powers))
}

/// User of each second-hop channel by largest relay gain.
fn max_gain_users(scenario: &Scenario) -> Vec<usize> {
    scenario.b.iter().map(|row| best_user_per_pair(row).0).collect()
}

/// Max-gain users, sorted channel pairing, then optimal power for that
/// assignment.
pub fn separate_opt_solve(scenario: &Scenario) -> Result<SolveResult> {
    scenario.validate()?;
    let n = scenario.n_channels;
    let user_of = max_gain_users(scenario);
    let mut first: Vec<usize> = (0..n).collect();
    first.sort_by(|&x, &y| scenario.a[y].total_cmp(&scenario.a[x]));
    let mut second: Vec<usize> = (0..n).collect();
    second.sort_by(|&x, &y| scenario.b[y][user_of[y]].total_cmp(&scenario.b[x][user_of[x]]));
    let mut pairing = vec![0; n];
    for (&m, &nn) in first.iter().zip(&second) {
        pairing[m] = nn;
    }
    let users = pairing.iter().map(|&nn| user_of[nn]).collect();
    let assignment = Assignment { pairing, users };
    let fa = allocate_fixed(scenario, &assignment)?;
    let mut r = heuristic_result(scenario, assignment, fa.powers);
    r.dual_value = Some(fa.dual_bound);
    r.gap = Some(fa.dual_bound - r.primal_value);
    r.multipliers = Some(fa.multipliers);
    Ok(r)
}

/// Max-gain users, identity pairing, uniform power.
pub fn max_gain_solve(scenario: &Scenario) -> Result<SolveResult> {
    scenario.validate()?;
    let n = scenario.n_channels;
    let (ps, pr) = uniform_powers(scenario);
    let user_of = max_gain_users(scenario);
    let assignment = Assignment::identity(n, user_of);
    let powers = PowerAllocation { ps: vec![ps; n], pr: vec![pr; n] };
    Ok(heuristic_result(scenario, assignment, powers))
}
