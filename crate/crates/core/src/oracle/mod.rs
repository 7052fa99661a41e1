//! Brute-force certifier: exhaustive assignment enumeration combined with
//! an interior-point power solver on the primal problem. Shares no code
//! with the dual machinery beyond the domain types and rate functions.

mod barrier;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Assignment, PowerAllocation, Scenario, SolveResult, Strategy};
use crate::rates::{per_path_rates, weighted_sum_rate};

/// Default cap on the number of enumerated assignments.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// `N! K^N`, saturating.
pub fn assignment_count(n: usize, k: usize) -> u128 {
    let mut count: u128 = 1;
    for i in 1..=n as u128 {
        count = count.saturating_mul(i).saturating_mul(k as u128);
    }
    count
}

/// Every pairing permutation combined with every user map, in
/// lexicographic order of `(pairing, users)`.
pub fn enumerate_assignments(
    n: usize,
    k: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Assignment>> {
    let count = assignment_count(n, k);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }
    Ok((0..n).permutations(n).flat_map(move |pairing| {
        (0..n)
            .map(|_| 0..k)
            .multi_cartesian_product()
            .map(move |users| Assignment { pairing: pairing.clone(), users })
    }))
}

/// Optimal DF powers for a fixed assignment and the resulting weighted
/// sum-rate.
pub fn fixed_assignment_power_opt(
    scenario: &Scenario,
    assignment: &Assignment,
) -> Result<(PowerAllocation, f64)> {
    if scenario.strategy != Strategy::Df {
        return Err(Error::UnsupportedStrategy(scenario.strategy, "the oracle power solver"));
    }
    assignment.check(scenario.n_channels, scenario.n_users)?;
    let paths: Vec<barrier::LiftedPath> = (0..scenario.n_channels)
        .map(|m| {
            let (n, k) = (assignment.pairing[m], assignment.users[m]);
            barrier::LiftedPath {
                w: scenario.w[k],
                a: scenario.a[m],
                b: scenario.b[n][k],
                c: scenario.c[m][k],
            }
        })
        .collect();
    let sol = barrier::solve(&paths, scenario.limits())?;
    let powers = PowerAllocation {
        ps: sol.iter().map(|p| p.0).collect(),
        pr: sol.iter().map(|p| p.1).collect(),
    };
    let value = weighted_sum_rate(scenario, assignment, &powers);
    Ok((powers, value))
}

/// Exact optimum by exhaustion. Ties go to the earliest enumerated
/// assignment.
pub fn brute_force_solve(scenario: &Scenario, budget: u128) -> Result<SolveResult> {
    scenario.validate()?;
    if scenario.strategy != Strategy::Df {
        return Err(Error::UnsupportedStrategy(scenario.strategy, "the oracle"));
    }
    let all: Vec<Assignment> =
        enumerate_assignments(scenario.n_channels, scenario.n_users, budget)?.collect();
    let solved: Vec<(PowerAllocation, f64)> = all
        .par_iter()
        .map(|a| fixed_assignment_power_opt(scenario, a))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in solved.iter().enumerate() {
        if s.1 > solved[best].1 {
            best = i;
        }
    }
    let assignment = all[best].clone();
    let (powers, value) = solved[best].clone();
    Ok(SolveResult {
        per_path_rates: per_path_rates(scenario, &assignment, &powers),
        assignment,
        powers,
        primal_value: value,
        dual_value: None,
        gap: None,
        iterations: all.len(),
        region_used: None,
        multipliers: None,
        converged: true,
        diagnostics: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn single(a: f64, b: f64, c: f64, p: [f64; 3]) -> Scenario {
        Scenario {
            n_channels: 1,
            n_users: 1,
            a: vec![a],
            b: vec![vec![b]],
            c: vec![vec![c]],
            w: vec![1.0],
            p_s: p[0],
            p_r: p[1],
            p_t: p[2],
            strategy: Strategy::Df,
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_assignments(3, 2, DEFAULT_BUDGET).unwrap().count(), 48);
        assert_eq!(enumerate_assignments(1, 1, DEFAULT_BUDGET).unwrap().count(), 1);
        let all: Vec<_> = enumerate_assignments(2, 3, DEFAULT_BUDGET).unwrap().collect();
        assert_eq!(all.len(), 18);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 18);
        for a in &all {
            a.check(2, 3).unwrap();
        }
    }

    #[test]
    fn budget_enforced() {
        assert_eq!(assignment_count(6, 4), 720 * 4096);
        assert!(matches!(
            enumerate_assignments(6, 4, DEFAULT_BUDGET).err(),
            Some(Error::BudgetExceeded { count: 2_949_120, .. })
        ));
        assert_eq!(assignment_count(60, 60), u128::MAX);
    }

    #[test]
    fn symmetric_single_path() {
        let s = single(1.0, 1.0, 0.0, [1.0, 1.0, 2.0]);
        let (p, v) = fixed_assignment_power_opt(&s, &Assignment::identity(1, vec![0])).unwrap();
        assert!((p.ps[0] - 1.0).abs() < 1e-6 && (p.pr[0] - 1.0).abs() < 1e-6);
        assert!((v - 0.5).abs() < 1e-8);
    }

    #[test]
    fn zero_gain_paths_get_nothing() {
        let mut s = single(1.0, 1.0, 0.0, [1.0, 1.0, 2.0]);
        s.n_users = 2;
        s.w = vec![1.0, 1.0];
        s.b = vec![vec![1.0, 0.0]];
        s.c = vec![vec![0.0, 0.0]];
        let (p, v) = fixed_assignment_power_opt(&s, &Assignment::identity(1, vec![1])).unwrap();
        assert_eq!((p.ps[0], p.pr[0], v), (0.0, 0.0, 0.0));
    }

    #[test]
    fn dominant_user_chosen() {
        let s = Scenario {
            n_channels: 2,
            n_users: 2,
            a: vec![1.0, 2.0],
            b: vec![vec![0.5, 3.0], vec![1.0, 2.0]],
            c: vec![vec![0.1, 0.4], vec![0.2, 0.3]],
            w: vec![1.0, 0.0],
            p_s: 1.0,
            p_r: 1.0,
            p_t: 1.5,
            strategy: Strategy::Df,
        };
        let r = brute_force_solve(&s, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.assignment.users, vec![0, 0]);
    }

    #[test]
    fn single_path_equals_fixed() {
        let s = single(2.0, 0.5, 0.3, [1.0, 2.0, 2.5]);
        let r = brute_force_solve(&s, DEFAULT_BUDGET).unwrap();
        let (_, v) = fixed_assignment_power_opt(&s, &Assignment::identity(1, vec![0])).unwrap();
        assert_eq!(r.primal_value, v);
    }

    #[test]
    fn two_paths_match_grid_search() {
        let s = Scenario {
            n_channels: 2,
            n_users: 1,
            a: vec![1.3, 0.6],
            b: vec![vec![0.8], vec![1.7]],
            c: vec![vec![0.25], vec![0.1]],
            w: vec![1.0],
            p_s: 1.2,
            p_r: 0.9,
            p_t: 1.8,
            strategy: Strategy::Df,
        };
        let asg = Assignment { pairing: vec![1, 0], users: vec![0, 0] };
        let (_, v) = fixed_assignment_power_opt(&s, &asg).unwrap();
        let grid = grid_oracle(&s, &asg);
        assert!((v - grid).abs() <= 1e-3 * grid, "{v} vs {grid}");
        assert!(v >= grid - 1e-9);
    }

    /// Coarse 50^4 grid over (ps0, ps1, pr0, pr1), then two zoomed passes
    /// around the best cell.
    fn grid_oracle(s: &Scenario, asg: &Assignment) -> f64 {
        let eval = |x: [f64; 4]| {
            if x.iter().any(|&v| v < 0.0)
                || x[0] + x[1] > s.p_s
                || x[2] + x[3] > s.p_r
                || x.iter().sum::<f64>() > s.p_t
            {
                return f64::NEG_INFINITY;
            }
            let p = PowerAllocation { ps: vec![x[0], x[1]], pr: vec![x[2], x[3]] };
            weighted_sum_rate(s, asg, &p)
        };
        let mut center = [0.0; 4];
        let mut half = [s.p_s / 2.0, s.p_s / 2.0, s.p_r / 2.0, s.p_r / 2.0];
        for i in 0..4 {
            center[i] = half[i];
        }
        let steps = 50usize;
        let mut best = (f64::NEG_INFINITY, center);
        for _pass in 0..3 {
            let lo: Vec<f64> = (0..4).map(|i| (center[i] - half[i]).max(0.0)).collect();
            let step: Vec<f64> = (0..4).map(|i| 2.0 * half[i] / (steps - 1) as f64).collect();
            for i0 in 0..steps {
                for i1 in 0..steps {
                    for i2 in 0..steps {
                        for i3 in 0..steps {
                            let x = [
                                lo[0] + i0 as f64 * step[0],
                                lo[1] + i1 as f64 * step[1],
                                lo[2] + i2 as f64 * step[2],
                                lo[3] + i3 as f64 * step[3],
                            ];
                            let v = eval(x);
                            if v > best.0 {
                                best = (v, x);
                            }
                        }
                    }
                }
            }
            center = best.1;
            for h in &mut half {
                *h *= 4.0 / steps as f64;
            }
        }
        best.0
    }
}
