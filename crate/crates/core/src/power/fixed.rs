//! Optimal power allocation for a frozen assignment.
//!
//! The dual of the fixed-assignment problem depends on `(ls, lr, lt)` only
//! through the prices `ls + lt`, `lr + lt` and the cost `lambda . P`. When
//! `p_t < p_s + p_r` some optimal multiplier has `ls = 0` or `lr = 0`;
//! otherwise one has `lt = 0`. Each case is a 2D convex minimization,
//! solved by nested golden-section search in log coordinates.

use crate::error::Result;
use crate::model::{Assignment, Multipliers, PowerAllocation, Scenario, Strategy, ALPHA};
use crate::numeric::golden_min;
use crate::power::{df_is_tied, df_tie_endpoints, path_power_at};
use crate::rates::weighted_sum_rate;

const LOG_RANGE: f64 = 36.0; // multipliers searched over [U e^-36, U]
const GOLDEN_ITERS: usize = 56;
const TIE_REL: f64 = 1e-6;

/// Result of [`allocate_fixed`].
#[derive(Clone, Debug, PartialEq)]
pub struct FixedAllocation {
    pub powers: PowerAllocation,
    /// Weighted sum-rate of `powers` under the scenario's reporting rate.
    pub value: f64,
    pub multipliers: Multipliers,
    /// Dual objective of the fixed-assignment problem at `multipliers`; an
    /// upper bound on the optimized rate for this assignment.
    pub dual_bound: f64,
}

#[derive(Clone, Copy)]
struct Path {
    w: f64,
    a: f64,
    b: f64,
    c: f64,
}

struct Problem<'a> {
    paths: Vec<Path>,
    strategy: Strategy,
    scenario: &'a Scenario,
}

impl Problem<'_> {
    fn dual(&self, l: [f64; 3]) -> f64 {
        let (mu_s, mu_r) = (l[0] + l[2], l[1] + l[2]);
        let profit: f64 = self
            .paths
            .iter()
            .map(|p| path_power_at(self.strategy, p.w, p.a, p.b, p.c, mu_s, mu_r).lagrangian_unit)
            .sum();
        profit + l[0] * self.scenario.p_s + l[1] * self.scenario.p_r + l[2] * self.scenario.p_t
    }

    /// Minimizes the dual over the two free coordinates `free`, the third
    /// held at zero.
    fn minimize_face(&self, free: (usize, usize), upper: f64) -> ([f64; 3], f64) {
        let lo = upper.ln() - LOG_RANGE;
        let hi = upper.ln();
        let point = |x: f64, y: f64| {
            let mut l = [0.0; 3];
            l[free.0] = x.exp();
            l[free.1] = y.exp();
            l
        };
        let inner = |x: f64| golden_min(|y| self.dual(point(x, y)), lo, hi, 0.0, GOLDEN_ITERS);
        let (x, _) = golden_min(|x| inner(x).1, lo, hi, 0.0, GOLDEN_ITERS);
        let (y, v) = inner(x);
        (point(x, y), v)
    }
}

/// Allocates powers optimally for a fixed assignment.
///
/// DF paths whose relay and direct routes are equally priced at the
/// recovered multipliers are blended so the power constraints hold, then
/// any residual violation is removed by uniform scaling.
pub fn allocate_fixed(scenario: &Scenario, assignment: &Assignment) -> Result<FixedAllocation> {
    scenario.validate()?;
    assignment.check(scenario.n_channels, scenario.n_users)?;
    let n = scenario.n_channels;
    let paths: Vec<Path> = (0..n)
        .map(|m| {
            let (nn, k) = (assignment.pairing[m], assignment.users[m]);
            Path { w: scenario.w[k], a: scenario.a[m], b: scenario.b[nn][k], c: scenario.c[m][k] }
        })
        .collect();
    let prob = Problem { paths, strategy: scenario.strategy, scenario };

    // Above this price on both powers no path transmits.
    let w_max = prob.paths.iter().map(|p| p.w).fold(0.0, f64::max);
    let g_max = prob.paths.iter().map(|p| p.a + p.c).fold(0.0, f64::max);
    let p_max = scenario.p_s.max(scenario.p_r).max(scenario.p_t);
    let upper = (2.0 * w_max * g_max / ALPHA * p_max / scenario.min_power_limit()).max(1e-300);

    if w_max * g_max <= 0.0 {
        return Ok(FixedAllocation {
            powers: PowerAllocation::zeros(n),
            value: 0.0,
            multipliers: Multipliers::default(),
            dual_bound: 0.0,
        });
    }

    let faces: &[(usize, usize)] = if scenario.p_t < scenario.p_s + scenario.p_r {
        &[(0, 2), (1, 2)]
    } else {
        &[(0, 1)]
    };
    let (best, dual_bound) = faces
        .iter()
        .map(|&f| prob.minimize_face(f, upper))
        .fold(([0.0; 3], f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    let multipliers = Multipliers::from_array(best);

    let mut powers = recover(&prob, multipliers, assignment);
    let s = powers.feasibility_scale(scenario);
    if s < 1.0 {
        powers.scale(s);
    }
    let value = weighted_sum_rate(scenario, assignment, &powers);
    Ok(FixedAllocation { powers, value, multipliers, dual_bound })
}

fn recover(prob: &Problem, l: Multipliers, assignment: &Assignment) -> PowerAllocation {
    let (mu_s, mu_r) = (l.source_price(), l.relay_price());
    let n = prob.paths.len();
    let mut powers = PowerAllocation::zeros(n);
    let mut tied = Vec::new();
    for (m, p) in prob.paths.iter().enumerate() {
        if prob.strategy == Strategy::Df && p.w > 0.0 && df_is_tied(p.a, p.b, p.c, mu_s, mu_r, TIE_REL) {
            tied.push(m);
        } else {
            let s = path_power_at(prob.strategy, p.w, p.a, p.b, p.c, mu_s, mu_r);
            powers.ps[m] = s.ps_unit;
            powers.pr[m] = s.pr_unit;
        }
    }
    if tied.is_empty() {
        return powers;
    }

    // Blend the tied paths between their direct (t = 0) and balanced
    // (t = 1) solutions, picking the blend with the best repaired value.
    let ends: Vec<_> = tied
        .iter()
        .map(|&m| {
            let p = prob.paths[m];
            df_tie_endpoints(p.w, p.a, p.b, p.c, mu_s, mu_r)
        })
        .collect();
    let blend = |t: f64| {
        let mut out = powers.clone();
        for (&m, (bal, dir)) in tied.iter().zip(&ends) {
            out.ps[m] = dir.0 + t * (bal.0 - dir.0);
            out.pr[m] = dir.1 + t * (bal.1 - dir.1);
        }
        out
    };
    let base = blend(0.0).totals();
    let full = blend(1.0).totals();
    let mut candidates = vec![0.0, 1.0];
    for (i, lim) in prob.scenario.limits().into_iter().enumerate() {
        let d = full[i] - base[i];
        if d != 0.0 {
            let t = (lim - base[i]) / d;
            if (0.0..=1.0).contains(&t) {
                candidates.push(t);
            }
        }
    }
    let repaired_value = |t: f64| {
        let mut p = blend(t);
        let s = p.feasibility_scale(prob.scenario);
        if s < 1.0 {
            p.scale(s);
        }
        let v = weighted_sum_rate(prob.scenario, assignment, &p);
        (v, p)
    };
    let mut best = repaired_value(candidates[0]);
    for &t in &candidates[1..] {
        let cand = repaired_value(t);
        if cand.0 > best.0 {
            best = cand;
        }
    }
    best.1
}
