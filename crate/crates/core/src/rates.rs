//! Per-path achievable rates in bits per channel use over the two-slot frame.

use std::f64::consts::LN_2;

use crate::model::{Assignment, PowerAllocation, Scenario, Strategy};

#[inline]
fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / LN_2
}

/// Decode-and-forward rate: the relay must decode, and the user combines
/// the relayed and direct copies.
#[inline]
pub fn df_rate(a: f64, b: f64, c: f64, ps: f64, pr: f64) -> f64 {
    half_log2_1p((a * ps).min(c * ps + b * pr))
}

/// Exact amplify-and-forward rate. Not concave in `(ps, pr)`.
#[inline]
pub fn af_rate(a: f64, b: f64, c: f64, ps: f64, pr: f64) -> f64 {
    let relayed = a * b * ps * pr / (1.0 + a * ps + b * pr);
    half_log2_1p(relayed + c * ps)
}

/// Concave upper bound on [`af_rate`] obtained by dropping the one from the
/// relayed-SNR denominator. Extended continuously by zero where
/// `a ps + b pr = 0`.
#[inline]
pub fn af_rate_upper(a: f64, b: f64, c: f64, ps: f64, pr: f64) -> f64 {
    let den = a * ps + b * pr;
    let relayed = if den > 0.0 { a * b * ps * pr / den } else { 0.0 };
    half_log2_1p(relayed + c * ps)
}

/// Rate used to report achieved throughput.
#[inline]
pub fn reported_rate(strategy: Strategy, a: f64, b: f64, c: f64, ps: f64, pr: f64) -> f64 {
    match strategy {
        Strategy::Df => df_rate(a, b, c, ps, pr),
        Strategy::Af => af_rate(a, b, c, ps, pr),
        Strategy::AfUpper => af_rate_upper(a, b, c, ps, pr),
    }
}

/// Concave rate the dual machinery optimizes.
#[inline]
pub fn optimized_rate(strategy: Strategy, a: f64, b: f64, c: f64, ps: f64, pr: f64) -> f64 {
    match strategy {
        Strategy::Df => df_rate(a, b, c, ps, pr),
        Strategy::Af | Strategy::AfUpper => af_rate_upper(a, b, c, ps, pr),
    }
}

/// Unweighted reported rate of every selected path.
pub fn per_path_rates(
    scenario: &Scenario,
    assignment: &Assignment,
    powers: &PowerAllocation,
) -> Vec<f64> {
    (0..scenario.n_channels)
        .map(|m| {
            let (n, k) = (assignment.pairing[m], assignment.users[m]);
            reported_rate(
                scenario.strategy,
                scenario.a[m],
                scenario.b[n][k],
                scenario.c[m][k],
                powers.ps[m],
                powers.pr[m],
            )
        })
        .collect()
}

/// Weighted sum-rate with the scenario's reporting rate.
pub fn weighted_sum_rate(
    scenario: &Scenario,
    assignment: &Assignment,
    powers: &PowerAllocation,
) -> f64 {
    per_path_rates(scenario, assignment, powers)
        .iter()
        .enumerate()
        .map(|(m, r)| scenario.w[assignment.users[m]] * r)
        .sum()
}
