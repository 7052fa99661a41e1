use serde::{Deserialize, Serialize};

use crate::dual::region::{Region, RegionKind};
use crate::model::{Scenario, ALPHA};

/// A priori bounds on the dual optimum and on subgradient norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Radius of a ball around the origin containing a dual optimum.
    pub lambda_max: f64,
    /// Bound on `|theta|` for every multiplier inside the region.
    /// Infinite for the unrestricted orthant.
    pub theta_max: f64,
}

/// `sqrt(2) N^2 sum(w) / (alpha min(p_s, p_r, p_t))`.
pub fn lambda_max(scenario: &Scenario) -> f64 {
    let n = scenario.n_channels as f64;
    let w_sum: f64 = scenario.w.iter().sum();
    std::f64::consts::SQRT_2 * n * n * w_sum / (ALPHA * scenario.min_power_limit())
}

/// Largest source and relay power a single path can request anywhere in
/// the region.
fn path_power_caps(region: &Region, w: f64, a: f64, b: f64, c: f64) -> (f64, f64) {
    if w <= 0.0 || a <= 0.0 || (b <= 0.0 && c <= 0.0) {
        return (0.0, 0.0);
    }
    let eps = region.threshold;
    match region.kind {
        RegionKind::R1 => {
            let pr = if a > c && b > 0.0 { w * (a - c) / (ALPHA * b * eps) } else { 0.0 };
            (w / (ALPHA * eps), pr)
        }
        RegionKind::R2 => {
            // Direct links are zeroed in this region's solve.
            if b > 0.0 {
                (w / (ALPHA * eps), w * a / (ALPHA * b * eps))
            } else {
                (0.0, 0.0)
            }
        }
        RegionKind::NonNeg => (f64::INFINITY, f64::INFINITY),
    }
}

/// Bounds for subgradient iterates restricted to `region`.
pub fn bounds(scenario: &Scenario, region: &Region) -> Bounds {
    let (n, k) = (scenario.n_channels, scenario.n_users);
    let mut s_max = 0.0;
    let mut r_max = 0.0;
    for m in 0..n {
        let (mut s_m, mut r_m) = (0.0f64, 0.0f64);
        for nn in 0..n {
            for kk in 0..k {
                let (s, r) = path_power_caps(
                    region,
                    scenario.w[kk],
                    scenario.a[m],
                    scenario.b[nn][kk],
                    scenario.c[m][kk],
                );
                s_m = s_m.max(s);
                r_m = r_m.max(r);
            }
        }
        s_max += s_m;
        r_max += r_m;
    }
    let theta_max = (scenario.p_s.max(s_max).powi(2)
        + scenario.p_r.max(r_max).powi(2)
        + scenario.p_t.max(s_max + r_max).powi(2))
    .sqrt();
    Bounds { lambda_max: lambda_max(scenario), theta_max }
}
