//! Per-path maximization of the Lagrangian
//! `w R(ps, pr) - (ls + lt) ps - (lr + lt) pr` over nonnegative powers.
//!
//! Decode-and-forward has a closed form. The amplify-and-forward bound is
//! solved numerically: for a fixed ratio `r = pr / ps` the bound reduces to
//! water-filling on an effective gain, so only the ratio needs a search.

mod fixed;

pub use fixed::{allocate_fixed, FixedAllocation};

use crate::error::{Error, Result};
use crate::model::{Multipliers, Strategy, ALPHA};
use crate::rates::{af_rate_upper, df_rate};

/// Optimal per-path powers for one unit of assignment weight, and the
/// resulting Lagrangian value (the path profit).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PathPowerSolution {
    pub ps_unit: f64,
    pub pr_unit: f64,
    pub lagrangian_unit: f64,
}

#[inline]
fn water(w: f64, price: f64, gain: f64) -> f64 {
    (w / (ALPHA * price) - 1.0 / gain).max(0.0)
}

#[inline]
fn df_degenerate(w: f64, a: f64, b: f64, c: f64) -> bool {
    w <= 0.0 || a <= 0.0 || (b <= 0.0 && c <= 0.0)
}

/// Powers on the balanced ray `pr = (a - c) / b * ps`, where both hops
/// deliver the same SNR. Requires `a > c` and `b > 0`.
#[inline]
fn df_balanced(w: f64, a: f64, b: f64, c: f64, mu_s: f64, mu_r: f64) -> (f64, f64) {
    let ps = (w * b / (ALPHA * (b * mu_s + (a - c) * mu_r)) - 1.0 / a).max(0.0);
    (ps, (a - c) / b * ps)
}

/// Direct-link water-filling with the relay silent.
#[inline]
fn df_direct(w: f64, c: f64, mu_s: f64) -> (f64, f64) {
    if c > 0.0 {
        (water(w, mu_s, c), 0.0)
    } else {
        (0.0, 0.0)
    }
}

#[inline]
fn df_lagrangian(w: f64, a: f64, b: f64, c: f64, mu_s: f64, mu_r: f64, p: (f64, f64)) -> f64 {
    w * df_rate(a, b, c, p.0, p.1) - mu_s * p.0 - mu_r * p.1
}

/// Closed-form DF solution at prices admitted by [`df_path_power`].
pub(crate) fn df_at(w: f64, a: f64, b: f64, c: f64, mu_s: f64, mu_r: f64) -> PathPowerSolution {
    if df_degenerate(w, a, b, c) {
        return PathPowerSolution::default();
    }
    let p = if a <= c {
        (water(w, mu_s, a), 0.0)
    } else if b > 0.0 && c * mu_r < b * mu_s {
        df_balanced(w, a, b, c, mu_s, mu_r)
    } else {
        let p2 = df_direct(w, c, mu_s);
        if b > 0.0 {
            let p1 = df_balanced(w, a, b, c, mu_s, mu_r);
            if df_lagrangian(w, a, b, c, mu_s, mu_r, p1) > df_lagrangian(w, a, b, c, mu_s, mu_r, p2) {
                p1
            } else {
                p2
            }
        } else {
            p2
        }
    };
    PathPowerSolution {
        ps_unit: p.0,
        pr_unit: p.1,
        lagrangian_unit: df_lagrangian(w, a, b, c, mu_s, mu_r, p),
    }
}

/// Both DF candidates when the relay and direct links are equally priced
/// (`c mu_r = b mu_s`): every convex combination is then optimal.
/// Returns `(balanced, direct)`.
pub(crate) fn df_tie_endpoints(
    w: f64,
    a: f64,
    b: f64,
    c: f64,
    mu_s: f64,
    mu_r: f64,
) -> ((f64, f64), (f64, f64)) {
    (df_balanced(w, a, b, c, mu_s, mu_r), df_direct(w, c, mu_s))
}

/// True when the path sits on (or numerically next to) the DF tie.
#[inline]
pub(crate) fn df_is_tied(a: f64, b: f64, c: f64, mu_s: f64, mu_r: f64, rel: f64) -> bool {
    a > c && b > 0.0 && c > 0.0 && (c * mu_r - b * mu_s).abs() <= rel * (c * mu_r + b * mu_s)
}

/// Closed-form DF per-path power allocation.
///
/// A zero source price is admissible only without a direct link and with a
/// positive relay price; otherwise the subproblem is unbounded.
pub fn df_path_power(w: f64, a: f64, b: f64, c: f64, m: &Multipliers) -> Result<PathPowerSolution> {
    if df_degenerate(w, a, b, c) {
        return Ok(PathPowerSolution::default());
    }
    if m.source_price() <= 0.0 && (c > 0.0 || m.relay_price() <= 0.0) {
        return Err(Error::UnboundedSubproblem);
    }
    Ok(df_at(w, a, b, c, m.source_price(), m.relay_price()))
}

/// Ratio used when relay power is free; the bound saturates as `r` grows.
const AF_FREE_RELAY_RATIO: f64 = 1e12;

/// AF upper-bound solution at source price `mu_s > 0` and relay price
/// `mu_r >= 0`.
///
/// For `pr = r ps` the bound is `0.5 log2(1 + G(r) ps)` with
/// `G(r) = a b r / (a + b r) + c`, so the best ratio maximizes the
/// quasi-concave `G(r) / (mu_s + mu_r r)` and `ps` follows by water-filling.
/// Setting the derivative to zero gives
/// `r = a (s - c) / (b (a + c))` with `s^2 = (a + c) b mu_s / mu_r - a c`.
pub(crate) fn af_at(w: f64, a: f64, b: f64, c: f64, mu_s: f64, mu_r: f64) -> PathPowerSolution {
    let relay_useful = a > 0.0 && b > 0.0;
    if w <= 0.0 || (!relay_useful && c <= 0.0) {
        return PathPowerSolution::default();
    }
    let efficiency = |r: f64| {
        let h = if relay_useful { a * b * r / (a + b * r) } else { 0.0 };
        ((h + c) / (mu_s + mu_r * r), h + c)
    };
    // The per-path optimum depends on r = pr / ps only through the
    // efficiency q(r); its stationary point solves a quadratic, and relaying
    // pays off exactly when b mu_s > c mu_r.
    let mut r = 0.0;
    if relay_useful && b * mu_s > c * mu_r {
        r = if mu_r > 0.0 {
            let s = ((a + c) * b * mu_s / mu_r - a * c).sqrt();
            a * (s - c) / (b * (a + c))
        } else {
            AF_FREE_RELAY_RATIO * a / b
        };
    }
    let (_, gain) = efficiency(r);
    let ps = water(w, mu_s + mu_r * r, gain);
    let pr = r * ps;
    PathPowerSolution {
        ps_unit: ps,
        pr_unit: pr,
        lagrangian_unit: w * af_rate_upper(a, b, c, ps, pr) - mu_s * ps - mu_r * pr,
    }
}

/// Numerical AF per-path power allocation on the concave upper bound.
pub fn af_path_power(w: f64, a: f64, b: f64, c: f64, m: &Multipliers) -> Result<PathPowerSolution> {
    let relay_useful = a > 0.0 && b > 0.0;
    if w <= 0.0 || (!relay_useful && c <= 0.0) {
        return Ok(PathPowerSolution::default());
    }
    if m.source_price() <= 0.0 {
        return Err(Error::UnboundedSubproblem);
    }
    Ok(af_at(w, a, b, c, m.source_price(), m.relay_price()))
}

/// Dispatches on strategy. Both AF variants optimize the upper bound.
pub fn path_power(
    strategy: Strategy,
    w: f64,
    a: f64,
    b: f64,
    c: f64,
    m: &Multipliers,
) -> Result<PathPowerSolution> {
    match strategy {
        Strategy::Df => df_path_power(w, a, b, c, m),
        Strategy::Af | Strategy::AfUpper => af_path_power(w, a, b, c, m),
    }
}

#[inline]
pub(crate) fn path_power_at(
    strategy: Strategy,
    w: f64,
    a: f64,
    b: f64,
    c: f64,
    mu_s: f64,
    mu_r: f64,
) -> PathPowerSolution {
    match strategy {
        Strategy::Df => df_at(w, a, b, c, mu_s, mu_r),
        Strategy::Af | Strategy::AfUpper => af_at(w, a, b, c, mu_s, mu_r),
    }
}

/// Path profit: the per-path Lagrangian at its optimal powers.
pub fn path_profit(
    w: f64,
    a: f64,
    b: f64,
    c: f64,
    m: &Multipliers,
    strategy: Strategy,
) -> Result<f64> {
    path_power(strategy, w, a, b, c, m).map(|s| s.lagrangian_unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Strategy;
    use proptest::prelude::*;

    fn mult(ls: f64, lr: f64, lt: f64) -> Multipliers {
        Multipliers::new(ls, lr, lt)
    }

    #[test]
    fn direct_dominant_branch() {
        let s = df_path_power(1.0, 1.0, 7.0, 2.0, &mult(0.5, 0.0, 0.0)).unwrap();
        let ps = 1.0 / std::f64::consts::LN_2 - 1.0;
        assert!((s.ps_unit - ps).abs() < 1e-12);
        assert_eq!(s.pr_unit, 0.0);
        // 0.5 log2(1 + ps) - 0.5 ps with ps = 1/ln 2 - 1 = 0.442695...
        assert!((s.lagrangian_unit - 0.043_035).abs() < 1e-6);
        assert!((s.lagrangian_unit - (0.5 * (1.0 + ps).log2() - 0.5 * ps)).abs() < 1e-15);
    }

    #[test]
    fn balanced_branch() {
        let s = df_path_power(1.0, 4.0, 2.0, 0.0, &mult(0.0, 0.0, 0.25)).unwrap();
        // ps = 2 / (2 ln 2 * 1.5) - 1/4
        let ps = 2.0 / (3.0 * std::f64::consts::LN_2) - 0.25;
        assert!((s.ps_unit - ps).abs() < 1e-12);
        assert!((s.ps_unit - 0.711_797).abs() < 1e-6);
        assert!((s.pr_unit - 2.0 * ps).abs() < 1e-12);
    }

    #[test]
    fn expensive_power_gives_zero() {
        let s = df_path_power(1.0, 4.0, 2.0, 1.0, &mult(50.0, 50.0, 50.0)).unwrap();
        assert_eq!(s, PathPowerSolution::default());
        assert_eq!(path_profit(1.0, 4.0, 2.0, 1.0, &mult(50.0, 50.0, 50.0), Strategy::Df).unwrap(), 0.0);
    }

    #[test]
    fn unbounded_rejected() {
        assert!(matches!(
            df_path_power(1.0, 1.0, 1.0, 0.0, &Multipliers::default()),
            Err(Error::UnboundedSubproblem)
        ));
        // A useless path never needs a price.
        assert!(df_path_power(0.0, 1.0, 1.0, 0.0, &Multipliers::default()).is_ok());
        // Without a direct link a relay price alone bounds the path.
        let s = df_path_power(1.0, 2.0, 1.0, 0.0, &mult(0.0, 0.5, 0.0)).unwrap();
        assert!(s.ps_unit > 0.0 && s.pr_unit == 2.0 * s.ps_unit);
        assert!(df_path_power(1.0, 2.0, 1.0, 0.1, &mult(0.0, 0.5, 0.0)).is_err());
    }

    #[test]
    fn tie_endpoints_have_equal_value() {
        // a=3, b=2, c=1 with mu_r = 2 mu_s makes relaying and direct
        // transmission equally expensive per unit SNR.
        let (mu_s, mu_r) = (0.1, 0.2);
        let (p1, p2) = df_tie_endpoints(1.0, 3.0, 2.0, 1.0, mu_s, mu_r);
        assert!(df_is_tied(3.0, 2.0, 1.0, mu_s, mu_r, 1e-12));
        assert!(p1.1 > 0.0 && p2.1 == 0.0);
        let l1 = df_lagrangian(1.0, 3.0, 2.0, 1.0, mu_s, mu_r, p1);
        let l2 = df_lagrangian(1.0, 3.0, 2.0, 1.0, mu_s, mu_r, p2);
        assert!((l1 - l2).abs() < 1e-12);
        let s = df_path_power(1.0, 3.0, 2.0, 1.0, &mult(0.1, 0.2, 0.0)).unwrap();
        assert!((s.lagrangian_unit - l2).abs() < 1e-12);
    }

    #[test]
    fn af_degenerate_cases() {
        let m = mult(0.1, 0.1, 0.1);
        assert_eq!(af_path_power(1.0, 1.0, 0.0, 0.0, &m).unwrap(), PathPowerSolution::default());
        let s = af_path_power(1.0, 1.0, 1.0, 0.0, &mult(100.0, 100.0, 0.0)).unwrap();
        assert_eq!((s.ps_unit, s.pr_unit), (0.0, 0.0));
        assert_eq!(s.lagrangian_unit, 0.0);
    }

    /// Coarse grid over the box that must contain the optimum, then
    /// repeated zooms around the best cell.
    fn af_grid(w: f64, a: f64, b: f64, c: f64, mu_s: f64, mu_r: f64) -> f64 {
        let lag = |ps: f64, pr: f64| w * af_rate_upper(a, b, c, ps, pr) - mu_s * ps - mu_r * pr;
        let (mut cx, mut cy) = (0.0, 0.0);
        let (mut hx, mut hy) = (w / (ALPHA * mu_s), w / (ALPHA * mu_r));
        let mut best = lag(0.0, 0.0);
        for _ in 0..12 {
            let (x0, y0) = ((cx - hx).max(0.0), (cy - hy).max(0.0));
            for i in 0..=60 {
                for j in 0..=60 {
                    let (x, y) = (x0 + 2.0 * hx * i as f64 / 60.0, y0 + 2.0 * hy * j as f64 / 60.0);
                    let v = lag(x, y);
                    if v > best {
                        best = v;
                        (cx, cy) = (x, y);
                    }
                }
            }
            hx /= 8.0;
            hy /= 8.0;
        }
        best
    }

    #[test]
    fn af_matches_grid_search() {
        let cases = [
            (1.0, 1.0, 1.0, 0.0, 0.2, 0.2),
            (0.5, 4.0, 0.5, 1.0, 0.1, 0.3),
            (0.3, 0.2, 6.0, 0.1, 0.05, 0.02),
            (1.0, 2.0, 2.0, 3.0, 0.5, 0.1),
            (0.8, 9.0, 9.0, 0.5, 0.4, 0.9),
        ];
        for (w, a, b, c, ms, mr) in cases {
            let s = af_at(w, a, b, c, ms, mr);
            let g = af_grid(w, a, b, c, ms, mr);
            assert!(s.lagrangian_unit >= g - 1e-12, "{s:?} vs {g}");
            assert!((s.lagrangian_unit - g).abs() <= 1e-4 * g.abs().max(1e-12), "{s:?} vs {g}");
        }
    }

    #[test]
    fn af_direct_only_is_water_filling() {
        let s = af_path_power(1.0, 2.0, 0.0, 3.0, &mult(0.2, 0.0, 0.0)).unwrap();
        assert!((s.ps_unit - water(1.0, 0.2, 3.0)).abs() < 1e-12);
        assert_eq!(s.pr_unit, 0.0);
    }

    fn df_lag(w: f64, a: f64, b: f64, c: f64, m: &Multipliers, ps: f64, pr: f64) -> f64 {
        w * df_rate(a, b, c, ps, pr) - m.source_price() * ps - m.relay_price() * pr
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn df_local_optimality(w in 0.0..1.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64,
                               ls in 0.0..2.0f64, lr in 0.0..2.0f64, lt in 0.01..2.0f64,
                               dir in 0usize..8) {
            let m = mult(ls, lr, lt);
            let s = df_path_power(w, a, b, c, &m).unwrap();
            let base = df_lag(w, a, b, c, &m, s.ps_unit, s.pr_unit);
            let d = 1e-4;
            let (dx, dy) = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0),
                            (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)][dir];
            let (ps, pr) = (s.ps_unit + d * dx, s.pr_unit + d * dy);
            if ps >= 0.0 && pr >= 0.0 {
                prop_assert!(df_lag(w, a, b, c, &m, ps, pr) <= base + 1e-8);
            }
        }

        #[test]
        fn df_relay_balances_hops(w in 0.01..1.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64,
                                  ls in 0.0..2.0f64, lr in 0.0..2.0f64, lt in 0.01..2.0f64) {
            let s = df_path_power(w, a, b, c, &mult(ls, lr, lt)).unwrap();
            prop_assert!(s.ps_unit >= 0.0 && s.pr_unit >= 0.0 && s.lagrangian_unit >= 0.0);
            if s.pr_unit > 0.0 {
                let lhs = a * s.ps_unit;
                let rhs = c * s.ps_unit + b * s.pr_unit;
                prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(rhs));
            }
        }

        #[test]
        fn df_doubling_prices_shrinks_power(w in 0.0..1.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64,
                                            ls in 0.0..2.0f64, lr in 0.0..2.0f64, lt in 0.01..2.0f64) {
            let s1 = df_path_power(w, a, b, c, &mult(ls, lr, lt)).unwrap();
            let s2 = df_path_power(w, a, b, c, &mult(2.0 * ls, 2.0 * lr, 2.0 * lt)).unwrap();
            prop_assert!(s2.ps_unit + s2.pr_unit <= s1.ps_unit + s1.pr_unit + 1e-12);
        }

        #[test]
        fn af_beats_nearby_points(w in 0.01..1.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64,
                                  ls in 0.0..1.0f64, lr in 0.0..1.0f64, lt in 0.01..1.0f64,
                                  dx in -1.0..1.0f64, dy in -1.0..1.0f64) {
            let m = mult(ls, lr, lt);
            let s = af_path_power(w, a, b, c, &m).unwrap();
            let lag = |ps: f64, pr: f64| w * af_rate_upper(a, b, c, ps, pr)
                - m.source_price() * ps - m.relay_price() * pr;
            let ps = (s.ps_unit + 1e-3 * dx).max(0.0);
            let pr = (s.pr_unit + 1e-3 * dy).max(0.0);
            prop_assert!(lag(ps, pr) <= s.lagrangian_unit + 1e-10);
            prop_assert!(s.lagrangian_unit >= 0.0);
        }
    }
}
