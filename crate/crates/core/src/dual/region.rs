use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Multipliers, Scenario, ALPHA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    R1,
    R2,
    NonNeg,
}

/// `{ lambda >= 0 : coeffs . lambda >= threshold }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub coeffs: [f64; 3],
    pub threshold: f64,
}

impl Region {
    /// Source price bounded below: `ls + lt >= eps1`.
    pub fn r1(eps1: f64) -> Region {
        Region { kind: RegionKind::R1, coeffs: [1.0, 0.0, 1.0], threshold: eps1 }
    }

    /// `(ls + lt) + slope (lr + lt) >= eps2`.
    pub fn r2(slope: f64, eps2: f64) -> Region {
        Region { kind: RegionKind::R2, coeffs: [1.0, slope, 1.0 + slope], threshold: eps2 }
    }

    /// The nonnegative orthant.
    pub fn non_neg() -> Region {
        Region { kind: RegionKind::NonNeg, coeffs: [0.0; 3], threshold: 0.0 }
    }

    /// The orthant with the source price kept at least `floor`.
    pub fn non_neg_with_floor(floor: f64) -> Region {
        Region { kind: RegionKind::NonNeg, coeffs: [1.0, 0.0, 1.0], threshold: floor }
    }

    /// Membership with relative slack `rel` on the halfspace.
    pub fn contains(&self, l: &Multipliers, rel: f64) -> bool {
        let v = l.to_array();
        v.iter().all(|&x| x >= 0.0) && dot(&self.coeffs, &v) >= self.threshold * (1.0 - rel)
    }

    /// Euclidean projection.
    pub fn project(&self, p: [f64; 3]) -> [f64; 3] {
        project(p, self)
    }
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exact Euclidean projection onto a region.
///
/// The minimizer has some set of coordinates pinned at zero and the
/// halfspace either active or not; all 16 combinations are tried and the
/// closest feasible candidate wins.
pub fn project(p: [f64; 3], region: &Region) -> [f64; 3] {
    let q = region.coeffs;
    let t = region.threshold;
    // Cancellation in p + nu q costs up to a few ulps of |q . p|.
    let slack = 1e-12 * (t.abs() + (0..3).map(|i| (q[i] * p[i]).abs()).sum::<f64>());
    let feasible = |x: &[f64; 3]| x.iter().all(|&v| v >= 0.0) && dot(&q, x) >= t - slack;
    let mut best: Option<([f64; 3], f64)> = None;
    for zero_mask in 0u8..8 {
        let free = |i: usize| zero_mask & (1 << i) == 0;
        let mut base = [0.0; 3];
        for i in 0..3 {
            if free(i) {
                base[i] = p[i];
            }
        }
        let mut cands = vec![base];
        let qq: f64 = (0..3).filter(|&i| free(i)).map(|i| q[i] * q[i]).sum();
        if qq > 0.0 {
            let nu = (t - dot(&q, &base)) / qq;
            let mut x = base;
            for i in 0..3 {
                if free(i) {
                    x[i] += nu * q[i];
                }
            }
            cands.push(x);
        }
        for mut x in cands {
            if feasible(&x) {
                // Clean signed zeros from the pinned coordinates.
                x.iter_mut().for_each(|v| *v = v.max(0.0));
                let d: f64 = (0..3).map(|i| (x[i] - p[i]).powi(2)).sum();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((x, d));
                }
            }
        }
    }
    let mut x = best.expect("region is nonempty").0;
    let d = dot(&q, &x);
    if d < t && d > 0.0 {
        x.iter_mut().for_each(|v| *v *= t / d);
    }
    x
}

/// Region thresholds of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionThresholds {
    /// `None` when there are no direct links.
    pub eps1: Option<f64>,
    /// `None` when every relay gain is zero.
    pub eps2: Option<f64>,
    /// `min+ a / max b`.
    pub r2_slope: Option<f64>,
}

impl RegionThresholds {
    pub fn r1(&self) -> Option<Region> {
        self.eps1.map(Region::r1)
    }

    pub fn r2(&self) -> Option<Region> {
        Some(Region::r2(self.r2_slope?, self.eps2?))
    }
}

fn min_pos<'a>(it: impl IntoIterator<Item = &'a f64>) -> Option<f64> {
    it.into_iter().copied().filter(|&v| v > 0.0).reduce(f64::min)
}

/// Thresholds of the two multiplier regions, one of which contains a dual
/// optimum.
pub fn region_thresholds(scenario: &Scenario) -> Result<RegionThresholds> {
    scenario.validate()?;
    let w_min = min_pos(&scenario.w).expect("validated scenario has a positive weight");
    let a_min = min_pos(&scenario.a).expect("validated scenario has a positive first-hop gain");
    let a_max = scenario.a.iter().copied().fold(0.0, f64::max);
    let b_max = scenario.b.iter().flatten().copied().fold(0.0, f64::max);
    let p_min = scenario.p_s.min(scenario.p_t);

    let eps1 = min_pos(scenario.c.iter().flatten())
        .map(|c_min| w_min * a_min.min(c_min) / (4.0 * ALPHA * (a_max * p_min + 1.0)));
    let (eps2, r2_slope) = if b_max > 0.0 {
        (Some(w_min / (ALPHA * (p_min + 1.0 / a_min))), Some(a_min / b_max))
    } else {
        (None, None)
    };
    Ok(RegionThresholds { eps1, eps2, r2_slope })
}
