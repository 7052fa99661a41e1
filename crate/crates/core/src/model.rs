//! Domain types shared by every solver module.
//!
//! Gains are stored pre-normalized by the receiver noise power, so `a[m] * p`
//! is a dimensionless SNR. Channels, users and paths are 0-based throughout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `2 ln 2`, the water-filling constant of the half-duplex log2 rate.
pub const ALPHA: f64 = 2.0 * std::f64::consts::LN_2;

/// Relative feasibility tolerance applied to every power limit.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    /// Decode-and-forward with repetition coding and direct-link combining.
    Df,
    /// Amplify-and-forward. Optimized through the concave upper bound,
    /// reported with the exact rate.
    Af,
    /// Amplify-and-forward, optimized and reported with the upper bound.
    AfUpper,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Df => "DF",
            Strategy::Af => "AF",
            Strategy::AfUpper => "AF_UPPER",
        })
    }
}

/// One problem instance: a single coherence block of a dual-hop network
/// with `n_channels` channels per hop and `n_users` destinations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_channels: usize,
    pub n_users: usize,
    /// Source to relay gain per first-hop channel.
    pub a: Vec<f64>,
    /// Relay to user gain, `b[n][k]`.
    pub b: Vec<Vec<f64>>,
    /// Source to user gain, `c[m][k]`.
    pub c: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub p_s: f64,
    pub p_r: f64,
    pub p_t: f64,
    pub strategy: Strategy,
}

/// A single violated scenario invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyDimension(&'static str),
    ShapeMismatch { field: &'static str, expected: usize, found: usize },
    NonFinite(&'static str),
    NegativeGain { field: &'static str, index: (usize, usize) },
    NegativeWeight(usize),
    NonPositivePowerLimit(&'static str),
    Degenerate,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension(d) => write!(f, "{d} must be positive"),
            Violation::ShapeMismatch { field, expected, found } => {
                write!(f, "shape mismatch in {field}: expected {expected}, found {found}")
            }
            Violation::NonFinite(field) => write!(f, "non-finite value in {field}"),
            Violation::NegativeGain { field, index } => {
                write!(f, "negative gain in {field} at {index:?}")
            }
            Violation::NegativeWeight(k) => write!(f, "negative weight for user {k}"),
            Violation::NonPositivePowerLimit(l) => write!(f, "non-positive power limit {l}"),
            Violation::Degenerate => {
                write!(f, "degenerate instance: no path with w > 0, a > 0 and b + c > 0")
            }
        }
    }
}

/// Every violated invariant of a scenario, in detection order.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl Scenario {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> std::result::Result<(), ValidationErrors> {
        let mut errs = Vec::new();
        let (n, k) = (self.n_channels, self.n_users);
        if n == 0 {
            errs.push(Violation::EmptyDimension("n_channels"));
        }
        if k == 0 {
            errs.push(Violation::EmptyDimension("n_users"));
        }
        let mut shapes_ok = true;
        let mut shape = |field, expected: usize, found: usize, errs: &mut Vec<Violation>| {
            if expected != found {
                errs.push(Violation::ShapeMismatch { field, expected, found });
                shapes_ok = false;
            }
        };
        shape("a", n, self.a.len(), &mut errs);
        shape("w", k, self.w.len(), &mut errs);
        shape("b", n, self.b.len(), &mut errs);
        shape("c", n, self.c.len(), &mut errs);
        for row in &self.b {
            shape("b row", k, row.len(), &mut errs);
        }
        for row in &self.c {
            shape("c row", k, row.len(), &mut errs);
        }

        let check_gain = |field, index, v: f64, errs: &mut Vec<Violation>| {
            if !v.is_finite() {
                errs.push(Violation::NonFinite(field));
            } else if v < 0.0 {
                errs.push(Violation::NegativeGain { field, index });
            }
        };
        for (m, &v) in self.a.iter().enumerate() {
            check_gain("a", (m, 0), v, &mut errs);
        }
        for (i, row) in self.b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                check_gain("b", (i, j), v, &mut errs);
            }
        }
        for (i, row) in self.c.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                check_gain("c", (i, j), v, &mut errs);
            }
        }
        for (i, &v) in self.w.iter().enumerate() {
            if !v.is_finite() {
                errs.push(Violation::NonFinite("w"));
            } else if v < 0.0 {
                errs.push(Violation::NegativeWeight(i));
            }
        }
        for (name, v) in [("p_s", self.p_s), ("p_r", self.p_r), ("p_t", self.p_t)] {
            if !v.is_finite() {
                errs.push(Violation::NonFinite(name));
            } else if v <= 0.0 {
                errs.push(Violation::NonPositivePowerLimit(name));
            }
        }

        if shapes_ok && n > 0 && k > 0 && !self.has_nondegenerate_path() {
            errs.push(Violation::Degenerate);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(errs))
        }
    }

    fn has_nondegenerate_path(&self) -> bool {
        (0..self.n_users).any(|k| {
            self.w[k] > 0.0
                && (0..self.n_channels).any(|m| {
                    self.a[m] > 0.0
                        && (0..self.n_channels).any(|n| self.b[n][k] + self.c[m][k] > 0.0)
                })
        })
    }

    /// True if any direct source to user gain is positive.
    pub fn has_direct_links(&self) -> bool {
        self.c.iter().flatten().any(|&v| v > 0.0)
    }

    /// The same instance with every direct link removed.
    pub fn without_direct_links(&self) -> Scenario {
        let mut s = self.clone();
        for row in &mut s.c {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        s
    }

    pub fn min_power_limit(&self) -> f64 {
        self.p_s.min(self.p_r).min(self.p_t)
    }

    pub fn limits(&self) -> [f64; 3] {
        [self.p_s, self.p_r, self.p_t]
    }

    pub fn from_json(text: &str) -> std::result::Result<Scenario, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// A channel pairing together with the user served on each pair.
///
/// `pairing[m] = n` pairs first-hop channel `m` with second-hop channel `n`,
/// and `users[m]` is the user served on that pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub pairing: Vec<usize>,
    pub users: Vec<usize>,
}

impl Assignment {
    pub fn new(pairing: Vec<usize>, users: Vec<usize>, n_users: usize) -> Result<Assignment> {
        let a = Assignment { pairing, users };
        a.check(a.pairing.len(), n_users)?;
        Ok(a)
    }

    pub fn identity(n: usize, users: Vec<usize>) -> Assignment {
        Assignment { pairing: (0..n).collect(), users }
    }

    pub fn n_channels(&self) -> usize {
        self.pairing.len()
    }

    /// Verifies the pairing is a bijection on `0..n` and all users exist.
    pub fn check(&self, n: usize, n_users: usize) -> Result<()> {
        if self.pairing.len() != n || self.users.len() != n {
            return Err(Error::InvalidAssignment(format!(
                "expected {n} pairs, got pairing {} / users {}",
                self.pairing.len(),
                self.users.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in &self.pairing {
            if p >= n || seen[p] {
                return Err(Error::InvalidAssignment(format!(
                    "pairing {:?} is not a permutation",
                    self.pairing
                )));
            }
            seen[p] = true;
        }
        if let Some(&u) = self.users.iter().find(|&&u| u >= n_users) {
            return Err(Error::InvalidAssignment(format!("user {u} out of range")));
        }
        Ok(())
    }

    /// Binary tensor `phi[m][n][k]`.
    pub fn to_tensor(&self, n_users: usize) -> Vec<Vec<Vec<u8>>> {
        let n = self.n_channels();
        let mut phi = vec![vec![vec![0u8; n_users]; n]; n];
        for m in 0..n {
            phi[m][self.pairing[m]][self.users[m]] = 1;
        }
        phi
    }

    /// Inverse of [`Assignment::to_tensor`]. Rejects tensors whose row or
    /// column sums over the pairing are not exactly one.
    pub fn from_tensor(phi: &[Vec<Vec<u8>>]) -> Result<Assignment> {
        let n = phi.len();
        let n_users = phi.first().and_then(|r| r.first()).map_or(0, |c| c.len());
        let mut pairing = vec![usize::MAX; n];
        let mut users = vec![usize::MAX; n];
        let mut col = vec![0usize; n];
        for m in 0..n {
            let mut row = 0usize;
            for nn in 0..n {
                for k in 0..n_users {
                    match phi[m][nn][k] {
                        0 => {}
                        1 => {
                            row += 1;
                            col[nn] += 1;
                            pairing[m] = nn;
                            users[m] = k;
                        }
                        v => {
                            return Err(Error::InvalidAssignment(format!(
                                "non-binary entry {v} at ({m},{nn},{k})"
                            )))
                        }
                    }
                }
            }
            if row != 1 {
                return Err(Error::InvalidAssignment(format!("row {m} sums to {row}")));
            }
        }
        if let Some(nn) = col.iter().position(|&s| s != 1) {
            return Err(Error::InvalidAssignment(format!("column {nn} sums to {}", col[nn])));
        }
        Assignment::new(pairing, users, n_users)
    }
}

/// Per-path powers indexed by first-hop channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerAllocation {
    pub ps: Vec<f64>,
    pub pr: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(n: usize) -> PowerAllocation {
        PowerAllocation { ps: vec![0.0; n], pr: vec![0.0; n] }
    }

    /// `(sum ps, sum pr, sum ps + pr)`.
    pub fn totals(&self) -> [f64; 3] {
        let s: f64 = self.ps.iter().sum();
        let r: f64 = self.pr.iter().sum();
        [s, r, s + r]
    }

    pub fn is_feasible(&self, scenario: &Scenario) -> bool {
        let t = self.totals();
        self.ps.iter().chain(&self.pr).all(|&p| p >= 0.0 && p.is_finite())
            && t.iter()
                .zip(scenario.limits())
                .all(|(&used, lim)| used <= lim * (1.0 + FEAS_TOL))
    }

    /// Largest `s <= 1` such that scaling every power by `s` meets all limits.
    pub fn feasibility_scale(&self, scenario: &Scenario) -> f64 {
        let t = self.totals();
        let mut s = 1.0f64;
        for (used, lim) in t.into_iter().zip(scenario.limits()) {
            if used > lim * (1.0 + FEAS_TOL) {
                s = s.min(lim / used);
            }
        }
        s
    }

    pub fn scale(&mut self, s: f64) {
        self.ps.iter_mut().chain(self.pr.iter_mut()).for_each(|p| *p *= s);
    }
}

/// Lagrange multipliers of the source, relay and total power constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub ls: f64,
    pub lr: f64,
    pub lt: f64,
}

impl Multipliers {
    pub fn new(ls: f64, lr: f64, lt: f64) -> Multipliers {
        Multipliers { ls, lr, lt }
    }

    pub fn from_array(v: [f64; 3]) -> Multipliers {
        Multipliers { ls: v[0], lr: v[1], lt: v[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.ls, self.lr, self.lt]
    }

    /// Price of one unit of source power.
    pub fn source_price(self) -> f64 {
        self.ls + self.lt
    }

    /// Price of one unit of relay power.
    pub fn relay_price(self) -> f64 {
        self.lr + self.lt
    }

    pub fn norm(self) -> f64 {
        (self.ls * self.ls + self.lr * self.lr + self.lt * self.lt).sqrt()
    }

    /// `lambda . (p_s, p_r, p_t)`.
    pub fn dot_limits(self, scenario: &Scenario) -> f64 {
        self.ls * scenario.p_s + self.lr * scenario.p_r + self.lt * scenario.p_t
    }
}

/// Which multiplier region the reported dual optimum came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionUsed {
    R1,
    R2,
    Both,
    NonNeg,
}

impl fmt::Display for RegionUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionUsed::R1 => "r1",
            RegionUsed::R2 => "r2",
            RegionUsed::Both => "both",
            RegionUsed::NonNeg => "non_neg",
        })
    }
}

/// Convergence diagnostics of a dual solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualDiagnostics {
    pub lambda_max: f64,
    /// Largest `|theta| / theta_max` over all iterates of all region solves.
    pub max_theta_ratio: f64,
    /// Whether the final multipliers satisfy the region consistency check.
    pub region_consistent: bool,
    /// Smallest `g(lambda) - primal` over the iterates evaluated on the
    /// original instance.
    pub min_weak_duality_slack: f64,
    /// Set when the relative duality gap exceeds `1e-3`.
    pub gap_flag: bool,
    /// Factor applied to the dual-recovered powers to restore feasibility.
    pub repair_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub assignment: Assignment,
    pub powers: PowerAllocation,
    pub primal_value: f64,
    /// Dual objective at the reported multipliers; `None` for heuristics
    /// that produce no dual certificate.
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub region_used: Option<RegionUsed>,
    pub per_path_rates: Vec<f64>,
    pub multipliers: Option<Multipliers>,
    pub converged: bool,
    pub diagnostics: Option<DualDiagnostics>,
}
