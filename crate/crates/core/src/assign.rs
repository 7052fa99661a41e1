//! Channel pairing and user assignment at fixed multipliers.
//!
//! Path profits do not depend on the assignment, so the best user of every
//! channel pair is found independently and the pairing reduces to a linear
//! assignment problem on the per-pair maxima.

use crate::error::Result;
use crate::model::{Assignment, Multipliers, Scenario};
use crate::power::{path_power, PathPowerSolution};

/// How second-hop channels are paired with first-hop channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairingMode {
    /// Optimal pairing by the Hungarian algorithm.
    #[default]
    Optimal,
    /// First-hop channel `m` always forwards on second-hop channel `m`.
    Identity,
}

/// Path profits `A[m][n][k]` and their per-pair maxima.
#[derive(Clone, Debug)]
pub struct ProfitTensor {
    n: usize,
    k: usize,
    paths: Vec<PathPowerSolution>,
    reduced: Vec<f64>,
    best_user: Vec<usize>,
}

impl ProfitTensor {
    pub fn build(scenario: &Scenario, multipliers: &Multipliers) -> Result<ProfitTensor> {
        let (n, k) = (scenario.n_channels, scenario.n_users);
        let mut paths = Vec::with_capacity(n * n * k);
        let mut reduced = Vec::with_capacity(n * n);
        let mut best_user = Vec::with_capacity(n * n);
        let mut slice = vec![0.0; k];
        for m in 0..n {
            for nn in 0..n {
                for (kk, v) in slice.iter_mut().enumerate() {
                    let s = path_power(
                        scenario.strategy,
                        scenario.w[kk],
                        scenario.a[m],
                        scenario.b[nn][kk],
                        scenario.c[m][kk],
                        multipliers,
                    )?;
                    *v = s.lagrangian_unit;
                    paths.push(s);
                }
                let (u, v) = best_user_per_pair(&slice);
                best_user.push(u);
                reduced.push(v);
            }
        }
        Ok(ProfitTensor { n, k, paths, reduced, best_user })
    }

    pub fn n_channels(&self) -> usize {
        self.n
    }

    pub fn n_users(&self) -> usize {
        self.k
    }

    pub fn value(&self, m: usize, n: usize, k: usize) -> f64 {
        self.paths[(m * self.n + n) * self.k + k].lagrangian_unit
    }

    pub fn path(&self, m: usize, n: usize, k: usize) -> &PathPowerSolution {
        &self.paths[(m * self.n + n) * self.k + k]
    }

    /// `max_k A[m][n][k]`.
    pub fn reduced(&self, m: usize, n: usize) -> f64 {
        self.reduced[m * self.n + n]
    }

    /// Smallest maximizing user of pair `(m, n)`.
    pub fn best_user(&self, m: usize, n: usize) -> usize {
        self.best_user[m * self.n + n]
    }

    pub fn reduced_matrix(&self) -> Vec<Vec<f64>> {
        self.reduced.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Best assignment under the given pairing rule and its total profit.
    pub fn assign(&self, mode: PairingMode) -> (Assignment, f64) {
        let pairing = match mode {
            PairingMode::Optimal => hungarian_max(&self.reduced_matrix()).0,
            PairingMode::Identity => (0..self.n).collect(),
        };
        let users = pairing.iter().enumerate().map(|(m, &nn)| self.best_user(m, nn)).collect();
        let total = pairing.iter().enumerate().map(|(m, &nn)| self.reduced(m, nn)).sum();
        (Assignment { pairing, users }, total)
    }
}

/// Argmax with smallest-index tie-breaking.
pub fn best_user_per_pair(slice: &[f64]) -> (usize, f64) {
    assert!(!slice.is_empty(), "at least one user required");
    let mut best = (0, slice[0]);
    for (k, &v) in slice.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

/// Maximum-weight perfect matching on a square matrix.
///
/// Returns `perm` with `perm[row] = column` and the total
/// `sum profit[row][perm[row]]`. Shortest augmenting paths with row and
/// column potentials, `O(n^3)`.
pub fn hungarian_max(profit: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = profit.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let top = profit.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let cost = |i: usize, j: usize| top - profit[i][j];

    // 1-based rows and columns; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let total = perm.iter().enumerate().map(|(i, &j)| profit[i][j]).sum();
    (perm, total)
}

/// Optimal assignment at `multipliers` and its total path profit.
pub fn assign_channels(scenario: &Scenario, multipliers: &Multipliers) -> Result<(Assignment, f64)> {
    Ok(ProfitTensor::build(scenario, multipliers)?.assign(PairingMode::Optimal))
}
