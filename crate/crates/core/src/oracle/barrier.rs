//! Log-barrier interior-point solver for the DF power problem at a fixed
//! assignment, written against the lifted form
//!
//! ```text
//! maximize   sum_j (w_j / 2) log2(1 + z_j)
//! subject to z_j <= a_j ps_j,  z_j <= c_j ps_j + b_j pr_j,
//!            sum ps <= p_s, sum pr <= p_r, sum (ps + pr) <= p_t,
//!            ps, pr, z >= 0.
//! ```
//!
//! Every constraint is linear, so the barrier Hessian is a sum of rank-one
//! terms plus a diagonal from the objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One selected path as seen by the solver.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LiftedPath {
    pub w: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

const MU: f64 = 10.0;
const NEWTON_TOL: f64 = 1e-11;
const MAX_NEWTON: usize = 400;
const MAX_TOTAL_NEWTON: usize = 6000;
const GAP_TOL: f64 = 1e-9;

struct Layout {
    /// Index of `ps`, `pr` (if the path can relay) and `z` per path.
    vars: Vec<(usize, Option<usize>, usize)>,
    dim: usize,
}

/// Returns `(ps, pr)` per path.
pub(crate) fn solve(paths: &[LiftedPath], limits: [f64; 3]) -> Result<Vec<(f64, f64)>> {
    let active: Vec<usize> = (0..paths.len())
        .filter(|&j| {
            let p = paths[j];
            p.w > 0.0 && p.a > 0.0 && (p.b > 0.0 || p.c > 0.0)
        })
        .collect();
    let mut out = vec![(0.0, 0.0); paths.len()];
    if active.is_empty() {
        return Ok(out);
    }

    let mut vars = Vec::new();
    let mut dim = 0;
    for &j in &active {
        let ps = dim;
        dim += 1;
        let pr = if paths[j].b > 0.0 {
            dim += 1;
            Some(dim - 1)
        } else {
            None
        };
        let z = dim;
        dim += 1;
        vars.push((ps, pr, z));
    }
    let layout = Layout { vars, dim };
    let any_relay = layout.vars.iter().any(|v| v.1.is_some());

    // Constraints h + G x >= 0.
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    for (&j, &(ps, pr, z)) in active.iter().zip(&layout.vars) {
        let p = paths[j];
        rows.push((0.0, vec![(ps, 1.0)]));
        rows.push((0.0, vec![(z, 1.0)]));
        rows.push((0.0, vec![(ps, p.a), (z, -1.0)]));
        let mut second = vec![(ps, p.c), (z, -1.0)];
        if let Some(pr) = pr {
            rows.push((0.0, vec![(pr, 1.0)]));
            second.push((pr, p.b));
        }
        rows.push((0.0, second));
    }
    let all_ps: Vec<(usize, f64)> = layout.vars.iter().map(|v| (v.0, -1.0)).collect();
    let all_pr: Vec<(usize, f64)> = layout.vars.iter().filter_map(|v| v.1.map(|i| (i, -1.0))).collect();
    rows.push((limits[0], all_ps.clone()));
    if any_relay {
        rows.push((limits[1], all_pr.clone()));
    }
    rows.push((limits[2], all_ps.into_iter().chain(all_pr).collect()));
    let n_con = rows.len() as f64;

    // Strictly interior start.
    let share = active.len() as f64 * 4.0;
    let mut x = DVector::<f64>::zeros(layout.dim);
    for (&j, &(ps, pr, z)) in active.iter().zip(&layout.vars) {
        let p = paths[j];
        x[ps] = limits[0].min(limits[2]) / share;
        let mut relayed = p.c * x[ps];
        if let Some(pr) = pr {
            x[pr] = limits[1].min(limits[2]) / share;
            relayed += p.b * x[pr];
        }
        x[z] = 0.5 * (p.a * x[ps]).min(relayed);
    }

    let weights: Vec<(usize, f64)> =
        active.iter().zip(&layout.vars).map(|(&j, v)| (v.2, paths[j].w)).collect();
    let objective = |x: &DVector<f64>| -> f64 {
        weights.iter().map(|&(z, w)| 0.5 * w * x[z].ln_1p()).sum::<f64>() / std::f64::consts::LN_2
    };
    let slacks = |x: &DVector<f64>| -> Option<Vec<f64>> {
        let s: Vec<f64> = rows
            .iter()
            .map(|(h, g)| h + g.iter().map(|&(i, v)| v * x[i]).sum::<f64>())
            .collect();
        s.iter().all(|&v| v > 0.0).then_some(s)
    };
    let barrier = |x: &DVector<f64>, t: f64| -> f64 {
        match slacks(x) {
            Some(s) => -t * objective(x) - s.iter().map(|v| v.ln()).sum::<f64>(),
            None => f64::INFINITY,
        }
    };

    let mut t = 1.0;
    let mut newton_total = 0;
    loop {
        for _ in 0..MAX_NEWTON {
            newton_total += 1;
            if newton_total > MAX_TOTAL_NEWTON {
                return Err(Error::OracleNonConvergence(format!(
                    "{MAX_TOTAL_NEWTON} Newton steps exhausted at t = {t:e}"
                )));
            }
            let s = slacks(&x).expect("iterate stays interior");
            let mut grad = DVector::<f64>::zeros(layout.dim);
            let mut hess = DMatrix::<f64>::zeros(layout.dim, layout.dim);
            for &(z, w) in &weights {
                let d = w / (std::f64::consts::LN_2 * 2.0 * (1.0 + x[z]));
                grad[z] -= t * d;
                hess[(z, z)] += t * d / (1.0 + x[z]);
            }
            for ((_, g), &sv) in rows.iter().zip(&s) {
                for &(i, vi) in g {
                    grad[i] -= vi / sv;
                    for &(k, vk) in g {
                        hess[(i, k)] += vi * vk / (sv * sv);
                    }
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    let ridge = 1e-12 * hess.diagonal().amax().max(1.0);
                    let mut h = hess;
                    for i in 0..layout.dim {
                        h[(i, i)] += ridge;
                    }
                    h.cholesky()
                        .ok_or_else(|| Error::OracleNonConvergence("singular barrier Hessian".into()))?
                        .solve(&(-&grad))
                }
            };
            let decrement = -grad.dot(&step);
            if decrement * 0.5 <= NEWTON_TOL {
                break;
            }
            let f0 = barrier(&x, t);
            let mut alpha = 1.0;
            loop {
                let cand = &x + &step * alpha;
                if barrier(&cand, t) <= f0 - 0.25 * alpha * decrement {
                    x = cand;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-20 {
                    break;
                }
            }
            if alpha < 1e-20 {
                break;
            }
        }
        if n_con / t <= GAP_TOL * objective(&x).abs().max(1.0) {
            break;
        }
        t *= MU;
    }

    for (&j, &(ps, pr, _)) in active.iter().zip(&layout.vars) {
        out[j] = (x[ps], pr.map_or(0.0, |i| x[i]));
    }
    Ok(out)
}
