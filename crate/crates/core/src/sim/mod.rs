//! Channel generation and Monte Carlo experiments.

mod channel;
mod experiment;

pub use channel::*;
pub use experiment::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::model::{Scenario, Strategy};

/// Random instance with unit-mean exponential gains, power limits
/// uniform in `[0.5, 4]` and normalized weights drawn from `(0.1, 1)`.
pub fn random_scenario(n: usize, k: usize, strategy: Strategy, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exp = || -> f64 { Exp1.sample(&mut rng) };
    let a = (0..n).map(|_| exp()).collect();
    let b = (0..n).map(|_| (0..k).map(|_| exp()).collect()).collect();
    let c = (0..n).map(|_| (0..k).map(|_| exp()).collect()).collect();
    let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let mut limit = || rng.random_range(0.5..=4.0);
    Scenario {
        n_channels: n,
        n_users: k,
        a,
        b,
        c,
        w,
        p_s: limit(),
        p_r: limit(),
        p_t: limit(),
        strategy,
    }
}
