//! Shared fixtures for the solver benchmarks.

use relayopt_core::sim::{db_to_linear, generate_channels, pt_from_nominal_snr, random_scenario, Geometry};
use relayopt_core::{Assignment, Scenario, Strategy};

/// Random instance with exponential gains.
pub fn random(n: usize, k: usize, strategy: Strategy) -> Scenario {
    random_scenario(n, k, strategy, 0xBE7C)
}

/// Frequency-selective instance on the arc layout at moderate SNR.
pub fn faded(n: usize, k: usize) -> Scenario {
    let geom = Geometry::arc(1.0, 3.0, k, 3.0, 1.0);
    let gains = generate_channels(&geom, n, 4, 7);
    let w = vec![1.0 / k as f64; k];
    let p = pt_from_nominal_snr(db_to_linear(4.0), &geom, n);
    Scenario {
        n_channels: n,
        n_users: k,
        a: gains.a,
        b: gains.b,
        c: gains.c,
        w,
        p_s: p,
        p_r: p,
        p_t: p,
        strategy: Strategy::Df,
    }
}

/// Identity pairing with users assigned round robin.
pub fn round_robin(n: usize, k: usize) -> Assignment {
    Assignment::identity(n, (0..n).map(|m| m % k).collect())
}
