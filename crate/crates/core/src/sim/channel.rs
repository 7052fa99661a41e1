//! Node placement and frequency-selective channel generation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible node distance.
pub const D_MIN: f64 = 1e-3;

/// Node positions in the plane. The source sits at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub relay: [f64; 2],
    pub users: Vec<[f64; 2]>,
    /// Pathloss exponent.
    pub kappa: f64,
    /// Noise power per channel at every receiver.
    pub sigma2: f64,
}

/// Angles of `k` users spread evenly over the half circle facing away
/// from the source, measured from the source-relay axis.
pub fn arc_angles(k: usize) -> Vec<f64> {
    (0..k).map(|i| -PI / 2.0 + PI * (i as f64 + 0.5) / k as f64).collect()
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

impl Geometry {
    /// Users on a half-circle arc of radius `d_rd` around the relay.
    pub fn arc(d_sr: f64, d_rd: f64, k: usize, kappa: f64, sigma2: f64) -> Geometry {
        let users = arc_angles(k)
            .into_iter()
            .map(|t| [d_sr + d_rd * t.cos(), d_rd * t.sin()])
            .collect();
        Geometry { relay: [d_sr, 0.0], users, kappa, sigma2 }
    }

    /// Users on a small circle of `radius` around a point at distance
    /// `d_sd` from the source, relay on the axis at `fraction * d_sd`.
    pub fn cluster(
        d_sd: f64,
        fraction: f64,
        radius: f64,
        k: usize,
        kappa: f64,
        sigma2: f64,
    ) -> Geometry {
        let users = (0..k)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / k as f64;
                [d_sd + radius * t.cos(), radius * t.sin()]
            })
            .collect();
        Geometry { relay: [fraction * d_sd, 0.0], users, kappa, sigma2 }
    }

    pub fn d_sr(&self) -> f64 {
        dist([0.0, 0.0], self.relay)
    }

    pub fn d_rd(&self, k: usize) -> f64 {
        dist(self.relay, self.users[k])
    }

    pub fn d_sd(&self, k: usize) -> f64 {
        dist([0.0, 0.0], self.users[k])
    }

    /// Mean source-user distance.
    pub fn mean_d_sd(&self) -> f64 {
        (0..self.users.len()).map(|k| self.d_sd(k)).sum::<f64>() / self.users.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.users.is_empty() {
            return bad("geometry has no users".into());
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("pathloss exponent must be positive, got {}", self.kappa));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("noise power must be positive, got {}", self.sigma2));
        }
        let mut ds = vec![self.d_sr()];
        for k in 0..self.users.len() {
            ds.push(self.d_rd(k));
            ds.push(self.d_sd(k));
        }
        match ds.iter().find(|d| !(**d >= D_MIN && d.is_finite())) {
            Some(d) => bad(format!("node distance {d} below the minimum {D_MIN}")),
            None => Ok(()),
        }
    }
}

/// Normalized channel gains of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGains {
    /// Source-relay, per channel.
    pub a: Vec<f64>,
    /// Relay-user, `[channel][user]`.
    pub b: Vec<Vec<f64>>,
    /// Source-user, `[channel][user]`.
    pub c: Vec<Vec<f64>>,
}

/// Independent stream for one link of one trial. The ChaCha key is the
/// concatenation of the three identifiers, so streams never collide.
pub fn link_rng(master_seed: u64, trial: u64, link: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&link.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const LINK_SR: u64 = 0;

fn link_ru(k: usize) -> u64 {
    1 + 2 * k as u64
}

fn link_su(k: usize) -> u64 {
    2 + 2 * k as u64
}

/// `|H[m]|^2` of an `n_taps` channel with taps of power `1/n_taps`,
/// evaluated on an `n`-point DFT grid.
pub fn fading_profile<R: Rng>(rng: &mut R, n: usize, n_taps: usize) -> Vec<f64> {
    let sd = (0.5 / n_taps as f64).sqrt();
    let taps: Vec<(f64, f64)> = (0..n_taps)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (sd * re, sd * im)
        })
        .collect();
    (0..n)
        .map(|m| {
            let (mut re, mut im) = (0.0, 0.0);
            for (l, &(tr, ti)) in taps.iter().enumerate() {
                let phase = -2.0 * PI * ((l * m) % n) as f64 / n as f64;
                let (s, c) = phase.sin_cos();
                re += tr * c - ti * s;
                im += tr * s + ti * c;
            }
            re * re + im * im
        })
        .collect()
}

/// Gains of trial `trial` under `master_seed`.
pub fn generate_trial_channels(
    geometry: &Geometry,
    n_channels: usize,
    n_taps: usize,
    master_seed: u64,
    trial: u64,
) -> ChannelGains {
    let k = geometry.users.len();
    let loss = |d: f64| d.powf(-geometry.kappa) / geometry.sigma2;
    let profile = |link| fading_profile(&mut link_rng(master_seed, trial, link), n_channels, n_taps);
    let sr_loss = loss(geometry.d_sr());
    let a = profile(LINK_SR).into_iter().map(|g| g * sr_loss).collect();
    let mut b = vec![vec![0.0; k]; n_channels];
    let mut c = vec![vec![0.0; k]; n_channels];
    for u in 0..k {
        let (lr, ls) = (loss(geometry.d_rd(u)), loss(geometry.d_sd(u)));
        for (m, g) in profile(link_ru(u)).into_iter().enumerate() {
            b[m][u] = g * lr;
        }
        for (m, g) in profile(link_su(u)).into_iter().enumerate() {
            c[m][u] = g * ls;
        }
    }
    ChannelGains { a, b, c }
}

pub fn generate_channels(
    geometry: &Geometry,
    n_channels: usize,
    n_taps: usize,
    seed: u64,
) -> ChannelGains {
    generate_trial_channels(geometry, n_channels, n_taps, seed, 0)
}

/// Total power giving the requested nominal SNR (linear).
pub fn pt_from_nominal_snr(snr_nom: f64, geometry: &Geometry, n_channels: usize) -> f64 {
    snr_nom * 2.0 * geometry.sigma2 * n_channels as f64 * geometry.mean_d_sd().powf(geometry.kappa)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: impl Iterator<Item = f64>) -> f64 {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    }

    #[test]
    fn arc_geometry() {
        let g = Geometry::arc(1.0, 3.0, 4, 3.0, 1.0);
        assert!((g.d_sr() - 1.0).abs() < 1e-15);
        for k in 0..4 {
            assert!((g.d_rd(k) - 3.0).abs() < 1e-12);
            let t = arc_angles(4)[k];
            let law = (1.0f64 + 9.0 + 6.0 * t.cos()).sqrt();
            assert!((g.d_sd(k) - law).abs() < 1e-12);
            assert!(g.d_sd(k) > 3.0);
        }
        assert!((g.d_sd(0) - g.d_sd(3)).abs() < 1e-12);
        g.validate().unwrap();
    }

    #[test]
    fn cluster_geometry() {
        let g = Geometry::cluster(2.0, 0.25, 0.1, 4, 3.0, 1.0);
        assert!((g.d_sr() - 0.5).abs() < 1e-15);
        for k in 0..4 {
            assert!((g.d_sd(k) - 2.0).abs() <= 0.1 + 1e-12);
            assert!((g.d_rd(k) - 1.5).abs() <= 0.1 + 1e-12);
        }
        assert!(Geometry::cluster(2.0, 0.0, 0.1, 4, 3.0, 1.0).validate().is_err());
    }

    #[test]
    fn bad_geometry_rejected() {
        assert!(Geometry::arc(1.0, 3.0, 4, 0.0, 1.0).validate().is_err());
        assert!(Geometry::arc(1.0, 3.0, 4, 3.0, -1.0).validate().is_err());
        assert!(Geometry::arc(1e-4, 3.0, 4, 3.0, 1.0).validate().is_err());
        assert!(Geometry::arc(1.0, 3.0, 0, 3.0, 1.0).validate().is_err());
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let g = Geometry::arc(1.0, 3.0, 3, 3.0, 1.0);
        assert_eq!(generate_channels(&g, 16, 4, 42), generate_channels(&g, 16, 4, 42));
        assert_ne!(generate_channels(&g, 16, 4, 42), generate_channels(&g, 16, 4, 43));
        let t1 = generate_trial_channels(&g, 16, 4, 42, 1);
        assert_ne!(generate_channels(&g, 16, 4, 42), t1);
    }

    #[test]
    fn user_streams_do_not_depend_on_user_count() {
        let g2 = Geometry::arc(1.0, 3.0, 2, 3.0, 1.0);
        let mut g3 = g2.clone();
        g3.users.push([5.0, 5.0]);
        let (x, y) = (generate_trial_channels(&g2, 8, 4, 5, 2), generate_trial_channels(&g3, 8, 4, 5, 2));
        assert_eq!(x.a, y.a);
        for m in 0..8 {
            assert_eq!(x.b[m][..], y.b[m][..2]);
            assert_eq!(x.c[m][..], y.c[m][..2]);
        }
    }

    #[test]
    fn mean_gain_follows_pathloss() {
        let g = Geometry::arc(1.5, 3.0, 1, 3.0, 2.0);
        let trials = 100_000u64;
        let mut acc = vec![0.0; 4];
        for t in 0..trials {
            let ch = generate_trial_channels(&g, 4, 4, 7, t);
            for (s, v) in acc.iter_mut().zip(&ch.a) {
                *s += v;
            }
        }
        let expected = 1.5f64.powf(-3.0) / 2.0;
        for s in acc {
            let m = s / trials as f64;
            assert!((m - expected).abs() <= 0.02 * expected, "{m} vs {expected}");
        }
    }

    #[test]
    fn doubling_distances_divides_gain_by_eight() {
        let near = Geometry::arc(1.0, 2.0, 2, 3.0, 1.0);
        let far = Geometry::arc(2.0, 4.0, 2, 3.0, 1.0);
        let stat = |g: &Geometry| {
            mean((0..20_000u64).map(|t| {
                let ch = generate_trial_channels(g, 4, 4, 11, t);
                ch.a[0] + ch.b[1][0] + ch.c[2][1]
            }))
        };
        let ratio = stat(&near) / stat(&far);
        assert!((ratio - 8.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn fading_profile_has_unit_mean_power() {
        let mut rng = link_rng(1, 2, 3);
        let m = mean((0..20_000).flat_map(|_| fading_profile(&mut rng, 8, 4)));
        assert!((m - 1.0).abs() < 0.02, "{m}");
        let mut rng = link_rng(1, 2, 3);
        let flat = fading_profile(&mut rng, 8, 1);
        assert!(flat.iter().all(|&v| (v - flat[0]).abs() < 1e-12));
    }

    #[test]
    fn nominal_snr_inversion() {
        let mut g = Geometry::arc(1.0, 3.0, 1, 3.0, 1.0);
        g.users = vec![[1.0, 0.0]];
        assert!((pt_from_nominal_snr(1.0, &g, 16) - 32.0).abs() < 1e-12);
        assert!((pt_from_nominal_snr(2.0, &g, 16) - 64.0).abs() < 1e-12);
        g.users = vec![[2.0, 0.0]];
        assert!((pt_from_nominal_snr(1.0, &g, 16) - 256.0).abs() < 1e-9);
        assert!((db_to_linear(0.0) - 1.0).abs() < 1e-15);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
    }
}
