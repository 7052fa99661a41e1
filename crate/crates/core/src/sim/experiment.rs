//! Monte Carlo experiments over a one-dimensional parameter grid.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_scheme, Scheme};
use crate::error::{Error, Result};
use crate::model::{Scenario, Strategy};
use crate::sim::channel::{db_to_linear, generate_trial_channels, pt_from_nominal_snr, Geometry};

/// Where the nodes are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Users evenly spread on a half-circle arc around the relay.
    Arc { d_sr: f64, d_rd: f64 },
    /// Users clustered around a point at distance `d_sd`; relay on the
    /// source-cluster axis at `relay_fraction * d_sd`.
    Cluster {
        d_sd: f64,
        relay_fraction: f64,
        /// Defaults to `0.05 * d_sd`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cluster_radius: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `1/K` each.
    Equal,
    /// `1` each, not normalized.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Rule(WeightRule),
    Explicit(Vec<f64>),
}

impl Weights {
    pub fn for_users(&self, k: usize) -> Result<Vec<f64>> {
        match self {
            Weights::Rule(WeightRule::Equal) => Ok(vec![1.0 / k as f64; k]),
            Weights::Rule(WeightRule::Unit) => Ok(vec![1.0; k]),
            Weights::Explicit(w) if w.len() == k => Ok(w.clone()),
            Weights::Explicit(w) => Err(Error::InvalidConfig(format!(
                "{} explicit weights for {k} users",
                w.len()
            ))),
        }
    }
}

/// How the total budget maps onto the individual limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSplit {
    /// Only the total constraint binds: `p_s = p_r = p_t`.
    TotalOnly,
    /// Only individual constraints: `p_s = p_r = p_t / 2`.
    IndividualOnly,
    /// Both: `p_s = p_r = 2 p_t / 3`.
    Both,
}

impl PowerSplit {
    pub fn limits(self, p_t: f64) -> (f64, f64, f64) {
        match self {
            PowerSplit::TotalOnly => (p_t, p_t, p_t),
            PowerSplit::IndividualOnly => (p_t / 2.0, p_t / 2.0, p_t),
            PowerSplit::Both => (2.0 * p_t / 3.0, 2.0 * p_t / 3.0, p_t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SnrDb,
    NUsers,
    RelayFraction,
}

impl SweepParam {
    pub fn id(self) -> &'static str {
        match self {
            SweepParam::SnrDb => "snr_db",
            SweepParam::NUsers => "n_users",
            SweepParam::RelayFraction => "relay_fraction",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

fn default_kappa() -> f64 {
    3.0
}
fn default_sigma2() -> f64 {
    1.0
}
fn default_channels() -> usize {
    16
}
fn default_taps() -> usize {
    4
}
fn default_strategy() -> Strategy {
    Strategy::Df
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub placement: Placement,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_channels")]
    pub n_channels: usize,
    #[serde(default = "default_taps")]
    pub n_taps: usize,
    /// Ignored when sweeping the user count.
    pub n_users: usize,
    pub weights: Weights,
    /// Nominal SNR in dB; ignored when sweeping it.
    pub snr_db: f64,
    pub sweep: Sweep,
    pub power_split: PowerSplit,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
}

/// Setting of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    pub geometry: Geometry,
    pub weights: Vec<f64>,
    pub p_s: f64,
    pub p_r: f64,
    pub p_t: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.sweep.values.is_empty() {
            return bad("sweep grid is empty");
        }
        if self.schemes.is_empty() {
            return bad("no schemes requested");
        }
        if self.n_channels == 0 || self.n_taps == 0 {
            return bad("n_channels and n_taps must be positive");
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) || !self.snr_db.is_finite() {
            return bad("non-finite grid value or SNR");
        }
        match self.sweep.param {
            SweepParam::NUsers => {
                if self.sweep.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
                    return bad("user counts must be positive integers");
                }
            }
            SweepParam::RelayFraction => {
                if !matches!(self.placement, Placement::Cluster { .. }) {
                    return bad("relay_fraction sweeps need a cluster placement");
                }
            }
            SweepParam::SnrDb => {}
        }
        for &v in &self.sweep.values {
            let gp = self.grid_point(v)?;
            gp.geometry.validate()?;
            if gp.weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
                return bad("weights must be finite and nonnegative");
            }
            if gp.weights.iter().all(|&w| w == 0.0) {
                return bad("at least one weight must be positive");
            }
        }
        Ok(())
    }

    pub fn grid_point(&self, value: f64) -> Result<GridPoint> {
        let k = match self.sweep.param {
            SweepParam::NUsers => value as usize,
            _ => self.n_users,
        };
        if k == 0 {
            return Err(Error::InvalidConfig("n_users must be positive".into()));
        }
        let geometry = match (&self.placement, self.sweep.param) {
            (Placement::Arc { d_sr, d_rd }, _) => Geometry::arc(*d_sr, *d_rd, k, self.kappa, self.sigma2),
            (Placement::Cluster { d_sd, relay_fraction, cluster_radius }, p) => {
                let f = if p == SweepParam::RelayFraction { value } else { *relay_fraction };
                let r = cluster_radius.unwrap_or(0.05 * d_sd);
                Geometry::cluster(*d_sd, f, r, k, self.kappa, self.sigma2)
            }
        };
        let snr_db = if self.sweep.param == SweepParam::SnrDb { value } else { self.snr_db };
        let p_t = pt_from_nominal_snr(db_to_linear(snr_db), &geometry, self.n_channels);
        let (p_s, p_r, p_t) = self.power_split.limits(p_t);
        Ok(GridPoint { value, weights: self.weights.for_users(k)?, geometry, p_s, p_r, p_t })
    }

    /// Scenario for one grid point and trial.
    pub fn scenario(&self, gp: &GridPoint, trial: u64) -> Scenario {
        let ch = generate_trial_channels(&gp.geometry, self.n_channels, self.n_taps, self.master_seed, trial);
        Scenario {
            n_channels: self.n_channels,
            n_users: gp.weights.len(),
            a: ch.a,
            b: ch.b,
            c: ch.c,
            w: gp.weights.clone(),
            p_s: gp.p_s,
            p_r: gp.p_r,
            p_t: gp.p_t,
            strategy: self.strategy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub grid_param_name: String,
    pub grid_value: f64,
    pub scheme: Scheme,
    pub mean_rate: f64,
    pub stderr: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
}

/// Per-grid-point record of the run conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub value: f64,
    pub geometry: Geometry,
    pub mean_d_sd: f64,
    pub p_s: f64,
    pub p_r: f64,
    pub p_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub config: ExperimentConfig,
    pub user_placement: String,
    pub tap_profile: String,
    pub rng: String,
    pub grid: Vec<GridMeta>,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// Normalized rate per `[grid][scheme][trial]`; `None` on failure.
    pub samples: Vec<Vec<Vec<Option<f64>>>>,
    pub meta: ExperimentMeta,
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv(text: &str) -> Result<Vec<ResultRow>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    pub fn row(&self, value: f64, scheme: Scheme) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.grid_value == value && r.scheme == scheme)
    }
}

fn placement_note(cfg: &ExperimentConfig) -> String {
    match cfg.placement {
        Placement::Arc { .. } => {
            "users evenly spaced on the half-circle arc facing away from the source, angles -90 + 180 (k + 1/2) / K degrees from the source-relay axis".into()
        }
        Placement::Cluster { d_sd, cluster_radius, .. } => format!(
            "users evenly spaced on a circle of radius {} around the cluster center at distance {d_sd} from the source",
            cluster_radius.unwrap_or(0.05 * d_sd)
        ),
    }
}

/// Runs every trial on the current rayon pool. Results do not depend on
/// the number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let grid: Vec<GridPoint> =
        cfg.sweep.values.iter().map(|&v| cfg.grid_point(v)).collect::<Result<_>>()?;
    let n = cfg.n_channels as f64;
    // [trial][grid][scheme]
    let per_trial: Vec<Vec<Vec<Option<f64>>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            grid.iter()
                .map(|gp| {
                    let s = cfg.scenario(gp, t);
                    cfg.schemes
                        .iter()
                        .map(|&sch| solve_scheme(&s, sch).ok().map(|r| r.primal_value / n))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for (g, gp) in grid.iter().enumerate() {
        let mut by_scheme = Vec::new();
        for (si, &scheme) in cfg.schemes.iter().enumerate() {
            let col: Vec<Option<f64>> = per_trial.iter().map(|t| t[g][si]).collect();
            let ok: Vec<f64> = col.iter().flatten().copied().collect();
            let cnt = ok.len();
            let mean = if cnt > 0 { ok.iter().sum::<f64>() / cnt as f64 } else { f64::NAN };
            let stderr = if cnt > 1 {
                let var = ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (cnt - 1) as f64;
                (var / cnt as f64).sqrt()
            } else {
                0.0
            };
            rows.push(ResultRow {
                grid_param_name: cfg.sweep.param.id().to_string(),
                grid_value: gp.value,
                scheme,
                mean_rate: mean,
                stderr,
                trials_ok: cnt,
                trials_failed: col.len() - cnt,
            });
            by_scheme.push(col);
        }
        samples.push(by_scheme);
    }
    let meta = ExperimentMeta {
        config: cfg.clone(),
        user_placement: placement_note(cfg),
        tap_profile: format!("{} equal-power taps, {}-point DFT", cfg.n_taps, cfg.n_channels),
        rng: "ChaCha8 keyed by (master_seed, trial, link); link 0 source-relay, 1+2k relay-user k, 2+2k source-user k".into(),
        grid: grid
            .iter()
            .map(|gp| GridMeta {
                value: gp.value,
                mean_d_sd: gp.geometry.mean_d_sd(),
                geometry: gp.geometry.clone(),
                p_s: gp.p_s,
                p_r: gp.p_r,
                p_t: gp.p_t,
            })
            .collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(ResultTable { rows, samples, meta })
}
