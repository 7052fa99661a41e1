//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line to
//! stderr (bypassing output capture) and then asserts.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use relayopt_cli::{cmd_experiment, presets, ExperimentArgs};
use relayopt_core::dual::lambda_max;
use relayopt_core::oracle::{brute_force_solve, DEFAULT_BUDGET};
use relayopt_core::power::{af_path_power, df_path_power};
use relayopt_core::rates::{af_rate_upper, df_rate};
use relayopt_core::sim::{random_scenario, ExperimentConfig, ResultTable, Sweep, SweepParam, Weights, WeightRule};
use relayopt_core::{dcdm_solve, solve_scheme, Multipliers, Scenario, Scheme, SolveResult, Strategy, ALPHA};

fn report(id: &str, name: &str, pass: bool, detail: &str, start: Instant) {
    let line = format!(
        "[acceptance] {id} {:<4} {name}: {detail} ({:.1}s)\n",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

/// Bound checks shared by the solver suites.
#[derive(Default)]
struct BoundTally {
    instances: usize,
    lambda_violations: usize,
    theta_violations: usize,
    converged: usize,
    region_violations: usize,
}

impl BoundTally {
    fn add(&mut self, s: &Scenario, r: &SolveResult) {
        self.instances += 1;
        let d = r.diagnostics.as_ref().expect("joint solves carry diagnostics");
        let l = r.multipliers.expect("joint solves carry multipliers");
        if l.norm() > lambda_max(s) * (1.0 + 1e-12) {
            self.lambda_violations += 1;
        }
        if d.max_theta_ratio > 1.0 + 1e-12 {
            self.theta_violations += 1;
        }
        if r.converged {
            self.converged += 1;
            if !d.region_consistent {
                self.region_violations += 1;
            }
        }
    }

    fn merge(&mut self, o: &BoundTally) {
        self.instances += o.instances;
        self.lambda_violations += o.lambda_violations;
        self.theta_violations += o.theta_violations;
        self.converged += o.converged;
        self.region_violations += o.region_violations;
    }
}

fn oracle_suite(tally: &mut BoundTally) -> bool {
    let start = Instant::now();
    let cases: Vec<(Scenario, SolveResult, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (n, k) = (2 + (i % 2) as usize, 2 + (i / 2 % 2) as usize);
            let s = random_scenario(n, k, Strategy::Df, 10_000 + i);
            let joint = dcdm_solve(&s).expect("dual solve");
            let oracle = brute_force_solve(&s, DEFAULT_BUDGET).expect("oracle solve");
            (s, joint, oracle.primal_value)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut fails = 0;
    for (s, joint, oracle) in &cases {
        let rel = (joint.primal_value - oracle).abs() / oracle.abs().max(1e-12);
        worst = worst.max(rel);
        if rel > 1e-2 {
            fails += 1;
        }
        tally.add(s, joint);
    }
    let pass = fails == 0;
    report("1", "oracle equivalence", pass, &format!("100 instances, {fails} outside 1e-2, worst relative difference {worst:.2e}"), start);
    pass
}

fn dominance_suite(tally: &mut BoundTally) -> bool {
    let start = Instant::now();
    let baselines = [Scheme::NoPairing, Scheme::NoPa, Scheme::Separate, Scheme::MaxGain];
    let cases: Vec<(Scenario, SolveResult, Vec<f64>)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let s = random_scenario(8, 4, Strategy::Df, 20_000 + i);
            let joint = dcdm_solve(&s).expect("dual solve");
            let base = baselines.iter().map(|&b| solve_scheme(&s, b).expect("baseline").primal_value).collect();
            (s, joint, base)
        })
        .collect();
    let mut min_slack = f64::INFINITY;
    let (mut dom_fail, mut order_fail) = (0, 0);
    for (s, joint, base) in &cases {
        let slack = base.iter().map(|b| joint.primal_value - b).fold(f64::INFINITY, f64::min);
        min_slack = min_slack.min(slack);
        if slack < -1e-6 {
            dom_fail += 1;
        }
        if base[3] > base[1] {
            order_fail += 1;
        }
        tally.add(s, joint);
    }
    let pass = dom_fail == 0 && order_fail == 0;
    report(
        "2",
        "dominance",
        pass,
        &format!("500 instances, min slack {min_slack:.3e}, {dom_fail} dominance and {order_fail} max_gain > no_pa violations"),
        start,
    );
    pass
}

#[test]
fn criteria_1_to_4_solver_suites() {
    let mut oracle_tally = BoundTally::default();
    let mut dom_tally = BoundTally::default();
    let p1 = oracle_suite(&mut oracle_tally);
    let p2 = dominance_suite(&mut dom_tally);
    let start = Instant::now();
    let mut t = BoundTally::default();
    t.merge(&oracle_tally);
    t.merge(&dom_tally);
    let p3 = t.lambda_violations == 0 && t.theta_violations == 0;
    report(
        "3",
        "bound conformance",
        p3,
        &format!("{} instances, {} multiplier norm and {} subgradient norm violations", t.instances, t.lambda_violations, t.theta_violations),
        start,
    );
    let p4 = t.region_violations == 0;
    report(
        "4",
        "region consistency",
        p4,
        &format!("{} of {} instances converged, {} inconsistent", t.converged, t.instances, t.region_violations),
        start,
    );
    assert!(p1 && p2 && p3 && p4);
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(presets::get(name).unwrap()).unwrap()
}

fn mean(table: &ResultTable, value: f64, scheme: Scheme) -> f64 {
    table.row(value, scheme).expect("row present").mean_rate
}

#[test]
fn criterion_5_joint_beats_separate() {
    let start = Instant::now();
    let mut cfg = preset("fig3");
    cfg.schemes = vec![Scheme::Joint, Scheme::Separate];
    cfg.trials = 200;
    let table = relayopt_core::sim::run_experiment(&cfg).unwrap();
    let mut dominated = true;
    let mut failed = 0;
    let mut gains = Vec::new();
    for &v in &cfg.sweep.values {
        let (j, s) = (mean(&table, v, Scheme::Joint), mean(&table, v, Scheme::Separate));
        dominated &= j > s;
        gains.push(format!("{v} dB {:+.1}%", 100.0 * (j / s - 1.0)));
        failed += table.rows.iter().filter(|r| r.grid_value == v).map(|r| r.trials_failed).sum::<usize>();
    }
    let g4 = mean(&table, 4.0, Scheme::Joint) / mean(&table, 4.0, Scheme::Separate) - 1.0;
    let pass = dominated && (0.05..=0.25).contains(&g4) && failed == 0;
    report(
        "5",
        "joint beats separate",
        pass,
        &format!("gain at 4 dB {:.2}%, strict dominance {dominated}, {failed} failed trials; {}", 100.0 * g4, gains.join(", ")),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_6_multi_user_diversity() {
    let start = Instant::now();
    let mut cfg = preset("fig5");
    cfg.weights = Weights::Rule(WeightRule::Unit);
    cfg.snr_db = 4.0;
    cfg.sweep = Sweep { param: SweepParam::NUsers, values: vec![2.0, 4.0, 6.0] };
    cfg.schemes = vec![Scheme::Joint];
    cfg.trials = 200;
    let table = relayopt_core::sim::run_experiment(&cfg).unwrap();
    let means: Vec<f64> = cfg.sweep.values.iter().map(|&v| mean(&table, v, Scheme::Joint)).collect();
    let pass = means.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    report("6", "rate grows with users", pass, &format!("mean joint rate at K = 2, 4, 6: {}", shown.join(", ")), start);
    assert!(pass);
}

fn df_lagrangian(w: f64, a: f64, b: f64, c: f64, mu: (f64, f64), ps: f64, pr: f64) -> f64 {
    w * df_rate(a, b, c, ps, pr) - mu.0 * ps - mu.1 * pr
}

fn af_lagrangian(w: f64, a: f64, b: f64, c: f64, mu: (f64, f64), ps: f64, pr: f64) -> f64 {
    w * af_rate_upper(a, b, c, ps, pr) - mu.0 * ps - mu.1 * pr
}

/// Zooming grid search for the per-path maximum of the AF Lagrangian.
fn af_grid(w: f64, a: f64, b: f64, c: f64, mu: (f64, f64)) -> f64 {
    let lag = |ps: f64, pr: f64| af_lagrangian(w, a, b, c, mu, ps, pr);
    let (mut cx, mut cy) = (0.0, 0.0);
    let (mut hx, mut hy) = (w / (ALPHA * mu.0), w / (ALPHA * mu.1));
    let mut best = lag(0.0, 0.0);
    for _ in 0..14 {
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
        hx /= 6.0;
        hy /= 6.0;
    }
    best
}

fn random_gain(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        _ => 10f64.powf(rng.random_range(-1.5..1.5)),
    }
}

#[test]
fn criterion_7_per_path_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut df_fail = 0;
    let mut worst_gain = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let w = rng.random_range(0.05..1.0);
        let (a, b, c) = (10f64.powf(rng.random_range(-1.5..1.5)), random_gain(&mut rng), random_gain(&mut rng));
        let m = Multipliers::new(rng.random_range(0.01..1.0), rng.random_range(0.01..1.0), rng.random_range(0.0..1.0));
        let mu = (m.source_price(), m.relay_price());
        let sol = df_path_power(w, a, b, c, &m).unwrap();
        let best = df_lagrangian(w, a, b, c, mu, sol.ps_unit, sol.pr_unit);
        if (best - sol.lagrangian_unit).abs() > 1e-9 {
            df_fail += 1;
        }
        for _ in 0..8 {
            let scale = 10f64.powf(rng.random_range(-6.0..0.0));
            let ps = (sol.ps_unit + scale * rng.random_range(-1.0..1.0)).max(0.0);
            let pr = (sol.pr_unit + scale * rng.random_range(-1.0..1.0)).max(0.0);
            let gain = df_lagrangian(w, a, b, c, mu, ps, pr) - best;
            worst_gain = worst_gain.max(gain);
            if gain > 1e-8 {
                df_fail += 1;
            }
        }
    }
    let mut af_fail = 0;
    let mut worst_af = 0.0f64;
    for _ in 0..100 {
        let w = rng.random_range(0.05..1.0);
        let (a, b) = (10f64.powf(rng.random_range(-1.0..1.0)), 10f64.powf(rng.random_range(-1.0..1.0)));
        let c = if rng.random_bool(0.2) { 0.0 } else { 10f64.powf(rng.random_range(-1.0..1.0)) };
        let m = Multipliers::new(rng.random_range(0.02..1.0), rng.random_range(0.02..1.0), rng.random_range(0.0..0.5));
        let mu = (m.source_price(), m.relay_price());
        let sol = af_path_power(w, a, b, c, &m).unwrap();
        let grid = af_grid(w, a, b, c, mu);
        let rel = (sol.lagrangian_unit - grid).abs() / grid.abs().max(1e-12);
        worst_af = worst_af.max(rel);
        if rel > 1e-4 {
            af_fail += 1;
        }
    }
    let pass = df_fail == 0 && af_fail == 0;
    report(
        "7",
        "per-path optimality",
        pass,
        &format!(
            "80000 DF perturbations, {df_fail} failures, largest improvement {worst_gain:.2e}; 100 AF grid checks, {af_fail} failures, worst relative difference {worst_af:.2e}"
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_8_experiment_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in [1usize, 4, 1, 4].into_iter().enumerate() {
        let output = dir.path().join(format!("run{i}.csv"));
        let args = ExperimentArgs {
            config: None,
            preset: Some("fig3".into()),
            output: output.clone(),
            seed: Some(4242),
            trials: Some(12),
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| cmd_experiment(&args)).unwrap();
        outputs.push(std::fs::read(&output).unwrap());
    }
    let pass = outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty();
    report("8", "determinism", pass, &format!("4 runs on 1 and 4 threads, {} byte CSV, identical: {pass}", outputs[0].len()), start);
    assert!(pass);
}
