use std::io::Write;
use std::sync::Arc;

use rwce::env::EnvError;
use rwce::maw::{count_separated_tan_points, drift_experiment, srw_path, write_tanpoint_csv, TanPointReport, WidthRule};
use rwce::mc::{
    check_theorem_bound, derive_trial_seed, estimate_hit_probability, recurrence_profile, shipped_scenarios,
    write_report_csv, Harness, HitQuery, TheoremScenario, Verdict,
};
use rwce::potential::{martingale_monitor, tree_unit_current_flow, PotentialError, PotentialSequence};
use rwce::walk::{Recording, RunOptions, VertexSet, WalkError};
use rwce::{Environment, Topology, Walker};
use serde::Serialize;

use crate::config::{config_error, ExperimentConfig, FlowSource, Operation, PotentialConfig};
use crate::error::CliError;
use crate::output::Outputs;

/// A failure found after every output was written; reported once the run
/// summary is on disk.
pub type Deferred = Option<CliError>;

pub const DEFAULT_DRIFT_N: [u64; 7] = [1 << 14, 1 << 15, 1 << 16, 1 << 17, 1 << 18, 1 << 19, 1 << 20];

fn env_error(e: EnvError) -> CliError {
    CliError::Config(e.to_string())
}

fn walk_error(e: WalkError) -> CliError {
    match e {
        WalkError::NotAVertex(_) | WalkError::TopologyMismatch { .. } => CliError::Config(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn potential_error(e: PotentialError) -> CliError {
    match e {
        PotentialError::TopologyMismatch { .. } | PotentialError::NoAnalyticTail => CliError::Config(e.to_string()),
        PotentialError::Walk(w) => walk_error(w),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn topology(cfg: &ExperimentConfig) -> Result<Topology, CliError> {
    cfg.topology
        .build()
        .map_err(|e| CliError::Config(format!("invalid topology: {e}")))
}

fn positive(name: &str, v: u64) -> Result<u64, CliError> {
    if v == 0 {
        Err(config_error(format!("`{name}` must be positive")).into())
    } else {
        Ok(v)
    }
}

/// Runs `op`; `cfg.seed` (default 0) is the master seed.
pub fn execute(op: Operation, cfg: &ExperimentConfig, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    match op {
        Operation::Simulate => simulate(cfg, seed, harness, out),
        Operation::Classify => classify(cfg, seed, harness, out),
        Operation::CheckBound => check_bound(cfg, seed, harness, out),
        Operation::MawDrift => maw_drift(cfg, seed, harness, out),
        Operation::Tanpoints => tanpoints(cfg, seed, harness, out),
        Operation::MonitorPotential => monitor_potential(cfg, seed, harness, out),
    }
}

fn numbered(stem: &str, i: u64, trials: u64) -> String {
    if trials == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{i:04}.csv")
    }
}

#[derive(Serialize)]
struct TrialRecord {
    trial: u64,
    seed: u64,
    steps: u64,
    final_position: rwce::Vertex,
    end: rwce::walk::EndReason,
    returns_to_start: u64,
    max_displacement: u64,
}

fn simulate(cfg: &ExperimentConfig, seed: u64, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let topo = topology(cfg)?;
    let env = Environment::new(cfg.environment()?, &topo).map_err(env_error)?;
    let steps = cfg.steps()?;
    let trials = positive("trials", cfg.trials.unwrap_or(1))?;
    let thin = positive("params.thin", cfg.params.thin.unwrap_or(1))?;
    let start = cfg.params.start.unwrap_or_else(|| topo.origin());
    let opts = RunOptions {
        recording: Recording::Thinned(thin),
        ..Default::default()
    };
    let runs = harness.map(trials, |i| {
        let s = derive_trial_seed(seed, i);
        Walker::new(topo.clone(), env.clone(), start, s)
            .and_then(|w| w.run(steps, &opts))
            .map(|t| (s, t))
    });
    let mut records = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let (s, tr) = r.map_err(walk_error)?;
        out.write_csv(&numbered("trajectory", i as u64, trials), |w| tr.write_csv(w, 1))?;
        records.push(TrialRecord {
            trial: i as u64,
            seed: s,
            steps: tr.steps,
            final_position: tr.final_position,
            end: tr.end,
            returns_to_start: tr.returns_to_start,
            max_displacement: tr.max_displacement,
        });
    }
    out.write_json("simulate.json", &records)?;
    println!("simulated {trials} trajectory(ies) of up to {steps} steps");
    Ok(None)
}

fn classify(cfg: &ExperimentConfig, seed: u64, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let topo = topology(cfg)?;
    let spec = cfg.environment()?;
    let horizon = cfg.steps()?;
    let trials = positive("trials", cfg.trials.unwrap_or(100))?;
    let profile = recurrence_profile(&topo, spec, trials, horizon, seed, harness)?;
    out.write_json("profile.json", &profile)?;
    out.write_csv("profile.csv", |w| {
        writeln!(w, "trial,returns,last_return,final_displacement,max_displacement")?;
        for (i, p) in profile.trials.iter().enumerate() {
            let last = p.last_return.map(|t| t.to_string()).unwrap_or_default();
            writeln!(w, "{i},{},{last},{},{}", p.returns, p.final_displacement, p.max_displacement)?;
        }
        Ok(())
    })?;
    println!(
        "{}: {} (escaped fraction {:.3} over {trials} trials of {horizon} steps)",
        profile.env,
        profile.label.as_str(),
        profile.escaped_fraction
    );
    println!("{}", profile.rule);
    if let Some(target) = &cfg.params.target {
        let q = HitQuery {
            topology: topo.clone(),
            env: spec.clone(),
            start: cfg.params.start.unwrap_or_else(|| topo.origin()),
            target: target.clone(),
            stop: cfg.params.stop.clone().unwrap_or(VertexSet::Points(Vec::new())),
            step_cap: horizon,
        };
        let est = estimate_hit_probability(&q, trials, seed, harness)?;
        println!(
            "hit probability {:.4} +- {:.4} ({} capped)",
            est.estimate.estimate, est.estimate.stderr, est.capped
        );
        out.write_json("hit_estimate.json", &est)?;
    }
    Ok(None)
}

/// The scenario a check-bound config describes: a shipped scenario by name,
/// or one assembled from the config's own keys.
pub fn bound_scenario(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<TheoremScenario, CliError> {
    let p = &cfg.params;
    let mut sc = if let Some(name) = &p.scenario {
        let all = shipped_scenarios();
        let names: Vec<String> = all.iter().map(|s| s.name.clone()).collect();
        all.into_iter().find(|s| &s.name == name).ok_or_else(|| {
            config_error(format!("unknown scenario `{name}` at `params.scenario`; shipped: {}", names.join(", ")))
        })?
    } else {
        TheoremScenario {
            name: "custom".into(),
            theorem: p.theorem.ok_or_else(|| config_error("missing key `params.theorem`"))?,
            topology: cfg.topology.clone(),
            env: cfg.environment()?.clone(),
            start: p.start.ok_or_else(|| config_error("missing key `params.start`"))?,
            level: p.level.ok_or_else(|| config_error("missing key `params.level`"))?,
            trials: 10_000,
            step_cap: 1_000_000,
            master_seed: 0,
        }
    };
    if let Some(t) = cfg.trials {
        sc.trials = positive("trials", t)?;
    }
    if let Some(s) = cfg.steps {
        sc.step_cap = positive("steps", s)?;
    }
    if let Some(s) = seed {
        sc.master_seed = s;
    }
    Ok(sc)
}

fn check_bound(cfg: &ExperimentConfig, seed: u64, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    // a shipped scenario keeps its pinned seed unless one is given explicitly
    let explicit = if cfg.params.scenario.is_some() { cfg.seed } else { Some(seed) };
    let sc = bound_scenario(cfg, explicit)?;
    let report = check_theorem_bound(&sc, harness)?;
    out.write_csv("report.csv", |w| write_report_csv(std::slice::from_ref(&report), w))?;
    out.write_json("report.json", &report)?;
    println!(
        "{} [{}]: estimate {:.4} +- {:.4}, bound {:.4} ({:?}), {} capped -> {}",
        report.scenario,
        report.theorem,
        report.estimate.estimate,
        report.estimate.stderr,
        report.bound,
        report.kind,
        report.capped,
        report.verdict.as_str()
    );
    Ok((report.verdict == Verdict::Violation).then(|| {
        CliError::BoundViolation(format!(
            "{}: estimate {} against bound {}",
            report.scenario, report.estimate.estimate, report.bound
        ))
    }))
}

fn n_values(cfg: &ExperimentConfig, default: &[u64]) -> Result<Vec<u64>, CliError> {
    let ns = cfg.params.n_values.clone().unwrap_or_else(|| default.to_vec());
    if ns.is_empty() || ns.contains(&0) || !ns.windows(2).all(|w| w[0] < w[1]) {
        return Err(config_error("`params.n_values` must be positive and strictly increasing").into());
    }
    Ok(ns)
}

fn maw_drift(cfg: &ExperimentConfig, seed: u64, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let ns = n_values(cfg, &DEFAULT_DRIFT_N)?;
    let trials = positive("trials", cfg.trials.unwrap_or(50))?;
    let table = drift_experiment(&ns, trials, seed, harness);
    out.write_csv("drift.csv", |w| table.write_csv(w))?;
    out.write_json("drift.json", &table)?;
    match table.slope {
        Some(s) => println!("log-log slope of mean (E-R)_1: {s:.4}"),
        None => println!("log-log slope undefined (fewer than two positive means)"),
    }
    Ok(None)
}

#[derive(Serialize)]
pub struct TanSummaryRow {
    pub n: u64,
    pub trials: u64,
    pub mean_count: f64,
    pub mean_separated_count: f64,
}

/// Tan-point reports for every `n` and trial; trial `i` uses the SRW path of
/// seed `derive_trial_seed(master, i)`, truncated to each `n`.
pub fn tan_reports(ns: &[u64], trials: u64, eps: f64, rule: WidthRule, master: u64, harness: &Harness) -> Vec<TanPointReport> {
    let per = trials;
    harness.map(ns.len() as u64 * per, |k| {
        let (n, i) = (ns[(k / per) as usize], k % per);
        let s = derive_trial_seed(master, i);
        let mut r = count_separated_tan_points(&srw_path(n, s), eps, rule);
        r.seed = Some(s);
        r
    })
}

pub fn tan_summary(ns: &[u64], trials: u64, reports: &[TanPointReport]) -> Vec<TanSummaryRow> {
    ns.iter()
        .map(|&n| {
            let rs: Vec<_> = reports.iter().filter(|r| r.n == n).collect();
            let k = rs.len() as f64;
            TanSummaryRow {
                n,
                trials,
                mean_count: rs.iter().map(|r| r.count as f64).sum::<f64>() / k,
                mean_separated_count: rs.iter().map(|r| r.separated_count as f64).sum::<f64>() / k,
            }
        })
        .collect()
}

fn tanpoints(cfg: &ExperimentConfig, seed: u64, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let ns = n_values(cfg, &[10_000, 100_000])?;
    let trials = positive("trials", cfg.trials.unwrap_or(20))?;
    let eps = cfg.params.epsilon.unwrap_or(0.1);
    if !(eps > 0.0 && eps < 0.5) {
        return Err(config_error("`params.epsilon` must lie in (0, 1/2)").into());
    }
    let rule = cfg.params.width_rule.unwrap_or_default();
    if let WidthRule::Constant(c) = rule {
        if !(c > 0.0 && c.is_finite()) {
            return Err(config_error("constant width must be positive").into());
        }
    }
    let reports = tan_reports(&ns, trials, eps, rule, seed, harness);
    out.write_csv("tanpoints.csv", |w| write_tanpoint_csv(&reports, w))?;
    let summary = tan_summary(&ns, trials, &reports);
    for r in &summary {
        println!(
            "n = {}: mean tan points {:.2}, mean separated {:.2}",
            r.n, r.mean_count, r.mean_separated_count
        );
    }
    out.write_json("tanpoints.json", &summary)?;
    Ok(None)
}

#[derive(Serialize)]
struct MonitorRecord {
    trial: u64,
    seed: u64,
    direction: rwce::potential::Direction,
    max_abs_residual: f64,
    drift_has_sign: bool,
}

fn monitor_potential(cfg: &ExperimentConfig, seed: u64, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let topo = topology(cfg)?;
    let env = Environment::new(cfg.environment()?, &topo).map_err(env_error)?;
    let steps = cfg.steps()?;
    let trials = positive("trials", cfg.trials.unwrap_or(1))?;
    let start = cfg.params.start.unwrap_or_else(|| topo.origin());
    let pc = cfg
        .params
        .potential
        .clone()
        .ok_or_else(|| config_error("missing key `params.potential`"))?;
    let potential = match pc {
        PotentialConfig::LineToZero => PotentialSequence::LineToZero,
        PotentialConfig::LineToInfinity { horizon, analytic_tail } => {
            PotentialSequence::LineToInfinity { horizon, analytic_tail }
        }
        PotentialConfig::TreeFlowVoltage { level, flow_from } => {
            let tree = topo
                .as_tree()
                .ok_or_else(|| config_error("tree_flow_voltage needs a tree topology"))?;
            let rule = match flow_from {
                FlowSource::Initial => None,
                FlowSource::Lower => Some(env.class().lower.clone()),
                FlowSource::Upper => Some(env.class().upper.clone()),
            };
            let flow = match rule {
                None => {
                    let w = Walker::new(topo.clone(), env.clone(), start, seed).map_err(walk_error)?;
                    let c0 = w.state().conductances.clone();
                    tree_unit_current_flow(tree, |e| c0.weight(e, 0), level)
                }
                Some(Some(r)) => tree_unit_current_flow(tree, |e| r.weight(e, 0), level),
                Some(None) => return Err(config_error("the environment declares no such bound").into()),
            }
            .map_err(potential_error)?;
            PotentialSequence::TreeFlowVoltage { flow: Arc::new(flow) }
        }
    };
    let reports = harness.map(trials, |i| {
        let s = derive_trial_seed(seed, i);
        let tr = Walker::new(topo.clone(), env.clone(), start, s)
            .and_then(|w| w.run(steps, &RunOptions::default()))
            .map_err(walk_error)?;
        martingale_monitor(&tr, &topo, &env, s, &potential)
            .map(|r| (s, r))
            .map_err(potential_error)
    });
    let mut records = Vec::new();
    for (i, r) in reports.into_iter().enumerate() {
        let (s, rep) = r?;
        out.write_csv(&numbered("monitor", i as u64, trials), |w| rep.write_csv(w))?;
        records.push(MonitorRecord {
            trial: i as u64,
            seed: s,
            direction: rep.direction,
            max_abs_residual: rep.max_abs_residual(),
            drift_has_sign: rep.drift_has_sign(1e-12),
        });
    }
    let worst = records.iter().map(|r| r.max_abs_residual).fold(0.0, f64::max);
    let signed = records.iter().all(|r| r.drift_has_sign);
    println!(
        "{}: max |harmonic residual| {worst:.3e}, drift sign {}",
        potential.name(),
        if signed { "as declared" } else { "VIOLATED" }
    );
    out.write_json("monitor.json", &records)?;
    Ok(None)
}
