use std::io::Write;

use clap::ValueEnum;
use rwce::env::always_right_probability;
use rwce::maw::{drift_experiment, write_tanpoint_csv, WidthRule};
use rwce::mc::{
    check_theorem_bound, derive_trial_seed, recurrence_profile, shipped_scenarios, write_report_csv, Harness,
    ProfileLabel, Verdict,
};
use rwce::walk::{Recording, RunOptions};
use rwce::{Environment, EnvironmentSpec, Topology, Vertex, Walker};
use serde::Serialize;

use crate::error::CliError;
use crate::ops::{tan_reports, tan_summary, Deferred, DEFAULT_DRIFT_N};
use crate::output::Outputs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorems,
    Maw,
    Examples,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Theorems => "theorems",
            Suite::Maw => "maw",
            Suite::Examples => "examples",
        }
    }
}

/// One pass/fail line of a suite report.
#[derive(Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub value: String,
    pub expected: String,
    pub pass: bool,
}

fn check(id: &str, value: impl ToString, expected: &str, pass: bool) -> Check {
    Check {
        id: id.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
        pass,
    }
}

#[derive(Serialize)]
struct SuiteReport<T: Serialize> {
    suite: &'static str,
    checks: Vec<Check>,
    details: T,
}

fn finish<T: Serialize>(suite: Suite, checks: Vec<Check>, details: T, out: &mut Outputs) -> Result<Deferred, CliError> {
    for c in &checks {
        println!("[{}] {}: {} (expected {})", if c.pass { "PASS" } else { "FAIL" }, c.id, c.value, c.expected);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.id.clone()).collect();
    out.write_json(
        &format!("{}_report.json", suite.as_str()),
        &SuiteReport {
            suite: suite.as_str(),
            checks,
            details,
        },
    )?;
    Ok((!failed.is_empty()).then(|| CliError::Runtime(format!("suite {} failed: {}", suite.as_str(), failed.join(", ")))))
}

pub fn reproduce(suite: Suite, harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    match suite {
        Suite::Theorems => theorems(harness, out),
        Suite::Maw => maw(harness, out),
        Suite::Examples => examples(harness, out),
    }
}

fn theorems(harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let mut reports = Vec::new();
    for sc in shipped_scenarios() {
        reports.push(check_theorem_bound(&sc, harness)?);
    }
    out.write_csv("theorems.csv", |w| write_report_csv(&reports, w))?;
    let checks = reports
        .iter()
        .map(|r| {
            check(
                &r.scenario,
                format!("{} (estimate {:.4}, bound {:.4})", r.verdict.as_str(), r.estimate.estimate, r.bound),
                "consistent",
                r.verdict == Verdict::Consistent,
            )
        })
        .collect();
    finish(Suite::Theorems, checks, &reports, out)
}

pub const DRIFT_SEED: u64 = 2020;
pub const TAN_SEED: u64 = 2021;
pub const SLOPE_BAND: (f64, f64) = (0.6, 0.95);

fn maw(harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let table = drift_experiment(&DEFAULT_DRIFT_N, 50, DRIFT_SEED, harness);
    out.write_csv("drift.csv", |w| table.write_csv(w))?;
    let ns = [10_000, 100_000];
    let rule = WidthRule::Constant(1.0);
    let reports = tan_reports(&ns, 20, 0.1, rule, TAN_SEED, harness);
    out.write_csv("tanpoints.csv", |w| write_tanpoint_csv(&reports, w))?;
    let tan = tan_summary(&ns, 20, &reports);
    let ratio = tan[1].mean_separated_count / tan[0].mean_separated_count;
    let slope = table.slope.unwrap_or(f64::NAN);
    let checks = vec![
        check(
            "maw_drift_slope",
            format!("{slope:.4}"),
            &format!("within [{}, {}]", SLOPE_BAND.0, SLOPE_BAND.1),
            (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&slope),
        ),
        check(
            "tan_point_growth",
            format!("{ratio:.3} ({:.2} -> {:.2})", tan[0].mean_separated_count, tan[1].mean_separated_count),
            "ratio >= 2",
            ratio >= 2.0,
        ),
    ];
    #[derive(Serialize)]
    struct Details<'a> {
        drift: &'a rwce::maw::DriftTable,
        tanpoints: &'a [crate::ops::TanSummaryRow],
    }
    finish(
        Suite::Maw,
        checks,
        Details {
            drift: &table,
            tanpoints: &tan,
        },
        out,
    )
}

/// Decay-front runs from 0: whether the first `early` steps all go right,
/// and otherwise whether the walk returns to 0 within `cap` steps.
pub fn decay_front_run(seed: u64, early: u64, cap: u64) -> (bool, bool) {
    let topo = Topology::LineN;
    let env = Environment::new(&EnvironmentSpec::DecayFront, &topo).expect("decay_front on line_n");
    let mut w = Walker::new(topo, env, Vertex::Int(0), seed).expect("origin is a vertex");
    let mut all_right = true;
    for t in 0..cap {
        let mv = w.step().expect("decay_front never strands the walker");
        if t < early && mv.to != Vertex::Int(t as i64 + 1) {
            all_right = false;
        }
        if t + 1 == early && all_right {
            return (true, false);
        }
        if mv.to == Vertex::Int(0) {
            return (false, true);
        }
    }
    (all_right, false)
}

fn examples(harness: &Harness, out: &mut Outputs) -> Result<Deferred, CliError> {
    let wave = EnvironmentSpec::Wave { period: 100, high: 100.0 };
    let steps = 100_000u64;
    let profile = recurrence_profile(&Topology::LineN, &wave, 100, steps, 35, harness)?;
    let finals: Vec<u64> = profile.trials.iter().map(|p| p.final_displacement).collect();
    let min_final = finals.iter().copied().min().unwrap_or(0);
    let mean_speed = finals.iter().sum::<u64>() as f64 / finals.len() as f64 / steps as f64;
    let pilot_steps = 10_000_000u64;
    let env = Environment::new(&wave, &Topology::LineN).map_err(|e| CliError::Runtime(e.to_string()))?;
    let pilot = Walker::new(Topology::LineN, env, Vertex::Int(0), derive_trial_seed(35, u64::MAX))
        .and_then(|w| {
            w.run(
                pilot_steps,
                &RunOptions {
                    recording: Recording::Off,
                    ..Default::default()
                },
            )
        })
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let pilot_speed = pilot.final_position.as_int().unwrap_or(0) as f64 / pilot_steps as f64;

    let trials = 100_000u64;
    let runs = harness.map(trials, |i| decay_front_run(derive_trial_seed(45, i), 30, 100_000));
    let right = runs.iter().filter(|r| r.0).count() as u64;
    let early_left = trials - right;
    let returned = runs.iter().filter(|r| r.1).count() as u64;
    let p30 = always_right_probability(30);
    let frac = right as f64 / trials as f64;
    let sigma = (p30 * (1.0 - p30) / trials as f64).sqrt();
    let decay = recurrence_profile(&Topology::LineN, &EnvironmentSpec::DecayFront, 400, 10_000, 46, harness)?;

    out.write_csv("examples.csv", |w| {
        writeln!(w, "example,trials,steps,statistic,value")?;
        writeln!(w, "wave,100,{steps},min_final_position,{min_final}")?;
        writeln!(w, "wave,100,{steps},mean_speed,{mean_speed}")?;
        writeln!(w, "wave,1,{pilot_steps},pilot_speed,{pilot_speed}")?;
        writeln!(w, "wave,100,{steps},escaped_fraction,{}", profile.escaped_fraction)?;
        writeln!(w, "decay_front,{trials},30,all_right_fraction,{frac}")?;
        writeln!(w, "decay_front,{trials},30,all_right_probability,{p30}")?;
        writeln!(w, "decay_front,{early_left},100000,return_fraction,{}", returned as f64 / early_left as f64)?;
        writeln!(w, "decay_front,400,10000,escaped_fraction,{}", decay.escaped_fraction)?;
        Ok(())
    })?;
    let checks = vec![
        check("wave_label", profile.label.as_str(), "transient-like", profile.label == ProfileLabel::TransientLike),
        check("wave_min_final", min_final, "> 1000", min_final > 1000),
        check(
            "wave_mean_speed",
            format!("{mean_speed:.4} (pilot {pilot_speed:.4})"),
            "> 0.2",
            mean_speed > 0.2 && pilot_speed > 0.2,
        ),
        check(
            "decay_front_all_right",
            format!("{frac:.5} vs {p30:.5}"),
            "within 3 sigma",
            (frac - p30).abs() <= 3.0 * sigma,
        ),
        check(
            "decay_front_return",
            format!("{returned}/{early_left}"),
            ">= 99%",
            returned as f64 >= 0.99 * early_left as f64,
        ),
        check("decay_front_label", decay.label.as_str(), "mixed-like", decay.label == ProfileLabel::MixedLike),
    ];
    #[derive(Serialize)]
    struct Details {
        wave_min_final: u64,
        wave_mean_speed: f64,
        wave_pilot_speed: f64,
        wave_escaped_fraction: f64,
        decay_front_all_right_fraction: f64,
        decay_front_all_right_probability: f64,
        decay_front_returns: u64,
        decay_front_early_left: u64,
        decay_front_escaped_fraction: f64,
        profile_rule: &'static str,
    }
    finish(
        Suite::Examples,
        checks,
        Details {
            wave_min_final: min_final,
            wave_mean_speed: mean_speed,
            wave_pilot_speed: pilot_speed,
            wave_escaped_fraction: profile.escaped_fraction,
            decay_front_all_right_fraction: frac,
            decay_front_all_right_probability: p30,
            decay_front_returns: returned,
            decay_front_early_left: early_left,
            decay_front_escaped_fraction: decay.escaped_fraction,
            profile_rule: profile.rule,
        },
        out,
    )
}
