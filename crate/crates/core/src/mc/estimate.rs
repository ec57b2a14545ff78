use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use super::{derive_trial_seed, Harness, McError};
use crate::env::{Environment, EnvironmentSpec};
use crate::topology::{Topology, Vertex};
use crate::walk::{VertexSet, WalkError, Walker};

/// How the 99% interval was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Normal,
    /// Exact binomial interval, used when fewer than 10 successes or
    /// failures were observed.
    ClopperPearson,
}

/// A binomial proportion with its standard error and 99% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub stderr: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: CiMethod,
    pub master_seed: u64,
}

const CONFIDENCE: f64 = 0.99;

impl EstimateWithCI {
    pub fn from_counts(successes: u64, trials: u64, master_seed: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let stderr = (p * (1.0 - p) / n).sqrt();
        let alpha = 1.0 - CONFIDENCE;
        let (ci_low, ci_high, method) = if successes < 10 || trials - successes < 10 {
            let k = successes as f64;
            let lo = if successes == 0 {
                0.0
            } else {
                Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
            };
            let hi = if successes == trials {
                1.0
            } else {
                Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
            };
            (lo.min(p), hi.max(p), CiMethod::ClopperPearson)
        } else {
            let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
            ((p - z * stderr).max(0.0), (p + z * stderr).min(1.0), CiMethod::Normal)
        };
        Self {
            estimate: p,
            stderr,
            successes,
            trials,
            ci_low,
            ci_high,
            method,
            master_seed,
        }
    }
}

/// Probability of reaching `target` before `stop`, within `step_cap` steps.
#[derive(Clone, Debug)]
pub struct HitQuery {
    pub topology: Topology,
    pub env: EnvironmentSpec,
    pub start: Vertex,
    pub target: VertexSet,
    pub stop: VertexSet,
    pub step_cap: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Hit,
    Stopped,
    Capped,
    /// The walker had no positive incident edge before either set was reached.
    Absorbed,
}

/// Counts of trial outcomes; the estimate is `hits / trials`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitEstimate {
    pub estimate: EstimateWithCI,
    pub hits: u64,
    pub stopped: u64,
    pub capped: u64,
    pub absorbed: u64,
}

impl HitEstimate {
    /// The estimate with capped trials counted as hits.
    pub fn with_capped_as_hits(&self) -> EstimateWithCI {
        EstimateWithCI::from_counts(self.hits + self.capped, self.estimate.trials, self.estimate.master_seed)
    }
}

pub(crate) fn hit_trial(q: &HitQuery, env: &Environment, seed: u64) -> Result<Outcome, McError> {
    let check = |v: Vertex| {
        if q.target.contains(&q.topology, v) {
            Some(Outcome::Hit)
        } else if q.stop.contains(&q.topology, v) {
            Some(Outcome::Stopped)
        } else {
            None
        }
    };
    if let Some(o) = check(q.start) {
        return Ok(o);
    }
    let mut w = Walker::new(q.topology.clone(), env.clone(), q.start, seed)?;
    for _ in 0..q.step_cap {
        match w.step() {
            Ok(mv) => {
                if let Some(o) = check(mv.to) {
                    return Ok(o);
                }
            }
            Err(WalkError::AllIncidentZero { .. }) => return Ok(Outcome::Absorbed),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome::Capped)
}

/// Runs `trials` independent walks from `q.start`; trial `i` uses
/// `derive_trial_seed(master_seed, i)`.
pub fn estimate_hit_probability(
    q: &HitQuery,
    trials: u64,
    master_seed: u64,
    harness: &Harness,
) -> Result<HitEstimate, McError> {
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    if q.target.contains(&q.topology, q.start) && q.stop.contains(&q.topology, q.start) {
        return Err(McError::OverlappingSets);
    }
    let env = Environment::new(&q.env, &q.topology)?;
    let outcomes = harness.map(trials, |i| hit_trial(q, &env, derive_trial_seed(master_seed, i)));
    let mut counts = [0u64; 4];
    for o in outcomes {
        counts[o? as usize] += 1;
    }
    let [hits, stopped, capped, absorbed] = counts;
    if capped == trials {
        return Err(McError::AllTrialsCapped { trials });
    }
    Ok(HitEstimate {
        estimate: EstimateWithCI::from_counts(hits, trials, master_seed),
        hits,
        stopped,
        capped,
        absorbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_contains_estimate() {
        for (k, n) in [(0, 10), (3, 10), (10, 10), (500, 1000), (9, 1000), (995, 1000)] {
            let e = EstimateWithCI::from_counts(k, n, 0);
            assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high, "{e:?}");
            assert!(e.ci_low >= 0.0 && e.ci_high <= 1.0);
        }
        assert_eq!(EstimateWithCI::from_counts(500, 1000, 0).method, CiMethod::Normal);
        assert_eq!(EstimateWithCI::from_counts(3, 1000, 0).method, CiMethod::ClopperPearson);
    }

    #[test]
    fn clopper_pearson_zero_successes() {
        // upper limit solves (1 - p)^n = alpha / 2
        let e = EstimateWithCI::from_counts(0, 100, 0);
        let expected = 1.0 - 0.005f64.powf(1.0 / 100.0);
        assert!((e.ci_high - expected).abs() < 1e-9, "{}", e.ci_high);
    }

    #[test]
    fn start_in_stop_set_gives_zero() {
        let q = HitQuery {
            topology: Topology::LineN,
            env: EnvironmentSpec::Constant { c: 1.0 },
            start: Vertex::Int(0),
            target: VertexSet::point(Vertex::Int(10)),
            stop: VertexSet::point(Vertex::Int(0)),
            step_cap: 1000,
        };
        let r = estimate_hit_probability(&q, 50, 1, &Harness::new(2)).unwrap();
        assert_eq!(r.estimate.estimate, 0.0);
        assert_eq!(r.stopped, 50);
    }

    #[test]
    fn everything_capped_is_an_error() {
        let q = HitQuery {
            topology: Topology::LineN,
            env: EnvironmentSpec::Constant { c: 1.0 },
            start: Vertex::Int(50),
            target: VertexSet::point(Vertex::Int(1000)),
            stop: VertexSet::point(Vertex::Int(0)),
            step_cap: 5,
        };
        assert_eq!(
            estimate_hit_probability(&q, 20, 1, &Harness::new(1)),
            Err(McError::AllTrialsCapped { trials: 20 })
        );
    }
}
