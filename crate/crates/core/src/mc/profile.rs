use serde::Serialize;

use super::{derive_trial_seed, Harness, McError};
use crate::env::{Environment, EnvironmentSpec};
use crate::topology::{Topology, Vertex};
use crate::walk::{Recording, RunOptions, Walker};

/// The decision rule behind [`ProfileLabel`], printed with every profile.
pub const PROFILE_RULE: &str = "heuristic label: a trial counts as escaped when it never returns to its start \
after time horizon/100; transient-like if at least 90% of trials escaped, recurrent-like if at most 10%, \
mixed-like otherwise; inconclusive with fewer than 20 trials or a horizon below 1000. \
Finite runs cannot decide recurrence; the label only summarizes them.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileLabel {
    RecurrentLike,
    TransientLike,
    MixedLike,
    Inconclusive,
}

impl ProfileLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileLabel::RecurrentLike => "recurrent-like",
            ProfileLabel::TransientLike => "transient-like",
            ProfileLabel::MixedLike => "mixed-like",
            ProfileLabel::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialProfile {
    pub returns: u64,
    pub last_return: Option<u64>,
    /// Graph distance from the start at the end of the run.
    pub final_displacement: u64,
    pub max_displacement: u64,
    pub steps: u64,
}

/// Trials whose return count falls in `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceProfile {
    pub env: String,
    pub horizon: u64,
    pub master_seed: u64,
    pub trials: Vec<TrialProfile>,
    /// Return counts in bins `{0}, {1}, [2,3], [4,7], ...`.
    pub histogram: Vec<HistogramBin>,
    pub escaped_fraction: f64,
    pub mean_returns: f64,
    pub mean_final_displacement: f64,
    pub label: ProfileLabel,
    pub rule: &'static str,
}

fn histogram(returns: impl Iterator<Item = u64>) -> Vec<HistogramBin> {
    let mut bins: Vec<HistogramBin> = Vec::new();
    for r in returns {
        let k = if r == 0 { 0 } else { 64 - r.leading_zeros() as usize };
        while bins.len() <= k {
            let i = bins.len() as u32;
            let (lo, hi) = if i == 0 { (0, 0) } else { (1u64 << (i - 1), (1u64 << i) - 1) };
            bins.push(HistogramBin { lo, hi, count: 0 });
        }
        bins[k].count += 1;
    }
    bins
}

/// Runs `trials` walks of `horizon` steps from the topology's origin and
/// summarizes their returns, with the heuristic label of [`PROFILE_RULE`].
pub fn recurrence_profile(
    topology: &Topology,
    spec: &EnvironmentSpec,
    trials: u64,
    horizon: u64,
    master_seed: u64,
    harness: &Harness,
) -> Result<RecurrenceProfile, McError> {
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    let env = Environment::new(spec, topology)?;
    let start: Vertex = topology.origin();
    let opts = RunOptions {
        recording: Recording::Off,
        ..Default::default()
    };
    let runs = harness.map(trials, |i| {
        let w = Walker::new(topology.clone(), env.clone(), start, derive_trial_seed(master_seed, i))?;
        let tr = w.run(horizon, &opts)?;
        Ok::<_, McError>(TrialProfile {
            returns: tr.returns_to_start,
            last_return: tr.last_return,
            final_displacement: topology.distance(start, tr.final_position),
            max_displacement: tr.max_displacement,
            steps: tr.steps,
        })
    });
    let trials_out = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let cut = horizon / 100;
    let escaped = trials_out
        .iter()
        .filter(|p| p.last_return.is_none_or(|t| t <= cut))
        .count();
    let n = trials_out.len() as f64;
    let escaped_fraction = escaped as f64 / n;
    let label = if trials < 20 || horizon < 1000 {
        ProfileLabel::Inconclusive
    } else if escaped_fraction >= 0.9 {
        ProfileLabel::TransientLike
    } else if escaped_fraction <= 0.1 {
        ProfileLabel::RecurrentLike
    } else {
        ProfileLabel::MixedLike
    };
    Ok(RecurrenceProfile {
        env: spec.name().to_string(),
        horizon,
        master_seed,
        histogram: histogram(trials_out.iter().map(|p| p.returns)),
        escaped_fraction,
        mean_returns: trials_out.iter().map(|p| p.returns as f64).sum::<f64>() / n,
        mean_final_displacement: trials_out.iter().map(|p| p.final_displacement as f64).sum::<f64>() / n,
        trials: trials_out,
        label,
        rule: PROFILE_RULE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins() {
        let h = histogram([0, 1, 2, 3, 4, 9].into_iter());
        let counts: Vec<_> = h.iter().map(|b| (b.lo, b.hi, b.count)).collect();
        assert_eq!(counts, vec![(0, 0, 1), (1, 1, 1), (2, 3, 2), (4, 7, 1), (8, 15, 1)]);
    }

    #[test]
    fn short_profiles_are_inconclusive() {
        let p = recurrence_profile(&Topology::LineZ, &EnvironmentSpec::Constant { c: 1.0 }, 5, 100, 1, &Harness::new(1)).unwrap();
        assert_eq!(p.label, ProfileLabel::Inconclusive);
        assert_eq!(p.trials.len(), 5);
    }
}
