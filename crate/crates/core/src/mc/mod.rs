//! Parallel Monte Carlo harness, binomial estimators and theorem-bound checks.
//!
//! Trials are indexed `0..trials`; trial `i` runs with seed
//! [`derive_trial_seed`]`(master, i)` and results are merged by index, so
//! every report is independent of the worker count and completion order.

mod estimate;
mod profile;
mod seed;
mod theorem;

pub use estimate::{estimate_hit_probability, CiMethod, EstimateWithCI, HitEstimate, HitQuery};
pub use profile::{recurrence_profile, ProfileLabel, RecurrenceProfile, TrialProfile, PROFILE_RULE};
pub use seed::derive_trial_seed;
pub use theorem::{
    check_theorem_bound, shipped_scenarios, write_report_csv, BoundCheckReport, BoundKind, TheoremId,
    TheoremScenario, Verdict,
};

use rayon::prelude::*;

use crate::env::EnvError;
use crate::potential::PotentialError;
use crate::topology::TreeError;
use crate::walk::WalkError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("all {trials} trials reached the step cap")]
    AllTrialsCapped { trials: u64 },
    #[error("target and stop sets overlap at the start vertex")]
    OverlappingSets,
    #[error("scenario does not meet the hypothesis of {theorem}: {reason}")]
    HypothesisMismatch { theorem: TheoremId, reason: String },
    #[error("no trials requested")]
    NoTrials,
}

/// A fixed-size worker pool running independent trials.
pub struct Harness {
    pool: rayon::ThreadPool,
}

impl Harness {
    /// `workers == 0` uses one worker per available core.
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        Self { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f(i)` for `i in 0..trials` and returns the results in index order.
    pub fn map<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..trials).into_par_iter().map(f).collect())
    }
}

impl Default for Harness {
    fn default() -> Self {
        Self::new(0)
    }
}
