//! The monotone adaptive walk (MAW) on `Z^2` and its coupling with simple
//! random walk (SRW).
//!
//! On first arrival at a site the MAW raises the up, right and down edges
//! of that site from 1 to 2. At a site whose left neighbor is unvisited it
//! therefore steps left, up, right, down with probabilities
//! `1/7, 2/7, 2/7, 2/7`; at an NV site (left neighbor visited) all four
//! edges weigh 2 and the step is uniform.
//!
//! The coupling moves both walkers with one shared draw: identically at NV
//! sites, and through the 16-cell [`JOINT`] table elsewhere. The difference
//! `E - R` of MAW and SRW positions then changes only at non-NV sites, and
//! its first coordinate never decreases.

mod dstat;
mod tan;

pub use dstat::{d_bound_statistic, DStatistic};
pub use tan::{
    count_separated_tan_points, funnel_contains, is_tan_point, left_avoidance_probability, srw_path,
    write_tanpoint_csv, LeftAvoidance, TanCheck, TanPointReport, WidthRule,
};

use std::io::{self, Write};

use rand::Rng;
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::mc::{derive_trial_seed, Harness};
use crate::numeric::{linear_fit, mean_stderr};
use crate::walk::{rng_from_seed, WalkRng};

pub type Site = (i64, i64);

/// A lattice direction in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Dir {
    Left,
    Up,
    Right,
    Down,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Left, Dir::Up, Dir::Right, Dir::Down];

    pub fn delta(self) -> Site {
        match self {
            Dir::Left => (-1, 0),
            Dir::Up => (0, 1),
            Dir::Right => (1, 0),
            Dir::Down => (0, -1),
        }
    }
}

#[inline]
fn add(a: Site, d: Dir) -> Site {
    let (dx, dy) = d.delta();
    (a.0 + dx, a.1 + dy)
}

/// Joint law of one coupled step away from NV sites, in units of 1/28:
/// `JOINT[s][m]` is the weight of SRW direction `s` with MAW direction `m`,
/// both indexed left, up, right, down.
pub const JOINT: [[u32; 4]; 4] = [[4, 1, 1, 1], [0, 7, 0, 0], [0, 0, 7, 0], [0, 0, 0, 7]];

/// Denominator of [`JOINT`].
pub const JOINT_DENOM: u32 = 28;

/// Nonzero cells of [`JOINT`] with cumulative weights over `0..28`.
const CELLS: [(u8, u8, u32); 7] = {
    let mut out = [(0u8, 0u8, 0u32); 7];
    let mut acc = 0;
    let mut k = 0;
    let mut s = 0;
    while s < 4 {
        let mut m = 0;
        while m < 4 {
            if JOINT[s][m] > 0 {
                acc += JOINT[s][m];
                out[k] = (s as u8, m as u8, acc);
                k += 1;
            }
            m += 1;
        }
        s += 1;
    }
    out
};

/// One step of the coupled pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoupledMove {
    pub srw: Dir,
    pub maw: Dir,
    /// Whether the MAW stood at an NV site.
    pub nv: bool,
}

/// MAW and SRW positions with the MAW's visited set.
#[derive(Clone, Debug)]
pub struct CoupledState {
    pub t: u64,
    pub maw: Site,
    pub srw: Site,
    visited: FxHashSet<Site>,
    rng: WalkRng,
}

impl CoupledState {
    pub fn new(seed: u64) -> Self {
        let mut visited = FxHashSet::default();
        visited.insert((0, 0));
        Self {
            t: 0,
            maw: (0, 0),
            srw: (0, 0),
            visited,
            rng: rng_from_seed(seed),
        }
    }

    pub fn visited(&self, s: Site) -> bool {
        self.visited.contains(&s)
    }

    pub fn visited_count(&self) -> usize {
        self.visited.len()
    }

    /// `E(t) - R(t)`.
    pub fn difference(&self) -> Site {
        (self.maw.0 - self.srw.0, self.maw.1 - self.srw.1)
    }

    /// Whether the MAW's current site has a visited left neighbor.
    pub fn at_nv(&self) -> bool {
        self.visited.contains(&(self.maw.0 - 1, self.maw.1))
    }
}

/// Advances the coupled pair by one step with a single draw.
pub fn coupled_step(state: &mut CoupledState) -> CoupledMove {
    let mv = if state.at_nv() {
        let d = Dir::ALL[state.rng.gen_range(0..4)];
        CoupledMove { srw: d, maw: d, nv: true }
    } else {
        let u = state.rng.gen_range(0..JOINT_DENOM);
        let &(s, m, _) = CELLS.iter().find(|c| u < c.2).expect("u < 28");
        CoupledMove {
            srw: Dir::ALL[s as usize],
            maw: Dir::ALL[m as usize],
            nv: false,
        }
    };
    state.maw = add(state.maw, mv.maw);
    state.srw = add(state.srw, mv.srw);
    state.visited.insert(state.maw);
    state.t += 1;
    mv
}

/// A recorded coupled run: `maw[t]`, `srw[t]` for `t = 0..=n`, and whether
/// step `t -> t+1` started at an NV site.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledTrajectory {
    pub maw: Vec<Site>,
    pub srw: Vec<Site>,
    pub nv: Vec<bool>,
    pub visited_count: usize,
}

impl CoupledTrajectory {
    /// `E(t) - R(t)` for every `t`.
    pub fn differences(&self) -> Vec<Site> {
        self.maw
            .iter()
            .zip(&self.srw)
            .map(|(e, r)| (e.0 - r.0, e.1 - r.1))
            .collect()
    }
}

/// Runs `n` coupled steps from the origin, asserting after every step that
/// `(E - R)_1` did not decrease and that `E - R` moved only off NV sites.
pub fn run_coupled(n: u64, seed: u64) -> CoupledTrajectory {
    let mut st = CoupledState::new(seed);
    let mut maw = Vec::with_capacity(n as usize + 1);
    let mut srw = Vec::with_capacity(n as usize + 1);
    let mut nv = Vec::with_capacity(n as usize);
    maw.push(st.maw);
    srw.push(st.srw);
    let mut diff = st.difference();
    for _ in 0..n {
        let mv = coupled_step(&mut st);
        let d = st.difference();
        assert!(d.0 >= diff.0, "(E-R)_1 decreased at t={}", st.t);
        assert!(!mv.nv || d == diff, "E-R changed at an NV site at t={}", st.t);
        diff = d;
        maw.push(st.maw);
        srw.push(st.srw);
        nv.push(mv.nv);
    }
    CoupledTrajectory {
        maw,
        srw,
        nv,
        visited_count: st.visited_count(),
    }
}

/// `(E - R)` and `E` at each checkpoint of one coupled run; the
/// monotonicity of `(E - R)_1` is asserted on every step.
pub fn coupled_checkpoints(checkpoints: &[u64], seed: u64) -> Vec<(Site, Site)> {
    let mut st = CoupledState::new(seed);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut d1 = 0;
    for &n in checkpoints {
        while st.t < n {
            coupled_step(&mut st);
            let d = st.maw.0 - st.srw.0;
            assert!(d >= d1, "(E-R)_1 decreased at t={}", st.t);
            d1 = d;
        }
        out.push((st.difference(), st.maw));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftRow {
    pub n: u64,
    pub trials: u64,
    pub mean_drift: f64,
    pub stderr_drift: f64,
    #[serde(rename = "mean_E1")]
    pub mean_e1: f64,
    #[serde(rename = "mean_D2")]
    pub mean_d2: f64,
    #[serde(rename = "stderr_D2")]
    pub stderr_d2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftTable {
    pub rows: Vec<DriftRow>,
    /// Least-squares slope of `ln mean_drift` against `ln n`; `None` when
    /// fewer than two rows have positive mean drift.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub master_seed: u64,
}

impl DriftTable {
    /// `n,trials,mean_drift,stderr_drift,mean_E1,mean_D2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,trials,mean_drift,stderr_drift,mean_E1,mean_D2")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.n, r.trials, r.mean_drift, r.stderr_drift, r.mean_e1, r.mean_d2
            )?;
        }
        Ok(())
    }
}

/// Mean `(E(n) - R(n))_1`, `E(n)_1` and `(E(n) - R(n))_2` over `trials`
/// coupled runs for each `n` in increasing `n_values`.
///
/// Each trial is one run observed at every `n`, so rows share trials.
pub fn drift_experiment(n_values: &[u64], trials: u64, master_seed: u64, harness: &Harness) -> DriftTable {
    assert!(n_values.windows(2).all(|w| w[0] < w[1]), "n values must increase");
    let runs = harness.map(trials, |i| coupled_checkpoints(n_values, derive_trial_seed(master_seed, i)));
    let rows: Vec<DriftRow> = n_values
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let d1: Vec<f64> = runs.iter().map(|r| r[k].0 .0 as f64).collect();
            let d2: Vec<f64> = runs.iter().map(|r| r[k].0 .1 as f64).collect();
            let e1: Vec<f64> = runs.iter().map(|r| r[k].1 .0 as f64).collect();
            let (mean_drift, stderr_drift) = mean_stderr(&d1);
            let (mean_d2, stderr_d2) = mean_stderr(&d2);
            DriftRow {
                n,
                trials,
                mean_drift,
                stderr_drift,
                mean_e1: mean_stderr(&e1).0,
                mean_d2,
                stderr_d2,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.mean_drift > 0.0)
        .map(|r| ((r.n as f64).ln(), r.mean_drift.ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys);
    DriftTable {
        rows,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        master_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_table_marginals() {
        let rows: Vec<u32> = JOINT.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, vec![7, 7, 7, 7]);
        let cols: Vec<u32> = (0..4).map(|m| JOINT.iter().map(|r| r[m]).sum()).collect();
        assert_eq!(cols, vec![4, 8, 8, 8]);
        assert_eq!(CELLS.last().unwrap().2, JOINT_DENOM);
    }

    #[test]
    fn zero_steps() {
        let tr = run_coupled(0, 3);
        assert_eq!(tr.maw, vec![(0, 0)]);
        assert_eq!(tr.differences(), vec![(0, 0)]);
    }

    #[test]
    fn first_step_is_never_nv() {
        let mut st = CoupledState::new(1);
        assert!(!st.at_nv());
        let mv = coupled_step(&mut st);
        assert!(!mv.nv);
    }

    #[test]
    fn nv_steps_move_together() {
        let tr = run_coupled(5000, 11);
        let d = tr.differences();
        for t in 0..5000 {
            if tr.nv[t] {
                assert_eq!(d[t], d[t + 1]);
            }
            assert!(d[t + 1].0 >= d[t].0);
        }
        assert!(tr.nv.iter().any(|&b| b));
    }

    #[test]
    fn checkpoints_match_full_run() {
        let tr = run_coupled(300, 5);
        let cp = coupled_checkpoints(&[0, 1, 100, 300], 5);
        for (&n, &(d, e)) in [0usize, 1, 100, 300].iter().zip(&cp) {
            assert_eq!(d, tr.differences()[n]);
            assert_eq!(e, tr.maw[n]);
        }
    }

    #[test]
    fn drift_at_one_step() {
        let t = drift_experiment(&[1], 40, 9, &Harness::new(2));
        let m = t.rows[0].mean_drift;
        assert!((0.0..=1.0).contains(&m));
    }
}
