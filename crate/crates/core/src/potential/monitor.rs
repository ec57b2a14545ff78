use std::io::{self, Write};

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::{line_resistance, tree, PotentialError, PotentialSequence};
use crate::conductance::{ConductanceState, Monotonicity};
use crate::env::Environment;
use crate::numeric::CompensatedSum;
use crate::topology::{Edge, Topology, Vertex};
use crate::walk::{Trajectory, WalkError, Walker};

/// Which side of a martingale `F_t(X_t)` the environment's monotonicity puts it on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Conductances only increase, potentials only decrease.
    Super,
    /// Conductances only decrease, potentials only increase.
    Sub,
    Neither,
}

impl Direction {
    pub fn of(m: Monotonicity) -> Self {
        match m {
            Monotonicity::Increasing => Direction::Super,
            Monotonicity::Decreasing => Direction::Sub,
            Monotonicity::None => Direction::Neither,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorRow {
    pub t: u64,
    /// `sum_u P_t(u) F_t(u) - F_t(X_t)`; `None` at stopped positions.
    pub harmonic_residual: Option<f64>,
    /// Largest `F_{t+1}(v) - F_t(v)` over tracked vertices.
    pub drift_max: f64,
    /// Smallest `F_{t+1}(v) - F_t(v)` over tracked vertices.
    pub drift_min: f64,
    pub f_at_walker: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub potential: &'static str,
    pub direction: Direction,
    pub rows: Vec<MonitorRow>,
}

impl MonitorRow {
    /// The drift reported for `direction`: the maximum for a
    /// supermartingale (expected `<= 0`), the minimum for a submartingale
    /// (expected `>= 0`), the larger in magnitude otherwise.
    pub fn monotone_drift(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Super => self.drift_max,
            Direction::Sub => self.drift_min,
            Direction::Neither => {
                if self.drift_max.abs() >= self.drift_min.abs() {
                    self.drift_max
                } else {
                    self.drift_min
                }
            }
        }
    }
}

impl MonitorReport {
    pub fn max_abs_residual(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.harmonic_residual)
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Whether every drift has the sign of `direction` up to `tol`.
    pub fn drift_has_sign(&self, tol: f64) -> bool {
        match self.direction {
            Direction::Super => self.rows.iter().all(|r| r.drift_max <= tol),
            Direction::Sub => self.rows.iter().all(|r| r.drift_min >= -tol),
            Direction::Neither => true,
        }
    }

    /// `t,harmonic_residual,monotone_drift,F_at_walker`; the residual is
    /// left empty at stopped positions.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,harmonic_residual,monotone_drift,F_at_walker")?;
        for r in &self.rows {
            let res = r.harmonic_residual.map(|x| format!("{x:e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{:e},{:e}",
                r.t,
                res,
                r.monotone_drift(self.direction),
                r.f_at_walker
            )?;
        }
        Ok(())
    }
}

/// Signed change of `F_t` along the step from `from` across `edge`:
/// `F_t(to) - F_t(from)`, taken edge by edge so no large cumulative values
/// are differenced.
fn increment(potential: &PotentialSequence, topology: &Topology, w: f64, from: Vertex, edge: Edge) -> f64 {
    match (potential, edge, from) {
        (PotentialSequence::LineToZero, Edge::Line(j), Vertex::Int(x)) => {
            if j == x { 1.0 / w } else { -1.0 / w }
        }
        (PotentialSequence::LineToInfinity { horizon, analytic_tail }, Edge::Line(j), Vertex::Int(x)) => {
            if !analytic_tail && j >= *horizon {
                0.0
            } else if j == x {
                -1.0 / w
            } else {
                1.0 / w
            }
        }
        (PotentialSequence::TreeFlowVoltage { flow }, Edge::Tree(c, _), Vertex::Node(v)) => {
            let t = topology.as_tree().expect("checked tree topology");
            if c as usize >= flow.values().len() || t.depth(c) > flow.radius() {
                return 0.0;
            }
            let d = flow.current(c) / w;
            if c == v { -d } else { d }
        }
        _ => 0.0,
    }
}

fn value_at(potential: &PotentialSequence, topology: &Topology, state: &ConductanceState, t: u64, v: Vertex) -> Result<f64, PotentialError> {
    let w = |j: i64| state.weight(Edge::Line(j), t);
    match (potential, v) {
        (PotentialSequence::LineToZero, Vertex::Int(x)) => line_resistance(w, 0, x),
        (PotentialSequence::LineToInfinity { horizon, analytic_tail }, Vertex::Int(x)) => {
            if *analytic_tail {
                // the closed-form tail only covers edges still on the default rule
                let past = state
                    .overrides()
                    .filter_map(|(e, _)| match e {
                        Edge::Line(j) => Some(j + 1),
                        _ => None,
                    })
                    .max()
                    .unwrap_or(0);
                super::resistance_to_infinity(state, t, x, (*horizon).max(past))
            } else {
                line_resistance(w, x.min(*horizon), *horizon)
            }
        }
        (PotentialSequence::TreeFlowVoltage { flow }, Vertex::Node(i)) => {
            let tr = topology.as_tree().expect("checked tree topology");
            if tr.depth(i) > flow.radius() {
                return Ok(f64::NAN);
            }
            Ok(tree::voltage_at(tr, |e| state.weight(e, t), flow, i))
        }
        _ => Ok(f64::NAN),
    }
}

/// Edges whose resistance enters the tracked potentials, in a fixed order.
fn tracked_edges(potential: &PotentialSequence, topology: &Topology, hi: i64, out: &mut Vec<Edge>) {
    out.clear();
    match potential {
        PotentialSequence::LineToZero | PotentialSequence::LineToInfinity { .. } => {
            out.extend((0..hi).map(Edge::Line));
        }
        PotentialSequence::TreeFlowVoltage { flow } => {
            let t = topology.as_tree().expect("checked tree topology");
            out.extend(
                (1..t.len() as u32)
                    .filter(|&v| t.depth(v) <= flow.radius())
                    .map(|v| t.edge_to_parent(v)),
            );
        }
    }
}

/// Replays the walk that produced `trajectory` and monitors the potential
/// sequence along it.
///
/// At every time `t` the report holds the harmonic-step identity at `X_t`
/// (skipped at stopped positions), the range of `F_{t+1} - F_t` over tracked
/// vertices, and `F_t(X_t)`. Tracked vertices are the line window
/// `0..=hi`, with `hi` past every visited vertex, every overridden edge and,
/// for time-dependent rules, every edge below `t + 2`; on a tree
/// they are the flow's ball.
pub fn martingale_monitor(
    trajectory: &Trajectory,
    topology: &Topology,
    env: &Environment,
    seed: u64,
    potential: &PotentialSequence,
) -> Result<MonitorReport, PotentialError> {
    let fits = match potential {
        PotentialSequence::LineToZero | PotentialSequence::LineToInfinity { .. } => {
            matches!(topology, Topology::LineN)
        }
        PotentialSequence::TreeFlowVoltage { flow } => topology
            .as_tree()
            .is_some_and(|t| t.len() == flow.values().len()),
    };
    if !fits {
        return Err(PotentialError::TopologyMismatch {
            potential: potential.name(),
            topology: topology.name(),
        });
    }
    let direction = Direction::of(env.class().monotonicity);
    let mut walker = Walker::new(topology.clone(), env.clone(), trajectory.start, seed)?;
    let mut recorded = trajectory.points.iter().peekable();
    let mut rows = Vec::with_capacity(trajectory.steps as usize + 1);
    let mut edges = Vec::new();
    let mut before = Vec::new();
    let mut nbrs = Vec::new();
    let mut far = match trajectory.start {
        Vertex::Int(x) => x,
        _ => 0,
    };
    let time_dependent = env.initial_state().rule().is_time_dependent();
    let tree_ball = match potential {
        PotentialSequence::TreeFlowVoltage { flow } => Some(flow.radius()),
        _ => None,
    };

    for _ in 0..=trajectory.steps {
        let t = walker.time();
        let x = walker.position();
        while let Some(&&(rt, rv)) = recorded.peek() {
            if rt > t {
                break;
            }
            recorded.next();
            if rt == t && rv != x {
                return Err(PotentialError::ReplayMismatch { t, recorded: rv, replayed: x });
            }
        }
        let state = &walker.state().conductances;

        let harmonic_residual = if potential.is_stopped(topology, x) {
            None
        } else {
            topology.neighbors_into(x, &mut nbrs);
            let mut total = CompensatedSum::new();
            let mut s = CompensatedSum::new();
            for &(_, e) in &nbrs {
                let w = state.weight(e, t);
                if w > 0.0 {
                    total.add(w);
                    s.add(w * increment(potential, topology, w, x, e));
                }
            }
            let total = total.value();
            (total > 0.0).then(|| s.value() / total)
        };
        let f_at_walker = value_at(potential, topology, state, t, x)?;

        if let Vertex::Int(p) = x {
            far = far.max(p);
        }
        let mut hi = far + 2;
        if let Some(m) = state.overrides().filter_map(|(e, _)| match e {
            Edge::Line(j) => Some(j),
            _ => None,
        }).max() {
            hi = hi.max(m + 2);
        }
        if time_dependent {
            hi = hi.max(t as i64 + 2);
        }
        // on a tree with a fixed rule only overridden edges can change, so
        // a snapshot of the state replaces the full sweep
        let sparse = tree_ball.is_some() && !time_dependent;
        let snapshot = sparse.then(|| state.clone());
        if !sparse {
            tracked_edges(potential, topology, hi, &mut edges);
            before.clear();
            before.extend(edges.iter().map(|&e| state.weight(e, t)));
        }

        if t == trajectory.steps {
            rows.push(MonitorRow {
                t,
                harmonic_residual,
                drift_max: 0.0,
                drift_min: 0.0,
                f_at_walker,
            });
            break;
        }
        match walker.step() {
            Ok(_) => {}
            Err(WalkError::AllIncidentZero { .. }) => {
                rows.push(MonitorRow {
                    t,
                    harmonic_residual,
                    drift_max: 0.0,
                    drift_min: 0.0,
                    f_at_walker,
                });
                break;
            }
            Err(e) => return Err(e.into()),
        }
        let after = &walker.state().conductances;
        if let (Some(prev), Some(radius)) = (&snapshot, tree_ball) {
            edges.clear();
            edges.extend(prev.overrides().chain(after.overrides()).map(|(e, _)| e).filter(|e| match e {
                Edge::Tree(_, level) => *level < radius,
                _ => false,
            }));
            edges.sort_unstable();
            edges.dedup();
            before.clear();
            before.extend(edges.iter().map(|&e| prev.weight(e, t)));
        }
        let (drift_max, drift_min) = drift_range(potential, topology, &edges, &before, |e| after.weight(e, t + 1));
        rows.push(MonitorRow {
            t,
            harmonic_residual,
            drift_max,
            drift_min,
            f_at_walker,
        });
    }
    Ok(MonitorReport {
        potential: potential.name(),
        direction,
        rows,
    })
}

fn resistance_change(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        1.0 / new - 1.0 / old
    }
}

/// Range of `F_{t+1}(v) - F_t(v)` over tracked vertices, accumulated from
/// per-edge resistance changes so equal-sign changes never cancel.
fn drift_range(
    potential: &PotentialSequence,
    topology: &Topology,
    edges: &[Edge],
    before: &[f64],
    after: impl Fn(Edge) -> f64,
) -> (f64, f64) {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut note = |d: f64| {
        hi = hi.max(d);
        lo = lo.min(d);
    };
    match potential {
        PotentialSequence::LineToZero => {
            // F(v) = sum_{j < v}; edges are 0..hi in order
            let mut s = CompensatedSum::new();
            note(0.0);
            for (&e, &w0) in edges.iter().zip(before) {
                s.add(resistance_change(w0, after(e)));
                note(s.value());
            }
        }
        PotentialSequence::LineToInfinity { horizon, analytic_tail } => {
            // F(v) = sum_{v <= j}; beyond the window only the time-independent tail remains
            let mut s = CompensatedSum::new();
            note(0.0);
            for (&e, &w0) in edges.iter().zip(before).rev() {
                if *analytic_tail || e.level() < *horizon {
                    s.add(resistance_change(w0, after(e)));
                }
                note(s.value());
            }
        }
        PotentialSequence::TreeFlowVoltage { flow } => {
            let t = topology.as_tree().expect("checked tree topology");
            // F_{t+1} - F_t at a vertex equals its value at the deepest listed
            // edge on its root path; edges come in vertex order, parents first
            let mut d: FxHashMap<u32, f64> = FxHashMap::default();
            note(0.0);
            for (&e, &w0) in edges.iter().zip(before) {
                let Edge::Tree(c, _) = e else { continue };
                let mut p = t.parent(c).expect("non-root has a parent");
                let base = loop {
                    if let Some(&v) = d.get(&p) {
                        break v;
                    }
                    match t.parent(p) {
                        Some(q) => p = q,
                        None => break 0.0,
                    }
                };
                let v = base + flow.current(c) * resistance_change(w0, after(e));
                d.insert(c, v);
                note(v);
            }
        }
    }
    (hi, lo)
}
