use std::io::{self, Write};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::topology::{Topology, Vertex};

/// A set of vertices used as hitting targets or stopping sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum VertexSet {
    Points(Vec<Vertex>),
    /// Line vertices `x >= bound`.
    AtLeast(i64),
    /// Line vertices `x <= bound`.
    AtMost(i64),
    /// Tree vertices at depth `>= bound`.
    DepthAtLeast(u32),
}

impl VertexSet {
    pub fn point(v: Vertex) -> Self {
        VertexSet::Points(vec![v])
    }

    pub fn contains(&self, topology: &Topology, v: Vertex) -> bool {
        match (self, v) {
            (VertexSet::Points(ps), _) => ps.contains(&v),
            (VertexSet::AtLeast(b), Vertex::Int(x)) => x >= *b,
            (VertexSet::AtMost(b), Vertex::Int(x)) => x <= *b,
            (VertexSet::DepthAtLeast(d), Vertex::Node(i)) => match topology {
                Topology::Tree(t) => t.depth(i) >= *d,
                _ => false,
            },
            _ => false,
        }
    }
}

/// What positions a run keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Recording {
    /// Every position.
    #[default]
    Full,
    /// Every `k`-th time plus the final position.
    Thinned(u64),
    /// Summary counters only.
    Off,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub recording: Recording,
    /// Registered target sets whose first-hit times are tracked.
    pub targets: Vec<VertexSet>,
    /// Stop as soon as any registered target set is hit.
    pub stop_on_target: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    /// Every incident edge had zero weight at time `t`.
    Absorbed { t: u64 },
    /// A registered target set was hit at time `t`.
    Stopped { t: u64 },
}

/// Recorded positions of a walk with summary counters.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub start: Vertex,
    /// `(time, position)` pairs; empty when recording is off.
    pub points: Vec<(u64, Vertex)>,
    /// Number of steps actually taken.
    pub steps: u64,
    pub final_position: Vertex,
    pub end: EndReason,
    /// Number of times `t >= 1` with `X_t = start`.
    pub returns_to_start: u64,
    pub last_return: Option<u64>,
    /// Maximum graph distance from `start`.
    pub max_displacement: u64,
    /// First time each registered target set was hit.
    pub first_hits: Vec<Option<u64>>,
}

impl Trajectory {
    pub(crate) fn begin(_topology: &Topology, start: Vertex, options: &RunOptions) -> Self {
        Self {
            start,
            points: Vec::new(),
            steps: 0,
            final_position: start,
            end: EndReason::Completed,
            returns_to_start: 0,
            last_return: None,
            max_displacement: 0,
            first_hits: vec![None; options.targets.len()],
        }
    }

    /// Records position `v` at time `t`; returns true if the run must stop.
    pub(crate) fn observe(&mut self, topology: &Topology, t: u64, v: Vertex, options: &RunOptions) -> bool {
        match options.recording {
            Recording::Full => self.points.push((t, v)),
            Recording::Thinned(k) if t.is_multiple_of(k.max(1)) => self.points.push((t, v)),
            _ => {}
        }
        self.steps = t;
        if t > 0 && v == self.start {
            self.returns_to_start += 1;
            self.last_return = Some(t);
        }
        let d = topology.distance(self.start, v);
        self.max_displacement = self.max_displacement.max(d);
        let mut hit = false;
        for (set, slot) in options.targets.iter().zip(self.first_hits.iter_mut()) {
            if set.contains(topology, v) {
                if slot.is_none() {
                    *slot = Some(t);
                }
                hit = true;
            }
        }
        hit && options.stop_on_target
    }

    pub(crate) fn finish(mut self, last: Vertex, end: EndReason) -> Self {
        self.final_position = last;
        self.end = end;
        if let Some(&(t, _)) = self.points.last() {
            if t != self.steps {
                self.points.push((self.steps, last));
            }
        }
        self
    }

    /// Positions in time order (only meaningful for full recordings).
    pub fn positions(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// Writes `t,x` (line and tree) or `t,x,y` (lattice) rows, keeping every
    /// `thin`-th recorded row.
    pub fn write_csv<W: Write>(&self, mut w: W, thin: u64) -> io::Result<()> {
        let lattice = matches!(self.start, Vertex::Site(..));
        writeln!(w, "{}", if lattice { "t,x,y" } else { "t,x" })?;
        for (i, &(t, v)) in self.points.iter().enumerate() {
            if !(i as u64).is_multiple_of(thin.max(1)) {
                continue;
            }
            match v {
                Vertex::Int(x) => writeln!(w, "{t},{x}")?,
                Vertex::Node(n) => writeln!(w, "{t},{n}")?,
                Vertex::Site(x, y) => writeln!(w, "{t},{x},{y}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, EnvironmentSpec};
    use crate::walk::run_with;

    #[test]
    fn counters_match_recount() {
        let topo = Topology::LineZ;
        let env = Environment::new(&EnvironmentSpec::Constant { c: 1.0 }, &topo).unwrap();
        let opts = RunOptions {
            targets: vec![VertexSet::AtLeast(10), VertexSet::point(Vertex::Int(-3))],
            ..Default::default()
        };
        for seed in 0..20 {
            let tr = run_with(&topo, env.clone(), Vertex::Int(0), 500, seed, &opts).unwrap();
            let xs: Vec<i64> = tr.positions().map(|v| v.as_int().unwrap()).collect();
            assert_eq!(xs.len(), 501);
            assert!(xs.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
            let returns: Vec<usize> = (1..xs.len()).filter(|&i| xs[i] == 0).collect();
            assert_eq!(tr.returns_to_start as usize, returns.len());
            assert_eq!(tr.last_return, returns.last().map(|&i| i as u64));
            assert_eq!(tr.max_displacement, xs.iter().map(|x| x.unsigned_abs()).max().unwrap());
            assert_eq!(tr.first_hits[0], xs.iter().position(|&x| x >= 10).map(|i| i as u64));
            assert_eq!(tr.first_hits[1], xs.iter().position(|&x| x == -3).map(|i| i as u64));
        }
    }

    #[test]
    fn csv_layout() {
        let topo = Topology::Lattice2D;
        let env = Environment::new(&EnvironmentSpec::Constant { c: 1.0 }, &topo).unwrap();
        let tr = run_with(&topo, env, Vertex::Site(0, 0), 4, 1, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 2).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,x,y");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,0");
        assert!(lines[2].starts_with("2,"));
    }

    #[test]
    fn thinned_recording_keeps_final_point() {
        let topo = Topology::LineZ;
        let env = Environment::new(&EnvironmentSpec::Constant { c: 1.0 }, &topo).unwrap();
        let opts = RunOptions {
            recording: Recording::Thinned(10),
            ..Default::default()
        };
        let tr = run_with(&topo, env, Vertex::Int(0), 25, 1, &opts).unwrap();
        let ts: Vec<u64> = tr.points.iter().map(|p| p.0).collect();
        assert_eq!(ts, vec![0, 10, 20, 25]);
        assert_eq!(tr.points.last().unwrap().1, tr.final_position);
    }
}
