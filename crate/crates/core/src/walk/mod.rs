//! The RWCE transition law and the single-trajectory walk engine.
//!
//! Sequencing rule: on arrival at a vertex at time `t` the environment emits
//! its conductance updates, which produce `C_t`; the next position is then
//! drawn from `C_t` with one uniform variate, by inverse CDF over the
//! topology's canonical neighbor order.

mod exact;
mod trajectory;

pub use exact::{exact_hit_probability, ExactError};
pub use trajectory::{EndReason, Recording, RunOptions, Trajectory, VertexSet};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rustc_hash::FxHashMap;

use crate::conductance::{ConductanceError, ConductanceState};
use crate::env::{Environment, StateView};
use crate::topology::{Edge, Topology, Vertex};

/// Generator used for every walk: PCG-64 (MCG variant), seeded from a single
/// 64-bit value through `SeedableRng::seed_from_u64`.
pub type WalkRng = Pcg64Mcg;

pub fn rng_from_seed(seed: u64) -> WalkRng {
    Pcg64Mcg::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalkError {
    #[error("every edge incident to {at} has zero weight at t={t}")]
    AllIncidentZero { t: u64, at: Vertex },
    #[error(transparent)]
    Conductance(#[from] ConductanceError),
    #[error("{0} is not a vertex of the topology")]
    NotAVertex(Vertex),
    #[error("environment was configured for {env}, walk topology is {topology}")]
    TopologyMismatch { env: &'static str, topology: &'static str },
}

/// Time, position, conductances, visit record and generator of one walk.
#[derive(Clone, Debug)]
pub struct WalkState {
    pub t: u64,
    pub position: Vertex,
    pub conductances: ConductanceState,
    visits: FxHashMap<Vertex, u64>,
    rng: WalkRng,
}

impl WalkState {
    pub fn visits(&self, v: Vertex) -> u64 {
        self.visits.get(&v).copied().unwrap_or(0)
    }

    pub fn visited(&self, v: Vertex) -> bool {
        self.visits.contains_key(&v)
    }

    pub fn distinct_visited(&self) -> usize {
        self.visits.len()
    }
}

/// Exact next-step distribution `P(X_{t+1} = u) = C_t(X_t, u) / sum_e C_t(e)`,
/// in canonical neighbor order.
pub fn transition_distribution(topology: &Topology, state: &WalkState) -> Result<Vec<(Vertex, f64)>, WalkError> {
    let nbrs = topology.neighbors(state.position);
    let weights: Vec<f64> = nbrs
        .iter()
        .map(|&(_, e)| state.conductances.weight(e, state.t))
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(WalkError::AllIncidentZero {
            t: state.t,
            at: state.position,
        });
    }
    Ok(nbrs.iter().zip(weights).map(|(&(u, _), w)| (u, w / total)).collect())
}

/// Outcome of a successful step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Move {
    pub from: Vertex,
    pub to: Vertex,
    pub edge: Edge,
}

/// A walk in progress: topology, environment and state.
#[derive(Clone, Debug)]
pub struct Walker {
    topology: Topology,
    env: Environment,
    state: WalkState,
    nbrs: Vec<(Vertex, Edge)>,
    updates: Vec<(Edge, f64)>,
}

impl Walker {
    /// Places the walker at `start` at time 0 and lets the environment observe
    /// that arrival.
    pub fn new(topology: Topology, env: Environment, start: Vertex, seed: u64) -> Result<Self, WalkError> {
        if !topology.contains(start) {
            return Err(WalkError::NotAVertex(start));
        }
        if env.topology_name() != topology.name() {
            return Err(WalkError::TopologyMismatch {
                env: env.topology_name(),
                topology: topology.name(),
            });
        }
        let mut visits = FxHashMap::default();
        visits.insert(start, 1);
        let state = WalkState {
            t: 0,
            position: start,
            conductances: env.initial_state(),
            visits,
            rng: rng_from_seed(seed),
        };
        let mut w = Self {
            topology,
            env,
            state,
            nbrs: Vec::with_capacity(4),
            updates: Vec::new(),
        };
        w.arrive(None)?;
        Ok(w)
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn position(&self) -> Vertex {
        self.state.position
    }

    pub fn time(&self) -> u64 {
        self.state.t
    }

    pub fn transition_distribution(&self) -> Result<Vec<(Vertex, f64)>, WalkError> {
        transition_distribution(&self.topology, &self.state)
    }

    /// Draws the next position from `C_t`, advances time, and applies the
    /// environment's response to the arrival.
    pub fn step(&mut self) -> Result<Move, WalkError> {
        let from = self.state.position;
        let t = self.state.t;
        self.topology.neighbors_into(from, &mut self.nbrs);
        let mut total = 0.0;
        for &(_, e) in &self.nbrs {
            total += self.state.conductances.weight(e, t);
        }
        if total <= 0.0 {
            return Err(WalkError::AllIncidentZero { t, at: from });
        }
        let u: f64 = self.state.rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &(_, e)) in self.nbrs.iter().enumerate() {
            let w = self.state.conductances.weight(e, t);
            if w > 0.0 {
                acc += w;
                chosen = Some(i);
                if u < acc {
                    break;
                }
            }
        }
        // `chosen` is the last positive-weight neighbor if rounding left u >= acc
        let (to, edge) = self.nbrs[chosen.expect("total > 0 implies a positive weight")];
        self.state.t = t + 1;
        self.state.position = to;
        *self.state.visits.entry(to).or_insert(0) += 1;
        self.arrive(Some(edge))?;
        Ok(Move { from, to, edge })
    }

    fn arrive(&mut self, traversed: Option<Edge>) -> Result<(), WalkError> {
        let t = self.state.t;
        let pos = self.state.position;
        self.updates.clear();
        {
            let view = StateView {
                t,
                position: pos,
                traversed,
                visits: self.state.visits(pos),
                conductances: &self.state.conductances,
                topology: &self.topology,
            };
            self.env.updates_at(&view, &mut self.updates);
        }
        for &(e, w) in &self.updates {
            self.state.conductances.apply(e, w, t)?;
        }
        self.topology.neighbors_into(pos, &mut self.nbrs);
        for &(_, e) in &self.nbrs {
            self.state.conductances.check_default(e, t)?;
        }
        Ok(())
    }

    /// Runs up to `steps` steps under `options`.
    pub fn run(mut self, steps: u64, options: &RunOptions) -> Result<Trajectory, WalkError> {
        let mut traj = Trajectory::begin(&self.topology, self.state.position, options);
        if traj.observe(&self.topology, 0, self.state.position, options) {
            return Ok(traj.finish(self.state.position, EndReason::Stopped { t: 0 }));
        }
        for _ in 0..steps {
            match self.step() {
                Ok(mv) => {
                    if traj.observe(&self.topology, self.state.t, mv.to, options) {
                        let t = self.state.t;
                        return Ok(traj.finish(mv.to, EndReason::Stopped { t }));
                    }
                }
                Err(WalkError::AllIncidentZero { t, .. }) => {
                    return Ok(traj.finish(self.state.position, EndReason::Absorbed { t }));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(traj.finish(self.state.position, EndReason::Completed))
    }
}

/// Runs `steps` steps of the walk and records every position.
///
/// Deterministic in all inputs including `seed`. An absorbed walker (no
/// positive incident weight) ends the run early with
/// [`EndReason::Absorbed`].
pub fn run(topology: &Topology, env: Environment, start: Vertex, steps: u64, seed: u64) -> Result<Trajectory, WalkError> {
    run_with(topology, env, start, steps, seed, &RunOptions::default())
}

pub fn run_with(
    topology: &Topology,
    env: Environment,
    start: Vertex,
    steps: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<Trajectory, WalkError> {
    Walker::new(topology.clone(), env, start, seed)?.run(steps, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductance::Rule;
    use crate::env::{EdgeSelector, EnvironmentSpec, MawVariant};

    fn env(spec: EnvironmentSpec, topo: &Topology) -> Environment {
        Environment::new(&spec, topo).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let topo = Topology::LineN;
        let w = Walker::new(topo.clone(), env(EnvironmentSpec::Constant { c: 1.0 }, &topo), Vertex::Int(0), 1).unwrap();
        assert_eq!(w.transition_distribution().unwrap(), vec![(Vertex::Int(1), 1.0)]);

        // left weight 1, right weight 2 via the biased environment
        let w = Walker::new(topo.clone(), env(EnvironmentSpec::AdaptiveBias, &topo), Vertex::Int(4), 1).unwrap();
        let d = w.transition_distribution().unwrap();
        assert_eq!(d[0].0, Vertex::Int(3));
        assert!((d[0].1 - 1.0 / 3.0).abs() < 1e-16);
        assert!((d[1].1 - 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn maw_fresh_vertex_distribution() {
        let topo = Topology::Lattice2D;
        let w = Walker::new(
            topo.clone(),
            env(EnvironmentSpec::Maw { variant: MawVariant::Standard }, &topo),
            Vertex::Site(0, 0),
            3,
        )
        .unwrap();
        let d = w.transition_distribution().unwrap();
        let p: Vec<f64> = d.iter().map(|x| x.1).collect();
        assert_eq!(p, vec![1.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0]);
        let s = &w.state().conductances;
        assert_eq!(s.weight(Edge::Horizontal(-1, 0), 0), 1.0);
        assert_eq!(s.weight(Edge::Vertical(0, 0), 0), 2.0);
        assert_eq!(s.weight(Edge::Horizontal(0, 0), 0), 2.0);
        assert_eq!(s.weight(Edge::Vertical(0, -1), 0), 2.0);
    }

    #[test]
    fn maw_second_vertex_is_uniform_after_right_step() {
        let topo = Topology::Lattice2D;
        let mut w = Walker::new(
            topo.clone(),
            env(EnvironmentSpec::Maw { variant: MawVariant::Standard }, &topo),
            Vertex::Site(0, 0),
            0,
        )
        .unwrap();
        // find a seed path whose first step goes right
        for seed in 0.. {
            let mut c = Walker::new(
                topo.clone(),
                env(EnvironmentSpec::Maw { variant: MawVariant::Standard }, &topo),
                Vertex::Site(0, 0),
                seed,
            )
            .unwrap();
            if c.step().unwrap().to == Vertex::Site(1, 0) {
                w = c;
                break;
            }
        }
        let d = w.transition_distribution().unwrap();
        assert!(d.iter().all(|&(_, p)| p == 0.25), "{d:?}");
    }

    #[test]
    fn bridge_burning_absorbs_at_origin() {
        let topo = Topology::LineN;
        // from 0 the walker must cross (0,1), burning it; stepping back is
        // impossible, so the walk continues right from 1.
        let mut w = Walker::new(topo.clone(), env(EnvironmentSpec::BridgeBurning, &topo), Vertex::Int(0), 9).unwrap();
        let mv = w.step().unwrap();
        assert_eq!(mv.to, Vertex::Int(1));
        assert_eq!(w.transition_distribution().unwrap(), vec![(Vertex::Int(0), 0.0), (Vertex::Int(2), 1.0)]);

        // start at 1; if the walker steps to 0 it is absorbed there
        for seed in 0..64 {
            let mut w = Walker::new(topo.clone(), env(EnvironmentSpec::BridgeBurning, &topo), Vertex::Int(1), seed).unwrap();
            if w.step().unwrap().to == Vertex::Int(0) {
                assert_eq!(
                    w.step(),
                    Err(WalkError::AllIncidentZero { t: 1, at: Vertex::Int(0) })
                );
                let traj = run(&topo, env(EnvironmentSpec::BridgeBurning, &topo), Vertex::Int(1), 10, seed).unwrap();
                assert_eq!(traj.end, EndReason::Absorbed { t: 1 });
                return;
            }
        }
        panic!("no seed stepped left");
    }

    #[test]
    fn empty_run_and_determinism() {
        let topo = Topology::LineZ;
        let e = env(EnvironmentSpec::Constant { c: 1.0 }, &topo);
        let t0 = run(&topo, e.clone(), Vertex::Int(0), 0, 5).unwrap();
        assert_eq!(t0.points, vec![(0, Vertex::Int(0))]);
        let a = run(&topo, e.clone(), Vertex::Int(0), 1000, 5).unwrap();
        let b = run(&topo, e, Vertex::Int(0), 1000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let e = env(EnvironmentSpec::Constant { c: 1.0 }, &Topology::LineN);
        assert_eq!(
            Walker::new(Topology::LineN, e.clone(), Vertex::Int(-1), 0).err(),
            Some(WalkError::NotAVertex(Vertex::Int(-1)))
        );
        assert!(matches!(
            Walker::new(Topology::LineZ, e, Vertex::Int(0), 0).err(),
            Some(WalkError::TopologyMismatch { .. })
        ));
    }

    #[test]
    fn declared_bounds_are_checked_every_update() {
        let topo = Topology::LineN;
        let spec = EnvironmentSpec::AdaptiveEdge {
            base: Rule::Constant { c: 0.5 },
            target: Rule::Constant { c: 1.0 },
            edges: EdgeSelector::Right,
        };
        let traj = run(&topo, env(spec, &topo), Vertex::Int(5), 2000, 11).unwrap();
        assert_eq!(traj.steps, 2000);
    }
}
