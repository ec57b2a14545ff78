//! Electrical quantities and potential sequences.
//!
//! A potential sequence is a family of functions `F_t`, harmonic for `C_t`
//! away from its stopping set and pointwise monotone in `t`, so that
//! `F_t(X_t)` is a super- or sub-martingale. Three families are provided:
//!
//! * [`PotentialSequence::LineToZero`]: `F_t(v)` is the resistance between 0
//!   and `v`;
//! * [`PotentialSequence::LineToInfinity`]: the resistance between `v` and a
//!   horizon, optionally closed by an exact geometric tail;
//! * [`PotentialSequence::TreeFlowVoltage`]: the voltage a fixed unit current
//!   flow induces on the current tree conductances.

mod line;
mod monitor;
mod tree;

pub use line::{line_potential_window, line_resistance, resistance_to_infinity};
pub use monitor::{martingale_monitor, Direction, MonitorReport, MonitorRow};
pub use tree::{potential_from_flow, tree_effective_resistance, tree_unit_current_flow, FlowMap};

use std::sync::Arc;

use crate::numeric::CompensatedSum;
use crate::topology::{Edge, Topology, Vertex};
use crate::walk::WalkError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("edge {0} has non-positive weight")]
    ZeroWeightEdge(Edge),
    #[error("invalid vertex range [{a}, {b})")]
    InvalidRange { a: i64, b: i64 },
    #[error("ball of radius 0 has no boundary")]
    EmptyBall,
    #[error("radius {radius} ball has no path from the root to its boundary")]
    DisconnectedBall { radius: u32 },
    #[error("replay diverged at t={t}: recorded {recorded}, replayed {replayed}")]
    ReplayMismatch { t: u64, recorded: Vertex, replayed: Vertex },
    #[error("no closed-form tail for this conductance rule; use a finite horizon")]
    NoAnalyticTail,
    #[error("potential {potential} does not apply to topology {topology}")]
    TopologyMismatch { potential: &'static str, topology: &'static str },
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// A potential sequence `F_t`, evaluated against the conductances of the walk.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSequence {
    /// `F_t(v) = sum_{0 <= j < v} 1 / C_t(j)`.
    LineToZero,
    /// `F_t(v) = sum_{v <= j < horizon} 1 / C_t(j)`, plus the resistance of
    /// the default rule beyond the horizon when `analytic_tail` is set.
    LineToInfinity { horizon: i64, analytic_tail: bool },
    /// `F_t(v) = sum over root-path edges of i(e) / C_t(e)` for a fixed flow.
    TreeFlowVoltage { flow: Arc<FlowMap> },
}

impl PotentialSequence {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialSequence::LineToZero => "line_to_zero",
            PotentialSequence::LineToInfinity { .. } => "line_to_infinity",
            PotentialSequence::TreeFlowVoltage { .. } => "tree_flow_voltage",
        }
    }

    /// Vertices where harmonicity is not claimed: the origin, plus the
    /// horizon and beyond for a truncated line potential, plus the ball
    /// boundary for a tree potential.
    pub fn is_stopped(&self, topology: &Topology, v: Vertex) -> bool {
        match (self, v) {
            (PotentialSequence::LineToZero, Vertex::Int(x)) => x == 0,
            (
                PotentialSequence::LineToInfinity {
                    horizon,
                    analytic_tail,
                },
                Vertex::Int(x),
            ) => x <= 0 || (!analytic_tail && x >= *horizon),
            (PotentialSequence::TreeFlowVoltage { flow }, Vertex::Node(i)) => match topology {
                Topology::Tree(t) => i == 0 || t.depth(i) >= flow.radius(),
                _ => true,
            },
            _ => true,
        }
    }
}

/// `sum_{u ~ v} C(v, u) (F(u) - F(v))`; zero exactly when `F` is harmonic at `v`.
pub fn harmonicity_residual(
    topology: &Topology,
    f: impl Fn(Vertex) -> f64,
    weight: impl Fn(Edge) -> f64,
    v: Vertex,
) -> f64 {
    let fv = f(v);
    let mut s = CompensatedSum::new();
    for (u, e) in topology.neighbors(v) {
        s.add(weight(e) * (f(u) - fv));
    }
    s.value()
}
