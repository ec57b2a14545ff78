//! Random walks in changing environments.
//!
//! A walker on a line, a rooted tree or the square lattice steps along an
//! edge with probability proportional to its current conductance, while an
//! [`env::Environment`] rewrites conductances as time passes or in response
//! to the walker's history.
//!
//! * [`walk`]: the transition law and the seeded single-trajectory engine
//! * [`env`]: the catalog of environments
//! * [`potential`]: resistances, unit current flows, potentials and
//!   martingale monitors
//! * [`mc`]: parallel Monte Carlo harness, estimators and bound checks
//! * [`maw`]: the monotone adaptive walk on `Z^2`, its coupling with simple
//!   random walk, tan points and drift experiments

pub mod conductance;
pub mod mc;
pub mod env;
pub mod maw;
pub mod numeric;
pub mod potential;
pub mod topology;
pub mod walk;

pub use conductance::{ConductanceState, Monotonicity, Rule};
pub use env::{Environment, EnvironmentSpec};
pub use topology::{Edge, RootedTree, Topology, TopologySpec, Vertex};
pub use walk::{run, Trajectory, WalkError, Walker};
