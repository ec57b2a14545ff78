//! The environment catalog: every update rule is a parameterized instance of
//! [`Environment`], built from a JSON-compatible [`EnvironmentSpec`].
//!
//! Nonadaptive entries carry their whole time dependence in the closed-form
//! [`Rule`] of the conductance state and never emit overrides. Adaptive
//! entries observe the walker's arrival and emit sparse overrides.

use rustc_hash::{FxHashMap, FxHashSet};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::conductance::{ConductanceState, Monotonicity, Rule};
use crate::topology::{Edge, Topology, Vertex};

/// Which edges an [`EnvironmentSpec::AdaptiveEdge`] environment rewrites on arrival.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSelector {
    /// The edge `(x, x+1)` of a line walker at `x`.
    #[default]
    Right,
    /// Every child edge of a tree walker's vertex.
    Children,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MawVariant {
    /// Boost the up, right and down edges of each arrival vertex to 2.
    #[default]
    Standard,
    /// Boost only the right edge.
    RightOnly,
}

/// JSON description of an environment: `{"name": ..., <parameters>}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Constant {
        #[serde(default = "one")]
        c: f64,
    },
    Wave {
        period: u64,
        high: f64,
    },
    CounterWave {
        period: u64,
        factor: f64,
        base: f64,
    },
    AdaptiveBias,
    DecayFront,
    MultiWave {
        /// Start times of the waves; overrides `t0`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schedule: Option<Vec<u64>>,
        /// Default schedule `t0 * 4^n`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<u64>,
    },
    ReinforcedOnce {
        c: f64,
    },
    BridgeBurning,
    TrueSaw {
        c: f64,
    },
    Maw {
        #[serde(default)]
        variant: MawVariant,
    },
    /// Theorem-scenario building block: on arrival, the selected edges are
    /// moved from `base` to `target`, making `target` the bound.
    AdaptiveEdge {
        base: Rule,
        target: Rule,
        #[serde(default)]
        edges: EdgeSelector,
    },
}

fn one() -> f64 {
    1.0
}

/// Default `t0` of the multi-wave schedule.
pub const MULTI_WAVE_T0: u64 = 16;

impl EnvironmentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvironmentSpec::Constant { .. } => "constant",
            EnvironmentSpec::Wave { .. } => "wave",
            EnvironmentSpec::CounterWave { .. } => "counter_wave",
            EnvironmentSpec::AdaptiveBias => "adaptive_bias",
            EnvironmentSpec::DecayFront => "decay_front",
            EnvironmentSpec::MultiWave { .. } => "multi_wave",
            EnvironmentSpec::ReinforcedOnce { .. } => "reinforced_once",
            EnvironmentSpec::BridgeBurning => "bridge_burning",
            EnvironmentSpec::TrueSaw { .. } => "true_saw",
            EnvironmentSpec::Maw { .. } => "maw",
            EnvironmentSpec::AdaptiveEdge { .. } => "adaptive_edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("invalid parameter for `{env}`: {reason}")]
    InvalidParameter { env: &'static str, reason: String },
}

fn invalid(env: &'static str, reason: impl Into<String>) -> EnvError {
    EnvError::InvalidParameter {
        env,
        reason: reason.into(),
    }
}

/// Declared class of an environment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvClass {
    pub monotonicity: Monotonicity,
    pub lower: Option<Rule>,
    pub upper: Option<Rule>,
    pub adaptive: bool,
    pub proper: bool,
}

/// Read-only view of the walk handed to an environment on each arrival.
#[derive(Clone, Copy, Debug)]
pub struct StateView<'a> {
    pub t: u64,
    pub position: Vertex,
    /// Edge just traversed; `None` at initialization.
    pub traversed: Option<Edge>,
    /// Number of visits to `position`, including this arrival.
    pub visits: u64,
    pub conductances: &'a ConductanceState,
    pub topology: &'a Topology,
}

#[derive(Clone, Debug)]
enum Memory {
    None,
    Boosted(Option<Edge>),
    Traversals(FxHashMap<Edge, u32>),
    Visited(FxHashSet<Vertex>),
}

/// A configured environment instance, owned by one walk.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvironmentSpec,
    class: EnvClass,
    rule: Rule,
    topology: &'static str,
    memory: Memory,
}

fn require_line(env: &'static str, topo: &Topology, half_line_only: bool) -> Result<(), EnvError> {
    match topo {
        Topology::LineN => Ok(()),
        Topology::LineZ if !half_line_only => Ok(()),
        other => Err(invalid(
            env,
            format!(
                "requires {}, got {}",
                if half_line_only { "line_n" } else { "line_n or line_z" },
                other.name()
            ),
        )),
    }
}

fn positive(env: &'static str, what: &str, x: f64) -> Result<(), EnvError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(env, format!("{what} must be finite and > 0, got {x}")))
    }
}

fn constant(c: f64) -> Option<Rule> {
    Some(Rule::Constant { c })
}

/// Builds the multi-wave schedule `t0 * 4^n`, truncated before overflow.
pub fn multi_wave_schedule(t0: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut t = t0 as u128;
    while t <= u64::MAX as u128 / 2 && out.len() < 64 {
        out.push(t as u64);
        t *= 4;
    }
    out
}

impl Environment {
    /// Validates `spec` against `topology` and returns a configured instance.
    pub fn new(spec: &EnvironmentSpec, topology: &Topology) -> Result<Self, EnvError> {
        let name = spec.name();
        let (rule, class, memory) = match spec {
            EnvironmentSpec::Constant { c } => {
                positive(name, "c", *c)?;
                (
                    Rule::Constant { c: *c },
                    EnvClass {
                        monotonicity: Monotonicity::None,
                        lower: constant(*c),
                        upper: constant(*c),
                        adaptive: false,
                        proper: true,
                    },
                    Memory::None,
                )
            }
            EnvironmentSpec::Wave { period, high } => {
                require_line(name, topology, false)?;
                if *period == 0 {
                    return Err(invalid(name, "period must be > 0"));
                }
                positive(name, "high", *high)?;
                (
                    Rule::Wave {
                        period: *period,
                        high: *high,
                    },
                    EnvClass {
                        monotonicity: Monotonicity::None,
                        lower: constant(high.min(1.0)),
                        upper: constant(high.max(1.0)),
                        adaptive: false,
                        proper: true,
                    },
                    Memory::None,
                )
            }
            EnvironmentSpec::CounterWave { period, factor, base } => {
                require_line(name, topology, true)?;
                if *period == 0 {
                    return Err(invalid(name, "period must be > 0"));
                }
                positive(name, "factor", *factor)?;
                positive(name, "base", *base)?;
                (
                    Rule::CounterWave {
                        period: *period,
                        factor: *factor,
                        base: *base,
                    },
                    EnvClass {
                        monotonicity: Monotonicity::None,
                        lower: Some(Rule::Geometric {
                            scale: factor.min(1.0),
                            base: *base,
                        }),
                        upper: Some(Rule::Geometric {
                            scale: factor.max(1.0),
                            base: *base,
                        }),
                        adaptive: false,
                        proper: true,
                    },
                    Memory::None,
                )
            }
            EnvironmentSpec::AdaptiveBias => {
                require_line(name, topology, false)?;
                (
                    Rule::Constant { c: 1.0 },
                    EnvClass {
                        monotonicity: Monotonicity::None,
                        lower: constant(1.0),
                        upper: constant(2.0),
                        adaptive: true,
                        proper: true,
                    },
                    Memory::Boosted(None),
                )
            }
            EnvironmentSpec::DecayFront => {
                require_line(name, topology, true)?;
                (
                    Rule::DecayFront,
                    EnvClass {
                        monotonicity: Monotonicity::Decreasing,
                        lower: Some(Rule::Geometric { scale: 1.0, base: 0.5 }),
                        upper: constant(1.0),
                        adaptive: false,
                        proper: true,
                    },
                    Memory::None,
                )
            }
            EnvironmentSpec::MultiWave { schedule, t0 } => {
                require_line(name, topology, true)?;
                let starts = match (schedule, t0) {
                    (Some(s), _) => s.clone(),
                    (None, Some(t0)) => multi_wave_schedule(*t0),
                    (None, None) => multi_wave_schedule(MULTI_WAVE_T0),
                };
                if starts.is_empty() {
                    return Err(invalid(name, "schedule must not be empty"));
                }
                if starts.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid(name, "schedule must be strictly increasing"));
                }
                if t0 == &Some(0) && schedule.is_none() {
                    return Err(invalid(name, "t0 must be > 0"));
                }
                (
                    Rule::MultiWave { starts },
                    EnvClass {
                        monotonicity: Monotonicity::Decreasing,
                        lower: None,
                        upper: constant(1.0),
                        adaptive: false,
                        proper: true,
                    },
                    Memory::None,
                )
            }
            EnvironmentSpec::ReinforcedOnce { c } => {
                if !(c.is_finite() && *c >= 1.0) {
                    return Err(invalid(name, format!("c must be finite and >= 1, got {c}")));
                }
                (
                    Rule::Constant { c: 1.0 },
                    EnvClass {
                        monotonicity: Monotonicity::Increasing,
                        lower: constant(1.0),
                        upper: constant(*c),
                        adaptive: true,
                        proper: true,
                    },
                    Memory::Traversals(FxHashMap::default()),
                )
            }
            EnvironmentSpec::BridgeBurning => (
                Rule::Constant { c: 1.0 },
                EnvClass {
                    monotonicity: Monotonicity::Decreasing,
                    lower: constant(0.0),
                    upper: constant(1.0),
                    adaptive: true,
                    proper: false,
                },
                Memory::None,
            ),
            EnvironmentSpec::TrueSaw { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(invalid(name, format!("c must be finite and >= 0, got {c}")));
                }
                (
                    Rule::Constant { c: 1.0 },
                    EnvClass {
                        monotonicity: Monotonicity::Decreasing,
                        lower: constant(0.0),
                        upper: constant(1.0),
                        adaptive: true,
                        proper: true,
                    },
                    Memory::Traversals(FxHashMap::default()),
                )
            }
            EnvironmentSpec::Maw { .. } => {
                if !matches!(topology, Topology::Lattice2D) {
                    return Err(invalid(
                        name,
                        format!("requires lattice2d, got {}", topology.name()),
                    ));
                }
                (
                    Rule::Constant { c: 1.0 },
                    EnvClass {
                        monotonicity: Monotonicity::Increasing,
                        lower: constant(1.0),
                        upper: constant(2.0),
                        adaptive: true,
                        proper: true,
                    },
                    Memory::Visited(FxHashSet::default()),
                )
            }
            EnvironmentSpec::AdaptiveEdge { base, target, edges } => {
                match (edges, topology) {
                    (EdgeSelector::Right, Topology::LineN | Topology::LineZ) => {}
                    (EdgeSelector::Children, Topology::Tree(_)) => {}
                    (sel, topo) => {
                        return Err(invalid(
                            name,
                            format!("edge selector {sel:?} does not apply to {}", topo.name()),
                        ))
                    }
                }
                if base.is_time_dependent() || target.is_time_dependent() {
                    return Err(invalid(name, "base and target must be time-independent rules"));
                }
                let levels = 0..64i64;
                let mut up = true;
                let mut down = true;
                for j in levels {
                    let e = Edge::Line(j);
                    let (b, t) = (base.weight(e, 0), target.weight(e, 0));
                    if !(b.is_finite() && b > 0.0 && t.is_finite() && t > 0.0) {
                        return Err(invalid(name, format!("non-positive weight at level {j}")));
                    }
                    up &= t >= b;
                    down &= t <= b;
                }
                let (monotonicity, lower, upper) = if up {
                    (Monotonicity::Increasing, base.clone(), target.clone())
                } else if down {
                    (Monotonicity::Decreasing, target.clone(), base.clone())
                } else {
                    return Err(invalid(name, "target must lie on one side of base at every level"));
                };
                (
                    base.clone(),
                    EnvClass {
                        monotonicity,
                        lower: Some(lower),
                        upper: Some(upper),
                        adaptive: true,
                        proper: true,
                    },
                    Memory::None,
                )
            }
        };
        Ok(Self {
            spec: spec.clone(),
            class,
            rule,
            topology: topology.name(),
            memory,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn name(&self) -> &'static str {
        self.spec.name()
    }

    pub fn class(&self) -> &EnvClass {
        &self.class
    }

    pub fn is_adaptive(&self) -> bool {
        self.class.adaptive
    }

    /// Name of the topology this instance was validated against.
    pub fn topology_name(&self) -> &'static str {
        self.topology
    }

    /// The conductance field at time 0, before any arrival is observed.
    pub fn initial_state(&self) -> ConductanceState {
        ConductanceState::new(
            self.rule.clone(),
            self.class.monotonicity,
            self.class.lower.clone(),
            self.class.upper.clone(),
        )
    }

    /// Observes the walker's arrival at `view.position` at time `view.t` and
    /// appends the resulting conductance overrides to `out`.
    pub fn updates_at(&mut self, view: &StateView<'_>, out: &mut Vec<(Edge, f64)>) {
        match (&self.spec, &mut self.memory) {
            (EnvironmentSpec::AdaptiveBias, Memory::Boosted(prev)) => {
                let Vertex::Int(x) = view.position else { return };
                let now = Edge::Line(x);
                if let Some(p) = *prev {
                    if p != now {
                        out.push((p, 1.0));
                    }
                }
                out.push((now, 2.0));
                *prev = Some(now);
            }
            (EnvironmentSpec::ReinforcedOnce { c }, Memory::Traversals(counts)) => {
                if let Some(e) = view.traversed {
                    let k = counts.entry(e).or_insert(0);
                    if *k == 0 {
                        out.push((e, *c));
                    }
                    *k += 1;
                }
            }
            (EnvironmentSpec::BridgeBurning, _) => {
                if let Some(e) = view.traversed {
                    out.push((e, 0.0));
                }
            }
            (EnvironmentSpec::TrueSaw { c }, Memory::Traversals(counts)) => {
                if let Some(e) = view.traversed {
                    let k = counts.entry(e).or_insert(0);
                    *k += 1;
                    out.push((e, (-c * f64::from(*k)).exp()));
                }
            }
            (EnvironmentSpec::Maw { variant }, Memory::Visited(seen)) => {
                let Vertex::Site(x, y) = view.position else { return };
                if seen.insert(view.position) {
                    let boosted: &[Edge] = match variant {
                        MawVariant::Standard => &[
                            Edge::Vertical(x, y),
                            Edge::Horizontal(x, y),
                            Edge::Vertical(x, y - 1),
                        ],
                        MawVariant::RightOnly => &[Edge::Horizontal(x, y)],
                    };
                    for &e in boosted {
                        if view.conductances.weight(e, view.t) < 2.0 {
                            out.push((e, 2.0));
                        }
                    }
                }
            }
            (EnvironmentSpec::AdaptiveEdge { target, edges, .. }, _) => match (edges, view.position) {
                (EdgeSelector::Right, Vertex::Int(x)) => {
                    let e = Edge::Line(x);
                    out.push((e, target.weight(e, view.t)));
                }
                (EdgeSelector::Children, Vertex::Node(v)) => {
                    if let Topology::Tree(tree) = view.topology {
                        for &c in tree.children(v) {
                            let e = tree.edge_to_parent(c);
                            out.push((e, target.weight(e, view.t)));
                        }
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }
}

/// Catalog entry description for listings.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: &'static str,
    pub example: EnvironmentSpec,
    pub topologies: &'static str,
    pub monotonicity: Monotonicity,
    pub bounds: String,
    pub adaptive: bool,
    pub proper: bool,
    pub origin: &'static str,
}

fn describe_bound(r: &Option<Rule>) -> String {
    match r {
        None => "none".into(),
        Some(Rule::Constant { c }) => format!("{c}"),
        Some(Rule::Geometric { scale, base }) => format!("{scale}*{base}^j"),
        Some(other) => format!("{other:?}"),
    }
}

/// The ten catalog environments with their declared classes.
pub fn catalog() -> Vec<CatalogEntry> {
    let entries: [(&str, &str, EnvironmentSpec, Topology, &str); 10] = [
        (
            "c",
            "any",
            EnvironmentSpec::Constant { c: 1.0 },
            Topology::LineN,
            "time-homogeneous network walk",
        ),
        (
            "period, high",
            "line_n, line_z",
            EnvironmentSpec::Wave { period: 100, high: 100.0 },
            Topology::LineN,
            "traveling wave of high conductance: transient under recurrent bounds",
        ),
        (
            "period, factor, base",
            "line_n",
            EnvironmentSpec::CounterWave {
                period: 100,
                factor: 1000.0,
                base: 2.0,
            },
            Topology::LineN,
            "counter-moving wave on 2^j conductances: recurrent under transient bounds",
        ),
        (
            "",
            "line_n, line_z",
            EnvironmentSpec::AdaptiveBias,
            Topology::LineN,
            "walker's right edge doubled: adaptive biased walk",
        ),
        (
            "",
            "line_n",
            EnvironmentSpec::DecayFront,
            Topology::LineN,
            "decaying front 2^-j for j<t: mixed type",
        ),
        (
            "schedule | t0",
            "line_n",
            EnvironmentSpec::MultiWave { schedule: None, t0: None },
            Topology::LineN,
            "repeated decaying fronts, each one edge further",
        ),
        (
            "c",
            "any",
            EnvironmentSpec::ReinforcedOnce { c: 2.0 },
            Topology::LineN,
            "once-reinforced random walk",
        ),
        (
            "",
            "any",
            EnvironmentSpec::BridgeBurning,
            Topology::LineN,
            "bridge-burning random walk",
        ),
        (
            "c",
            "any",
            EnvironmentSpec::TrueSaw { c: 1.0 },
            Topology::LineN,
            "true self-avoiding walk with bond repulsion",
        ),
        (
            "variant",
            "lattice2d",
            EnvironmentSpec::Maw {
                variant: MawVariant::Standard,
            },
            Topology::Lattice2D,
            "monotone adaptive walk on the square lattice",
        ),
    ];
    entries
        .into_iter()
        .map(|(parameters, topologies, example, topo, origin)| {
            let env = Environment::new(&example, &topo).expect("catalog examples are valid");
            let class = env.class().clone();
            CatalogEntry {
                name: example.name(),
                parameters,
                topologies,
                monotonicity: class.monotonicity,
                bounds: format!(
                    "[{}, {}]",
                    describe_bound(&class.lower),
                    describe_bound(&class.upper)
                ),
                adaptive: class.adaptive,
                proper: class.proper,
                origin,
                example,
            }
        })
        .collect()
}

/// Probability that the decay-front walk started at 0 on the half line steps
/// right at each of its first `m` steps.
///
/// Evaluated from the environment's own conductances along the all-right path:
/// at time `t` the walker sits at `t` and steps right with probability
/// `C_t(t) / (C_t(t-1) + C_t(t))`.
pub fn always_right_probability(m: u64) -> f64 {
    let env = Environment::new(&EnvironmentSpec::DecayFront, &Topology::LineN)
        .expect("decay_front is valid on line_n");
    let state = env.initial_state();
    let mut p = 1.0;
    for t in 1..m {
        let x = t as i64;
        let left = state.weight(Edge::Line(x - 1), t);
        let right = state.weight(Edge::Line(x), t);
        p *= right / (left + right);
    }
    p
}
