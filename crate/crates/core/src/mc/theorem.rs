use std::fmt;
use std::io::{self, Write};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::estimate::{hit_trial, HitQuery, Outcome};
use super::{derive_trial_seed, EstimateWithCI, Harness, McError};
use crate::conductance::{Monotonicity, Rule};
use crate::env::{EdgeSelector, Environment, EnvironmentSpec};
use crate::potential::{
    line_resistance, potential_from_flow, resistance_to_infinity, tree_effective_resistance, tree_unit_current_flow,
};
use crate::topology::{Edge, Topology, TopologySpec, Vertex};
use crate::walk::{VertexSet, Walker};

/// The six potential-sequence bounds: monotonicity, recurrence type of the
/// bounding graph, and graph family (`N` for the half-line, `T` for trees).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub enum TheoremId {
    /// Increasing, bounded above by a recurrent line:
    /// `P(hit v before 0) <= F_0(X_0) / R_inf(0, v)`.
    #[serde(rename = "inc_rec_N")]
    IncRecN,
    /// Increasing, bounded above by a transient line:
    /// `P(hit 0 before L) <= F_0(X_0) / F_inf(0)` with `F` the resistance to infinity.
    #[serde(rename = "inc_tra_N")]
    IncTraN,
    /// Decreasing, bounded below by a transient line:
    /// `P(hit v before 0) >= F_0(X_0) / R_inf(0, v)`.
    #[serde(rename = "dec_tra_N")]
    DecTraN,
    /// Decreasing with `C_inf >= c C_0`:
    /// `P(hit 0 before n) >= R_0(X_0, n) / R_inf(0, n)`, at least `c/2` when `n >= 2 X_0` on unit weights.
    #[serde(rename = "dec_rec_N")]
    DecRecN,
    /// Increasing, bounded above by a tree:
    /// `P(hit depth n before the root) <= F_0(X_0) / R_eff(G_inf, n)`.
    #[serde(rename = "inc_rec_T")]
    IncRecT,
    /// Decreasing, bounded below by a tree:
    /// `P(hit depth n before the root) >= F_0(X_0) / R_eff(G_inf, n)`.
    #[serde(rename = "dec_tra_T")]
    DecTraT,
}

impl TheoremId {
    pub const ALL: [TheoremId; 6] = [
        TheoremId::IncRecN,
        TheoremId::IncTraN,
        TheoremId::DecTraN,
        TheoremId::DecRecN,
        TheoremId::IncRecT,
        TheoremId::DecTraT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::IncRecN => "inc_rec_N",
            TheoremId::IncTraN => "inc_tra_N",
            TheoremId::DecTraN => "dec_tra_N",
            TheoremId::DecRecN => "dec_rec_N",
            TheoremId::IncRecT => "inc_rec_T",
            TheoremId::DecTraT => "dec_tra_T",
        }
    }

    fn increasing(self) -> bool {
        matches!(self, TheoremId::IncRecN | TheoremId::IncTraN | TheoremId::IncRecT)
    }

    fn on_tree(self) -> bool {
        matches!(self, TheoremId::IncRecT | TheoremId::DecTraT)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// The probability is claimed to be at most the bound.
    Upper,
    /// The probability is claimed to be at least the bound.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violation,
    /// Capped trials decide the outcome.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Violation => "violation",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A configured bound check. `level` is `v` (inc_rec_N, dec_tra_N), `L`
/// (inc_tra_N), `n` (dec_rec_N) or the ball radius (tree theorems).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TheoremScenario {
    pub name: String,
    pub theorem: TheoremId,
    pub topology: TopologySpec,
    pub env: EnvironmentSpec,
    pub start: Vertex,
    pub level: u32,
    pub trials: u64,
    pub step_cap: u64,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub scenario: String,
    pub theorem: TheoremId,
    pub kind: BoundKind,
    /// Human-readable event whose probability is bounded.
    pub event: String,
    pub bound: f64,
    /// `F_0(X_0)`.
    pub potential_at_start: f64,
    /// The denominator of the bound.
    pub resistance: f64,
    /// Ratio `c` with `C_inf >= c C_0` (dec_rec_N only).
    pub c: Option<f64>,
    /// Capped trials counted against the bound.
    pub estimate: EstimateWithCI,
    pub hits: u64,
    pub capped: u64,
    pub verdict: Verdict,
    pub inputs: TheoremScenario,
}

fn mismatch(theorem: TheoremId, reason: impl Into<String>) -> McError {
    McError::HypothesisMismatch {
        theorem,
        reason: reason.into(),
    }
}

/// `Some(true)` if the rule's line has finite resistance to infinity,
/// `Some(false)` if infinite, `None` if the rule is not recognized.
fn line_transient(rule: &Rule) -> Option<bool> {
    match rule {
        Rule::Constant { .. } => Some(false),
        Rule::Geometric { base, .. } => Some(*base > 1.0),
        _ => None,
    }
}

fn line_start(theorem: TheoremId, start: Vertex, level: u32) -> Result<i64, McError> {
    match start {
        Vertex::Int(x) if x > 0 && x < i64::from(level) => Ok(x),
        _ => Err(mismatch(theorem, format!("start {start} must lie strictly between 0 and {level}"))),
    }
}

struct Plan {
    kind: BoundKind,
    event: String,
    target: VertexSet,
    stop: VertexSet,
    f0: f64,
    resistance: f64,
    c: Option<f64>,
}

fn plan(s: &TheoremScenario, topology: &Topology, env: &Environment) -> Result<Plan, McError> {
    let th = s.theorem;
    let class = env.class();
    let (want, bound_rule, side) = if th.increasing() {
        (Monotonicity::Increasing, class.upper.as_ref(), "upper")
    } else {
        (Monotonicity::Decreasing, class.lower.as_ref(), "lower")
    };
    if class.monotonicity != want {
        return Err(mismatch(th, format!("environment `{}` is {:?}, need {want:?}", env.name(), class.monotonicity)));
    }
    let bound_rule = bound_rule
        .ok_or_else(|| mismatch(th, format!("environment `{}` declares no {side} bound", env.name())))?
        .clone();
    if th.on_tree() != matches!(topology, Topology::Tree(_)) || (!th.on_tree() && *topology != Topology::LineN) {
        return Err(mismatch(th, format!("topology {} does not fit", topology.name())));
    }
    if bound_rule.is_time_dependent() {
        return Err(mismatch(th, "bounding graph must be time-independent"));
    }
    let c0 = Walker::new(topology.clone(), env.clone(), s.start, 0)?.state().conductances.clone();
    let w0 = |e: Edge| c0.weight(e, 0);
    let winf = |e: Edge| bound_rule.weight(e, 0);
    let lvl = i64::from(s.level);
    let need = |expected: bool, what: &str| -> Result<(), McError> {
        match line_transient(&bound_rule) {
            Some(x) if x == expected => Ok(()),
            Some(_) => Err(mismatch(th, format!("{side} bound is not {what}"))),
            None => Err(mismatch(th, format!("cannot decide whether the {side} bound is {what}"))),
        }
    };
    let line = |j: i64| Edge::Line(j);
    Ok(match th {
        TheoremId::IncRecN => {
            need(false, "recurrent")?;
            let x0 = line_start(th, s.start, s.level)?;
            Plan {
                kind: BoundKind::Upper,
                event: format!("hit {lvl} before 0"),
                target: VertexSet::AtLeast(lvl),
                stop: VertexSet::AtMost(0),
                f0: line_resistance(|j| w0(line(j)), 0, x0)?,
                resistance: line_resistance(|j| winf(line(j)), 0, lvl)?,
                c: None,
            }
        }
        TheoremId::IncTraN => {
            need(true, "transient")?;
            let x0 = line_start(th, s.start, s.level)?;
            let horizon = c0
                .overrides()
                .map(|(e, _)| e.level() + 1)
                .fold(lvl, i64::max);
            Plan {
                kind: BoundKind::Upper,
                event: format!("hit 0 before {lvl}"),
                target: VertexSet::AtMost(0),
                stop: VertexSet::AtLeast(lvl),
                f0: resistance_to_infinity(&c0, 0, x0, horizon)
                    .map_err(|_| mismatch(th, "initial conductances have no closed-form tail"))?,
                resistance: bound_rule.tail_resistance(0).expect("transient geometric rule"),
                c: None,
            }
        }
        TheoremId::DecTraN => {
            need(true, "transient")?;
            let x0 = line_start(th, s.start, s.level)?;
            Plan {
                kind: BoundKind::Lower,
                event: format!("hit {lvl} before 0"),
                target: VertexSet::AtLeast(lvl),
                stop: VertexSet::AtMost(0),
                f0: line_resistance(|j| w0(line(j)), 0, x0)?,
                resistance: line_resistance(|j| winf(line(j)), 0, lvl)?,
                c: None,
            }
        }
        TheoremId::DecRecN => {
            let x0 = line_start(th, s.start, s.level)?;
            let c = (0..lvl)
                .map(|j| winf(line(j)) / c0.rule().weight(line(j), 0))
                .fold(f64::INFINITY, f64::min);
            if c.is_nan() || c <= 0.0 {
                return Err(mismatch(th, "lower bound is not a positive multiple of the initial weights"));
            }
            Plan {
                kind: BoundKind::Lower,
                event: format!("hit 0 before {lvl}"),
                target: VertexSet::AtMost(0),
                stop: VertexSet::AtLeast(lvl),
                f0: line_resistance(|j| w0(line(j)), x0, lvl)?,
                resistance: line_resistance(|j| winf(line(j)), 0, lvl)?,
                c: Some(c),
            }
        }
        TheoremId::IncRecT | TheoremId::DecTraT => {
            let tree = topology.as_tree().expect("checked tree topology");
            let x0 = match s.start {
                Vertex::Node(i) if (i as usize) < tree.len() && i != 0 && tree.depth(i) < s.level => i,
                _ => return Err(mismatch(th, format!("start {} must be a non-root vertex above depth {}", s.start, s.level))),
            };
            if s.level > tree.max_depth() {
                return Err(mismatch(th, format!("radius {} exceeds tree depth {}", s.level, tree.max_depth())));
            }
            let flow = tree_unit_current_flow(tree, winf, s.level)?;
            let f = potential_from_flow(tree, w0, &flow)?;
            Plan {
                kind: if th.increasing() { BoundKind::Upper } else { BoundKind::Lower },
                event: format!("hit depth {} before the root", s.level),
                target: VertexSet::DepthAtLeast(s.level),
                stop: VertexSet::point(Vertex::Node(0)),
                f0: f[x0 as usize],
                resistance: tree_effective_resistance(tree, winf, s.level)?,
                c: None,
            }
        }
    })
}

/// Computes the theorem's bound for `scenario`, estimates the bounded
/// probability and compares the two.
///
/// Capped trials count against the claimed inequality: as hits for an upper
/// bound, as misses for a lower one. The verdict is `violation` only when
/// the bound fails by more than three standard errors even with capped
/// trials counted in the bound's favor, and `inconclusive` when only the
/// capped trials make it fail.
pub fn check_theorem_bound(scenario: &TheoremScenario, harness: &Harness) -> Result<BoundCheckReport, McError> {
    if scenario.trials == 0 {
        return Err(McError::NoTrials);
    }
    let topology = scenario.topology.build()?;
    let env = Environment::new(&scenario.env, &topology)?;
    let p = plan(scenario, &topology, &env)?;
    let bound = p.f0 / p.resistance;
    let q = HitQuery {
        topology,
        env: scenario.env.clone(),
        start: scenario.start,
        target: p.target.clone(),
        stop: p.stop.clone(),
        step_cap: scenario.step_cap,
    };
    let outcomes = harness.map(scenario.trials, |i| {
        hit_trial(&q, &env, derive_trial_seed(scenario.master_seed, i))
    });
    let (mut hits, mut capped) = (0u64, 0u64);
    for o in outcomes {
        match o? {
            Outcome::Hit => hits += 1,
            Outcome::Capped => capped += 1,
            Outcome::Stopped | Outcome::Absorbed => {}
        }
    }
    let n = scenario.trials;
    let seed = scenario.master_seed;
    let (pessimistic, favorable) = match p.kind {
        BoundKind::Upper => (
            EstimateWithCI::from_counts(hits + capped, n, seed),
            EstimateWithCI::from_counts(hits, n, seed),
        ),
        BoundKind::Lower => (
            EstimateWithCI::from_counts(hits, n, seed),
            EstimateWithCI::from_counts(hits + capped, n, seed),
        ),
    };
    let fails = |e: &EstimateWithCI| match p.kind {
        BoundKind::Upper => e.estimate - 3.0 * e.stderr > bound,
        BoundKind::Lower => e.estimate + 3.0 * e.stderr < bound,
    };
    let verdict = if fails(&favorable) {
        Verdict::Violation
    } else if fails(&pessimistic) {
        Verdict::Inconclusive
    } else {
        Verdict::Consistent
    };
    Ok(BoundCheckReport {
        scenario: scenario.name.clone(),
        theorem: scenario.theorem,
        kind: p.kind,
        event: p.event,
        bound,
        potential_at_start: p.f0,
        resistance: p.resistance,
        c: p.c,
        estimate: pessimistic,
        hits,
        capped,
        verdict,
        inputs: scenario.clone(),
    })
}

/// `scenario,theorem,bound,estimate,stderr,trials,capped,verdict`.
pub fn write_report_csv<W: Write>(reports: &[BoundCheckReport], mut w: W) -> io::Result<()> {
    writeln!(w, "scenario,theorem,bound,estimate,stderr,trials,capped,verdict")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.theorem,
            r.bound,
            r.estimate.estimate,
            r.estimate.stderr,
            r.estimate.trials,
            r.capped,
            r.verdict.as_str()
        )?;
    }
    Ok(())
}

fn adaptive(base: Rule, target: Rule, edges: EdgeSelector) -> EnvironmentSpec {
    EnvironmentSpec::AdaptiveEdge { base, target, edges }
}

/// The bound-check suite, one scenario per theorem, with pinned seeds.
pub fn shipped_scenarios() -> Vec<TheoremScenario> {
    let c = |c: f64| Rule::Constant { c };
    let g = |scale: f64, base: f64| Rule::Geometric { scale, base };
    let right = EdgeSelector::Right;
    let kids = EdgeSelector::Children;
    let mk = |name: &str, theorem, topology, env, start, level, seed| TheoremScenario {
        name: name.to_string(),
        theorem,
        topology,
        env,
        start,
        level,
        trials: 10_000,
        step_cap: 1_000_000,
        master_seed: seed,
    };
    vec![
        // C_0 = 1/2, walker's right edge raised to 1; bound 10/100
        mk(
            "inc_rec_N_half_to_one",
            TheoremId::IncRecN,
            TopologySpec::LineN,
            adaptive(c(0.5), c(1.0), right),
            Vertex::Int(5),
            100,
            41,
        ),
        // C_0(j) = 2^j, walker's right edge raised to 2^(j+1)
        mk(
            "inc_tra_N_geometric_boost",
            TheoremId::IncTraN,
            TopologySpec::LineN,
            adaptive(g(1.0, 2.0), g(2.0, 2.0), right),
            Vertex::Int(3),
            60,
            42,
        ),
        // C_0(j) = 2^(j+1), walker's right edge halved to 2^j
        mk(
            "dec_tra_N_geometric_halving",
            TheoremId::DecTraN,
            TopologySpec::LineN,
            adaptive(g(2.0, 2.0), g(1.0, 2.0), right),
            Vertex::Int(2),
            40,
            43,
        ),
        // C_0 = 1, walker's right edge halved (c = 1/2), n = 2 X_0
        mk(
            "dec_rec_N_unit_halving",
            TheoremId::DecRecN,
            TopologySpec::LineN,
            adaptive(c(1.0), c(0.5), right),
            Vertex::Int(5),
            10,
            44,
        ),
        // binary tree with C_inf = 2^-level (unit resistance per level), C_0 = C_inf / 2
        mk(
            "inc_rec_T_binary_levels",
            TheoremId::IncRecT,
            TopologySpec::RegularTree { branching: 2, depth: 16 },
            adaptive(g(0.5, 0.5), g(1.0, 0.5), kids),
            Vertex::Node(1),
            16,
            45,
        ),
        // binary tree, C_0 = 2 halved to the unit tree
        mk(
            "dec_tra_T_binary_halving",
            TheoremId::DecTraT,
            TopologySpec::RegularTree { branching: 2, depth: 12 },
            adaptive(c(2.0), c(1.0), kids),
            Vertex::Node(1),
            12,
            46,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mut s: TheoremScenario) -> TheoremScenario {
        s.trials = 400;
        s
    }

    #[test]
    fn shipped_bounds() {
        let h = Harness::new(2);
        let expect = [0.1, 0.1875, 0.75 / (2.0 - 2f64.powi(-39)), 0.3, 0.125, 0.25 / (1.0 - 2f64.powi(-12))];
        for (s, want) in shipped_scenarios().into_iter().zip(expect) {
            let r = check_theorem_bound(&small(s), &h).unwrap();
            assert!((r.bound - want).abs() < 1e-12, "{} {} vs {want}", r.scenario, r.bound);
        }
    }

    #[test]
    fn ids_round_trip() {
        for id in TheoremId::ALL {
            let s = serde_json::to_string(&id).unwrap();
            assert_eq!(s, format!("\"{id}\""));
            assert_eq!(serde_json::from_str::<TheoremId>(&s).unwrap(), id);
        }
    }

    #[test]
    fn hypothesis_is_checked() {
        let mut s = shipped_scenarios().remove(0);
        s.theorem = TheoremId::DecTraN;
        assert!(matches!(
            check_theorem_bound(&small(s.clone()), &Harness::new(1)),
            Err(McError::HypothesisMismatch { .. })
        ));
        s.theorem = TheoremId::IncTraN;
        assert!(matches!(
            check_theorem_bound(&small(s), &Harness::new(1)),
            Err(McError::HypothesisMismatch { .. })
        ));
    }
}
