//! The time-dependent conductance field `C_t`: a closed-form default rule plus
//! sparse per-edge overrides, together with the monotonicity class and bounds
//! the field is declared to respect.

use rustc_hash::FxHashMap;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::topology::Edge;

/// A closed-form conductance rule `(edge, time) -> weight`.
///
/// Rules that depend on a position use [`Edge::level`]: `j` for the line edge
/// `(j, j+1)`, the level of a tree edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rule {
    /// `c` everywhere, at all times.
    Constant { c: f64 },
    /// `scale * base^j`.
    Geometric { scale: f64, base: f64 },
    /// `high` on edge `j` when `t = j (mod period)`, else 1.
    Wave { period: u64, high: f64 },
    /// `factor * base^j` when `t = -j (mod period)`, else `base^j`.
    CounterWave { period: u64, factor: f64, base: f64 },
    /// `2^-j` for `j < t`, else 1.
    DecayFront,
    /// Product over started waves `n` (`starts[n] < t`) of `2^-j` for
    /// `n <= j < t - starts[n]`, else 1.
    MultiWave { starts: Vec<u64> },
}

impl Rule {
    #[inline]
    pub fn weight(&self, edge: Edge, t: u64) -> f64 {
        let j = edge.level();
        match self {
            Rule::Constant { c } => *c,
            Rule::Geometric { scale, base } => scale * pow_level(*base, j),
            Rule::Wave { period, high } => {
                if j.rem_euclid(*period as i64) as u64 == t % period {
                    *high
                } else {
                    1.0
                }
            }
            Rule::CounterWave { period, factor, base } => {
                let p = *period as i64;
                let b = pow_level(*base, j);
                if ((t % period) as i64 + j.rem_euclid(p)) % p == 0 {
                    factor * b
                } else {
                    b
                }
            }
            Rule::DecayFront => {
                if j >= 0 && (j as u64) < t {
                    pow_level(2.0, -j)
                } else {
                    1.0
                }
            }
            Rule::MultiWave { starts } => {
                if j < 0 {
                    return 1.0;
                }
                let ju = j as u64;
                let mut count = 0i64;
                for (n, &tn) in starts.iter().enumerate() {
                    if tn >= t {
                        break;
                    }
                    if (n as u64) <= ju && ju < t - tn {
                        count += 1;
                    }
                }
                pow_level(2.0, -j * count)
            }
        }
    }

    /// Whether the rule depends on time.
    pub fn is_time_dependent(&self) -> bool {
        !matches!(self, Rule::Constant { .. } | Rule::Geometric { .. })
    }

    /// Exact resistance of the edges `j >= from` under a time-independent
    /// geometric rule with `base > 1`; `None` when no closed form applies.
    pub fn tail_resistance(&self, from: i64) -> Option<f64> {
        match self {
            Rule::Geometric { scale, base } if *base > 1.0 && *scale > 0.0 => {
                // sum_{j >= from} 1 / (scale base^j)
                Some(1.0 / (scale * pow_level(*base, from) * (1.0 - 1.0 / base)))
            }
            _ => None,
        }
    }
}

#[inline]
fn pow_level(base: f64, j: i64) -> f64 {
    if base == 2.0 && (-1074..=1023).contains(&j) {
        // exact and cheap
        f64::from_bits(if j >= -1022 {
            ((j + 1023) as u64) << 52
        } else {
            1u64 << (j + 1074)
        })
    } else {
        base.powf(j as f64)
    }
}

/// Declared monotonicity of an environment's conductances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    None,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConductanceError {
    #[error("edge {edge} weight {weight} is not a finite non-negative number")]
    InvalidWeight { edge: Edge, weight: f64 },
    #[error("edge {edge} at t={t}: {old} -> {new} violates declared {monotonicity:?} monotonicity")]
    MonotonicityViolation {
        edge: Edge,
        t: u64,
        old: f64,
        new: f64,
        monotonicity: Monotonicity,
    },
    #[error("edge {edge} at t={t}: weight {weight} outside declared bounds [{lower}, {upper}]")]
    BoundViolation {
        edge: Edge,
        t: u64,
        weight: f64,
        lower: f64,
        upper: f64,
    },
}

/// The conductance field of a walk at its current time.
#[derive(Clone, Debug)]
pub struct ConductanceState {
    rule: Rule,
    overrides: FxHashMap<Edge, f64>,
    monotonicity: Monotonicity,
    lower: Option<Rule>,
    upper: Option<Rule>,
}

impl ConductanceState {
    pub fn new(rule: Rule, monotonicity: Monotonicity, lower: Option<Rule>, upper: Option<Rule>) -> Self {
        Self {
            rule,
            overrides: FxHashMap::default(),
            monotonicity,
            lower,
            upper,
        }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn lower(&self) -> Option<&Rule> {
        self.lower.as_ref()
    }

    pub fn upper(&self) -> Option<&Rule> {
        self.upper.as_ref()
    }

    /// `C_t(edge)`.
    #[inline]
    pub fn weight(&self, edge: Edge, t: u64) -> f64 {
        match self.overrides.get(&edge) {
            Some(&w) => w,
            None => self.rule.weight(edge, t),
        }
    }

    pub fn is_overridden(&self, edge: Edge) -> bool {
        self.overrides.contains_key(&edge)
    }

    pub fn overrides(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.overrides.iter().map(|(&e, &w)| (e, w))
    }

    /// Sets `edge` to `weight` at time `t`, validating the declarations.
    /// Returns the previous weight.
    pub fn apply(&mut self, edge: Edge, weight: f64, t: u64) -> Result<f64, ConductanceError> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(ConductanceError::InvalidWeight { edge, weight });
        }
        let old = self.weight(edge, t);
        self.check_order(edge, t, old, weight)?;
        self.check_bounds(edge, t, weight)?;
        self.overrides.insert(edge, weight);
        Ok(old)
    }

    /// Validates an edge still governed by the default rule: the change from
    /// `t-1` to `t` must respect monotonicity and the weight must lie within
    /// the bounds.
    pub fn check_default(&self, edge: Edge, t: u64) -> Result<(), ConductanceError> {
        if self.overrides.contains_key(&edge) {
            return Ok(());
        }
        let now = self.rule.weight(edge, t);
        if !now.is_finite() || now < 0.0 {
            return Err(ConductanceError::InvalidWeight { edge, weight: now });
        }
        if t > 0 && self.rule.is_time_dependent() {
            let before = self.rule.weight(edge, t - 1);
            self.check_order(edge, t, before, now)?;
        }
        self.check_bounds(edge, t, now)
    }

    fn check_order(&self, edge: Edge, t: u64, old: f64, new: f64) -> Result<(), ConductanceError> {
        let ok = match self.monotonicity {
            Monotonicity::Increasing => new >= old,
            Monotonicity::Decreasing => new <= old,
            Monotonicity::None => true,
        };
        if ok {
            Ok(())
        } else {
            Err(ConductanceError::MonotonicityViolation {
                edge,
                t,
                old,
                new,
                monotonicity: self.monotonicity,
            })
        }
    }

    fn check_bounds(&self, edge: Edge, t: u64, w: f64) -> Result<(), ConductanceError> {
        let lo = self.lower.as_ref().map_or(0.0, |r| r.weight(edge, t));
        let hi = self.upper.as_ref().map_or(f64::INFINITY, |r| r.weight(edge, t));
        let slack = 1e-12 * w.abs();
        if w + slack < lo || w - slack > hi {
            Err(ConductanceError::BoundViolation {
                edge,
                t,
                weight: w,
                lower: lo,
                upper: hi,
            })
        } else {
            Ok(())
        }
    }
}
