use super::PotentialError;
use crate::conductance::ConductanceState;
use crate::numeric::CompensatedSum;
use crate::topology::Edge;

/// Series resistance `sum_{a <= j < b} 1 / C(j)` of the line edges between
/// `a` and `b`.
pub fn line_resistance(weight: impl Fn(i64) -> f64, a: i64, b: i64) -> Result<f64, PotentialError> {
    if a > b {
        return Err(PotentialError::InvalidRange { a, b });
    }
    let mut s = CompensatedSum::new();
    for j in a..b {
        let c = weight(j);
        if c.is_nan() || c <= 0.0 {
            return Err(PotentialError::ZeroWeightEdge(Edge::Line(j)));
        }
        s.add(1.0 / c);
    }
    Ok(s.value())
}

/// Resistance between `from` and infinity at time `t`: the explicit sum up
/// to `horizon` plus the exact tail of the default rule. Edges at or beyond
/// the horizon must not carry overrides.
pub fn resistance_to_infinity(
    state: &ConductanceState,
    t: u64,
    from: i64,
    horizon: i64,
) -> Result<f64, PotentialError> {
    let tail = state
        .rule()
        .tail_resistance(horizon.max(from))
        .ok_or(PotentialError::NoAnalyticTail)?;
    let head = line_resistance(|j| state.weight(Edge::Line(j), t), from, horizon.max(from))?;
    Ok(head + tail)
}

/// Values of a line potential on `lo..=hi` (with `lo >= 0`) at time `t`.
///
/// `to_zero` selects `sum_{j < v}`; otherwise `sum_{v <= j < horizon}` plus
/// the default-rule tail when `tail` is set. Cumulative sums are compensated.
pub fn line_potential_window(
    state: &ConductanceState,
    t: u64,
    hi: i64,
    to_zero: bool,
    horizon: i64,
    tail: bool,
) -> Result<Vec<f64>, PotentialError> {
    let n = (hi + 1) as usize;
    let mut out = vec![0.0; n];
    if to_zero {
        let mut s = CompensatedSum::new();
        for (v, slot) in out.iter_mut().enumerate().skip(1) {
            let j = v as i64 - 1;
            let c = state.weight(Edge::Line(j), t);
            if c.is_nan() || c <= 0.0 {
                return Err(PotentialError::ZeroWeightEdge(Edge::Line(j)));
            }
            s.add(1.0 / c);
            *slot = s.value();
        }
    } else {
        let end = horizon.max(hi + 1);
        let mut s = CompensatedSum::new();
        if tail {
            s.add(state.rule().tail_resistance(end).ok_or(PotentialError::NoAnalyticTail)?);
        }
        let mut j = end - 1;
        while j >= 0 {
            let c = state.weight(Edge::Line(j), t);
            if j < horizon || tail {
                if c.is_nan() || c <= 0.0 {
                    return Err(PotentialError::ZeroWeightEdge(Edge::Line(j)));
                }
                s.add(1.0 / c);
            }
            if (j as usize) < n {
                out[j as usize] = s.value();
            }
            j -= 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductance::{Monotonicity, Rule};

    #[test]
    fn series_examples() {
        assert_eq!(line_resistance(|_| 1.0, 0, 5), Ok(5.0));
        assert_eq!(line_resistance(|j| 2f64.powi(-(j as i32)), 0, 3), Ok(7.0));
        let r = line_resistance(|j| 2f64.powi(j as i32), 0, 40).unwrap();
        assert_eq!(r, 2.0 - 2f64.powi(-39));
        assert!((r - 2.0).abs() < 1e-11);
        assert_eq!(line_resistance(|_| 1.0, 3, 3), Ok(0.0));
        assert_eq!(
            line_resistance(|j| if j == 2 { 0.0 } else { 1.0 }, 0, 5),
            Err(PotentialError::ZeroWeightEdge(Edge::Line(2)))
        );
        assert!(line_resistance(|_| 1.0, 4, 2).is_err());
    }

    #[test]
    fn tail_closes_the_geometric_sum() {
        let s = ConductanceState::new(Rule::Geometric { scale: 1.0, base: 2.0 }, Monotonicity::None, None, None);
        for h in [0, 1, 5, 40] {
            assert_eq!(resistance_to_infinity(&s, 0, 0, h).unwrap(), 2.0);
        }
        assert_eq!(resistance_to_infinity(&s, 0, 3, 10).unwrap(), 0.25);
        let c = ConductanceState::new(Rule::Constant { c: 1.0 }, Monotonicity::None, None, None);
        assert_eq!(resistance_to_infinity(&c, 0, 0, 10), Err(PotentialError::NoAnalyticTail));
    }

    #[test]
    fn window_matches_direct_sums() {
        let s = ConductanceState::new(Rule::Geometric { scale: 1.0, base: 2.0 }, Monotonicity::None, None, None);
        let zero = line_potential_window(&s, 0, 8, true, 0, false).unwrap();
        let inf = line_potential_window(&s, 0, 8, false, 4, true).unwrap();
        let lvl = line_potential_window(&s, 0, 8, false, 6, false).unwrap();
        for v in 0..=8i64 {
            let w = |j| 2f64.powi(j as i32);
            assert!((zero[v as usize] - line_resistance(w, 0, v).unwrap()).abs() < 1e-15);
            assert!((inf[v as usize] - 2f64.powi(1 - v as i32)).abs() < 1e-15);
            let expected = if v < 6 { line_resistance(w, v, 6).unwrap() } else { 0.0 };
            assert!((lvl[v as usize] - expected).abs() < 1e-15);
        }
    }
}
