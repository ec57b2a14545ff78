use serde::Serialize;

use super::CoupledTrajectory;

/// `max_{k < l} |D(k,l)_2| / sqrt(D(k,l)_1 + 1)` with `D(k,l) = Δ(l) - Δ(k)`
/// and `Δ = E - R`, together with a maximizing pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DStatistic {
    pub value: f64,
    pub k: u64,
    pub l: u64,
}

struct Group {
    d1: i64,
    min: (i64, u64),
    max: (i64, u64),
}

/// Because `Δ_1` never decreases, times sharing a value of `Δ_1` form
/// consecutive groups and only each group's extremes of `Δ_2` matter: for
/// groups `g <= h` the best pair is `max_h - min_g` or `max_g - min_h` over
/// `sqrt(d1_h - d1_g + 1)`.
pub fn d_bound_statistic(tr: &CoupledTrajectory) -> DStatistic {
    let mut groups: Vec<Group> = Vec::new();
    for (t, (e, r)) in tr.maw.iter().zip(&tr.srw).enumerate() {
        let (d1, d2) = (e.0 - r.0, e.1 - r.1);
        let t = t as u64;
        match groups.last_mut() {
            Some(g) if g.d1 == d1 => {
                if d2 < g.min.0 {
                    g.min = (d2, t);
                }
                if d2 > g.max.0 {
                    g.max = (d2, t);
                }
            }
            _ => {
                assert!(groups.last().is_none_or(|g| g.d1 < d1), "(E-R)_1 decreased at t={t}");
                groups.push(Group {
                    d1,
                    min: (d2, t),
                    max: (d2, t),
                });
            }
        }
    }
    let mut best = DStatistic { value: 0.0, k: 0, l: 0 };
    let mut offer = |num: i64, a: u64, b: u64, denom: f64| {
        let v = num.unsigned_abs() as f64 / denom;
        if v > best.value {
            best = DStatistic {
                value: v,
                k: a.min(b),
                l: a.max(b),
            };
        }
    };
    for (i, g) in groups.iter().enumerate() {
        offer(g.max.0 - g.min.0, g.min.1, g.max.1, 1.0);
        for h in &groups[i + 1..] {
            let denom = ((h.d1 - g.d1 + 1) as f64).sqrt();
            offer(h.max.0 - g.min.0, g.min.1, h.max.1, denom);
            offer(g.max.0 - h.min.0, g.max.1, h.min.1, denom);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maw::run_coupled;

    #[test]
    fn frozen_difference_scores_zero() {
        let tr = CoupledTrajectory {
            maw: vec![(0, 0), (1, 0), (2, 0), (2, 1)],
            srw: vec![(0, 0), (1, 0), (2, 0), (2, 1)],
            nv: vec![true; 3],
            visited_count: 4,
        };
        assert_eq!(d_bound_statistic(&tr).value, 0.0);
    }

    #[test]
    fn reported_pair_attains_the_value() {
        let tr = run_coupled(3000, 4);
        let s = d_bound_statistic(&tr);
        let d = tr.differences();
        let (a, b) = (d[s.k as usize], d[s.l as usize]);
        let v = ((b.1 - a.1).abs() as f64) / (((b.0 - a.0) + 1) as f64).sqrt();
        assert_eq!(v, s.value);
    }
}
