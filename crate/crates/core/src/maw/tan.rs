use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rustc_hash::FxHashMap;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{add, Dir, Site};
use crate::mc::{derive_trial_seed, EstimateWithCI, Harness};
use crate::walk::rng_from_seed;

/// Half-width profile `w(n)` of the funnel `x >= -1, |y| <= w(n) sqrt(x + 2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum WidthRule {
    /// `w(n) = (ln n)^3`.
    #[default]
    LogCubed,
    /// `w(n) = c`.
    Constant(f64),
}

impl WidthRule {
    pub fn width(self, n: u64) -> f64 {
        match self {
            WidthRule::LogCubed => (n as f64).ln().powi(3),
            WidthRule::Constant(c) => c,
        }
    }
}

impl fmt::Display for WidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthRule::LogCubed => f.write_str("log_cubed"),
            WidthRule::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

/// Whether the offset `p` lies in the funnel for walk length `n`.
pub fn funnel_contains(p: Site, n: u64, rule: WidthRule) -> bool {
    let (x, y) = p;
    x >= -1 && (y.unsigned_abs() as f64) <= rule.width(n) * ((x + 2) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TanCheck {
    Tan,
    NotTan,
    /// `m` is outside `(n^{2ε}, n]`.
    OutOfWindow,
}

/// `ceil(n^ε)`.
fn gap(n: u64, eps: f64) -> usize {
    (n as f64).powf(eps).ceil() as usize
}

fn in_window(n: u64, m: usize, eps: f64) -> bool {
    (m as f64) > (n as f64).powf(2.0 * eps) && m as u64 <= n && m >= gap(n, eps)
}

/// Whether index `m` of `path` (positions `R(0..=n)`) is a tan point: with
/// `k = ceil(n^ε)`, (1) `R[m-k, m]` avoids `R(m) + (-1, 0)`, and (2)
/// `R[0, m-k]` avoids the funnel translated to `R(m)`.
pub fn is_tan_point(path: &[Site], m: usize, eps: f64, rule: WidthRule) -> TanCheck {
    let n = path.len() as u64 - 1;
    if !in_window(n, m, eps) {
        return TanCheck::OutOfWindow;
    }
    let k = gap(n, eps);
    let here = path[m];
    let left = (here.0 - 1, here.1);
    if path[m - k..=m].contains(&left) {
        return TanCheck::NotTan;
    }
    let hit = path[..=m - k]
        .iter()
        .any(|p| funnel_contains((p.0 - here.0, p.1 - here.1), n, rule));
    if hit {
        TanCheck::NotTan
    } else {
        TanCheck::Tan
    }
}

/// Per-row index of first-visit times, sorted by `x`, with suffix minima.
struct Row {
    xs: Vec<i64>,
    suffix_min: Vec<usize>,
}

struct Scanner {
    visits: FxHashMap<Site, Vec<usize>>,
    rows: FxHashMap<i64, Row>,
    y_range: (i64, i64),
}

impl Scanner {
    fn new(path: &[Site]) -> Self {
        let mut visits: FxHashMap<Site, Vec<usize>> = FxHashMap::default();
        for (t, &p) in path.iter().enumerate() {
            visits.entry(p).or_default().push(t);
        }
        let mut by_row: FxHashMap<i64, Vec<(i64, usize)>> = FxHashMap::default();
        for (&(x, y), ts) in &visits {
            by_row.entry(y).or_default().push((x, ts[0]));
        }
        let mut y_range = (i64::MAX, i64::MIN);
        let rows = by_row
            .into_iter()
            .map(|(y, mut pts)| {
                y_range = (y_range.0.min(y), y_range.1.max(y));
                pts.sort_unstable();
                let mut suffix_min = vec![usize::MAX; pts.len()];
                let mut m = usize::MAX;
                for i in (0..pts.len()).rev() {
                    m = m.min(pts[i].1);
                    suffix_min[i] = m;
                }
                let xs = pts.into_iter().map(|p| p.0).collect();
                (y, Row { xs, suffix_min })
            })
            .collect();
        Self { visits, rows, y_range }
    }

    /// Latest visit to `s` at a time `<= m`.
    fn last_visit_by(&self, s: Site, m: usize) -> Option<usize> {
        let ts = self.visits.get(&s)?;
        let i = ts.partition_point(|&t| t <= m);
        (i > 0).then(|| ts[i - 1])
    }

    fn check(&self, path: &[Site], m: usize, eps: f64, rule: WidthRule) -> bool {
        let n = path.len() as u64 - 1;
        let k = gap(n, eps);
        let here = path[m];
        if self
            .last_visit_by((here.0 - 1, here.1), m)
            .is_some_and(|t| t >= m - k)
        {
            return false;
        }
        let limit = m - k;
        let max_dy = (here.1 - self.y_range.0).max(self.y_range.1 - here.1);
        for a in 0..=max_dy {
            // smallest dx with |dy| = a inside the funnel
            let w = rule.width(n);
            let mut dx = if w > 0.0 {
                (((a * a) as f64) / (w * w) - 2.0).ceil().max(-1.0) as i64
            } else if a == 0 {
                -1
            } else {
                continue;
            };
            while dx > -1 && funnel_contains((dx - 1, a), n, rule) {
                dx -= 1;
            }
            while !funnel_contains((dx, a), n, rule) {
                dx += 1;
            }
            for y in if a == 0 { vec![here.1] } else { vec![here.1 + a, here.1 - a] } {
                let Some(row) = self.rows.get(&y) else { continue };
                let i = row.xs.partition_point(|&x| x < here.0 + dx);
                if i < row.xs.len() && row.suffix_min[i] <= limit {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TanPointReport {
    pub n: u64,
    pub epsilon: f64,
    pub width_rule: WidthRule,
    pub tan_indices: Vec<u64>,
    /// Greedy left-to-right sublist with consecutive gaps `> n^ε`.
    pub separated: Vec<u64>,
    pub count: usize,
    pub separated_count: usize,
    pub seed: Option<u64>,
}

/// All tan points of `path` and a maximal `n^ε`-separated sublist chosen
/// greedily from the left.
pub fn count_separated_tan_points(path: &[Site], eps: f64, rule: WidthRule) -> TanPointReport {
    let n = path.len() as u64 - 1;
    let scanner = Scanner::new(path);
    let tan_indices: Vec<u64> = (0..path.len())
        .filter(|&m| in_window(n, m, eps) && scanner.check(path, m, eps, rule))
        .map(|m| m as u64)
        .collect();
    let sep = (n as f64).powf(eps);
    let mut separated: Vec<u64> = Vec::new();
    for &m in &tan_indices {
        if separated.last().is_none_or(|&l| (m - l) as f64 > sep) {
            separated.push(m);
        }
    }
    TanPointReport {
        n,
        epsilon: eps,
        width_rule: rule,
        count: tan_indices.len(),
        separated_count: separated.len(),
        tan_indices,
        separated,
        seed: None,
    }
}

/// `n,epsilon,width_rule,count,separated_count,seed`.
pub fn write_tanpoint_csv<W: Write>(reports: &[TanPointReport], mut w: W) -> io::Result<()> {
    writeln!(w, "n,epsilon,width_rule,count,separated_count,seed")?;
    for r in reports {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.n, r.epsilon, r.width_rule, r.count, r.separated_count, seed
        )?;
    }
    Ok(())
}

/// Simple random walk positions `R(0..=n)` from the origin.
pub fn srw_path(n: u64, seed: u64) -> Vec<Site> {
    let mut rng = rng_from_seed(seed);
    let mut p = (0, 0);
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(p);
    for _ in 0..n {
        p = add(p, Dir::ALL[rng.gen_range(0..4)]);
        out.push(p);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeftAvoidance {
    /// Number of steps `ceil(n^ε)` that must avoid `(-1, 0)`.
    pub steps: u64,
    pub estimate: EstimateWithCI,
    /// `1 / ln n`, for qualitative comparison.
    pub inv_log_n: f64,
}

/// Fraction of SRW trials whose first `ceil(n^ε)` steps avoid `(-1, 0)`.
pub fn left_avoidance_probability(n: u64, eps: f64, trials: u64, master_seed: u64, harness: &Harness) -> LeftAvoidance {
    let k = gap(n, eps) as u64;
    let avoided = harness.map(trials, |i| {
        let mut rng = rng_from_seed(derive_trial_seed(master_seed, i));
        let mut p = (0, 0);
        for _ in 0..k {
            p = add(p, Dir::ALL[rng.gen_range(0..4)]);
            if p == (-1, 0) {
                return false;
            }
        }
        true
    });
    let hits = avoided.into_iter().filter(|&b| b).count() as u64;
    LeftAvoidance {
        steps: k,
        estimate: EstimateWithCI::from_counts(hits, trials, master_seed),
        inv_log_n: 1.0 / (n as f64).ln(),
    }
}
