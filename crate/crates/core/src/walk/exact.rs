//! Exact hitting probabilities on a segment with frozen weights.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("segment [0, {0}] has no interior")]
    DegenerateSegment(usize),
    #[error("edge with left endpoint {0} has non-positive weight")]
    ZeroWeight(usize),
    #[error("start {start} outside [0, {end}]")]
    StartOutOfRange { start: usize, end: usize },
}

/// Probability that the walk on `[0, v]` with fixed conductances
/// `weights[j] = C(j, j+1)` (so `v = weights.len()`) hits `v` before 0 when
/// started at `start`.
///
/// Solves the tridiagonal system `C(i-1)(F(i-1) - F(i)) + C(i)(F(i+1) - F(i)) = 0`
/// for `0 < i < v` with `F(0) = 0`, `F(v) = 1` by forward elimination.
pub fn exact_hit_probability(weights: &[f64], start: usize) -> Result<f64, ExactError> {
    let v = weights.len();
    if v <= 1 {
        return Err(ExactError::DegenerateSegment(v));
    }
    if let Some(j) = weights.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(ExactError::ZeroWeight(j));
    }
    if start > v {
        return Err(ExactError::StartOutOfRange { start, end: v });
    }
    if start == 0 {
        return Ok(0.0);
    }
    if start == v {
        return Ok(1.0);
    }
    // Unknowns F(1..v-1). Row i: -C(i-1) F(i-1) + (C(i-1)+C(i)) F(i) - C(i) F(i+1) = 0.
    let n = v - 1;
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for k in 0..n {
        let i = k + 1;
        let a = -weights[i - 1];
        let b = weights[i - 1] + weights[i];
        let c = -weights[i];
        let rhs = if i == v - 1 { weights[i] } else { 0.0 };
        let (cp_prev, dp_prev) = if k == 0 { (0.0, 0.0) } else { (c_prime[k - 1], d_prime[k - 1]) };
        let a_eff = if k == 0 { 0.0 } else { a };
        let denom = b - a_eff * cp_prev;
        c_prime[k] = if i == v - 1 { 0.0 } else { c / denom };
        d_prime[k] = (rhs - a_eff * dp_prev) / denom;
    }
    let mut f = vec![0.0; n];
    f[n - 1] = d_prime[n - 1];
    for k in (0..n - 1).rev() {
        f[k] = d_prime[k] - c_prime[k] * f[k + 1];
    }
    Ok(f[start - 1])
}
