/// Euclidean projection of `p` onto `{q ∈ [0,1]^E : Σq ≤ Δ}`.
///
/// If clipping alone satisfies the budget it is returned; otherwise the
/// shift `μ` in `clip(p − μ, 0, 1)` is found by bisection until the sum is
/// within `1e-7` of `Δ`.
pub fn project_budget(p: &[f64], delta: usize) -> Vec<f64> {
    if delta == 0 {
        return vec![0.0; p.len()];
    }
    let budget = delta as f64;
    let clipped: Vec<f64> = p.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    let mass = |mu: f64| p.iter().map(|&v| (v - mu).clamp(0.0, 1.0)).sum::<f64>();
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    // mass(lo) = |p| > Δ and mass(hi) = 0 < Δ.
    let (mut lo, mut hi) = (min - 1.0, max);
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        let s = mass(mu);
        if (s - budget).abs() <= 1e-7 {
            break;
        }
        if s > budget {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    p.iter().map(|&v| (v - mu).clamp(0.0, 1.0)).collect()
}
