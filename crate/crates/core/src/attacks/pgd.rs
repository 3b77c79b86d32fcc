use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{project_budget, AttackConfig, AttackError, AttackKind, AttackProblem, AttackResult, Result};
use crate::seed::stream;

/// Projected gradient descent over all candidate pairs.
pub fn pgd_attack(problem: &AttackProblem<'_>, delta: usize, cfg: &AttackConfig) -> Result<AttackResult> {
    let c = problem.num_candidates();
    if delta > c {
        return Err(AttackError::BudgetInfeasible { delta, capacity: c });
    }
    relaxed_attack(problem, delta, cfg, AttackKind::Pgd, c)
}

/// Projected randomized block coordinate descent: gradient steps on a random
/// block of `block_size` pairs that is resampled between steps, keeping the
/// heaviest entries.
pub fn prbcd_attack(problem: &AttackProblem<'_>, delta: usize, cfg: &AttackConfig) -> Result<AttackResult> {
    let c = problem.num_candidates();
    if delta > c {
        return Err(AttackError::BudgetInfeasible { delta, capacity: c });
    }
    if cfg.block_size < delta {
        return Err(AttackError::BudgetInfeasible { delta, capacity: cfg.block_size });
    }
    relaxed_attack(problem, delta, cfg, AttackKind::Prbcd, cfg.block_size.min(c))
}

fn relaxed_attack(
    problem: &AttackProblem<'_>,
    delta: usize,
    cfg: &AttackConfig,
    kind: AttackKind,
    block_size: usize,
) -> Result<AttackResult> {
    let start = Instant::now();
    let c = problem.num_candidates();
    let base = problem.adjacency();
    let finish = |flips: Vec<usize>, relaxed: Option<Vec<((usize, usize), f64)>>, trace: Vec<f64>, peak: usize| -> Result<AttackResult> {
        let adj = problem.toggled(base, &flips);
        Ok(AttackResult {
            attack: kind,
            delta,
            flips: flips.iter().map(|&e| problem.pair(e)).collect(),
            relaxed_final: relaxed,
            acc_adv: problem.accuracy_at(&adj)?,
            loss_trace: trace,
            peak_live_weights: peak,
            wall_ms: start.elapsed().as_millis() as u64,
        })
    };
    if delta == 0 || c == 0 {
        let l = problem.loss_at(base)?;
        return finish(Vec::new(), None, vec![l], 0);
    }

    let full = block_size >= c;
    let mut block_rng = stream(cfg.seed, "block");
    let mut entries: Vec<usize> = if full {
        (0..c).collect()
    } else {
        let mut v = index::sample(&mut block_rng, c, block_size).into_vec();
        v.sort_unstable();
        v
    };
    let mut p = vec![0.0; entries.len()];
    let mut peak = entries.len();
    let mut trace = Vec::with_capacity(cfg.steps);

    for t in 1..=cfg.steps {
        let (l, g) = problem.relaxed_loss_grad(base, &entries, &p)?;
        trace.push(l);
        let step = cfg.lr / (t as f64).sqrt();
        for (pk, gk) in p.iter_mut().zip(&g) {
            *pk -= step * gk;
        }
        p = project_budget(&p, delta);
        if !full && t < cfg.steps {
            let (e, w) = resample(&entries, &p, c, cfg.resample_keep_fraction, &mut block_rng);
            entries = e;
            p = w;
            peak = peak.max(entries.len());
        }
    }

    let relaxed: Vec<((usize, usize), f64)> =
        entries.iter().zip(&p).filter(|(_, &w)| w > 0.0).map(|(&e, &w)| (problem.pair(e), w)).collect();
    let mut rng = stream(cfg.seed, "discretize");
    let flips = discretize(problem, &entries, &p, delta, cfg.discretize_samples, &mut rng)?;
    finish(flips, Some(relaxed), trace, peak)
}

/// Keeps the top `keep_fraction` of the block by weight (ties to the lower
/// index) and refills with fresh zero-weight pairs. Output sorted by index.
fn resample(entries: &[usize], p: &[f64], c: usize, keep_fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<f64>) {
    let b = entries.len();
    let keep = ((keep_fraction * b as f64).floor() as usize).min(b);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&x, &y| p[y].total_cmp(&p[x]).then(entries[x].cmp(&entries[y])));
    let mut live: BTreeSet<usize> = BTreeSet::new();
    let mut weight: HashMap<usize, f64> = HashMap::with_capacity(b);
    for &k in &order[..keep] {
        live.insert(entries[k]);
        weight.insert(entries[k], p[k]);
    }
    let need = b - keep;
    if need > 0 {
        if 2 * b > c {
            let pool: Vec<usize> = (0..c).filter(|e| !live.contains(e)).collect();
            for k in index::sample(rng, pool.len(), need) {
                live.insert(pool[k]);
            }
        } else {
            while live.len() < b {
                live.insert(rng.random_range(0..c));
            }
        }
    }
    let entries: Vec<usize> = live.into_iter().collect();
    let p = entries.iter().map(|e| weight.get(e).copied().unwrap_or(0.0)).collect();
    (entries, p)
}

/// Draws `k` Bernoulli samples over the entries with positive weight, keeps
/// those with at most `delta` flips and returns the one with the lowest
/// exact loss. Falls back to the `delta` heaviest entries.
pub(super) fn discretize(
    problem: &AttackProblem<'_>,
    entries: &[usize],
    p: &[f64],
    delta: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let live: Vec<(usize, f64)> = entries.iter().zip(p).filter(|(_, &w)| w > 0.0).map(|(&e, &w)| (e, w)).collect();
    let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..k {
        let sample: Vec<usize> = live.iter().filter(|&&(_, w)| rng.random::<f64>() < w).map(|&(e, _)| e).collect();
        if sample.len() > delta || seen.contains_key(&sample) {
            continue;
        }
        let l = problem.loss_with_flips(&sample)?;
        seen.insert(sample.clone(), l);
        if best.as_ref().is_none_or(|(bl, _)| l < *bl) {
            best = Some((l, sample));
        }
    }
    Ok(match best {
        Some((_, s)) => s,
        None => {
            let mut order = live;
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut top: Vec<usize> = order.into_iter().take(delta).map(|(e, _)| e).collect();
            top.sort_unstable();
            top
        }
    })
}
