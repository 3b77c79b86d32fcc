use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use super::{AttackConfig, AttackError, AttackKind, AttackProblem, AttackResult, Result};
use crate::seed::stream;

/// Splits `delta` into `steps` near-equal chunks, remainder to the earliest.
pub fn grbcd_chunks(delta: usize, steps: usize) -> Vec<usize> {
    let steps = steps.max(1);
    (0..steps).map(|k| delta / steps + usize::from(k < delta % steps)).collect()
}

/// Greedy randomized block coordinate descent. Each step samples a fresh
/// block of uncommitted pairs, takes the gradient at the current discrete
/// graph and commits the chunk of pairs with the most negative gradient if
/// that does not increase the loss.
pub fn grbcd_attack(problem: &AttackProblem<'_>, delta: usize, cfg: &AttackConfig) -> Result<AttackResult> {
    let start = Instant::now();
    if cfg.steps == 0 {
        return Err(AttackError::InvalidConfig("steps must be at least 1".into()));
    }
    let c = problem.num_candidates();
    if delta > c {
        return Err(AttackError::BudgetInfeasible { delta, capacity: c });
    }
    let mut rng = stream(cfg.seed, "block");
    let mut committed: BTreeSet<usize> = BTreeSet::new();
    let mut current = problem.adjacency().clone();
    let mut loss = problem.loss_at(&current)?;
    let mut trace = vec![loss];
    let mut peak = 0;

    for chunk in grbcd_chunks(delta, cfg.steps) {
        if chunk == 0 {
            continue;
        }
        let free = c - committed.len();
        let b = cfg.block_size.min(free);
        let block: Vec<usize> = if 2 * b > free {
            let pool: Vec<usize> = (0..c).filter(|e| !committed.contains(e)).collect();
            let mut v: Vec<usize> = index::sample(&mut rng, pool.len(), b).into_iter().map(|k| pool[k]).collect();
            v.sort_unstable();
            v
        } else {
            let mut set = BTreeSet::new();
            while set.len() < b {
                let e = rng.random_range(0..c);
                if !committed.contains(&e) {
                    set.insert(e);
                }
            }
            set.into_iter().collect()
        };
        peak = peak.max(block.len());
        let (_, grad) = problem.relaxed_loss_grad(&current, &block, &vec![0.0; block.len()])?;
        let mut order: Vec<usize> = (0..block.len()).filter(|&k| grad[k] < 0.0).collect();
        order.sort_by(|&x, &y| grad[x].total_cmp(&grad[y]).then(block[x].cmp(&block[y])));
        order.truncate(chunk);
        if order.is_empty() {
            trace.push(loss);
            continue;
        }
        let chosen: Vec<usize> = order.iter().map(|&k| block[k]).collect();
        let candidate = problem.toggled(&current, &chosen);
        let l = problem.loss_at(&candidate)?;
        if l <= loss {
            committed.extend(chosen);
            current = candidate;
            loss = l;
        }
        trace.push(loss);
    }

    Ok(AttackResult {
        attack: AttackKind::Grbcd,
        delta,
        flips: committed.iter().map(|&e| problem.pair(e)).collect(),
        relaxed_final: None,
        acc_adv: problem.accuracy_at(&current)?,
        loss_trace: trace,
        peak_live_weights: peak,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{AttackLoss, Targets};
    use crate::encoders::{EncoderConfig, EncoderKind, EncoderModel};
    use crate::graph::test_support::random_graph;
    use crate::probe::LinearProbe;

    #[test]
    fn chunk_rule() {
        assert_eq!(grbcd_chunks(4, 2), vec![2, 2]);
        assert_eq!(grbcd_chunks(5, 2), vec![3, 2]);
        assert_eq!(grbcd_chunks(2, 4), vec![1, 1, 0, 0]);
        assert_eq!(grbcd_chunks(7, 3).iter().sum::<usize>(), 7);
    }

    #[test]
    fn trace_is_monotone_and_budget_respected() {
        for seed in 0..5 {
            let g = random_graph(12, 0.25, 3, seed);
            let enc = EncoderModel::new(EncoderConfig::new(EncoderKind::Gin, 2, 6), 3, seed).unwrap();
            let probe = LinearProbe::new(6, 2, seed);
            let t = Targets::Nodes { nodes: (0..12).step_by(2).collect(), labels: vec![0, 1, 0, 1, 0, 1] };
            let prob = AttackProblem::new(&enc, &probe, &g, t, AttackLoss::NegCrossEntropy).unwrap();
            let cfg = AttackConfig { steps: 3, block_size: 20, ..AttackConfig::new(AttackKind::Grbcd) }.with_seed(seed);
            let r = grbcd_attack(&prob, 5, &cfg).unwrap();
            assert!(r.flips.len() <= 5);
            assert_eq!(r.loss_trace.len(), 4);
            assert!(r.loss_trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", r.loss_trace);
            let idx = prob.candidate_indices(&r.flips);
            let exact = prob.loss_with_flips(&idx).unwrap();
            assert!((exact - r.loss_trace[3]).abs() < 1e-12);
            assert_eq!(r, AttackResult { wall_ms: r.wall_ms, ..grbcd_attack(&prob, 5, &cfg).unwrap() });
        }
    }
}
