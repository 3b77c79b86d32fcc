use std::time::Instant;

use rand::seq::index;

use super::{AttackKind, AttackProblem, AttackResult, AttackError, Result};
use crate::seed::stream;

/// Toggles exactly `delta` distinct pairs drawn uniformly.
pub fn random_flip_attack(problem: &AttackProblem<'_>, delta: usize, seed: u64) -> Result<AttackResult> {
    let start = Instant::now();
    let c = problem.num_candidates();
    if delta > c {
        return Err(AttackError::BudgetInfeasible { delta, capacity: c });
    }
    let mut rng = stream(seed, "random-flip");
    let mut chosen = index::sample(&mut rng, c, delta).into_vec();
    chosen.sort_unstable();
    let adj = problem.toggled(problem.adjacency(), &chosen);
    let loss = problem.loss_at(&adj)?;
    Ok(AttackResult {
        attack: AttackKind::Random,
        delta,
        flips: chosen.iter().map(|&e| problem.pair(e)).collect(),
        relaxed_final: None,
        acc_adv: problem.accuracy_at(&adj)?,
        loss_trace: vec![loss],
        peak_live_weights: 0,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}
