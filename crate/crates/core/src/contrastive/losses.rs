use ndarray::{Array2, Axis};

use super::{ContrastiveError, Result};
use crate::autodiff::{identity, Tape, Tensor};

/// InfoNCE over aligned rows of `z1` and `z2` (already projected):
/// `−mean_k [S_kk − logsumexp_{j≠k} S_kj]` with `S = z1·z2ᵀ/τ`.
/// The positive pair is excluded from the denominator.
pub fn info_nce(tape: &mut Tape, z1: Tensor, z2: Tensor, tau: f64) -> Result<Tensor> {
    let b = tape.shape(z1).0;
    if b < 2 {
        return Err(ContrastiveError::NeedNegatives(b));
    }
    let z2t = tape.transpose(z2);
    let s = tape.matmul(z1, z2t)?;
    let s = tape.scale(s, 1.0 / tau);
    let eye = tape.constant(identity(b))?;
    let diag = tape.mul(s, eye)?;
    let diag = tape.sum_axis(diag, Axis(1));
    let off = Array2::from_shape_fn((b, b), |(i, j)| i != j);
    let lse = tape.masked_logsumexp_rows(s, off)?;
    let terms = tape.sub(diag, lse)?;
    let m = tape.mean(terms);
    Ok(tape.neg(m))
}

/// Jensen-Shannon estimate `mean(−softplus(−pos)) − mean(softplus(neg))`.
pub fn js_mi_estimate(tape: &mut Tape, pos: Tensor, neg: Tensor) -> Result<Tensor> {
    let (pr, pc) = tape.shape(pos);
    let (nr, nc) = tape.shape(neg);
    if pr * pc == 0 || nr * nc == 0 {
        return Err(ContrastiveError::EmptyScores);
    }
    let np = tape.neg(pos);
    let a = tape.softplus(np);
    let a = tape.mean(a);
    let b = tape.softplus(neg);
    let b = tape.mean(b);
    let s = tape.add(a, b)?;
    Ok(tape.neg(s))
}

/// Binary cross-entropy of bilinear scores `hᵀ·B·s`, clean patches labelled
/// positive and corrupted patches negative, averaged over all `2n` terms.
pub fn dgi_loss(tape: &mut Tape, h: Tensor, h_corrupt: Tensor, summary: Tensor, bilinear: Tensor) -> Result<Tensor> {
    let st = tape.transpose(summary);
    let bs = tape.matmul(bilinear, st)?;
    let pos = tape.matmul(h, bs)?;
    let neg = tape.matmul(h_corrupt, bs)?;
    let n_terms = (tape.shape(pos).0 + tape.shape(neg).0) as f64;
    let np = tape.neg(pos);
    let a = tape.softplus(np);
    let a = tape.sum(a);
    let b = tape.softplus(neg);
    let b = tape.sum(b);
    let s = tape.add(a, b)?;
    Ok(tape.scale(s, 1.0 / n_terms))
}

/// Negative JS estimate over all (patch, summary) pairs of a batch. Patch
/// `i` belongs to graph `graph_of[i]`; same-graph pairs are positives and
/// cross-graph pairs negatives. `scores` is the `N×B` discriminator output.
pub fn infograph_loss(tape: &mut Tape, scores: Tensor, graph_of: &[usize]) -> Result<Tensor> {
    let (n, b) = tape.shape(scores);
    if b < 2 {
        return Err(ContrastiveError::NeedNegatives(b));
    }
    if n != graph_of.len() {
        return Err(crate::autodiff::AutodiffError::ShapeMismatch {
            op: "infograph_loss",
            lhs: (n, b),
            rhs: (graph_of.len(), b),
        }
        .into());
    }
    let pos = Array2::from_shape_fn((n, b), |(i, j)| f64::from(graph_of[i] == j));
    let npos = pos.sum();
    let nneg = (n * b) as f64 - npos;
    if npos == 0.0 || nneg == 0.0 {
        return Err(ContrastiveError::EmptyScores);
    }
    let negm = pos.mapv(|v| 1.0 - v);
    let pos = tape.constant(pos)?;
    let negm = tape.constant(negm)?;
    let ns = tape.neg(scores);
    let a = tape.softplus(ns);
    let a = tape.mul(a, pos)?;
    let a = tape.sum(a);
    let a = tape.scale(a, 1.0 / npos);
    let c = tape.softplus(scores);
    let c = tape.mul(c, negm)?;
    let c = tape.sum(c);
    let c = tape.scale(c, 1.0 / nneg);
    Ok(tape.add(a, c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::softplus;
    use crate::contrastive::PairDiscriminator;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(r: usize, c: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.5..1.5))
    }

    fn nce(z1: &Array2<f64>, z2: &Array2<f64>, tau: f64) -> f64 {
        let mut t = Tape::new();
        let a = t.constant(z1.clone()).unwrap();
        let b = t.constant(z2.clone()).unwrap();
        let l = info_nce(&mut t, a, b, tau).unwrap();
        t.scalar(l)
    }

    fn naive_nce(z1: &Array2<f64>, z2: &Array2<f64>, tau: f64) -> f64 {
        let b = z1.nrows();
        let mut total = 0.0;
        for k in 0..b {
            let d = |j: usize| z1.row(k).dot(&z2.row(j)) / tau;
            let denom: f64 = (0..b).filter(|&j| j != k).map(|j| d(j).exp()).sum();
            total += -(d(k).exp() / denom).ln();
        }
        total / b as f64
    }

    #[test]
    fn info_nce_uniform_scores_is_ln2() {
        let z = Array2::from_elem((3, 2), 0.3);
        assert!((nce(&z, &z, 0.5) - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn info_nce_batch_two_single_negative() {
        // Scores: S = z1·z2ᵀ with z1 = I, z2 = [[a, c], [b, d]] → S_00 = a, S_01 = b.
        let (a, b, c, d) = (0.7, -0.4, 0.2, 1.1);
        let z1 = identity(2);
        let z2 = ndarray::array![[a, c], [b, d]];
        let expect = (-(a - b) + -(d - c)) / 2.0;
        assert!((nce(&z1, &z2, 1.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn info_nce_matches_naive_oracle() {
        for seed in 0..20 {
            let z1 = rand_mat(4, 5, seed);
            let z2 = rand_mat(4, 5, seed + 100);
            assert!((nce(&z1, &z2, 0.5) - naive_nce(&z1, &z2, 0.5)).abs() <= 1e-10);
        }
    }

    #[test]
    fn info_nce_needs_negatives() {
        let mut t = Tape::new();
        let a = t.constant(Array2::zeros((1, 3))).unwrap();
        assert!(matches!(info_nce(&mut t, a, a, 0.5), Err(ContrastiveError::NeedNegatives(1))));
    }

    fn js(pos: &Array2<f64>, neg: &Array2<f64>) -> f64 {
        let mut t = Tape::new();
        let p = t.constant(pos.clone()).unwrap();
        let n = t.constant(neg.clone()).unwrap();
        let l = js_mi_estimate(&mut t, p, n).unwrap();
        t.scalar(l)
    }

    #[test]
    fn js_estimates() {
        let z = Array2::zeros((4, 1));
        assert!((js(&z, &z) + 2.0 * 2f64.ln()).abs() < 1e-15);
        let v = js(&Array2::from_elem((2, 1), 40.0), &Array2::from_elem((3, 1), -40.0));
        assert!(v < 0.0 && v > -1e-15);
        let pos = rand_mat(7, 1, 1);
        let neg = rand_mat(5, 1, 2);
        let expect = pos.iter().map(|&x| -softplus(-x)).sum::<f64>() / 7.0
            - neg.iter().map(|&x| softplus(x)).sum::<f64>() / 5.0;
        assert!((js(&pos, &neg) - expect).abs() <= 1e-12);
    }

    fn dgi(h: &Array2<f64>, hc: &Array2<f64>, s: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let mut t = Tape::new();
        let args: Vec<Tensor> = [h, hc, s, b].iter().map(|a| t.constant((*a).clone()).unwrap()).collect();
        let l = dgi_loss(&mut t, args[0], args[1], args[2], args[3]).unwrap();
        t.scalar(l)
    }

    #[test]
    fn dgi_loss_cases() {
        let h = rand_mat(5, 3, 4);
        let zero_b = Array2::zeros((3, 3));
        let s = rand_mat(1, 3, 5);
        assert!((dgi(&h, &h, &s, &zero_b) - 2f64.ln()).abs() < 1e-15);
        let sep = dgi(&Array2::from_elem((2, 1), 50.0), &Array2::from_elem((2, 1), -50.0), &Array2::ones((1, 1)), &Array2::ones((1, 1)));
        assert!(sep < 1e-20);
        let hc = rand_mat(5, 3, 6);
        let b = rand_mat(3, 3, 7);
        let bs = b.dot(&s.t());
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut bce = 0.0;
        for i in 0..5 {
            bce -= sig(h.row(i).dot(&bs.column(0))).ln();
            bce -= (1.0 - sig(hc.row(i).dot(&bs.column(0)))).ln();
        }
        assert!((dgi(&h, &hc, &s, &b) - bce / 10.0).abs() <= 1e-10);
    }

    fn infograph(patches: &Array2<f64>, summaries: &Array2<f64>, graph_of: &[usize], disc: &PairDiscriminator) -> f64 {
        let mut t = Tape::new();
        let bound = disc.params.bind(&mut t, false).unwrap();
        let p = t.constant(patches.clone()).unwrap();
        let s = t.constant(summaries.clone()).unwrap();
        let scores = PairDiscriminator::score_all(&mut t, &bound, p, s).unwrap();
        let l = infograph_loss(&mut t, scores, graph_of).unwrap();
        t.scalar(l)
    }

    #[test]
    fn infograph_zero_discriminator_is_two_ln2() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut disc = PairDiscriminator::new(3, &mut rng);
        for v in disc.params.values_mut() {
            v.fill(0.0);
        }
        let p = rand_mat(4, 3, 1);
        let s = ndarray::concatenate![Axis(0), p.slice(ndarray::s![0..1, ..]), p.slice(ndarray::s![0..1, ..])];
        let l = infograph(&p, &s, &[0, 0, 1, 1], &disc);
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn infograph_single_node_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let disc = PairDiscriminator::new(2, &mut rng);
        let p = rand_mat(2, 2, 3);
        assert!(infograph(&p, &p, &[0, 1], &disc).is_finite());
    }

    #[test]
    fn infograph_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = 4;
        let disc = PairDiscriminator::new(q, &mut rng);
        let sizes = [3usize, 2, 4];
        let graph_of: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &k)| std::iter::repeat(g).take(k)).collect();
        let patches = rand_mat(graph_of.len(), q, 8);
        let summaries = rand_mat(3, q, 9);
        let prm = &disc.params;
        let (wh, ws, b0, w1, b1) = (
            prm.values()[0].clone(),
            prm.values()[1].clone(),
            prm.values()[2].clone(),
            prm.values()[3].clone(),
            prm.values()[4][[0, 0]],
        );
        // T(h, s) = w1ᵀ relu([h, s]·[Wh; Ws] + b0) + b1
        let w_full = ndarray::concatenate![Axis(0), wh, ws];
        let t = |h: ndarray::ArrayView1<f64>, s: ndarray::ArrayView1<f64>| {
            let cat = ndarray::concatenate![Axis(0), h, s];
            let hid = (cat.dot(&w_full) + &b0.row(0)).mapv(|v: f64| v.max(0.0));
            hid.dot(&w1.column(0)) + b1
        };
        let (mut pos, mut npos, mut neg, mut nneg) = (0.0, 0.0, 0.0, 0.0);
        for (i, &gi) in graph_of.iter().enumerate() {
            for j in 0..3 {
                let v = t(patches.row(i), summaries.row(j));
                if gi == j {
                    pos += softplus(-v);
                    npos += 1.0;
                } else {
                    neg += softplus(v);
                    nneg += 1.0;
                }
            }
        }
        let expect = pos / npos + neg / nneg;
        assert!((infograph(&patches, &summaries, &graph_of, &disc) - expect).abs() <= 1e-10);
    }

    fn random_rotation(q: usize, seed: u64) -> Array2<f64> {
        // Gram-Schmidt on a random matrix.
        let a = rand_mat(q, q, seed);
        let mut qm = Array2::<f64>::zeros((q, q));
        for c in 0..q {
            let mut v = a.column(c).to_owned();
            for k in 0..c {
                let u = qm.column(k).to_owned();
                v = &v - &(&u * u.dot(&v));
            }
            let norm = v.dot(&v).sqrt();
            qm.column_mut(c).assign(&(v / norm));
        }
        qm
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn info_nce_rotation_invariant(seed in 0u64..1000) {
            let z1 = rand_mat(5, 4, seed);
            let z2 = rand_mat(5, 4, seed + 1);
            let r = random_rotation(4, seed + 2);
            prop_assert!((nce(&z1, &z2, 0.5) - nce(&z1.dot(&r), &z2.dot(&r), 0.5)).abs() <= 1e-8);
        }

        #[test]
        fn info_nce_batch_order_invariant(seed in 0u64..1000, perm in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle()) {
            let z1 = rand_mat(5, 3, seed);
            let z2 = rand_mat(5, 3, seed + 7);
            let p1 = z1.select(Axis(0), &perm);
            let p2 = z2.select(Axis(0), &perm);
            prop_assert!((nce(&z1, &z2, 0.5) - nce(&p1, &p2, 0.5)).abs() <= 1e-12);
        }
    }
}
