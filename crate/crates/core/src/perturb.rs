//! Random tie-breaking of metric scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::score::{EpsilonPolicy, ScoreVector};

/// Replaces scores by 1-based ranks in a random order that respects every
/// strict (non-tied) relation in `m`.
///
/// Scores are emitted one at a time. An item becomes eligible once every
/// score that is smaller than it and not tied with it has been emitted, and
/// each step picks uniformly among the eligible items. With `epsilon = 0` this
/// is a uniform shuffle inside each group of equal scores.
pub fn break_ties_randomly(m: &ScoreVector, eps: EpsilonPolicy, seed: u64) -> ScoreVector {
    let n = m.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a].total_cmp(&m[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| m[i]).collect();

    // waiting[b] holds the sorted positions that become eligible once sorted
    // positions 0..b have all been emitted; b is one past the nearest lower
    // position not tied with p.
    let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for p in 0..n {
        let bound = (0..p)
            .rev()
            .find(|&q| !eps.ties(sorted[q], sorted[p]))
            .map_or(0, |q| q + 1);
        waiting[bound].push(p);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut emitted = vec![false; n];
    let mut pool: Vec<usize> = Vec::new();
    let mut prefix = 0;
    pool.append(&mut waiting[0]);
    let mut ranks = vec![0.0; n];
    for rank in 1..=n {
        let pick = rng.random_range(0..pool.len());
        let p = pool.swap_remove(pick);
        emitted[p] = true;
        ranks[order[p]] = rank as f64;
        while prefix < n && emitted[prefix] {
            prefix += 1;
            pool.append(&mut waiting[prefix]);
        }
    }
    ScoreVector::new(ranks).expect("ranks are finite")
}
