//! Synthetic score campaigns for benchmarks and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use tiecal_core::{GroupingMode, ScoreMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Campaign {
    pub human: ScoreMatrix,
    pub metric: ScoreMatrix,
}

fn system_id(i: usize) -> String {
    format!("sys{i:02}")
}

fn segment_id(j: usize) -> String {
    format!("seg{j:04}")
}

/// Small instance for oracle checks: at most `max_groups` groups of at most
/// `max_size` entries under `mode`, scores in {0, 0.25, ..., 2.25}, and a few
/// entries missing from one side.
pub fn discrete_instance(rng: &mut impl Rng, mode: GroupingMode, max_groups: usize, max_size: usize) -> Campaign {
    let groups = rng.random_range(1..=max_groups);
    let (systems, segments) = match mode {
        GroupingMode::NoGrouping => (rng.random_range(2..=max_size), 1),
        GroupingMode::GroupByItem => (rng.random_range(2..=max_size), groups),
        GroupingMode::GroupBySystem => (groups, rng.random_range(2..=max_size)),
    };
    let mut human = ScoreMatrix::new();
    let mut metric = ScoreMatrix::new();
    for i in 0..systems {
        for j in 0..segments {
            if rng.random_bool(0.9) {
                human.insert(system_id(i), segment_id(j), quarter(rng)).expect("fresh key");
            }
            if rng.random_bool(0.9) {
                metric.insert(system_id(i), segment_id(j), quarter(rng)).expect("fresh key");
            }
        }
    }
    Campaign { human, metric }
}

fn quarter(rng: &mut impl Rng) -> f64 {
    f64::from(rng.random_range(0..10u8)) / 4.0
}

/// Complete campaign with human scores drawn from `levels` and metric =
/// human + N(0, sigma).
pub fn noisy_campaign(systems: usize, segments: usize, levels: &[f64], sigma: f64, seed: u64) -> Campaign {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let mut human = ScoreMatrix::new();
    let mut metric = ScoreMatrix::new();
    for j in 0..segments {
        for i in 0..systems {
            let h = levels[rng.random_range(0..levels.len())];
            human.insert(system_id(i), segment_id(j), h).expect("fresh key");
            metric.insert(system_id(i), segment_id(j), h + noise.sample(&mut rng)).expect("fresh key");
        }
    }
    Campaign { human, metric }
}

/// MQM-like campaign: human score is minus (minor errors + 5 x major
/// errors + 25 x critical errors), so most translations score 0 and a few score far below. Each
/// segment has its own difficulty, so some segments are near-perfect and
/// others spread widely. Metric = human + N(0, sigma).
pub fn mqm_campaign(systems: usize, segments: usize, sigma: f64, seed: u64) -> Campaign {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let difficulty = Exp::new(1.0).expect("valid rate");
    let mut human = ScoreMatrix::new();
    let mut metric = ScoreMatrix::new();
    for j in 0..segments {
        let d: f64 = difficulty.sample(&mut rng) + 1e-3;
        let minor = Poisson::new(d).expect("positive mean");
        let major = Poisson::new(d / 4.0).expect("positive mean");
        let critical = Poisson::new(d / 20.0).expect("positive mean");
        for i in 0..systems {
            let h = if rng.random_bool(0.5) {
                0.0
            } else {
                -(minor.sample(&mut rng) + 5.0 * major.sample(&mut rng) + 25.0 * critical.sample(&mut rng))
            };
            human.insert(system_id(i), segment_id(j), h).expect("fresh key");
            metric.insert(system_id(i), segment_id(j), h + noise.sample(&mut rng)).expect("fresh key");
        }
    }
    Campaign { human, metric }
}

/// `n` scores, each in `0..levels` so ties occur at a controlled rate.
pub fn random_scores(n: usize, levels: u32, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect()
}
