//! Pearson and Spearman correlation, for comparison with the pairwise statistics.

use crate::error::{Error, Result};
use crate::score::ScoreVector;
use crate::stats::StatValue;

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            human: x.len(),
            metric: y.len(),
        });
    }
    Ok(())
}

fn product_moment(x: &[f64], y: &[f64]) -> StatValue {
    let n = x.len();
    if n < 2 {
        return StatValue::Undefined;
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return StatValue::Undefined;
    }
    StatValue::Defined((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson's product-moment correlation. Undefined if either input is constant.
pub fn pearson(x: &ScoreVector, y: &ScoreVector) -> Result<StatValue> {
    check(x, y)?;
    Ok(product_moment(x, y))
}

/// Spearman's rho: Pearson's correlation of mid-ranks.
pub fn spearman(x: &ScoreVector, y: &ScoreVector) -> Result<StatValue> {
    check(x, y)?;
    Ok(product_moment(&mid_ranks(x), &mid_ranks(y)))
}

/// 1-based ranks, with tied values sharing the mean of their positions.
pub(crate) fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) share rank (start+1 + end) / 2.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}
