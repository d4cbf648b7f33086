use std::time::Instant;

use super::matching::{hungarian, nested_matching_exists};
use super::round_robin::deal;
use super::{channels_descending, validate, AllocError, Allocation, Strategy, StrategyResult};

/// Iterated matching rounds in the style of Bezakova and Dani.
///
/// Each round finds the largest threshold `T` such that every pair still
/// below `T` can be given one distinct remaining channel lifting it to at
/// least `T`. Among those matchings the one with least total delivered
/// rate is applied. Pairs already at `T` sit the round out, so after the
/// first round each pair gains zero or one channel per round and at most
/// `m - kappa + 1` rounds run. Rounds stop when no channel is left or no
/// threshold above the current minimum can be matched; any channels still
/// unassigned are then dealt round robin.
pub fn modified_bd(lambda: &[f64], rates: &[f64]) -> Result<StrategyResult, AllocError> {
    validate(lambda, rates)?;
    let start = Instant::now();
    let kappa = lambda.len();
    let mut remaining = channels_descending(rates);
    let mut owner = vec![usize::MAX; rates.len()];
    let mut acc = vec![0.0; kappa];

    while !remaining.is_empty() {
        let threshold = best_threshold(lambda, rates, &remaining, &acc);
        let unsatisfied: Vec<usize> = (0..kappa).filter(|&p| acc[p] < threshold).collect();
        if unsatisfied.is_empty() {
            break;
        }
        let cols = remaining.len();
        let max_gain = lambda.iter().copied().fold(0.0, f64::max) * rates[remaining[0]];
        let forbidden = 1.0 + max_gain * unsatisfied.len() as f64;
        let mut cost = Vec::with_capacity(unsatisfied.len() * cols);
        for &p in &unsatisfied {
            for &c in &remaining {
                let gain = lambda[p] * rates[c];
                cost.push(if acc[p] + gain >= threshold { gain } else { forbidden });
            }
        }
        let assignment = hungarian(&cost, unsatisfied.len(), cols);
        let mut taken = vec![false; cols];
        for (&p, &k) in unsatisfied.iter().zip(&assignment) {
            let c = remaining[k];
            debug_assert!(acc[p] + lambda[p] * rates[c] >= threshold);
            owner[c] = p;
            acc[p] += lambda[p] * rates[c];
            taken[k] = true;
        }
        let mut k = 0;
        remaining.retain(|_| {
            k += 1;
            !taken[k - 1]
        });
    }

    let dealt = deal(lambda, rates, &remaining);
    for &c in &remaining {
        owner[c] = dealt[c];
    }
    let allocation = Allocation::from_owners(&owner, lambda, rates);
    Ok(StrategyResult::new(allocation, Strategy::ModifiedBd, start.elapsed()))
}

/// Largest threshold admitting a matching of all pairs below it.
///
/// The feasible thresholds form a down-set whose supremum is attained at
/// some current pair total or at a pair total plus one channel's delivered
/// rate, so only those values are searched.
fn best_threshold(lambda: &[f64], rates: &[f64], remaining: &[usize], acc: &[f64]) -> f64 {
    let mut candidates: Vec<f64> = Vec::with_capacity(acc.len() * (remaining.len() + 1));
    for (p, &a) in acc.iter().enumerate() {
        candidates.push(a);
        candidates.extend(remaining.iter().map(|&c| a + lambda[p] * rates[c]));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let feasible = |t: f64| {
        let mut prefix: Vec<usize> = acc
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a < t)
            .map(|(p, &a)| remaining.partition_point(|&c| a + lambda[p] * rates[c] >= t))
            .collect();
        nested_matching_exists(&mut prefix)
    };
    // candidates[0] is the smallest pair total, always feasible
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if feasible(candidates[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    candidates[lo]
}
