use std::time::Instant;

use super::{pairs_ascending, validate, AllocError, Allocation, Strategy, StrategyResult};

/// First Fit with an integer threshold search.
pub fn first_fit(lambda: &[f64], rates: &[f64]) -> Result<StrategyResult, AllocError> {
    first_fit_scaled(lambda, rates, 1.0)
}

/// First Fit searching thresholds on the grid `T / scale`, `T` integer.
///
/// Channels are handed out in index order to the pairs in ascending order
/// of transmittance; a pair stops receiving once it reaches the threshold.
/// The largest threshold every pair reaches is found by binary search, and
/// channels left over at that threshold stay with the last pair.
pub fn first_fit_scaled(lambda: &[f64], rates: &[f64], scale: f64) -> Result<StrategyResult, AllocError> {
    validate(lambda, rates)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(AllocError::InvalidOption(format!("first fit scale must be positive, got {scale}")));
    }
    let start = Instant::now();
    let order = pairs_ascending(lambda);
    let kappa = lambda.len() as f64;
    let total: f64 = rates.iter().sum();
    let mut lo: u64 = 0;
    let mut hi: u64 = (total * scale / kappa).ceil() as u64;
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if assign(lambda, rates, &order, mid as f64 / scale).1 {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let (owner, _) = assign(lambda, rates, &order, lo as f64 / scale);
    let allocation = Allocation::from_owners(&owner, lambda, rates);
    Ok(StrategyResult::new(allocation, Strategy::FirstFit, start.elapsed()))
}

/// Returns the owners and whether every pair reached `threshold`.
fn assign(lambda: &[f64], rates: &[f64], order: &[usize], threshold: f64) -> (Vec<usize>, bool) {
    let mut owner = vec![0; rates.len()];
    let mut acc = vec![0.0; lambda.len()];
    let mut j = 0;
    for (c, &rate) in rates.iter().enumerate() {
        let p = order[j.min(order.len() - 1)];
        owner[c] = p;
        acc[p] += lambda[p] * rate;
        if j < order.len() && acc[p] >= threshold {
            j += 1;
        }
    }
    (owner, j >= order.len())
}
