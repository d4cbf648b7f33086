use std::time::Instant;

use super::{channels_descending, pairs_ascending, validate, AllocError, Allocation, Strategy, StrategyResult};

/// Greedy max-min: one strong channel per pair (weakest pair gets the
/// strongest channel), then each remaining channel in descending rate goes
/// to the pair currently receiving least. Ties go to the lowest pair index.
pub fn modified_lpt(lambda: &[f64], rates: &[f64]) -> Result<StrategyResult, AllocError> {
    validate(lambda, rates)?;
    let start = Instant::now();
    let owner = lpt_owners(lambda, rates);
    let allocation = Allocation::from_owners(&owner, lambda, rates);
    Ok(StrategyResult::new(allocation, Strategy::ModifiedLpt, start.elapsed()))
}

pub(crate) fn lpt_owners(lambda: &[f64], rates: &[f64]) -> Vec<usize> {
    let pairs = pairs_ascending(lambda);
    let channels = channels_descending(rates);
    let kappa = lambda.len();
    let mut owner = vec![0; rates.len()];
    let mut acc = vec![0.0; kappa];
    for (&p, &c) in pairs.iter().zip(&channels) {
        owner[c] = p;
        acc[p] += lambda[p] * rates[c];
    }
    for &c in &channels[kappa..] {
        let mut best = 0;
        for p in 1..kappa {
            if acc[p] < acc[best] {
                best = p;
            }
        }
        owner[c] = best;
        acc[best] += lambda[best] * rates[c];
    }
    owner
}
