use super::{channels_descending, pairs_ascending, validate, AllocError, Allocation};

/// Deals channels, strongest first, to the pairs in ascending order of
/// transmittance, cycling through the pairs.
pub fn round_robin(lambda: &[f64], rates: &[f64]) -> Result<Allocation, AllocError> {
    validate(lambda, rates)?;
    let owner = deal(lambda, rates, &(0..rates.len()).collect::<Vec<_>>());
    Ok(Allocation::from_owners(&owner, lambda, rates))
}

/// Round robin restricted to `channels`; other entries of the returned
/// owner vector are `usize::MAX`.
pub(crate) fn deal(lambda: &[f64], rates: &[f64], channels: &[usize]) -> Vec<usize> {
    let pairs = pairs_ascending(lambda);
    let sub: Vec<f64> = channels.iter().map(|&c| rates[c]).collect();
    let mut owner = vec![usize::MAX; rates.len()];
    for (t, &k) in channels_descending(&sub).iter().enumerate() {
        owner[channels[k]] = pairs[t % pairs.len()];
    }
    owner
}
