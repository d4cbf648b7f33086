use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lpt::lpt_owners;
use super::{channels_descending, validate, AllocError, Allocation, Strategy, StrategyResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOptions {
    /// Wall-clock limit for the search.
    pub budget: Duration,
    /// Randomizes the order in which pairs are tried, which changes which
    /// of several optimal assignments is returned.
    pub shuffle_seed: Option<u64>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { budget: Duration::from_secs(10), shuffle_seed: None }
    }
}

/// Optimal max-min allocation by branch and bound.
///
/// Channels are branched on in descending rate. A node is pruned when the
/// divisible relaxation of the remaining channels (water-filling the pair
/// totals) cannot beat the incumbent, which starts from Modified LPT.
pub fn exact_maxmin(lambda: &[f64], rates: &[f64], options: &ExactOptions) -> Result<StrategyResult, AllocError> {
    validate(lambda, rates)?;
    let start = Instant::now();
    let kappa = lambda.len();
    let channels = channels_descending(rates);
    let mut rest = vec![0.0; channels.len() + 1];
    for t in (0..channels.len()).rev() {
        rest[t] = rest[t + 1] + rates[channels[t]];
    }
    let mut rank: Vec<usize> = (0..kappa).collect();
    if let Some(seed) = options.shuffle_seed {
        rank.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    let incumbent = lpt_owners(lambda, rates);
    let best = Allocation::from_owners(&incumbent, lambda, rates).min_received();
    let root_bound = water_fill(&vec![0.0; kappa], lambda, rest[0]);
    let mut search = Search {
        lambda,
        rates,
        channels: &channels,
        rest: &rest,
        rank: &rank,
        sums: vec![0.0; kappa],
        owner: vec![0; rates.len()],
        best,
        best_owner: incumbent,
        root_bound,
        deadline: start + options.budget,
        nodes: 0,
        timed_out: false,
    };
    if search.best < root_bound {
        search.dfs(0);
    }
    let allocation = Allocation::from_owners(&search.best_owner, lambda, rates);
    let result = StrategyResult::new(allocation, Strategy::Exact, start.elapsed());
    if search.timed_out {
        return Err(AllocError::Incomplete { best: Box::new(result), bound: root_bound });
    }
    Ok(result)
}

struct Search<'a> {
    lambda: &'a [f64],
    rates: &'a [f64],
    channels: &'a [usize],
    rest: &'a [f64],
    rank: &'a [usize],
    sums: Vec<f64>,
    owner: Vec<usize>,
    best: f64,
    best_owner: Vec<usize>,
    root_bound: f64,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.timed_out || self.best >= self.root_bound
    }

    fn dfs(&mut self, t: usize) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) && Instant::now() > self.deadline {
            self.timed_out = true;
        }
        if self.done() {
            return;
        }
        let kappa = self.lambda.len();
        let loads: Vec<f64> = self.sums.iter().zip(self.lambda).map(|(s, l)| s * l).collect();
        if t == self.channels.len() {
            let value = loads.iter().copied().fold(f64::INFINITY, f64::min);
            if value > self.best {
                self.best = value;
                self.best_owner.clone_from(&self.owner);
            }
            return;
        }
        let empty = self.sums.iter().filter(|&&s| s == 0.0).count();
        if empty > self.channels.len() - t {
            return;
        }
        if water_fill(&loads, self.lambda, self.rest[t]) <= self.best {
            return;
        }

        let mut order: Vec<usize> = (0..kappa).collect();
        order.sort_by(|&a, &b| loads[a].total_cmp(&loads[b]).then(self.rank[a].cmp(&self.rank[b])));
        let c = self.channels[t];
        for (k, &p) in order.iter().enumerate() {
            // pairs with equal totals and transmittance give mirror subtrees
            if order[..k].iter().any(|&q| self.sums[q] == self.sums[p] && self.lambda[q] == self.lambda[p]) {
                continue;
            }
            let saved = self.sums[p];
            self.sums[p] += self.rates[c];
            self.owner[c] = p;
            self.dfs(t + 1);
            self.sums[p] = saved;
            if self.done() {
                return;
            }
        }
    }
}

/// Max-min level reachable when `remaining` rate can be split freely:
/// the `L` with `sum max(0, (L - load_p) / lambda_p) = remaining`.
fn water_fill(loads: &[f64], lambda: &[f64], remaining: f64) -> f64 {
    let mut order: Vec<usize> = (0..loads.len()).collect();
    order.sort_by(|&a, &b| loads[a].total_cmp(&loads[b]));
    let (mut inv, mut weighted) = (0.0, 0.0);
    for (k, &p) in order.iter().enumerate() {
        inv += 1.0 / lambda[p];
        weighted += loads[p] / lambda[p];
        let level = (remaining + weighted) / inv;
        if k + 1 == order.len() || level <= loads[order[k + 1]] {
            return level;
        }
    }
    f64::INFINITY
}
