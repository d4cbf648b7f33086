//! Assignment of WDM channels to node pairs under a max-min objective.
//!
//! Every strategy takes the per-pair transmittances `lambda` (length `kappa`)
//! and the per-channel generation rates (length `m`) and partitions the
//! channels among the pairs. Pair `p` then receives
//! `lambda[p] * sum(rates of its channels)` EPR pairs per second.

mod bd;
mod exact;
mod first_fit;
mod lpt;
pub mod matching;
mod round_robin;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bd::modified_bd;
pub use exact::{exact_maxmin, ExactOptions};
pub use first_fit::{first_fit, first_fit_scaled};
pub use lpt::modified_lpt;
pub use round_robin::round_robin;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("{m} channels cannot cover {kappa} node pairs")]
    TooFewChannels { m: usize, kappa: usize },
    #[error("no node pairs to allocate to")]
    NoPairs,
    #[error("channel {index} has invalid rate {value}")]
    InvalidRate { index: usize, value: f64 },
    #[error("pair {index} has transmittance {value} outside (0, 1]")]
    InvalidLambda { index: usize, value: f64 },
    #[error("invalid strategy option: {0}")]
    InvalidOption(String),
    #[error("exact search stopped at its budget with incumbent {} and bound {bound}", best.objective)]
    Incomplete { best: Box<StrategyResult>, bound: f64 },
}

/// Channel-to-pair partition and the rates it delivers.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    m: usize,
    kappa: usize,
    /// Row-major `m x kappa` 0/1 matrix.
    x: Vec<u8>,
    received: Vec<f64>,
}

impl Allocation {
    /// Builds the allocation where channel `c` goes to pair `owner[c]`.
    pub fn from_owners(owner: &[usize], lambda: &[f64], rates: &[f64]) -> Self {
        assert_eq!(owner.len(), rates.len(), "one owner per channel");
        let (m, kappa) = (rates.len(), lambda.len());
        let mut x = vec![0u8; m * kappa];
        let mut sums = vec![0.0; kappa];
        for (c, &p) in owner.iter().enumerate() {
            assert!(p < kappa, "owner {p} out of range");
            x[c * kappa + p] = 1;
            sums[p] += rates[c];
        }
        let received = sums.iter().zip(lambda).map(|(s, l)| l * s).collect();
        Self { m, kappa, x, received }
    }

    pub fn channels(&self) -> usize {
        self.m
    }

    pub fn pairs(&self) -> usize {
        self.kappa
    }

    pub fn entry(&self, channel: usize, pair: usize) -> u8 {
        self.x[channel * self.kappa + pair]
    }

    /// The pair holding `channel`, if exactly one does.
    pub fn owner(&self, channel: usize) -> Option<usize> {
        let row = &self.x[channel * self.kappa..(channel + 1) * self.kappa];
        let mut found = None;
        for (p, &v) in row.iter().enumerate() {
            if v == 1 {
                if found.is_some() {
                    return None;
                }
                found = Some(p);
            }
        }
        found
    }

    pub fn owners(&self) -> Vec<Option<usize>> {
        (0..self.m).map(|c| self.owner(c)).collect()
    }

    pub fn row_sums(&self) -> Vec<u32> {
        self.x.chunks(self.kappa.max(1)).map(|r| r.iter().map(|&v| v as u32).sum()).collect()
    }

    /// Every channel is held by exactly one pair.
    pub fn is_partition(&self) -> bool {
        self.kappa > 0 && self.row_sums().iter().all(|&s| s == 1)
    }

    /// Received rate of each pair.
    pub fn received(&self) -> &[f64] {
        &self.received
    }

    pub fn min_received(&self) -> f64 {
        self.received.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Recomputes the received vector from the matrix.
    pub fn recompute(&self, lambda: &[f64], rates: &[f64]) -> Vec<f64> {
        (0..self.kappa)
            .map(|p| {
                let s: f64 = (0..self.m).filter(|&c| self.entry(c, p) == 1).map(|c| rates[c]).sum();
                lambda[p] * s
            })
            .collect()
    }

    /// Writes `channel_index,pair,rate_contribution`, one row per channel.
    /// `pair_names` defaults to the 0-based pair index.
    pub fn write_csv<W: Write>(
        &self,
        lambda: &[f64],
        rates: &[f64],
        pair_names: Option<&[String]>,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "channel_index,pair,rate_contribution")?;
        for c in 0..self.m {
            let Some(p) = self.owner(c) else { continue };
            let name = pair_names.map_or_else(|| p.to_string(), |n| n[p].clone());
            writeln!(out, "{},{},{}", c + 1, name, lambda[p] * rates[c])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[serde(alias = "rr")]
    RoundRobin,
    #[serde(alias = "ff")]
    FirstFit,
    #[serde(alias = "lpt")]
    ModifiedLpt,
    #[serde(alias = "bd")]
    ModifiedBd,
    #[serde(alias = "ilp")]
    Exact,
}

impl Strategy {
    pub const APPROXIMATIONS: [Strategy; 4] =
        [Strategy::RoundRobin, Strategy::FirstFit, Strategy::ModifiedLpt, Strategy::ModifiedBd];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::RoundRobin => "round_robin",
            Strategy::FirstFit => "first_fit",
            Strategy::ModifiedLpt => "modified_lpt",
            Strategy::ModifiedBd => "modified_bd",
            Strategy::Exact => "exact",
        }
    }

    /// Runs this strategy.
    pub fn run(self, lambda: &[f64], rates: &[f64], options: &StrategyOptions) -> Result<StrategyResult, AllocError> {
        match self {
            Strategy::RoundRobin => {
                let start = Instant::now();
                let allocation = round_robin(lambda, rates)?;
                Ok(StrategyResult::new(allocation, self, start.elapsed()))
            }
            Strategy::FirstFit => first_fit_scaled(lambda, rates, options.first_fit_scale),
            Strategy::ModifiedLpt => modified_lpt(lambda, rates),
            Strategy::ModifiedBd => modified_bd(lambda, rates),
            Strategy::Exact => exact_maxmin(lambda, rates, &options.exact),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = AllocError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "round_robin" | "rr" => Ok(Strategy::RoundRobin),
            "first_fit" | "ff" => Ok(Strategy::FirstFit),
            "modified_lpt" | "lpt" => Ok(Strategy::ModifiedLpt),
            "modified_bd" | "bd" => Ok(Strategy::ModifiedBd),
            "exact" | "ilp" => Ok(Strategy::Exact),
            other => Err(AllocError::InvalidOption(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Knobs shared by [`Strategy::run`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOptions {
    /// Fixed-point factor for First Fit's integer threshold search.
    pub first_fit_scale: f64,
    pub exact: ExactOptions,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        Self { first_fit_scale: 1.0, exact: ExactOptions::default() }
    }
}

/// An allocation with the strategy that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub allocation: Allocation,
    pub strategy: Strategy,
    /// Minimum received rate.
    pub objective: f64,
    pub elapsed: Duration,
}

impl StrategyResult {
    pub fn new(allocation: Allocation, strategy: Strategy, elapsed: Duration) -> Self {
        let objective = allocation.min_received();
        Self { allocation, strategy, objective, elapsed }
    }

    /// `{"objective": .., "strategy": .., "timing_s": ..}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "objective": self.objective,
            "strategy": self.strategy.name(),
            "timing_s": self.elapsed.as_secs_f64(),
        })
    }
}

pub(crate) fn validate(lambda: &[f64], rates: &[f64]) -> Result<(), AllocError> {
    if lambda.is_empty() {
        return Err(AllocError::NoPairs);
    }
    if rates.len() < lambda.len() {
        return Err(AllocError::TooFewChannels { m: rates.len(), kappa: lambda.len() });
    }
    for (index, &value) in rates.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(AllocError::InvalidRate { index, value });
        }
    }
    for (index, &value) in lambda.iter().enumerate() {
        if !(value.is_finite() && value > 0.0 && value <= 1.0) {
            return Err(AllocError::InvalidLambda { index, value });
        }
    }
    Ok(())
}

/// Pair indices by ascending transmittance; ties keep index order.
pub(crate) fn pairs_ascending(lambda: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]));
    order
}

/// Channel indices by descending rate; ties keep index order.
pub(crate) fn channels_descending(rates: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]));
    order
}
