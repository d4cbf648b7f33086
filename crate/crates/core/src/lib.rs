//! Routing and spectrum allocation for repeaterless entanglement
//! distribution networks served by a single broadband EPR-pair source.
//!
//! The pipeline is:
//!
//! 1. [`spectrum`] computes per-channel EPR-pair generation rates of the
//!    source from its Gaussian biphoton model.
//! 2. [`topology`] provides the fiber plant (embedded ILEC Manhattan map,
//!    JSON files, or admissible Watts-Strogatz graphs).
//! 3. [`netgraph`] expands a topology and source choice into a directed
//!    port-level graph with dB loss weights.
//! 4. [`routing`] finds the minimum-loss pair of arc-disjoint paths from the
//!    source to both members of every node pair.
//! 5. [`allocation`] partitions channels among node pairs under a max-min
//!    fairness objective.
//! 6. [`metrics`] summarises the outcome (min / median rate, Jain index).

pub mod allocation;
pub mod metrics;
pub mod netgraph;
pub mod quadrature;
pub mod routing;
pub mod spectrum;
pub mod topology;

pub use allocation::{Allocation, AllocError, Strategy, StrategyResult};
pub use metrics::{jain_index, MetricsError, MetricsReport};
pub use netgraph::{expand, transmittance, ExpandedGraph, LossParams, NetgraphError, Role};
pub use routing::{route_all, shortest_disjoint_pair, RoutePair, RouteTable, RoutingError};
pub use spectrum::{ChannelGeometry, ChannelPlan, SourceParams, SpectrumError};
pub use topology::{Topology, TopologyError, WattsStrogatzSpec};

/// Number of unordered node pairs among `n` nodes.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}
