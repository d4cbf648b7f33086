//! Fixtures shared by the benchmarks.

use eprnet_core::netgraph::{expand, LossParams};
use eprnet_core::routing::route_all;
use eprnet_core::spectrum::ChannelPlan;
use eprnet_core::topology::load_ilec;

/// Transmittances and channel rates of the ILEC network with the source at
/// node `source`.
pub fn ilec_instance(source: usize, l_wss_db: f64) -> (Vec<f64>, Vec<f64>) {
    let topology = load_ilec();
    let graph = expand(&topology, source, LossParams::with_wss(l_wss_db)).expect("valid source");
    let table = route_all(&graph, &topology).expect("ILEC is two-edge-connected");
    let plan = ChannelPlan::reference().expect("reference plan");
    (table.lambda, plan.rates)
}
