//! Port-level directed graph of a network with dB loss weights.
//!
//! Every node `i` is split into vertices: `Out(j)` and `In(j)` ports for
//! each fiber neighbor `j`, a `Mem` vertex for its quantum memory and, on
//! the source only, a `Gen` vertex for the EPR-pair generator. The source
//! has no `In` ports. Arcs:
//!
//! | arc                        | weight                  |
//! |----------------------------|-------------------------|
//! | `i.Out(j) -> j.In(i)`      | `alpha * d(i, j)`       |
//! | `i.In(j) -> i.Out(k)`      | `2 * l_wss` (`k != j`, `k` not the source) |
//! | `i.In(j) -> i.Mem`         | `l_wss + mem`           |
//! | `s.Gen -> s.Out(j)`        | `2 * l_wss`             |
//! | `s.Gen -> s.Mem`           | `l_wss + mem`           |

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetgraphError {
    #[error("unknown source node index {0}")]
    UnknownSource(usize),
    #[error("negative or non-finite loss {name} = {value} dB")]
    NegativeLoss { name: &'static str, value: f64 },
    #[error("negative or non-finite loss {0} dB cannot be converted to a transmittance")]
    NegativeTransmittanceInput(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Out(usize),
    In(usize),
    Mem,
    Gen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub node: usize,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcKind {
    Fiber,
    PassThrough,
    ToMemory,
    Generator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub weight_db: f64,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    /// Insertion loss of one WSS traversal, dB.
    pub l_wss_db: f64,
    /// Quantum-memory insertion loss, dB.
    pub memory_loss_db: f64,
    /// Adds `i.In(j) -> i.Out(j)` arcs that send a photon back down the
    /// fiber it arrived on.
    pub include_uturns: bool,
}

impl LossParams {
    pub fn with_wss(l_wss_db: f64) -> Self {
        Self { l_wss_db, memory_loss_db: 0.0, include_uturns: false }
    }
}

/// Immutable port-level graph with arcs stored in CSR order by tail vertex.
#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    vertices: Vec<Vertex>,
    arcs: Vec<Arc>,
    offsets: Vec<usize>,
    source: usize,
    gen: usize,
    mem: Vec<usize>,
    labels: Vec<String>,
    alpha_db_per_km: f64,
    params: LossParams,
}

impl ExpandedGraph {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: usize) -> &Arc {
        &self.arcs[id]
    }

    /// Arc ids leaving vertex `v`.
    pub fn out_arcs(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    /// Source node index.
    pub fn source(&self) -> usize {
        self.source
    }

    /// The generator vertex.
    pub fn gen_vertex(&self) -> usize {
        self.gen
    }

    /// Memory vertex of `node`.
    pub fn mem_vertex(&self, node: usize) -> usize {
        self.mem[node]
    }

    pub fn node_count(&self) -> usize {
        self.mem.len()
    }

    pub fn loss_params(&self) -> LossParams {
        self.params
    }

    pub fn alpha_db_per_km(&self) -> f64 {
        self.alpha_db_per_km
    }

    /// Label of topology node `node`.
    pub fn node_label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn find_vertex(&self, node: usize, role: Role) -> Option<usize> {
        self.vertices.binary_search(&Vertex { node, role }).ok()
    }

    /// Label such as `B.in[A]`, `A.gen` or `C.mem`.
    pub fn vertex_label(&self, v: usize) -> String {
        let Vertex { node, role } = self.vertices[v];
        let name = &self.labels[node];
        match role {
            Role::Out(p) => format!("{name}.out[{}]", self.labels[p]),
            Role::In(p) => format!("{name}.in[{}]", self.labels[p]),
            Role::Mem => format!("{name}.mem"),
            Role::Gen => format!("{name}.gen"),
        }
    }

    /// `from -> to weight` lines, one arc per line, in arc-id order.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for arc in &self.arcs {
            writeln!(out, "{} -> {} {}", self.vertex_label(arc.from), self.vertex_label(arc.to), arc.weight_db)?;
        }
        Ok(())
    }

    pub fn edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("labels are utf-8")
    }
}

impl fmt::Display for ExpandedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.edge_list())
    }
}

/// Builds the port-level graph of `topology` with the EPR-pair source at `source`.
pub fn expand(topology: &Topology, source: usize, params: LossParams) -> Result<ExpandedGraph, NetgraphError> {
    let n = topology.len();
    if source >= n {
        return Err(NetgraphError::UnknownSource(source));
    }
    for (name, value) in [("l_wss", params.l_wss_db), ("memory", params.memory_loss_db)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(NetgraphError::NegativeLoss { name, value });
        }
    }
    let alpha = topology.alpha_db_per_km();

    let mut vertices = Vec::new();
    for i in 0..n {
        for &(j, _) in topology.neighbors(i) {
            vertices.push(Vertex { node: i, role: Role::Out(j) });
            if i != source {
                vertices.push(Vertex { node: i, role: Role::In(j) });
            }
        }
        vertices.push(Vertex { node: i, role: Role::Mem });
        if i == source {
            vertices.push(Vertex { node: i, role: Role::Gen });
        }
    }
    vertices.sort();
    let id = |node: usize, role: Role| -> usize {
        vertices.binary_search(&Vertex { node, role }).expect("vertex exists")
    };

    let pass = 2.0 * params.l_wss_db;
    let drop = params.l_wss_db + params.memory_loss_db;
    let mut arcs = Vec::new();
    for i in 0..n {
        for &(j, km) in topology.neighbors(i) {
            // fiber i -> j; nothing enters the source
            if j != source {
                arcs.push(Arc {
                    from: id(i, Role::Out(j)),
                    to: id(j, Role::In(i)),
                    weight_db: alpha * km,
                    kind: ArcKind::Fiber,
                });
            }
        }
        if i == source {
            let gen = id(i, Role::Gen);
            for &(j, _) in topology.neighbors(i) {
                arcs.push(Arc { from: gen, to: id(i, Role::Out(j)), weight_db: pass, kind: ArcKind::Generator });
            }
            arcs.push(Arc { from: gen, to: id(i, Role::Mem), weight_db: drop, kind: ArcKind::Generator });
            continue;
        }
        for &(j, _) in topology.neighbors(i) {
            let port = id(i, Role::In(j));
            for &(k, _) in topology.neighbors(i) {
                if k == source || (k == j && !params.include_uturns) {
                    continue;
                }
                arcs.push(Arc { from: port, to: id(i, Role::Out(k)), weight_db: pass, kind: ArcKind::PassThrough });
            }
            arcs.push(Arc { from: port, to: id(i, Role::Mem), weight_db: drop, kind: ArcKind::ToMemory });
        }
    }
    arcs.sort_by_key(|a| (a.from, a.to));

    let mut offsets = vec![0; vertices.len() + 1];
    for arc in &arcs {
        offsets[arc.from + 1] += 1;
    }
    for v in 0..vertices.len() {
        offsets[v + 1] += offsets[v];
    }
    let mem = (0..n).map(|i| id(i, Role::Mem)).collect();
    let gen = id(source, Role::Gen);
    Ok(ExpandedGraph {
        vertices,
        arcs,
        offsets,
        source,
        gen,
        mem,
        labels: topology.labels().to_vec(),
        alpha_db_per_km: alpha,
        params,
    })
}

/// Power transmittance `10^(-loss/10)` of a loss in dB.
pub fn transmittance(loss_db: f64) -> Result<f64, NetgraphError> {
    if !(loss_db.is_finite() && loss_db >= 0.0) {
        return Err(NetgraphError::NegativeTransmittanceInput(loss_db));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}
