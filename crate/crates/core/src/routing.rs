//! Minimum-loss arc-disjoint light-path pairs.
//!
//! For a node pair `(i, j)` a dummy sink `D` is attached to the graph by
//! zero-weight arcs `i.Mem -> D` and `j.Mem -> D`. Suurballe's algorithm then
//! finds two arc-disjoint `Gen -> D` paths of minimum total weight; since `D`
//! has only those two in-arcs, one path ends at each memory. The
//! shortest-path tree from `Gen` does not depend on the pair, so
//! [`route_all`] computes it once and runs one residual Dijkstra per pair.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::netgraph::{transmittance, ExpandedGraph};
use crate::topology::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("node pair {0}-{0} is not a pair of distinct nodes")]
    SameNode(String),
    #[error("unknown node index {0}")]
    UnknownNode(usize),
    #[error("no pair of disjoint light-paths reaches {a} and {b}")]
    NoDisjointPair { a: String, b: String },
    #[error("expanded graph has {graph} nodes but the topology has {topology}")]
    TopologyMismatch { graph: usize, topology: usize },
}

/// Two arc-disjoint light-paths serving node pair `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutePair {
    pub pair: (usize, usize),
    /// Arc ids from the generator to `i`'s memory.
    pub path_i: Vec<usize>,
    /// Arc ids from the generator to `j`'s memory.
    pub path_j: Vec<usize>,
    pub loss_db: f64,
    pub eta: f64,
}

impl RoutePair {
    /// Sum of the arc weights of both paths.
    pub fn recompute_loss(&self, graph: &ExpandedGraph) -> f64 {
        self.path_i.iter().chain(&self.path_j).map(|&a| graph.arc(a).weight_db).sum()
    }

    /// Vertex labels along `path`, joined by `->`.
    pub fn path_label(graph: &ExpandedGraph, path: &[usize]) -> String {
        let mut parts = Vec::with_capacity(path.len() + 1);
        if let Some(&first) = path.first() {
            parts.push(graph.vertex_label(graph.arc(first).from));
        }
        parts.extend(path.iter().map(|&a| graph.vertex_label(graph.arc(a).to)));
        parts.join("->")
    }
}

/// Routes for every unordered node pair, in lexicographic pair order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteTable {
    pub n: usize,
    pub routes: Vec<RoutePair>,
    /// Transmittance of each route, same order as `routes`.
    pub lambda: Vec<f64>,
}

impl RouteTable {
    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Position of pair `(a, b)` in canonical order.
    pub fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        pair_index(self.n, a, b)
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&RoutePair> {
        self.pair_index(a, b).map(|k| &self.routes[k])
    }

    /// Writes `pair,loss_db,eta,path_i,path_j`.
    pub fn write_csv<W: Write>(&self, graph: &ExpandedGraph, mut out: W) -> std::io::Result<()> {
        writeln!(out, "pair,loss_db,eta,path_i,path_j")?;
        for r in &self.routes {
            writeln!(
                out,
                "{}-{},{},{},{},{}",
                graph.node_label(r.pair.0),
                graph.node_label(r.pair.1),
                r.loss_db,
                r.eta,
                RoutePair::path_label(graph, &r.path_i),
                RoutePair::path_label(graph, &r.path_j)
            )?;
        }
        Ok(())
    }
}

/// Index of unordered pair `{a, b}` among the `n(n-1)/2` pairs listed
/// lexicographically.
pub fn pair_index(n: usize, a: usize, b: usize) -> Option<usize> {
    if a == b || a >= n || b >= n {
        return None;
    }
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    Some(a * (2 * n - a - 1) / 2 + (b - a - 1))
}

/// All unordered pairs `(a, b)`, `a < b`, lexicographically.
pub fn canonical_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| ((a + 1)..n).map(move |b| (a, b)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, vertex)
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NONE: usize = usize::MAX;

/// Shortest-path tree from the generator vertex.
struct Tree {
    dist: Vec<f64>,
    pred: Vec<usize>,
}

fn shortest_path_tree(graph: &ExpandedGraph) -> Tree {
    let v = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; v];
    let mut pred = vec![NONE; v];
    let mut heap = BinaryHeap::new();
    let gen = graph.gen_vertex();
    dist[gen] = 0.0;
    heap.push(HeapEntry { dist: 0.0, vertex: gen });
    while let Some(HeapEntry { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for a in graph.out_arcs(u) {
            let arc = graph.arc(a);
            let nd = d + arc.weight_db;
            if nd < dist[arc.to] {
                dist[arc.to] = nd;
                pred[arc.to] = a;
                heap.push(HeapEntry { dist: nd, vertex: arc.to });
            }
        }
    }
    Tree { dist, pred }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    None,
    Forward(usize),
    Reverse(usize),
    Dummy(usize),
}

/// Reusable per-pair buffers.
struct Scratch {
    in_first: Vec<bool>,
    in_flow: Vec<bool>,
    reverse_at: Vec<usize>,
    dist: Vec<f64>,
    pred: Vec<Step>,
}

impl Scratch {
    fn new(graph: &ExpandedGraph) -> Self {
        let v = graph.vertex_count() + 1;
        Self {
            in_first: vec![false; graph.arcs().len()],
            in_flow: vec![false; graph.arcs().len()],
            reverse_at: vec![NONE; v],
            dist: vec![f64::INFINITY; v],
            pred: vec![Step::None; v],
        }
    }
}

/// Minimum-loss pair of arc-disjoint paths from the source to nodes `i` and `j`.
pub fn shortest_disjoint_pair(graph: &ExpandedGraph, i: usize, j: usize) -> Result<RoutePair, RoutingError> {
    let tree = shortest_path_tree(graph);
    let mut scratch = Scratch::new(graph);
    disjoint_pair(graph, &tree, &mut scratch, i, j)
}

/// Routes every unordered node pair of `topology` over `graph`.
pub fn route_all(graph: &ExpandedGraph, topology: &Topology) -> Result<RouteTable, RoutingError> {
    let n = topology.len();
    if graph.node_count() != n {
        return Err(RoutingError::TopologyMismatch { graph: graph.node_count(), topology: n });
    }
    let tree = shortest_path_tree(graph);
    let mut scratch = Scratch::new(graph);
    let mut routes = Vec::with_capacity(crate::pair_count(n));
    for (a, b) in canonical_pairs(n) {
        routes.push(disjoint_pair(graph, &tree, &mut scratch, a, b)?);
    }
    let lambda = routes.iter().map(|r| r.eta).collect();
    Ok(RouteTable { n, routes, lambda })
}

fn disjoint_pair(
    graph: &ExpandedGraph,
    tree: &Tree,
    scratch: &mut Scratch,
    i: usize,
    j: usize,
) -> Result<RoutePair, RoutingError> {
    let n = graph.node_count();
    for x in [i, j] {
        if x >= n {
            return Err(RoutingError::UnknownNode(x));
        }
    }
    if i == j {
        return Err(RoutingError::SameNode(graph.node_label(i).to_string()));
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let no_pair = || RoutingError::NoDisjointPair {
        a: graph.node_label(i).to_string(),
        b: graph.node_label(j).to_string(),
    };
    let gen = graph.gen_vertex();
    let (mem_i, mem_j) = (graph.mem_vertex(i), graph.mem_vertex(j));
    let d = &tree.dist;
    if !d[mem_i].is_finite() || !d[mem_j].is_finite() {
        return Err(no_pair());
    }

    // First path: shortest Gen -> D, i.e. to the nearer memory.
    let (first_mem, other_mem) = if d[mem_j] < d[mem_i] { (mem_j, mem_i) } else { (mem_i, mem_j) };
    let dist_sink = d[first_mem];
    let mut first = Vec::new();
    let mut v = first_mem;
    while v != gen {
        let a = tree.pred[v];
        first.push(a);
        v = graph.arc(a).from;
    }
    first.reverse();
    for &a in &first {
        scratch.in_first[a] = true;
        scratch.reverse_at[graph.arc(a).to] = a;
    }

    // Second path: Dijkstra on the residual graph with reduced costs.
    let sink = graph.vertex_count();
    scratch.dist.iter_mut().for_each(|x| *x = f64::INFINITY);
    scratch.pred.iter_mut().for_each(|x| *x = Step::None);
    let mut heap = BinaryHeap::new();
    scratch.dist[gen] = 0.0;
    heap.push(HeapEntry { dist: 0.0, vertex: gen });
    while let Some(HeapEntry { dist: du, vertex: u }) = heap.pop() {
        if du > scratch.dist[u] {
            continue;
        }
        if u == sink {
            break;
        }
        let mut relax = |to: usize, cost: f64, step: Step, dist: &mut Vec<f64>, pred: &mut Vec<Step>| {
            let nd = du + cost.max(0.0);
            if nd < dist[to] {
                dist[to] = nd;
                pred[to] = step;
                heap.push(HeapEntry { dist: nd, vertex: to });
            }
        };
        for a in graph.out_arcs(u) {
            if scratch.in_first[a] {
                continue;
            }
            let arc = graph.arc(a);
            if !d[arc.to].is_finite() {
                continue;
            }
            let cost = arc.weight_db + d[u] - d[arc.to];
            relax(arc.to, cost, Step::Forward(a), &mut scratch.dist, &mut scratch.pred);
        }
        if u == other_mem {
            relax(sink, d[u] - dist_sink, Step::Dummy(u), &mut scratch.dist, &mut scratch.pred);
        }
        let back = scratch.reverse_at[u];
        if back != NONE {
            relax(graph.arc(back).from, 0.0, Step::Reverse(back), &mut scratch.dist, &mut scratch.pred);
        }
    }
    let reached = scratch.dist[sink].is_finite();

    // Overlay the two paths, cancelling arcs the second path walked backwards.
    for &a in &first {
        scratch.in_flow[a] = true;
    }
    if reached {
        let mut v = sink;
        while v != gen {
            match scratch.pred[v] {
                Step::Dummy(m) => v = m,
                Step::Forward(a) => {
                    scratch.in_flow[a] = true;
                    v = graph.arc(a).from;
                }
                Step::Reverse(a) => {
                    scratch.in_flow[a] = false;
                    v = graph.arc(a).to;
                }
                Step::None => unreachable!("residual path is connected"),
            }
        }
    }

    let mut paths = Vec::new();
    if reached {
        for start in graph.out_arcs(gen) {
            if !scratch.in_flow[start] {
                continue;
            }
            let mut path = vec![start];
            let mut v = graph.arc(start).to;
            while v != mem_i && v != mem_j {
                match graph.out_arcs(v).find(|&a| scratch.in_flow[a]) {
                    Some(a) => {
                        path.push(a);
                        v = graph.arc(a).to;
                    }
                    None => break,
                }
                if path.len() > graph.arcs().len() {
                    break;
                }
            }
            paths.push((v, path));
        }
    }

    // reset scratch state touched by this pair
    for &a in &first {
        scratch.in_first[a] = false;
        scratch.reverse_at[graph.arc(a).to] = NONE;
    }
    for (_, path) in &paths {
        for &a in path {
            scratch.in_flow[a] = false;
        }
    }
    for &a in &first {
        scratch.in_flow[a] = false;
    }

    let path_i = paths.iter().find(|(end, _)| *end == mem_i).map(|(_, p)| p.clone());
    let path_j = paths.iter().find(|(end, _)| *end == mem_j).map(|(_, p)| p.clone());
    let (Some(path_i), Some(path_j)) = (path_i, path_j) else {
        return Err(no_pair());
    };
    let loss_db: f64 = path_i.iter().chain(&path_j).map(|&a| graph.arc(a).weight_db).sum();
    let eta = transmittance(loss_db).map_err(|_| no_pair())?;
    Ok(RoutePair { pair: (i, j), path_i, path_j, loss_db, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{expand, LossParams};

    fn topo(n: usize, edges: &[(usize, usize, f64)]) -> Topology {
        let labels = ["S", "B", "C", "D", "E", "F", "G", "H"][..n].iter().map(|s| s.to_string()).collect();
        Topology::new(labels, edges.iter().copied(), 0.4, None).unwrap()
    }

    fn four_cycle() -> Topology {
        topo(4, &[(0, 1, 5.0), (1, 2, 5.0), (2, 3, 5.0), (0, 3, 5.0)])
    }

    #[test]
    fn four_cycle_opposite_neighbors() {
        let g = expand(&four_cycle(), 0, LossParams::with_wss(4.0)).unwrap();
        let r = shortest_disjoint_pair(&g, 1, 3).unwrap();
        assert!((r.loss_db - 28.0).abs() < 1e-9);
        assert_eq!(RoutePair::path_label(&g, &r.path_i), "S.gen->S.out[B]->B.in[S]->B.mem");
        assert_eq!(RoutePair::path_label(&g, &r.path_j), "S.gen->S.out[D]->D.in[S]->D.mem");
    }

    #[test]
    fn four_cycle_adjacent_pair() {
        let g = expand(&four_cycle(), 0, LossParams::with_wss(4.0)).unwrap();
        let r = shortest_disjoint_pair(&g, 1, 2).unwrap();
        assert!((r.loss_db - 38.0).abs() < 1e-9);
        assert_eq!(RoutePair::path_label(&g, &r.path_j), "S.gen->S.out[D]->D.in[S]->D.out[C]->C.in[D]->C.mem");
        assert!((r.recompute_loss(&g) - r.loss_db).abs() < 1e-12);
    }

    #[test]
    fn argument_order_does_not_matter() {
        let g = expand(&four_cycle(), 0, LossParams::with_wss(4.0)).unwrap();
        assert_eq!(shortest_disjoint_pair(&g, 2, 1).unwrap(), shortest_disjoint_pair(&g, 1, 2).unwrap());
    }

    #[test]
    fn source_as_pair_member() {
        let g = expand(&four_cycle(), 0, LossParams::with_wss(4.0)).unwrap();
        let r = shortest_disjoint_pair(&g, 0, 2).unwrap();
        // S.gen -> S.mem (4) plus a two-hop path to C (8 + 2 + 8 + 2 + 4)
        assert!((r.loss_db - 28.0).abs() < 1e-9);
    }

    #[test]
    fn overlap_cancellation() {
        // The shortest path to C runs through B, so the greedy choice would
        // block B's only cheap entry; Suurballe has to reroute.
        let t = topo(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 50.0), (3, 2, 1.0), (3, 1, 50.0)]);
        let g = expand(&t, 0, LossParams::with_wss(0.0)).unwrap();
        let r = shortest_disjoint_pair(&g, 1, 2).unwrap();
        // S->B (0.4) and S->D->C (20 + 0.4)
        assert!((r.loss_db - 20.8).abs() < 1e-9, "{}", r.loss_db);
    }

    #[test]
    fn same_node_is_an_error() {
        let g = expand(&four_cycle(), 0, LossParams::with_wss(4.0)).unwrap();
        assert_eq!(shortest_disjoint_pair(&g, 2, 2), Err(RoutingError::SameNode("C".into())));
        assert_eq!(shortest_disjoint_pair(&g, 0, 9), Err(RoutingError::UnknownNode(9)));
    }

    #[test]
    fn bridged_fragment_reports_missing_pair() {
        let t = Topology::new_allow_bridges(
            vec!["S".into(), "B".into(), "C".into()],
            [(0, 1, 1.0), (1, 2, 1.0)],
            0.4,
            None,
        )
        .unwrap();
        let g = expand(&t, 0, LossParams::with_wss(4.0)).unwrap();
        assert!(matches!(shortest_disjoint_pair(&g, 1, 2), Err(RoutingError::NoDisjointPair { .. })));
        assert!(shortest_disjoint_pair(&g, 0, 1).is_ok());
    }

    #[test]
    fn pair_indexing() {
        let n = 5;
        for (k, (a, b)) in canonical_pairs(n).enumerate() {
            assert_eq!(pair_index(n, a, b), Some(k));
            assert_eq!(pair_index(n, b, a), Some(k));
        }
        assert_eq!(pair_index(n, 2, 2), None);
    }

    #[test]
    fn ring_has_all_pairs() {
        let edges: Vec<_> = (0..10).map(|i| (i, (i + 1) % 10, 5.0)).collect();
        let labels = (0..10).map(|i| i.to_string()).collect();
        let t = Topology::new(labels, edges, 0.4, None).unwrap();
        let g = expand(&t, 3, LossParams::with_wss(4.0)).unwrap();
        let table = route_all(&g, &t).unwrap();
        assert_eq!(table.len(), 45);
        assert!(table.lambda.iter().all(|&x| x > 0.0 && x <= 1.0));
    }
}
