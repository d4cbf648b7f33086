//! Fiber topologies: the embedded ILEC Manhattan map, JSON files, and
//! admissible Watts-Strogatz random graphs.
//!
//! A [`Topology`] is always connected and 2-edge-connected, which is what
//! guarantees a pair of edge-disjoint light-paths from any source to any
//! two consumers.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metro fiber loss, dB/km.
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("bad length {length} km on edge {a}-{b}")]
    BadLength { a: String, b: String, length: f64 },
    #[error("bad fiber loss coefficient {0} dB/km")]
    BadAlpha(f64),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("duplicate node label {0}")]
    DuplicateLabel(String),
    #[error("edge references unknown node index {0}")]
    UnknownNode(usize),
    #[error("unknown source node {0}")]
    UnknownSource(String),
    #[error("topology needs at least 2 nodes, got {0}")]
    TooSmall(usize),
    #[error("topology is disconnected")]
    Disconnected,
    #[error("min-cut<2: removing edge {0}-{1} disconnects the network")]
    MinCutBelowTwo(String, String),
    #[error("invalid Watts-Strogatz spec: {0}")]
    InvalidSpec(String),
    #[error("no admissible topology for {spec} after {attempts} attempts")]
    GenerationFailed { spec: WattsStrogatzSpec, attempts: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
}

/// Undirected fiber plant with per-edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    labels: Vec<String>,
    edges: Vec<Edge>,
    alpha_db_per_km: f64,
    source: Option<usize>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

/// On-disk JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, f64)>,
    pub alpha_db_per_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Topology {
    /// Builds and validates a topology. Edge endpoints may be given in
    /// either order; they are stored with `a < b`, sorted.
    pub fn new(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        alpha_db_per_km: f64,
        source: Option<usize>,
    ) -> Result<Self, TopologyError> {
        Self::build(labels, edges, alpha_db_per_km, source, true)
    }

    /// Like [`Topology::new`] but accepts graphs with bridges or several
    /// components. Such topologies cannot always be routed; this exists for
    /// inspecting the port-level expansion of small fragments.
    pub fn new_allow_bridges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        alpha_db_per_km: f64,
        source: Option<usize>,
    ) -> Result<Self, TopologyError> {
        Self::build(labels, edges, alpha_db_per_km, source, false)
    }

    fn build(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        alpha_db_per_km: f64,
        source: Option<usize>,
        check_cuts: bool,
    ) -> Result<Self, TopologyError> {
        let n = labels.len();
        if n < 2 {
            return Err(TopologyError::TooSmall(n));
        }
        let mut seen_labels = HashSet::new();
        for l in &labels {
            if !seen_labels.insert(l.as_str()) {
                return Err(TopologyError::DuplicateLabel(l.clone()));
            }
        }
        if !(alpha_db_per_km.is_finite() && alpha_db_per_km >= 0.0) {
            return Err(TopologyError::BadAlpha(alpha_db_per_km));
        }
        if let Some(s) = source {
            if s >= n {
                return Err(TopologyError::UnknownNode(s));
            }
        }
        let mut list = Vec::new();
        let mut seen = HashSet::new();
        for (i, j, km) in edges {
            if i >= n {
                return Err(TopologyError::UnknownNode(i));
            }
            if j >= n {
                return Err(TopologyError::UnknownNode(j));
            }
            if i == j {
                return Err(TopologyError::SelfLoop(labels[i].clone()));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if !(km.is_finite() && km > 0.0) {
                return Err(TopologyError::BadLength { a: labels[a].clone(), b: labels[b].clone(), length: km });
            }
            if !seen.insert((a, b)) {
                return Err(TopologyError::DuplicateEdge(labels[a].clone(), labels[b].clone()));
            }
            list.push(Edge { a, b, length_km: km });
        }
        list.sort_by_key(|x| (x.a, x.b));

        let pairs: Vec<(usize, usize)> = list.iter().map(|e| (e.a, e.b)).collect();
        if check_cuts {
            if !is_connected(n, &pairs) {
                return Err(TopologyError::Disconnected);
            }
            if let Some((a, b)) = find_bridge(n, &pairs) {
                return Err(TopologyError::MinCutBelowTwo(labels[a].clone(), labels[b].clone()));
            }
        }

        let mut neighbors = vec![Vec::new(); n];
        for e in &list {
            neighbors[e.a].push((e.b, e.length_km));
            neighbors[e.b].push((e.a, e.length_km));
        }
        for adj in &mut neighbors {
            adj.sort_by_key(|x| x.0);
        }
        Ok(Self { labels, edges: list, alpha_db_per_km, source, neighbors })
    }

    pub fn from_file_format(file: TopologyFile) -> Result<Self, TopologyError> {
        let source = match &file.source {
            Some(label) => Some(
                file.labels
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| TopologyError::UnknownSource(label.clone()))?,
            ),
            None => None,
        };
        Self::new(file.labels, file.edges, file.alpha_db_per_km, source)
    }

    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile = serde_json::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        Self::from_file_format(file)
    }

    pub fn to_file_format(&self) -> TopologyFile {
        TopologyFile {
            labels: self.labels.clone(),
            edges: self.edges.iter().map(|e| (e.a, e.b, e.length_km)).collect(),
            alpha_db_per_km: self.alpha_db_per_km,
            source: self.source.map(|s| self.labels[s].clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_format()).expect("topology serializes")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn alpha_db_per_km(&self) -> f64 {
        self.alpha_db_per_km
    }

    /// Source node declared by the topology file, if any.
    pub fn source(&self) -> Option<usize> {
        self.source
    }

    /// Neighbors of `node` as `(peer, length_km)`, sorted by peer.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        self.neighbors[a].iter().find(|(p, _)| *p == b).map(|&(_, d)| d)
    }

    /// Global edge connectivity computed by unit-capacity max-flow from
    /// node 0 to every other node.
    pub fn edge_connectivity(&self) -> usize {
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.a, e.b)).collect();
        edge_connectivity(self.len(), &pairs, usize::MAX)
    }
}

/// Reads and validates a topology JSON file.
pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| TopologyError::Io(format!("{}: {e}", path.as_ref().display())))?;
    Topology::from_json(&text)
}

const ILEC_LABELS: [&str; 17] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q"];

// Distance matrix in km; "-" marks a missing link.
const ILEC_TABLE: &str = "\
A 0 0.304 1.184 2.032 3.744 5.2 4.352 5.776 6.096 5.84 7.232 7.04 8.8 9.12 10.688 - -
B 0.304 0 0.912 1.712 3.488 5.056 4.048 5.488 5.936 5.296 6.848 6.656 8.496 8.816 10.32 - -
C 1.184 0.912 0 2.336 2.08 3.328 2.304 3.728 4.192 3.904 5.296 5.04 6.752 7.216 9.664 - -
D 2.032 1.712 2.336 0 2.224 3.36 2.368 3.728 2.192 4.0 5.392 4.992 6.848 7.216 8.768 - -
E 3.744 3.488 2.08 2.224 0 1.44 1.6 2.448 2.624 1.968 3.472 3.728 5.28 5.312 6.88 - -
F 5.2 5.056 3.328 3.36 1.44 0 1.696 1.536 1.36 0.544 2.0 2.528 4.0 3.872 5.456 - -
G 4.352 4.048 2.304 2.368 1.6 1.696 0 1.408 1.888 2.112 3.312 2.624 4.496 5.056 6.496 - -
H 5.776 5.488 3.728 3.728 2.448 1.536 1.408 0 0.624 1.408 2.176 1.28 3.04 3.696 5.152 - -
I 6.096 5.936 4.192 2.192 2.624 1.36 1.888 0.624 0 1.12 1.552 1.264 2.704 3.12 4.576 - -
J 5.84 5.296 3.904 4.0 1.968 0.544 2.112 1.408 1.12 0 1.376 2.288 3.424 3.296 4.832 - -
K 7.232 6.848 5.296 5.392 3.472 2.0 3.312 2.176 1.552 1.376 0 2.208 2.56 1.92 3.472 - -
L 7.04 6.656 5.04 4.992 3.728 2.528 2.624 1.28 1.264 2.288 2.208 0 1.872 3.2 4.256 - -
M 8.8 8.496 6.752 6.848 5.28 4.0 4.496 3.04 2.704 3.424 2.56 1.872 0 4.8 6.368 2.96 6.096
N 9.12 8.816 7.216 7.216 5.312 3.872 5.056 3.696 3.12 3.296 1.92 3.2 4.8 0 1.536 - 5.856
O 10.688 10.32 9.664 8.768 6.88 5.456 6.496 5.152 4.576 4.832 3.472 4.256 6.368 1.536 0 - 4.368
P - - - - - - - - - - - - 2.96 - - 0 3.04
Q - - - - - - - - - - - - 6.096 5.856 4.368 3.04 0
";

/// The 17-node ILEC Manhattan topology with straight-line distances as
/// fiber lengths and 0.4 dB/km loss.
pub fn load_ilec() -> Topology {
    let mut edges = Vec::new();
    for (i, line) in ILEC_TABLE.lines().enumerate() {
        let mut cells = line.split_whitespace();
        assert_eq!(cells.next(), Some(ILEC_LABELS[i]));
        for (j, cell) in cells.enumerate() {
            if j <= i || cell == "-" {
                continue;
            }
            let km: f64 = cell.parse().expect("ILEC table entry");
            edges.push((i, j, km));
        }
    }
    let labels = ILEC_LABELS.iter().map(|s| s.to_string()).collect();
    Topology::new(labels, edges, DEFAULT_ALPHA_DB_PER_KM, None).expect("embedded ILEC table is admissible")
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Returns a bridge edge, if one exists (iterative Tarjan low-link).
fn find_bridge(n: usize, edges: &[(usize, usize)]) -> Option<(usize, usize)> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, id));
        adj[b].push((a, id));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, parent edge id, next adjacency index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent_edge, ref mut next)) = stack.last_mut() {
            if *next < adj[u].len() {
                let (v, id) = adj[u][*next];
                *next += 1;
                if id == parent_edge {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, id, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        let e = edges[parent_edge];
                        return Some(e);
                    }
                }
            }
        }
    }
    None
}

/// Minimum over `t` of the unit-capacity max-flow between node 0 and `t`,
/// stopping early once every flow reaches `cap`.
pub fn edge_connectivity(n: usize, edges: &[(usize, usize)], cap: usize) -> usize {
    if n < 2 {
        return 0;
    }
    // residual capacities on both arc directions of each undirected edge
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, 2 * id));
        adj[b].push((a, 2 * id + 1));
    }
    let mut best = usize::MAX;
    let mut residual = vec![1u8; 2 * edges.len()];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    for t in 1..n {
        residual.iter_mut().for_each(|r| *r = 1);
        let mut flow = 0;
        while flow < cap.min(best) {
            pred.iter_mut().for_each(|p| *p = None);
            let mut queue = VecDeque::from([0]);
            let mut reached = false;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    reached = true;
                    break;
                }
                for &(v, arc) in &adj[u] {
                    if v != 0 && pred[v].is_none() && residual[arc] > 0 {
                        pred[v] = Some((u, arc));
                        queue.push_back(v);
                    }
                }
            }
            if !reached {
                break;
            }
            let mut v = t;
            while let Some((u, arc)) = pred[v] {
                residual[arc] -= 1;
                residual[arc ^ 1] += 1;
                v = u;
            }
            flow += 1;
        }
        best = best.min(flow);
        if best == 0 {
            break;
        }
    }
    best
}

/// Parameters of a Watts-Strogatz random graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WattsStrogatzSpec {
    pub n: usize,
    /// Ring-lattice degree; even.
    pub k: usize,
    /// Rewiring probability.
    pub beta: f64,
    pub edge_length_km: f64,
    pub seed: u64,
}

impl fmt::Display for WattsStrogatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ws(n={}, k={}, beta={}, length={} km, seed={})",
            self.n, self.k, self.beta, self.edge_length_km, self.seed
        )
    }
}

impl WattsStrogatzSpec {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if !self.k.is_multiple_of(2) || self.k < 2 || self.k >= self.n {
            return Err(TopologyError::InvalidSpec(format!("k={} must be even with 2 <= k < n={}", self.k, self.n)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(TopologyError::InvalidSpec(format!("beta={} outside [0, 1]", self.beta)));
        }
        if !(self.edge_length_km.is_finite() && self.edge_length_km > 0.0) {
            return Err(TopologyError::InvalidSpec(format!("edge length {} km", self.edge_length_km)));
        }
        Ok(())
    }
}

/// Draws Watts-Strogatz graphs until one is connected with min-cut >= 2.
///
/// Each attempt starts from the ring lattice where every node links to its
/// `k/2` nearest neighbors on each side. Then, for offsets `j = 1..=k/2` and
/// each node `u` in order, the edge `(u, u+j)` is moved with probability
/// `beta` to `(u, w)` for a uniformly random `w` that is neither `u` nor an
/// existing neighbor (redrawn until valid; skipped if `u` is saturated).
/// All attempts consume one ChaCha8 stream seeded from `spec.seed`.
pub fn generate_ws(spec: &WattsStrogatzSpec, max_attempts: u64) -> Result<Topology, TopologyError> {
    spec.validate()?;
    let n = spec.n;
    let half = spec.k / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut adj = vec![false; n * n];
    let mut degree = vec![0usize; n];
    for _ in 0..max_attempts {
        adj.iter_mut().for_each(|x| *x = false);
        for u in 0..n {
            for j in 1..=half {
                let v = (u + j) % n;
                adj[u * n + v] = true;
                adj[v * n + u] = true;
            }
        }
        degree.iter_mut().for_each(|d| *d = spec.k);
        for j in 1..=half {
            for u in 0..n {
                if rng.random::<f64>() >= spec.beta {
                    continue;
                }
                if degree[u] >= n - 1 {
                    continue;
                }
                let v = (u + j) % n;
                let w = loop {
                    let w = rng.random_range(0..n);
                    if w != u && !adj[u * n + w] {
                        break w;
                    }
                };
                // the lattice edge may already have been replaced by an earlier rewire
                if adj[u * n + v] {
                    adj[u * n + v] = false;
                    adj[v * n + u] = false;
                    degree[v] -= 1;
                } else {
                    degree[u] += 1;
                }
                adj[u * n + w] = true;
                adj[w * n + u] = true;
                degree[w] += 1;
            }
        }
        if degree.iter().any(|&d| d < 2) {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .filter(|&(a, b)| adj[a * n + b])
            .collect();
        if !is_connected(n, &edges) || edge_connectivity(n, &edges, 2) < 2 {
            continue;
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        return Topology::new(labels, edges.into_iter().map(|(a, b)| (a, b, spec.edge_length_km)), DEFAULT_ALPHA_DB_PER_KM, None);
    }
    Err(TopologyError::GenerationFailed { spec: *spec, attempts: max_attempts })
}

/// Ring lattice degree for a `k/n` ratio: `k = ratio * n` rounded to the
/// nearest even integer, at least 2 and below `n`.
pub fn lattice_degree(n: usize, k_over_n: f64) -> usize {
    let raw = k_over_n * n as f64;
    let mut k = ((raw / 2.0).round() as usize) * 2;
    k = k.max(2);
    while k >= n && k > 2 {
        k -= 2;
    }
    k
}
