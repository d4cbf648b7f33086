//! Brute-force reference implementations used by the integration and
//! acceptance tests. None of these share code with the library algorithms.
#![allow(dead_code)]

use std::f64::consts::PI;

use eprnet_core::netgraph::{ArcKind, ExpandedGraph};
use eprnet_core::spectrum::{ChannelGeometry, SourceParams};
use eprnet_core::topology::Topology;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Heralding efficiency by 2-D composite Simpson over the channel rectangle.
pub fn simpson_efficiency(params: &SourceParams, geometry: &ChannelGeometry, x: usize, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let p = params.sigma_p * params.sigma_p / 8.0;
    let q = 8.0 / (params.omega_pm * params.omega_pm);
    let shift = 2.0 * PI * (x as f64 - (geometry.m as f64 + 1.0) / 2.0) * geometry.b_delta;
    let half = PI * geometry.b_c;
    let (a0, b0) = (-shift - half, shift - half);
    let h = 2.0 * half / intervals as f64;
    let weight = |k: usize| -> f64 {
        if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for i in 0..=intervals {
        let a = a0 + i as f64 * h;
        let mut row = 0.0;
        for j in 0..=intervals {
            let b = b0 + j as f64 * h;
            let s = a + b;
            let d = a - b;
            row += weight(j) * (-p * s * s - q * d * d).exp();
        }
        total += weight(i) * row;
    }
    let integral = total * h * h / 9.0;
    8.0 * PI * params.sigma_p / params.omega_pm * integral / (4.0 * PI * PI)
}

/// Loss of a node-simple topology path from the source, counted hop by hop:
/// generator WSS out, fibers, two WSS per intermediate node, WSS into memory.
pub fn path_loss(topology: &Topology, path: &[usize], l_wss: f64, mem: f64) -> f64 {
    if path.len() == 1 {
        return l_wss + mem;
    }
    let hops = path.len() - 1;
    let fiber: f64 = path.windows(2).map(|w| topology.distance(w[0], w[1]).unwrap()).sum();
    2.0 * l_wss + topology.alpha_db_per_km() * fiber + 2.0 * l_wss * (hops - 1) as f64 + l_wss + mem
}

/// All node-simple paths from `from` to `to`.
pub fn simple_paths(topology: &Topology, from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(t: &Topology, path: &mut Vec<usize>, on: &mut Vec<bool>, to: usize, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == to {
            out.push(path.clone());
            return;
        }
        for &(w, _) in t.neighbors(v) {
            if !on[w] {
                on[w] = true;
                path.push(w);
                walk(t, path, on, to, out);
                path.pop();
                on[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; topology.len()];
    on[from] = true;
    walk(topology, &mut vec![from], &mut on, to, &mut out);
    out
}

fn directed_hops(path: &[usize]) -> Vec<(usize, usize)> {
    path.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Minimum total loss over pairs of fiber-direction-disjoint simple paths
/// from `source` to `i` and to `j`.
pub fn brute_force_pair_loss(topology: &Topology, source: usize, l_wss: f64, mem: f64, i: usize, j: usize) -> Option<f64> {
    let to_i = simple_paths(topology, source, i);
    let to_j = simple_paths(topology, source, j);
    let mut best: Option<f64> = None;
    for pi in &to_i {
        let hi = directed_hops(pi);
        for pj in &to_j {
            if directed_hops(pj).iter().any(|h| hi.contains(h)) {
                continue;
            }
            let loss = path_loss(topology, pi, l_wss, mem) + path_loss(topology, pj, l_wss, mem);
            best = Some(best.map_or(loss, |b: f64| b.min(loss)));
        }
    }
    best
}

/// Topology fibers (as directed node pairs) used by an expanded-graph path.
pub fn fibers_of(graph: &ExpandedGraph, arcs: &[usize]) -> Vec<(usize, usize)> {
    arcs.iter()
        .map(|&a| graph.arc(a))
        .filter(|a| a.kind == ArcKind::Fiber)
        .map(|a| (graph.vertices()[a.from].node, graph.vertices()[a.to].node))
        .collect()
}

/// Random two-edge-connected topology with 3..=`max_n` nodes.
pub fn random_admissible_topology(rng: &mut ChaCha8Rng, max_n: usize) -> Topology {
    loop {
        let n = rng.random_range(3..=max_n);
        let density = rng.random_range(0.3..0.9);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random_bool(density) {
                    edges.push((a, b, rng.random_range(1..=20) as f64));
                }
            }
        }
        let labels = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
        if let Ok(t) = Topology::new(labels, edges, 0.4, None) {
            return t;
        }
    }
}

/// Best min received rate over all `kappa^m` channel partitions.
pub fn exhaustive_maxmin(lambda: &[f64], rates: &[f64]) -> f64 {
    let (kappa, m) = (lambda.len(), rates.len());
    let mut owner = vec![0usize; m];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut sums = vec![0.0; kappa];
        for (c, &p) in owner.iter().enumerate() {
            sums[p] += rates[c];
        }
        let value = sums.iter().zip(lambda).map(|(s, l)| s * l).fold(f64::INFINITY, f64::min);
        best = best.max(value);
        let mut k = 0;
        loop {
            if k == m {
                return best;
            }
            owner[k] += 1;
            if owner[k] < kappa {
                break;
            }
            owner[k] = 0;
            k += 1;
        }
    }
}

/// `kappa <= 3`, `kappa <= m <= 6`, integer rates in `1..=20`, transmittances in `(0, 1]`.
pub fn random_small_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let kappa = rng.random_range(1..=3);
    let m = rng.random_range(kappa..=6);
    let lambda = (0..kappa).map(|_| rng.random_range(1..=1000) as f64 / 1000.0).collect();
    let rates = (0..m).map(|_| rng.random_range(1..=20) as f64).collect();
    (lambda, rates)
}
