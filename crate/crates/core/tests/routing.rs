mod oracle;

use eprnet_core::netgraph::{expand, LossParams};
use eprnet_core::routing::{route_all, shortest_disjoint_pair, RoutePair};
use eprnet_core::topology::{load_ilec, Topology};
use oracle::{brute_force_pair_loss, fibers_of, random_admissible_topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn named(labels: &[&str], edges: &[(usize, usize, f64)]) -> Topology {
    Topology::new(labels.iter().map(|s| s.to_string()).collect(), edges.iter().copied(), 0.4, None).unwrap()
}

fn check_against_oracle(t: &Topology, l_wss: f64) {
    for s in 0..t.len() {
        let g = expand(t, s, LossParams::with_wss(l_wss)).unwrap();
        let table = route_all(&g, t).unwrap();
        for r in &table.routes {
            let (i, j) = r.pair;
            let want = brute_force_pair_loss(t, s, l_wss, 0.0, i, j).expect("admissible topology");
            assert!((r.loss_db - want).abs() <= 1e-9, "source {s} pair {i}-{j}: {} vs {want}", r.loss_db);
            assert!((r.recompute_loss(&g) - r.loss_db).abs() <= 1e-9);
            let fi = fibers_of(&g, &r.path_i);
            assert!(fibers_of(&g, &r.path_j).iter().all(|f| !fi.contains(f)));
            assert_eq!(g.arc(*r.path_i.last().unwrap()).to, g.mem_vertex(i));
            assert_eq!(g.arc(*r.path_j.last().unwrap()).to, g.mem_vertex(j));
            assert_eq!(g.arc(r.path_i[0]).from, g.gen_vertex());
        }
    }
}

#[test]
fn hand_cases() {
    let square = named(&["S", "B", "C", "D"], &[(0, 1, 5.0), (1, 2, 5.0), (2, 3, 5.0), (0, 3, 5.0)]);
    let g = expand(&square, 0, LossParams::with_wss(4.0)).unwrap();
    assert!((shortest_disjoint_pair(&g, 1, 3).unwrap().loss_db - 28.0).abs() < 1e-9);
    assert!((shortest_disjoint_pair(&g, 1, 2).unwrap().loss_db - 38.0).abs() < 1e-9);
    check_against_oracle(&square, 4.0);

    let triangle = named(&["S", "B", "C"], &[(0, 1, 5.0), (1, 2, 5.0), (0, 2, 5.0)]);
    let g = expand(&triangle, 0, LossParams::with_wss(4.0)).unwrap();
    assert!((shortest_disjoint_pair(&g, 1, 2).unwrap().loss_db - 28.0).abs() < 1e-9);
    check_against_oracle(&triangle, 4.0);
}

#[test]
fn random_small_topologies_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..60 {
        let t = random_admissible_topology(&mut rng, 6);
        check_against_oracle(&t, if k % 2 == 0 { 4.0 } else { 8.0 });
    }
}

#[test]
fn ilec_routes_are_consistent() {
    let t = load_ilec();
    let g = expand(&t, 12, LossParams::with_wss(4.0)).unwrap();
    let table = route_all(&g, &t).unwrap();
    assert_eq!(table.len(), 136);
    // M touches every node, so every pair is two one-hop paths
    for r in &table.routes {
        let want = 2.0 * 12.0
            - if r.pair.0 == 12 || r.pair.1 == 12 { 8.0 } else { 0.0 }
            + 0.4 * [r.pair.0, r.pair.1].iter().filter(|&&x| x != 12).map(|&x| t.distance(12, x).unwrap()).sum::<f64>();
        assert!((r.loss_db - want).abs() < 1e-9, "{:?}", r.pair);
    }
    let mut csv = Vec::new();
    table.write_csv(&g, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("pair,loss_db,eta,path_i,path_j"));
    assert!(text.lines().nth(1).unwrap().starts_with("A-B,"));
    assert_eq!(RoutePair::path_label(&g, &table.routes[0].path_i), "M.gen->M.out[A]->A.in[M]->A.mem");
}

#[test]
fn larger_loss_never_helps() {
    let t = load_ilec();
    for s in [0, 12, 15] {
        let a = route_all(&expand(&t, s, LossParams::with_wss(4.0)).unwrap(), &t).unwrap();
        let b = route_all(&expand(&t, s, LossParams::with_wss(8.0)).unwrap(), &t).unwrap();
        for (x, y) in a.routes.iter().zip(&b.routes) {
            assert!(x.loss_db < y.loss_db);
        }
    }
}
