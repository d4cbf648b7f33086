//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use eprnet_cli::config::ExperimentConfig;
use eprnet_cli::output::{source_summaries, write_all, SourceSummary, BEST};
use eprnet_cli::runner::{run, Outcome, Status};
use eprnet_core::allocation::{ExactOptions, StrategyOptions};
use eprnet_core::netgraph::{expand, LossParams};
use eprnet_core::routing::route_all;
use eprnet_core::spectrum::{scaled_plan, ChannelPlan, SourceParams, REFERENCE_PEAK_RATE};
use eprnet_core::{AllocError, Strategy, StrategyResult, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("test config")
}

fn spectrum_profile() -> Check {
    let plan = ChannelPlan::reference().map_err(|e| e.to_string())?;
    let r = &plan.rates;
    let m = r.len();
    ensure(m == 185, || format!("{m} channels"))?;
    for i in 0..m {
        ensure((r[i] - r[m - 1 - i]).abs() <= 1e-12 * r[i].abs(), || format!("asymmetric at channel {}", i + 1))?;
    }
    let mid = m / 2;
    for i in 0..mid {
        ensure(r[i] < r[i + 1], || format!("not increasing at channel {}", i + 1))?;
    }
    let peak = r[mid];
    let ratio = peak / r[0];
    let want = 4584.0 / 458.0;
    ensure((ratio / want - 1.0).abs() <= 0.05, || format!("peak/edge {ratio} vs {want}"))?;
    ensure((peak / REFERENCE_PEAK_RATE - 1.0).abs() <= 0.02, || format!("peak {peak}"))?;
    Ok(format!("symmetric, unimodal, peak {peak:.3}, peak/edge {ratio:.4}"))
}

fn route_matches_oracle(t: &Topology, l_wss: f64) -> Result<usize, String> {
    let mut checked = 0;
    for s in 0..t.len() {
        let g = expand(t, s, LossParams::with_wss(l_wss)).map_err(|e| e.to_string())?;
        let table = route_all(&g, t).map_err(|e| e.to_string())?;
        for r in &table.routes {
            let (i, j) = r.pair;
            let want = oracle::brute_force_pair_loss(t, s, l_wss, 0.0, i, j)
                .ok_or_else(|| format!("oracle found no pair for {i}-{j}"))?;
            ensure((r.loss_db - want).abs() <= 1e-9, || format!("source {s} pair {i}-{j}: {} vs {want}", r.loss_db))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn routing_oracle() -> Check {
    let named = |labels: &[&str], edges: &[(usize, usize, f64)]| {
        Topology::new(labels.iter().map(|s| s.to_string()).collect(), edges.iter().copied(), 0.4, None).unwrap()
    };
    let square = named(&["S", "B", "C", "D"], &[(0, 1, 5.0), (1, 2, 5.0), (2, 3, 5.0), (0, 3, 5.0)]);
    let triangle = named(&["S", "B", "C"], &[(0, 1, 5.0), (1, 2, 5.0), (0, 2, 5.0)]);
    let mut checked = route_matches_oracle(&square, 4.0)? + route_matches_oracle(&triangle, 4.0)?;
    let g = expand(&square, 0, LossParams::with_wss(4.0)).unwrap();
    let table = route_all(&g, &square).map_err(|e| e.to_string())?;
    ensure((table.get(1, 3).unwrap().loss_db - 28.0).abs() <= 1e-9, || "4-cycle B-D".into())?;
    ensure((table.get(1, 2).unwrap().loss_db - 38.0).abs() <= 1e-9, || "4-cycle B-C".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..200 {
        let t = oracle::random_admissible_topology(&mut rng, 6);
        checked += route_matches_oracle(&t, if k % 2 == 0 { 4.0 } else { 8.0 })?;
    }
    Ok(format!("202 topologies, {checked} source/pair cases agree within 1e-9 dB"))
}

fn run_strategy(s: Strategy, lambda: &[f64], rates: &[f64], budget: Duration) -> Result<StrategyResult, String> {
    let options = StrategyOptions {
        first_fit_scale: 1.0,
        exact: ExactOptions { budget, shuffle_seed: None },
    };
    match s.run(lambda, rates, &options) {
        Ok(r) => Ok(r),
        Err(AllocError::Incomplete { best, .. }) => Ok(*best),
        Err(e) => Err(format!("{s}: {e}")),
    }
}

fn allocation_guarantee() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_bd = f64::INFINITY;
    for case in 0..500 {
        let (lambda, rates) = oracle::random_small_instance(&mut rng);
        let (kappa, m) = (lambda.len(), rates.len());
        let exact = Strategy::Exact.run(&lambda, &rates, &StrategyOptions::default()).map_err(|e| e.to_string())?;
        let brute = oracle::exhaustive_maxmin(&lambda, &rates);
        let tol = 1e-9 * brute.max(1.0);
        ensure((exact.objective - brute).abs() <= tol, || format!("case {case}: exact {} vs {brute}", exact.objective))?;
        for s in Strategy::APPROXIMATIONS {
            let r = run_strategy(s, &lambda, &rates, Duration::ZERO)?;
            ensure(r.objective <= exact.objective + tol, || format!("case {case}: {s} {} above exact", r.objective))?;
            if s == Strategy::ModifiedBd {
                let floor = exact.objective / (m - kappa + 1) as f64;
                ensure(r.objective >= floor - tol, || format!("case {case}: bd {} below {floor}", r.objective))?;
                if exact.objective > 0.0 {
                    worst_bd = worst_bd.min(r.objective / exact.objective);
                }
            }
        }
    }
    Ok(format!("500 instances; exact matches enumeration; worst bd/exact {worst_bd:.4}"))
}

fn partition_invariant() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let strategies = [Strategy::RoundRobin, Strategy::FirstFit, Strategy::ModifiedLpt, Strategy::ModifiedBd, Strategy::Exact];
    let mut instances = 0;
    for case in 0..1200 {
        let (lambda, rates) = if case % 2 == 0 {
            oracle::random_small_instance(&mut rng)
        } else {
            let kappa = rng.random_range(1..=8);
            let m = rng.random_range(kappa..=30);
            let lambda: Vec<f64> = (0..kappa).map(|_| rng.random_range(1e-6..1.0)).collect();
            let rates: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..500.0)).collect();
            (lambda, rates)
        };
        for s in strategies {
            let r = run_strategy(s, &lambda, &rates, Duration::from_millis(20))?;
            let sums = r.allocation.row_sums();
            ensure(sums.iter().all(|&x| x == 1), || format!("case {case}: {s} row sums {sums:?}"))?;
        }
        instances += 1;
    }
    Ok(format!("{instances} instances x {} strategies", strategies.len()))
}

fn ilec_outcome() -> Result<Outcome, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ilec.json");
    let c = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
    run(&c, 1).map_err(|e| e.to_string())
}

/// Best max-min rate over strategies for each (source, WSS loss).
fn best_by_source(outcome: &Outcome) -> BTreeMap<(String, u64), f64> {
    let mut best: BTreeMap<(String, u64), f64> = BTreeMap::new();
    for r in &outcome.rows {
        if let (Status::Ok, Some(m)) = (r.status, r.metrics) {
            let e = best.entry((r.source.clone(), r.l_wss.to_bits())).or_insert(f64::NEG_INFINITY);
            *e = e.max(m.min_rate);
        }
    }
    best
}

fn ilec_best_source(outcome: &Outcome) -> Check {
    ensure(outcome.failures().is_empty(), || format!("{:?}", outcome.failures()))?;
    let summaries = source_summaries(outcome);
    let mut notes = Vec::new();
    for l in [4.0, 8.0] {
        let s = summaries
            .iter()
            .find(|s| s.strategy == BEST && s.l_wss == l)
            .ok_or_else(|| format!("no summary at {l} dB"))?;
        ensure(s.best_source == "M", || format!("best source at {l} dB is {}", s.best_source))?;
        notes.push(format!("{l} dB: M at {:.4}", s.maxmin));
    }
    let best = best_by_source(outcome);
    let topology = eprnet_core::topology::load_ilec();
    for label in topology.labels() {
        let at4 = best[&(label.clone(), 4f64.to_bits())];
        let at8 = best[&(label.clone(), 8f64.to_bits())];
        ensure(at8 < at4, || format!("source {label}: {at8} at 8 dB vs {at4} at 4 dB"))?;
    }
    Ok(format!("{}; 8 dB below 4 dB for all 17 sources", notes.join(", ")))
}

fn ilec_importance(outcome: &Outcome) -> Check {
    let summaries = source_summaries(outcome);
    let s = summaries
        .iter()
        .find(|s| s.strategy == BEST && s.l_wss == 4.0)
        .ok_or_else(|| "no 4 dB summary".to_string())?;
    let j = s.importance.ok_or_else(|| "importance undefined".to_string())?;
    let at8 = summaries.iter().find(|s| s.strategy == BEST && s.l_wss == 8.0).and_then(|s| s.importance);
    ensure((j - 0.58).abs() <= 0.05, || format!("importance {j} at 4 dB (8 dB: {at8:?})"))?;
    Ok(format!("importance {j:.4} at 4 dB (8 dB gives {:.4})", at8.unwrap_or(f64::NAN)))
}

fn ring_degeneracy() -> Check {
    let c = config(
        r#"{"topology": {"kind": "ws_grid", "n": [10], "k_over_n": [0.2], "beta": [0.2, 0.5, 0.8]},
            "strategies": ["round_robin", "first_fit", "modified_lpt", "modified_bd"],
            "first_fit_scale": 1000, "l_wss": [4], "replications": 40}"#,
    );
    let outcome = run(&c, 1).map_err(|e| e.to_string())?;
    let mut admissible = 0;
    for inst in &outcome.instances {
        let Ok(t) = &inst.topology else { continue };
        admissible += 1;
        let cycle = t.len() == 10 && t.edges().len() == 10 && (0..10).all(|v| t.degree(v) == 2);
        ensure(cycle, || format!("{} seed {:?} is not a 10-cycle", inst.name, inst.seed))?;
    }
    ensure(admissible == 120, || format!("only {admissible} of 120 instances generated"))?;
    let summaries = source_summaries(&outcome);
    ensure(summaries.len() == 120 * 5, || format!("{} summaries", summaries.len()))?;
    for s in &summaries {
        ensure(s.importance == Some(1.0), || format!("instance {} {}: importance {:?}", s.instance, s.strategy, s.importance))?;
    }
    Ok("120 instances are 10-cycles; importance exactly 1 for every strategy".into())
}

fn cell_means(summaries: &[SourceSummary], outcome: &Outcome) -> BTreeMap<(usize, u64), (f64, f64, usize)> {
    let mut acc: BTreeMap<(usize, u64), (f64, f64, usize)> = BTreeMap::new();
    for s in summaries.iter().filter(|s| s.strategy == "modified_lpt") {
        let cell = outcome.instances[s.instance].cell.expect("grid instance");
        let e = acc.entry((cell.n, cell.k_over_n.to_bits())).or_insert((0.0, 0.0, 0));
        e.0 += s.maxmin;
        e.1 += s.jain_at_best;
        e.2 += 1;
    }
    for v in acc.values_mut() {
        v.0 /= v.2 as f64;
        v.1 /= v.2 as f64;
    }
    acc
}

fn ws_trends() -> Check {
    let ns = [10usize, 20, 30, 40];
    let ratios = [0.2f64, 0.4, 0.6, 0.8];
    let c = config(
        r#"{"topology": {"kind": "ws_grid", "n": [10, 20, 30, 40], "k_over_n": [0.2, 0.4, 0.6, 0.8], "beta": [0.5]},
            "strategies": ["modified_lpt"], "l_wss": [4], "replications": 40}"#,
    );
    let outcome = run(&c, eprnet_cli::workers_from_env()).map_err(|e| e.to_string())?;
    ensure(outcome.failures().is_empty(), || format!("{} failed cells", outcome.failures().len()))?;
    let means = cell_means(&source_summaries(&outcome), &outcome);
    let get = |n: usize, r: f64| means.get(&(n, r.to_bits())).copied();
    let mut violations = Vec::new();
    for &r in &ratios {
        for w in ns.windows(2) {
            let (a, b) = (get(w[0], r).unwrap(), get(w[1], r).unwrap());
            if b.0 > a.0 {
                violations.push(format!("(a) k/n={r}: maxmin n={} {:.4e} < n={} {:.4e}", w[0], a.0, w[1], b.0));
            }
        }
    }
    for &n in &ns {
        for w in ratios.windows(2) {
            let (a, b) = (get(n, w[0]).unwrap(), get(n, w[1]).unwrap());
            if b.0 < a.0 {
                violations.push(format!("(b) n={n}: maxmin k/n={} {:.4e} > k/n={} {:.4e}", w[0], a.0, w[1], b.0));
            }
            if b.1 < a.1 {
                violations.push(format!("(c) n={n}: jain k/n={} {:.4} > k/n={} {:.4}", w[0], a.1, w[1], b.1));
            }
        }
    }
    for (&(n, r), v) in &means {
        println!("    n={n:<2} k/n={:<3} reps={} mean maxmin={:.6e} mean jain={:.4}", f64::from_bits(r), v.2, v.0, v.1);
    }
    if violations.is_empty() {
        Ok("trends (a), (b), (c) hold on 40-seed means at beta 0.5".into())
    } else {
        Err(violations.join("; "))
    }
}

fn channelization() -> Check {
    let p = SourceParams::table_defaults();
    let reference = ChannelPlan::reference().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (n, m, bc_ghz) in [(10usize, 61usize, 33.361f64), (40, 1060, 1.920)] {
        let plan = scaled_plan(&p, &reference, 136, n).map_err(|e| e.to_string())?;
        let got = plan.geometry.b_c / 1e9;
        ensure(plan.len() == m, || format!("n={n}: {} channels", plan.len()))?;
        ensure((got - bc_ghz).abs() <= 0.001, || format!("n={n}: B_c {got} GHz"))?;
        notes.push(format!("n={n}: m={m}, B_c={got:.4} GHz"));
    }
    Ok(notes.join(", "))
}

fn determinism() -> Check {
    let c = config(
        r#"{"topology": {"kind": "ws_grid", "n": [10, 12], "k_over_n": [0.4], "beta": [0.5]},
            "strategies": ["round_robin", "first_fit", "modified_lpt", "modified_bd"],
            "first_fit_scale": 1000, "replications": 3, "l_wss": [4, 8]}"#,
    );
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run(&c, 1).map_err(|e| e.to_string())?;
    write_all(&first, a.path()).map_err(|e| e.to_string())?;
    let second = run(&c, 2).map_err(|e| e.to_string())?;
    write_all(&second, b.path()).map_err(|e| e.to_string())?;
    for file in ["metrics.csv", "sources.csv", "summary.csv"] {
        let x = std::fs::read(a.path().join(file)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.path().join(file)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{file} differs"))?;
    }
    Ok(format!("{} metric rows identical across runs with 1 and 2 workers", first.rows.len()))
}

fn main() {
    let mut all_ok = true;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                all_ok = false;
                println!("criterion {id:>2} {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    };
    report(1, "spectrum profile", &mut spectrum_profile);
    report(2, "routing oracle", &mut routing_oracle);
    report(3, "allocation dominance and guarantee", &mut allocation_guarantee);
    report(4, "partition invariant", &mut partition_invariant);
    let ilec = ilec_outcome();
    report(5, "ILEC best source", &mut || ilec.as_ref().map_err(Clone::clone).and_then(ilec_best_source));
    report(6, "ILEC source importance", &mut || ilec.as_ref().map_err(Clone::clone).and_then(ilec_importance));
    report(7, "ring degeneracy", &mut ring_degeneracy);
    report(8, "Watts-Strogatz trends", &mut ws_trends);
    report(9, "channelization constants", &mut channelization);
    report(10, "determinism", &mut determinism);
    if !all_ok {
        std::process::exit(1);
    }
}
