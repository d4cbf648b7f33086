use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use eprnet_bench::ilec_instance;
use eprnet_core::allocation::StrategyOptions;
use eprnet_core::netgraph::{expand, LossParams};
use eprnet_core::routing::route_all;
use eprnet_core::spectrum::ChannelPlan;
use eprnet_core::topology::{generate_ws, load_ilec, WattsStrogatzSpec};
use eprnet_core::Strategy;

fn spectrum(c: &mut Criterion) {
    c.bench_function("reference_plan", |b| b.iter(|| ChannelPlan::reference().unwrap()));
}

fn routing(c: &mut Criterion) {
    let ilec = load_ilec();
    c.bench_function("route_all/ilec", |b| {
        b.iter(|| {
            let g = expand(&ilec, 12, LossParams::with_wss(4.0)).unwrap();
            route_all(&g, &ilec).unwrap()
        })
    });
    let mut group = c.benchmark_group("route_all/ws");
    group.sample_size(20);
    for (n, k) in [(20, 8), (40, 16)] {
        let spec = WattsStrogatzSpec { n, k, beta: 0.5, edge_length_km: 5.0, seed: 1 };
        let t = generate_ws(&spec, 1000).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_k{k}")), &t, |b, t| {
            b.iter(|| {
                let g = expand(t, 0, LossParams::with_wss(4.0)).unwrap();
                route_all(&g, t).unwrap()
            })
        });
    }
    group.finish();
}

fn allocation(c: &mut Criterion) {
    let (lambda, rates) = ilec_instance(12, 4.0);
    let options = StrategyOptions { first_fit_scale: 1000.0, ..Default::default() };
    let mut group = c.benchmark_group("allocate/ilec");
    for s in Strategy::APPROXIMATIONS {
        group.bench_function(s.name(), |b| b.iter(|| s.run(black_box(&lambda), black_box(&rates), &options).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, spectrum, routing, allocation);
criterion_main!(benches);
