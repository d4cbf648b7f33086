//! Runs an experiment grid: topology instances x sources x WSS losses x strategies.

use std::collections::BTreeMap;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use eprnet_core::allocation::{ExactOptions, StrategyOptions};
use eprnet_core::metrics::report;
use eprnet_core::netgraph::{expand, LossParams};
use eprnet_core::routing::route_all;
use eprnet_core::spectrum::{calibrate_rep_rate, channel_rates, scaled_plan, ChannelPlan, SourceParams, REFERENCE_NODES};
use eprnet_core::topology::{generate_ws, lattice_degree, load_ilec, load_topology, WattsStrogatzSpec};
use eprnet_core::{pair_count, AllocError, MetricsReport, Strategy, Topology};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ExperimentConfig, Sources, TopologySource};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("topology: {0}")]
    Topology(String),
    #[error("spectrum: {0}")]
    Spectrum(String),
    #[error("unknown source label {0:?}")]
    UnknownSource(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Grid coordinates of a Watts-Strogatz instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WsCell {
    pub n: usize,
    pub k: usize,
    pub k_over_n: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub replication: Option<usize>,
    pub seed: Option<u64>,
    pub cell: Option<WsCell>,
    /// Generation failures are kept so they can be reported.
    pub topology: Result<Topology, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Exact solver ran out of budget; metrics are for the best allocation found.
    Incomplete,
    Failed,
    /// Exact solver not attempted because the instance is above the size threshold.
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Incomplete => "incomplete",
            Status::Failed => "failed",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub instance: usize,
    pub source: String,
    pub l_wss: f64,
    pub strategy: Strategy,
    pub status: Status,
    pub metrics: Option<MetricsReport>,
    pub note: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct KRounding {
    pub n: usize,
    pub k_over_n: f64,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub hash: String,
    pub instances: Vec<Instance>,
    /// Ordered by instance, source, WSS loss, then configured strategy order.
    pub rows: Vec<Row>,
    pub k_rounding: Vec<KRounding>,
    pub workers: usize,
    pub started_unix_s: u64,
    pub wall: Duration,
}

impl Outcome {
    /// Human-readable descriptions of everything that did not finish cleanly.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for inst in &self.instances {
            if let Err(e) = &inst.topology {
                out.push(format!("{}: {e}", inst.name));
            }
        }
        for r in &self.rows {
            if matches!(r.status, Status::Failed | Status::Incomplete) {
                let inst = &self.instances[r.instance];
                out.push(format!(
                    "{} source={} l_wss={} {}: {} {}",
                    inst.name,
                    r.source,
                    r.l_wss,
                    r.strategy,
                    r.status.name(),
                    r.note
                ));
            }
        }
        out
    }

    pub fn is_ws(&self) -> bool {
        matches!(self.config.topology, TopologySource::WsGrid { .. })
    }
}

/// Worker count from `EPRNET_WORKERS`, else the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var("EPRNET_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Source parameters with the repetition rate calibrated to the configured peak.
pub fn calibrated_params(config: &ExperimentConfig) -> Result<SourceParams, RunError> {
    let mut params = config.spectrum.source;
    params.rep_rate = calibrate_rep_rate(&params, &config.spectrum.geometry, config.spectrum.peak_rate)
        .map_err(|e| RunError::Spectrum(e.to_string()))?;
    Ok(params)
}

pub fn build_instances(config: &ExperimentConfig) -> Result<(Vec<Instance>, Vec<KRounding>), RunError> {
    match &config.topology {
        TopologySource::Ilec => Ok((vec![fixed("ilec", load_ilec())], Vec::new())),
        TopologySource::File { path } => {
            let t = load_topology(path).map_err(|e| RunError::Topology(format!("{}: {e}", path.display())))?;
            let name = path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned());
            Ok((vec![fixed(&name, t)], Vec::new()))
        }
        TopologySource::WsGrid { n, k_over_n, beta, edge_length_km, max_attempts } => {
            let mut instances = Vec::new();
            let mut rounding = Vec::new();
            for &nodes in n {
                for &ratio in k_over_n {
                    let k = lattice_degree(nodes, ratio);
                    rounding.push(KRounding { n: nodes, k_over_n: ratio, k });
                    for &b in beta {
                        for rep in 0..config.replications {
                            let seed = config.base_seed + rep as u64;
                            let spec = WattsStrogatzSpec { n: nodes, k, beta: b, edge_length_km: *edge_length_km, seed };
                            instances.push(Instance {
                                name: format!("ws_n{nodes}_k{k}_b{b}"),
                                replication: Some(rep),
                                seed: Some(seed),
                                cell: Some(WsCell { n: nodes, k, k_over_n: ratio, beta: b }),
                                topology: generate_ws(&spec, *max_attempts).map_err(|e| e.to_string()),
                            });
                        }
                    }
                }
            }
            Ok((instances, rounding))
        }
    }
}

fn fixed(name: &str, topology: Topology) -> Instance {
    Instance { name: name.into(), replication: None, seed: None, cell: None, topology: Ok(topology) }
}

fn source_indices(config: &ExperimentConfig, topology: &Topology) -> Result<Vec<usize>, RunError> {
    match &config.sources {
        Sources::All => Ok((0..topology.len()).collect()),
        Sources::List(labels) => labels
            .iter()
            .map(|l| topology.node_index(l).ok_or_else(|| RunError::UnknownSource(l.clone())))
            .collect(),
    }
}

/// Channel plans keyed by node count. Random graphs use the resized plan;
/// fixed topologies use the reference plan unless it has fewer channels
/// than node pairs.
fn plans_for(config: &ExperimentConfig, instances: &[Instance]) -> Result<BTreeMap<usize, ChannelPlan>, RunError> {
    let params = calibrated_params(config)?;
    let reference = channel_rates(&params, &config.spectrum.geometry).map_err(|e| RunError::Spectrum(e.to_string()))?;
    let kappa_ref = pair_count(REFERENCE_NODES);
    let ws = matches!(config.topology, TopologySource::WsGrid { .. });
    let mut plans = BTreeMap::new();
    for inst in instances {
        let n = match (&inst.topology, inst.cell) {
            (_, Some(cell)) => cell.n,
            (Ok(t), None) => t.len(),
            (Err(_), None) => continue,
        };
        if plans.contains_key(&n) {
            continue;
        }
        let plan = if !ws && pair_count(n) <= reference.len() {
            reference.clone()
        } else {
            scaled_plan(&params, &reference, kappa_ref, n).map_err(|e| RunError::Spectrum(e.to_string()))?
        };
        plans.insert(n, plan);
    }
    Ok(plans)
}

struct Job<'a> {
    instance: usize,
    topology: &'a Topology,
    source: usize,
    l_wss: f64,
    plan: &'a ChannelPlan,
}

/// Runs the whole grid on `workers` threads. Row order does not depend on
/// the number of workers.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<Outcome, RunError> {
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let start = Instant::now();
    let (instances, k_rounding) = build_instances(config)?;
    let plans = plans_for(config, &instances)?;

    let mut jobs = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let Ok(topology) = &inst.topology else { continue };
        let plan = &plans[&topology.len()];
        for source in source_indices(config, topology)? {
            for &l_wss in &config.l_wss {
                jobs.push(Job { instance: i, topology, source, l_wss, plan });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let rows: Vec<Row> =
        pool.install(|| jobs.par_iter().map(|job| run_job(config, job)).collect::<Vec<_>>()).into_iter().flatten().collect();

    Ok(Outcome {
        config: config.clone(),
        hash: config.hash(),
        instances,
        rows,
        k_rounding,
        workers: workers.max(1),
        started_unix_s,
        wall: start.elapsed(),
    })
}

fn run_job(config: &ExperimentConfig, job: &Job) -> Vec<Row> {
    let label = job.topology.label(job.source).to_string();
    let row = |strategy, status, metrics, note: String, elapsed| Row {
        instance: job.instance,
        source: label.clone(),
        l_wss: job.l_wss,
        strategy,
        status,
        metrics,
        note,
        elapsed,
    };
    let fail_all = |note: String| {
        config.strategies.iter().map(|&s| row(s, Status::Failed, None, note.clone(), Duration::ZERO)).collect()
    };

    let params = LossParams { l_wss_db: job.l_wss, memory_loss_db: config.memory_loss_db, include_uturns: false };
    let graph = match expand(job.topology, job.source, params) {
        Ok(g) => g,
        Err(e) => return fail_all(e.to_string()),
    };
    let table = match route_all(&graph, job.topology) {
        Ok(t) => t,
        Err(e) => return fail_all(e.to_string()),
    };
    let lambda = &table.lambda;
    let rates = &job.plan.rates;
    let options = StrategyOptions {
        first_fit_scale: config.first_fit_scale,
        exact: ExactOptions { budget: Duration::from_secs_f64(config.exact_budget_s), shuffle_seed: None },
    };
    let baseline = match Strategy::RoundRobin.run(lambda, rates, &options) {
        Ok(b) => b.allocation,
        Err(e) => return fail_all(format!("baseline: {e}")),
    };

    let mut out = Vec::with_capacity(config.strategies.len());
    for &strategy in &config.strategies {
        if strategy == Strategy::Exact && rates.len() * lambda.len() > config.exact_max_size {
            let note = format!("m*kappa={} above exact_max_size", rates.len() * lambda.len());
            out.push(row(strategy, Status::Skipped, None, note, Duration::ZERO));
            continue;
        }
        let runs = if strategy == Strategy::Exact { config.exact_runs } else { 1 };
        let mut reports = Vec::with_capacity(runs);
        let mut status = Status::Ok;
        let mut note = String::new();
        let mut elapsed = Duration::ZERO;
        for r in 0..runs {
            let mut opts = options.clone();
            if runs > 1 {
                opts.exact.shuffle_seed = Some(config.base_seed + r as u64);
            }
            let result = match strategy.run(lambda, rates, &opts) {
                Ok(res) => res,
                Err(AllocError::Incomplete { best, bound }) => {
                    status = Status::Incomplete;
                    note = format!("budget exhausted, bound {bound}");
                    *best
                }
                Err(e) => {
                    status = Status::Failed;
                    note = e.to_string();
                    break;
                }
            };
            elapsed += result.elapsed;
            match report(&result.allocation, &baseline) {
                Ok(m) => reports.push(m),
                Err(e) => {
                    status = Status::Failed;
                    note = e.to_string();
                    break;
                }
            }
        }
        let metrics = (status != Status::Failed).then(|| average(&reports));
        out.push(row(strategy, status, metrics, note, elapsed));
    }
    out
}

/// Mean of repeated reports of the same instance. The minimum is shared by
/// all optimal solutions, so only the median and Jain index move.
fn average(reports: &[MetricsReport]) -> MetricsReport {
    if reports.len() == 1 {
        return reports[0];
    }
    let k = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    MetricsReport {
        min_rate: mean(|r| r.min_rate),
        median_rate: mean(|r| r.median_rate),
        normalized_min: mean(|r| r.normalized_min),
        jain: mean(|r| r.jain),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"topology": {"kind": "ws_grid", "n": [10], "k_over_n": [0.2], "beta": [0.0]},
                "strategies": ["rr", "lpt"], "replications": 2, "l_wss": [4]}"#,
        )
        .unwrap()
    }

    #[test]
    fn ring_grid_runs() {
        let out = run(&ring_config(), 1).unwrap();
        assert_eq!(out.instances.len(), 2);
        assert_eq!(out.rows.len(), 2 * 10 * 2);
        assert!(out.failures().is_empty());
        assert_eq!(out.k_rounding[0].k, 2);
        for r in &out.rows {
            assert_eq!(r.status, Status::Ok);
        }
    }

    #[test]
    fn row_order_ignores_worker_count() {
        let a = run(&ring_config(), 1).unwrap();
        let b = run(&ring_config(), 3).unwrap();
        let key = |o: &Outcome| -> Vec<(usize, String, String, Option<MetricsReport>)> {
            o.rows.iter().map(|r| (r.instance, r.source.clone(), r.strategy.to_string(), r.metrics)).collect()
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn exact_above_threshold_is_skipped() {
        let c = ExperimentConfig::from_json(
            r#"{"topology": {"kind": "ilec"}, "strategies": ["exact"], "sources": ["M"], "l_wss": [4]}"#,
        )
        .unwrap();
        let out = run(&c, 1).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].status, Status::Skipped);
        assert!(out.failures().is_empty());
    }

    #[test]
    fn unknown_source_label() {
        let c = ExperimentConfig::from_json(r#"{"topology": {"kind": "ilec"}, "strategies": ["rr"], "sources": ["Z"]}"#)
            .unwrap();
        assert!(matches!(run(&c, 1), Err(RunError::UnknownSource(_))));
    }
}
