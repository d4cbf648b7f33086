//! Result files written by an experiment run.
//!
//! `metrics.csv`, `sources.csv` and `summary.csv` are byte-identical across
//! runs of the same config. Wall-clock data goes to `timings.csv` and
//! `manifest.json` only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use eprnet_core::metrics::source_importance;
use eprnet_core::MetricsReport;
use serde_json::json;

use crate::runner::{Outcome, Row, Status, WsCell};

pub const METRICS_HEADER: &str =
    "config_hash,topology,replication,seed,source,l_wss_db,strategy,status,min_rate,median_rate,normalized_min,jain,note";
pub const SOURCES_HEADER: &str =
    "topology,replication,seed,l_wss_db,strategy,sources,best_source,maxmin,median_at_best,jain_at_best,importance";
pub const SUMMARY_HEADER: &str = "n,k,k_over_n,beta,l_wss_db,strategy,replications,maxmin_mean,maxmin_ci95,\
median_mean,median_ci95,jain_mean,jain_ci95,importance_mean,importance_ci95";

/// Pseudo-strategy that takes, for every source, the best configured strategy.
pub const BEST: &str = "best";

/// Per-instance view across sources for one WSS loss and strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSummary {
    pub instance: usize,
    pub l_wss: f64,
    pub strategy: String,
    pub sources: usize,
    pub best_source: String,
    pub maxmin: f64,
    pub median_at_best: f64,
    pub jain_at_best: f64,
    /// Jain index of the per-source max-min rates; `None` when some source
    /// has no result.
    pub importance: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn metrics_csv(outcome: &Outcome) -> String {
    let mut s = String::new();
    writeln!(s, "{METRICS_HEADER}").unwrap();
    for r in &outcome.rows {
        let inst = &outcome.instances[r.instance];
        let metrics = r.metrics.map_or_else(|| ",,,".to_string(), |m| m.csv_fields());
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            outcome.hash,
            inst.name,
            inst.replication.map_or_else(String::new, |x| x.to_string()),
            inst.seed.map_or_else(String::new, |x| x.to_string()),
            csv_text(&r.source),
            r.l_wss,
            r.strategy,
            r.status.name(),
            metrics,
            csv_text(&r.note)
        )
        .unwrap();
    }
    s
}

pub fn timings_csv(outcome: &Outcome) -> String {
    let mut s = String::from("topology,replication,source,l_wss_db,strategy,elapsed_s\n");
    for r in &outcome.rows {
        let inst = &outcome.instances[r.instance];
        writeln!(
            s,
            "{},{},{},{},{},{}",
            inst.name,
            inst.replication.map_or_else(String::new, |x| x.to_string()),
            csv_text(&r.source),
            r.l_wss,
            r.strategy,
            r.elapsed.as_secs_f64()
        )
        .unwrap();
    }
    s
}

fn usable(r: &Row) -> Option<MetricsReport> {
    match r.status {
        Status::Ok | Status::Incomplete => r.metrics,
        _ => None,
    }
}

/// Groups rows by (instance, WSS loss) and summarises each strategy, plus
/// the per-source best strategy, across sources. Ties for the best source
/// go to the first source listed.
pub fn source_summaries(outcome: &Outcome) -> Vec<SourceSummary> {
    let mut groups: BTreeMap<(usize, usize), Vec<&Row>> = BTreeMap::new();
    let l_index = |l: f64| outcome.config.l_wss.iter().position(|&x| x == l).unwrap_or(usize::MAX);
    for r in &outcome.rows {
        groups.entry((r.instance, l_index(r.l_wss))).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((instance, _), rows) in groups {
        let l_wss = rows[0].l_wss;
        let mut sources: Vec<&str> = Vec::new();
        for r in &rows {
            if !sources.contains(&r.source.as_str()) {
                sources.push(&r.source);
            }
        }
        let mut per_strategy: Vec<(String, Vec<Option<MetricsReport>>)> = Vec::new();
        for &strategy in &outcome.config.strategies {
            let values = sources
                .iter()
                .map(|src| rows.iter().find(|r| r.strategy == strategy && r.source == *src).and_then(|r| usable(r)))
                .collect();
            per_strategy.push((strategy.to_string(), values));
        }
        if outcome.config.strategies.len() > 1 {
            let best = (0..sources.len())
                .map(|k| {
                    per_strategy
                        .iter()
                        .filter_map(|(_, v)| v[k])
                        .fold(None, |acc: Option<MetricsReport>, m| match acc {
                            Some(a) if a.min_rate >= m.min_rate => Some(a),
                            _ => Some(m),
                        })
                })
                .collect();
            per_strategy.push((BEST.to_string(), best));
        }
        for (strategy, values) in per_strategy {
            let Some((best_k, best)) = values
                .iter()
                .enumerate()
                .filter_map(|(k, v)| v.map(|m| (k, m)))
                .fold(None, |acc: Option<(usize, MetricsReport)>, (k, m)| match acc {
                    Some(a) if a.1.min_rate >= m.min_rate => Some(a),
                    _ => Some((k, m)),
                })
            else {
                continue;
            };
            let importance = values
                .iter()
                .map(|v| v.map(|m| m.min_rate))
                .collect::<Option<Vec<f64>>>()
                .and_then(|mins| source_importance(&mins).ok());
            out.push(SourceSummary {
                instance,
                l_wss,
                strategy,
                sources: sources.len(),
                best_source: sources[best_k].to_string(),
                maxmin: best.min_rate,
                median_at_best: best.median_rate,
                jain_at_best: best.jain,
                importance,
            });
        }
    }
    out
}

pub fn sources_csv(outcome: &Outcome, summaries: &[SourceSummary]) -> String {
    let mut s = String::new();
    writeln!(s, "{SOURCES_HEADER}").unwrap();
    for x in summaries {
        let inst = &outcome.instances[x.instance];
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            inst.name,
            inst.replication.map_or_else(String::new, |v| v.to_string()),
            inst.seed.map_or_else(String::new, |v| v.to_string()),
            x.l_wss,
            x.strategy,
            x.sources,
            csv_text(&x.best_source),
            x.maxmin,
            x.median_at_best,
            x.jain_at_best,
            opt(x.importance)
        )
        .unwrap();
    }
    s
}

/// Sample mean and normal-approximation 95% half-width.
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    Some((mean, 1.96 * (var / k).sqrt()))
}

/// Cell-level means over replications for Watts-Strogatz grids.
pub fn summary_csv(outcome: &Outcome, summaries: &[SourceSummary]) -> String {
    type Key = (usize, usize, usize, usize, usize, String);
    let mut cells: BTreeMap<Key, (WsCell, f64, Vec<&SourceSummary>)> = BTreeMap::new();
    let TopologySlices { n, k_over_n, beta } = TopologySlices::of(outcome);
    let pos = |list: &[f64], x: f64| list.iter().position(|&y| y == x).unwrap_or(usize::MAX);
    let strategy_rank = |name: &str| {
        outcome.config.strategies.iter().position(|s| s.name() == name).unwrap_or(outcome.config.strategies.len())
    };
    for x in summaries {
        let Some(cell) = outcome.instances[x.instance].cell else { continue };
        let key = (
            n.iter().position(|&v| v == cell.n).unwrap_or(usize::MAX),
            pos(&k_over_n, cell.k_over_n),
            pos(&beta, cell.beta),
            pos(&outcome.config.l_wss, x.l_wss),
            strategy_rank(&x.strategy),
            x.strategy.clone(),
        );
        cells.entry(key).or_insert_with(|| (cell, x.l_wss, Vec::new())).2.push(x);
    }
    let mut s = String::new();
    writeln!(s, "{SUMMARY_HEADER}").unwrap();
    for ((.., strategy), (cell, l_wss, group)) in cells {
        let field = |f: fn(&SourceSummary) -> Option<f64>| {
            let values: Vec<f64> = group.iter().filter_map(|x| f(x)).collect();
            mean_ci95(&values).map_or_else(|| ",".to_string(), |(m, h)| format!("{m},{h}"))
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            cell.n,
            cell.k,
            cell.k_over_n,
            cell.beta,
            l_wss,
            strategy,
            group.len(),
            field(|x| Some(x.maxmin)),
            field(|x| Some(x.median_at_best)),
            field(|x| Some(x.jain_at_best)),
            field(|x| x.importance)
        )
        .unwrap();
    }
    s
}

struct TopologySlices {
    n: Vec<usize>,
    k_over_n: Vec<f64>,
    beta: Vec<f64>,
}

impl TopologySlices {
    fn of(outcome: &Outcome) -> Self {
        match &outcome.config.topology {
            crate::config::TopologySource::WsGrid { n, k_over_n, beta, .. } => {
                Self { n: n.clone(), k_over_n: k_over_n.clone(), beta: beta.clone() }
            }
            _ => Self { n: Vec::new(), k_over_n: Vec::new(), beta: Vec::new() },
        }
    }
}

pub fn manifest(outcome: &Outcome) -> serde_json::Value {
    json!({
        "config_hash": outcome.hash,
        "config": outcome.config,
        "started_unix_s": outcome.started_unix_s,
        "wall_time_s": outcome.wall.as_secs_f64(),
        "workers": outcome.workers,
        "instances": outcome.instances.len(),
        "rows": outcome.rows.len(),
        "k_rounding": outcome.k_rounding,
        "failures": outcome.failures(),
    })
}

/// Writes every result file into `dir`, creating it if needed.
pub fn write_all(outcome: &Outcome, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let summaries = source_summaries(outcome);
    std::fs::write(dir.join("metrics.csv"), metrics_csv(outcome))?;
    std::fs::write(dir.join("sources.csv"), sources_csv(outcome, &summaries))?;
    if outcome.is_ws() {
        std::fs::write(dir.join("summary.csv"), summary_csv(outcome, &summaries))?;
    }
    std::fs::write(dir.join("timings.csv"), timings_csv(outcome))?;
    let text = serde_json::to_string_pretty(&manifest(outcome)).map_err(io::Error::other)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_of_constant_values_is_zero() {
        assert_eq!(mean_ci95(&[2.0, 2.0, 2.0]), Some((2.0, 0.0)));
        assert_eq!(mean_ci95(&[]), None);
        let (m, h) = mean_ci95(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((h - 1.96).abs() < 1e-12);
    }

    #[test]
    fn text_fields_are_quoted() {
        assert_eq!(csv_text("a,b"), "\"a,b\"");
        assert_eq!(csv_text("plain"), "plain");
    }
}
