use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use eprnet_cli::config::ExperimentConfig;
use eprnet_cli::output::write_all;
use eprnet_cli::plot::{plot, PlotKind};
use eprnet_cli::runner::{run, workers_from_env};
use eprnet_core::allocation::{ExactOptions, StrategyOptions};
use eprnet_core::netgraph::{expand, LossParams};
use eprnet_core::routing::route_all;
use eprnet_core::spectrum::{
    calibrate_rep_rate, channel_rates, scaled_plan, ChannelGeometry, SourceParams, REFERENCE_NODES, REFERENCE_PEAK_RATE,
};
use eprnet_core::topology::{load_ilec, load_topology};
use eprnet_core::{pair_count, AllocError, Strategy, Topology};

#[derive(Parser)]
#[command(name = "eprnet", version, about = "Routing and spectrum allocation for entanglement distribution networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-channel EPR-pair rates of the source as CSV.
    Spectrum {
        /// Re-channelize for a network of this many nodes.
        #[arg(long)]
        nodes: Option<usize>,
        /// Rate of the strongest channel, pairs/s.
        #[arg(long, default_value_t = REFERENCE_PEAK_RATE)]
        peak_rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum-loss disjoint light-path pairs from a source to every node pair.
    Route {
        #[command(flatten)]
        net: NetArgs,
        /// Also write the expanded port-level graph as an edge list.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Routes, then splits the channels among node pairs.
    Allocate {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value = "modified_lpt")]
        strategy: String,
        #[arg(long, default_value_t = 1.0)]
        first_fit_scale: f64,
        /// Time limit for the exact solver, seconds.
        #[arg(long, default_value_t = 10.0)]
        exact_budget: f64,
        /// Allocation CSV path; the JSON summary goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs an experiment described by a JSON config.
    Experiment {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to EPRNET_WORKERS or the core count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// SVG figures from an experiment's result directory.
    Plot {
        results: PathBuf,
        /// minrate, median, jain, importance or all.
        #[arg(long, default_value = "all")]
        kind: String,
        /// Defaults to `<results>/plots`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct NetArgs {
    /// `ilec` or a topology JSON file.
    #[arg(long, default_value = "ilec")]
    topology: String,
    /// Source node label; defaults to the file's source.
    #[arg(long)]
    source: Option<String>,
    #[arg(long, default_value_t = 4.0)]
    l_wss: f64,
    #[arg(long, default_value_t = 0.0)]
    memory_loss: f64,
    /// Allow a photon to leave on the fiber it arrived on.
    #[arg(long)]
    uturns: bool,
}

/// Failure category, mapped to the process exit code.
enum Failure {
    Usage(String),
    Partial(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_net(net: &NetArgs) -> Result<(Topology, usize), Failure> {
    let topology = if net.topology == "ilec" { load_ilec() } else { load_topology(&net.topology)? };
    let source = match &net.source {
        Some(label) => {
            topology.node_index(label).ok_or_else(|| Failure::Usage(format!("no node labelled {label:?}")))?
        }
        None => topology.source().ok_or_else(|| Failure::Usage("no --source given and the topology names none".into()))?,
    };
    Ok((topology, source))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum { nodes, peak_rate, out } => {
            let mut params = SourceParams::table_defaults();
            let geometry = ChannelGeometry::reference();
            params.rep_rate = calibrate_rep_rate(&params, &geometry, peak_rate)?;
            let mut plan = channel_rates(&params, &geometry)?;
            if let Some(n) = nodes {
                plan = scaled_plan(&params, &plan, pair_count(REFERENCE_NODES), n)?;
            }
            let mut w = sink(out.as_deref())?;
            plan.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Route { net, graph, out } => {
            let (topology, source) = load_net(&net)?;
            let params = LossParams { l_wss_db: net.l_wss, memory_loss_db: net.memory_loss, include_uturns: net.uturns };
            let g = expand(&topology, source, params)?;
            if let Some(path) = graph {
                std::fs::write(path, g.edge_list())?;
            }
            let table = route_all(&g, &topology)?;
            let mut w = sink(out.as_deref())?;
            table.write_csv(&g, &mut w)?;
            w.flush()?;
        }
        Command::Allocate { net, strategy, first_fit_scale, exact_budget, out } => {
            let strategy: Strategy = strategy.parse()?;
            if !(exact_budget.is_finite() && exact_budget > 0.0) {
                return Err(Failure::Usage(format!("exact budget {exact_budget} must be positive")));
            }
            let (topology, source) = load_net(&net)?;
            let params = LossParams { l_wss_db: net.l_wss, memory_loss_db: net.memory_loss, include_uturns: net.uturns };
            let g = expand(&topology, source, params)?;
            let table = route_all(&g, &topology)?;
            let plan = eprnet_core::spectrum::ChannelPlan::reference()?;
            let rates = if pair_count(topology.len()) <= plan.len() {
                plan.rates
            } else {
                let mut p = SourceParams::table_defaults();
                p.rep_rate = calibrate_rep_rate(&p, &plan.geometry, REFERENCE_PEAK_RATE)?;
                scaled_plan(&p, &plan, pair_count(REFERENCE_NODES), topology.len())?.rates
            };
            let options = StrategyOptions {
                first_fit_scale,
                exact: ExactOptions { budget: Duration::from_secs_f64(exact_budget), shuffle_seed: None },
            };
            let (result, partial) = match strategy.run(&table.lambda, &rates, &options) {
                Ok(r) => (r, None),
                Err(AllocError::Incomplete { best, bound }) => {
                    (*best, Some(format!("exact search stopped at the time limit; upper bound {bound}")))
                }
                Err(e) => return Err(e.into()),
            };
            let names: Vec<String> = table
                .routes
                .iter()
                .map(|r| format!("{}-{}", topology.label(r.pair.0), topology.label(r.pair.1)))
                .collect();
            if let Some(path) = out {
                let mut w = BufWriter::new(File::create(path)?);
                result.allocation.write_csv(&table.lambda, &rates, Some(&names), &mut w)?;
                w.flush()?;
            }
            println!("{}", result.to_json());
            if let Some(msg) = partial {
                return Err(Failure::Partial(msg));
            }
        }
        Command::Experiment { config, out, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let outcome = run(&cfg, workers.unwrap_or_else(workers_from_env))?;
            write_all(&outcome, &dir)?;
            let failures = outcome.failures();
            eprintln!("{} rows written to {} in {:.1} s", outcome.rows.len(), dir.display(), outcome.wall.as_secs_f64());
            if !failures.is_empty() {
                let mut msg = format!("{} cells did not complete:", failures.len());
                for f in &failures {
                    msg.push_str("\n  ");
                    msg.push_str(f);
                }
                return Err(Failure::Partial(msg));
            }
        }
        Command::Plot { results, kind, out } => {
            let kinds = if kind == "all" { PlotKind::ALL.to_vec() } else { vec![kind.parse::<PlotKind>()?] };
            let dir = out.unwrap_or_else(|| results.join("plots"));
            let mut stdout = io::stdout().lock();
            for k in kinds {
                for path in plot(&results, k, &dir)? {
                    writeln!(stdout, "{}", path.display())?;
                }
            }
        }
    }
    Ok(())
}
