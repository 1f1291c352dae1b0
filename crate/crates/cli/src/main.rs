//! placelab: build simulated data centers, run placement experiments,
//! sweep one parameter at a time and cross-check the greedy search
//! against the exhaustive oracle.
//!
//! Exit status: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures.

mod config;
mod oracle_check;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::{Effective, ExperimentArgs, Failure};
use placelab_core::sim::{self, report, MetricsSummary, SweepParameter, SweepPoint};
use placelab_core::topology::DataCenterTopology;
use placelab_core::workload::generate_trace;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Debug, Parser)]
#[command(
    name = "placelab",
    version,
    about = "Placement experiments for composite applications on simulated data centers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a data center and print its composition
    BuildDc(BuildDcArgs),
    /// Run a scenario and report per-algorithm metrics
    Run(RunArgs),
    /// Run the scenario once per value of one varied parameter
    Sweep(SweepArgs),
    /// Compare the greedy search against the exhaustive oracle on toy instances
    OracleCheck(oracle_check::OracleCheckArgs),
}

#[derive(Debug, Args)]
struct BuildDcArgs {
    /// Physical machine count (a positive multiple of 36)
    #[arg(long)]
    n: usize,

    /// Distance factor scaling all inter-node distances
    #[arg(long, default_value_t = 2.0)]
    df: f64,

    /// Write the topology as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,

    /// Write repetition 0's event trace as JSONL to this path
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,

    /// Varied axis: n, mean, mean-com, mean-str, mean-vlbw, sd, sd-vlbw or df
    #[arg(long)]
    param: String,

    /// Comma-separated values for the varied axis
    #[arg(long)]
    values: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildDc(args) => cmd_build_dc(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::OracleCheck(args) => oracle_check::cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_build_dc(args: BuildDcArgs) -> Result<(), Failure> {
    let dc = DataCenterTopology::build(args.n, args.df).map_err(Failure::usage)?;
    let census = dc.census();
    println!("topology n={} df={}", dc.n(), dc.df());
    println!(
        "  servers {}, high-end storage {}, regular storage {}",
        census.servers, census.high_end_storage, census.regular_storage
    );
    println!(
        "  switches: core {}, aggregation {}, compute access {}, storage access {}",
        census.core_switches,
        census.aggregation_switches,
        census.compute_access_switches,
        census.storage_access_switches
    );
    println!(
        "  compute facets {}, storage facets {}",
        census.compute_facets, census.storage_facets
    );
    println!("  nodes {}, edges {}", census.nodes, census.edges);
    if let Some(path) = &args.out {
        let file = create(path)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &dc.to_document())
            .map_err(|e| Failure::runtime(anyhow::Error::new(e)))?;
        writeln!(w).and_then(|()| w.flush()).map_err(Failure::io(path))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let eff = config::effective(&args.experiment)?;
    configure_jobs(eff.jobs)?;
    announce_seed(&eff);
    let summary = sim::run(&eff.config).map_err(Failure::usage)?;
    match &eff.out {
        Some(base) => {
            write_file(&suffixed(base, ".csv"), |w| report::write_run_csv(w, &summary))?;
            write_file(&suffixed(base, ".json"), |w| report::write_run_json(w, &summary))?;
            print_run_table(&summary);
        }
        None => {
            report::write_run_csv(io::stdout().lock(), &summary)
                .map_err(Failure::io(Path::new("stdout")))?;
        }
    }
    if let Some(path) = args.trace_out.as_ref().or(eff.trace_out.as_ref()) {
        write_rep0_trace(path, &summary)?;
    }
    fail_on_audit_violations([&summary])
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let parameter = SweepParameter::from_str(&args.param)
        .map_err(|e| Failure::Usage(anyhow::anyhow!(e)))?;
    let values = parse_values(&args.values)?;
    let eff = config::effective(&args.experiment)?;
    configure_jobs(eff.jobs)?;
    announce_seed(&eff);
    let points = sim::sweep(&eff.config, parameter, &values).map_err(Failure::usage)?;
    match &eff.out {
        Some(base) => {
            write_file(&suffixed(base, ".csv"), |w| {
                report::write_sweep_csv(w, parameter, &points)
            })?;
            write_file(&suffixed(base, ".json"), |w| {
                report::write_sweep_json(w, parameter, &points)
            })?;
            print_sweep_table(parameter, &points);
        }
        None => {
            report::write_sweep_csv(io::stdout().lock(), parameter, &points)
                .map_err(Failure::io(Path::new("stdout")))?;
        }
    }
    fail_on_audit_violations(points.iter().map(|p| &p.summary))
}

/// Limits the repetition worker pool; by default rayon uses every core.
fn configure_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    let Some(jobs) = jobs else { return Ok(()) };
    if jobs == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--jobs must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Failure::runtime(anyhow::Error::new(e)))
}

fn announce_seed(eff: &Effective) {
    if eff.seed_generated {
        eprintln!("master seed: {}", eff.config.master_seed);
    }
}

fn parse_values(raw: &str) -> Result<Vec<f64>, Failure> {
    let values: Vec<f64> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Usage(anyhow::anyhow!("bad value {s:?} in --values: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(Failure::Usage(anyhow::anyhow!("--values needs at least one value")));
    }
    Ok(values)
}

/// `BASE` becomes `BASE.csv` and `BASE.json`; an extension on the base is
/// kept, not replaced.
fn suffixed(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(ext);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<File, Failure> {
    File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(Failure::Runtime)
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), Failure> {
    let mut w = BufWriter::new(create(path)?);
    write(&mut w).and_then(|()| w.flush()).map_err(Failure::io(path))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// The trace of any repetition is a pure function of the configuration, so
/// repetition 0's is regenerated rather than captured during the run.
fn write_rep0_trace(path: &Path, summary: &MetricsSummary) -> Result<(), Failure> {
    let events = summary.rep_events.first().copied().unwrap_or(0) as usize;
    let trace = generate_trace(
        summary.config.demands,
        summary.config.enterprise_fraction,
        events,
        sim::trace_rng(summary.config.master_seed, 0),
    );
    let mut w = BufWriter::new(create(path)?);
    trace
        .write_jsonl(&mut w)
        .map_err(|e| Failure::runtime(anyhow::Error::new(e)))?;
    w.flush().map_err(Failure::io(path))?;
    eprintln!("wrote {} ({events} events)", path.display());
    Ok(())
}

fn print_run_table(summary: &MetricsSummary) {
    let cfg = &summary.config;
    println!(
        "{} scenario, n {}, df {}, {} repetitions, seed {}",
        cfg.scenario, cfg.n, cfg.df, cfg.repetitions, cfg.master_seed
    );
    println!("{}", table_header());
    for am in &summary.per_algorithm {
        println!("{}", table_row(am));
    }
}

fn print_sweep_table(parameter: SweepParameter, points: &[SweepPoint]) {
    println!("sweep over {parameter}: {} points", points.len());
    println!("{:>10}  {}", parameter.name(), table_header());
    for point in points {
        for am in &point.summary.per_algorithm {
            println!("{:>10}  {}", point.value, table_row(am));
        }
    }
}

fn table_header() -> String {
    format!(
        "{:<5}  {:>9}  {:>9}  {:>9}  {:>6}  {:>17}",
        "algo", "deploys", "events", "cost", "ntpp", "util acc/agg/core"
    )
}

fn table_row(am: &sim::AlgorithmMetrics) -> String {
    format!(
        "{:<5}  {:>9.2}  {:>9.1}  {:>9.4}  {:>6.2}  {:>5.3}/{:.3}/{:.3}",
        am.algorithm.name(),
        am.deploy_count.mean(),
        am.events_survived.mean(),
        am.cost.mean(),
        am.ntpp.mean(),
        am.utilization.access.mean(),
        am.utilization.aggregation.mean(),
        am.utilization.core.mean()
    )
}

/// The audit tallies violations instead of aborting mid-run; surfacing them
/// as a failed exit keeps broken books from passing unnoticed in scripts.
fn fail_on_audit_violations<'a>(
    summaries: impl IntoIterator<Item = &'a MetricsSummary>,
) -> Result<(), Failure> {
    let total: u64 = summaries
        .into_iter()
        .flat_map(|s| &s.per_algorithm)
        .map(|am| am.audit_violations)
        .sum();
    if total > 0 {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "audit found {total} bookkeeping violations; see the JSON report"
        )));
    }
    Ok(())
}
