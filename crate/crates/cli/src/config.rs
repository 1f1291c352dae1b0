//! Configuration assembly: experiment defaults, then the JSON config file,
//! then command-line flags, later layers overriding earlier ones. The
//! merged result must pass the library's own validation before a run
//! starts.

use anyhow::{anyhow, Context};
use clap::Args;
use placelab_core::placement::Algorithm;
use placelab_core::sim::{AuditPolicy, Scenario, ScenarioConfig};
use placelab_core::workload::DemandParams;
use serde::Deserialize;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Failed command, split by exit status: usage and configuration mistakes
/// exit 2, everything else 1.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Failure::Usage(e.into())
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Failure::Runtime(e.into())
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
        move |e| {
            Failure::Runtime(
                anyhow::Error::new(e).context(format!("writing {}", path.display())),
            )
        }
    }
}

/// Flags shared by `run` and `sweep`.
#[derive(Debug, Default, Args)]
pub struct ExperimentArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// group or individual
    #[arg(long)]
    pub scenario: Option<String>,

    /// Comma-separated algorithms: ndap, nva, ffd
    #[arg(long)]
    pub algos: Option<String>,

    /// Physical machine count (a positive multiple of 36)
    #[arg(long)]
    pub n: Option<usize>,

    /// Distance factor scaling all inter-node distances
    #[arg(long)]
    pub df: Option<f64>,

    /// Repetitions per experiment
    #[arg(long)]
    pub reps: Option<usize>,

    /// Master seed; when omitted one is generated and printed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for repetitions (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Mean of VM cpu and memory demands
    #[arg(long)]
    pub mean_com: Option<f64>,

    /// Mean of data block storage demands
    #[arg(long)]
    pub mean_str: Option<f64>,

    /// Mean of virtual link bandwidths
    #[arg(long)]
    pub mean_vlbw: Option<f64>,

    /// Shared standard deviation of all demand draws
    #[arg(long)]
    pub sd: Option<f64>,

    /// Standard deviation override for cpu, memory and storage draws
    #[arg(long)]
    pub sd_com_str: Option<f64>,

    /// Standard deviation override for bandwidth draws
    #[arg(long)]
    pub sd_vlbw: Option<f64>,

    /// Output base path; writes BASE.csv and BASE.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The config file mirrors the scenario configuration, one JSON object,
/// every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<String>,
    algorithms: Option<Vec<String>>,
    n: Option<usize>,
    df: Option<f64>,
    mean_com: Option<f64>,
    mean_str: Option<f64>,
    mean_vlbw: Option<f64>,
    sd: Option<f64>,
    sd_com_str: Option<f64>,
    sd_vlbw: Option<f64>,
    repetitions: Option<usize>,
    master_seed: Option<u64>,
    enterprise_fraction: Option<f64>,
    audit: Option<String>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    trace_out: Option<PathBuf>,
}

/// Everything a run or sweep needs after merging.
#[derive(Debug)]
pub struct Effective {
    pub config: ScenarioConfig,
    pub seed_generated: bool,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
}

pub fn effective(args: &ExperimentArgs) -> Result<Effective, Failure> {
    let file = match &args.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    merge(file, args)
}

fn read_file_config(path: &Path) -> Result<FileConfig, Failure> {
    let open = File::open(path).with_context(|| format!("opening {}", path.display()));
    let file = open.map_err(Failure::Usage)?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Usage)
}

fn merge(file: FileConfig, args: &ExperimentArgs) -> Result<Effective, Failure> {
    let scenario = parsed(args.scenario.as_deref(), file.scenario.as_deref())?
        .unwrap_or(Scenario::Group);
    let algorithms = match (&args.algos, &file.algorithms) {
        (Some(flag), _) => parse_algorithms(flag.split(','))?,
        (None, Some(names)) => parse_algorithms(names.iter().map(String::as_str))?,
        (None, None) => placelab_core::placement::ALL_ALGORITHMS.to_vec(),
    };
    let (master_seed, seed_generated) = match args.seed.or(file.master_seed) {
        Some(seed) => (seed, false),
        None => (rand::random(), true),
    };

    let mut config = ScenarioConfig::new(scenario, algorithms, master_seed);
    if let Some(n) = args.n.or(file.n) {
        config.n = n;
    }
    if let Some(df) = args.df.or(file.df) {
        config.df = df;
    }
    if let Some(reps) = args.reps.or(file.repetitions) {
        config.repetitions = reps;
    }
    if let Some(fraction) = file.enterprise_fraction {
        config.enterprise_fraction = fraction;
    }
    if let Some(audit) = parsed::<AuditPolicy>(None, file.audit.as_deref())? {
        config.audit = audit;
    }
    config.demands = merge_demands(&file, args);
    config.validate().map_err(Failure::usage)?;

    Ok(Effective {
        config,
        seed_generated,
        jobs: args.jobs.or(file.jobs),
        out: args.out.clone().or(file.out),
        trace_out: file.trace_out,
    })
}

fn merge_demands(file: &FileConfig, args: &ExperimentArgs) -> DemandParams {
    let mut d = DemandParams::default();
    if let Some(v) = args.mean_com.or(file.mean_com) {
        d.mean_com = v;
    }
    if let Some(v) = args.mean_str.or(file.mean_str) {
        d.mean_str = v;
    }
    if let Some(v) = args.mean_vlbw.or(file.mean_vlbw) {
        d.mean_vlbw = v;
    }
    if let Some(v) = args.sd.or(file.sd) {
        d.sd = v;
    }
    if let Some(v) = args.sd_com_str.or(file.sd_com_str) {
        d.sd_com_str = Some(v);
    }
    if let Some(v) = args.sd_vlbw.or(file.sd_vlbw) {
        d.sd_vlbw = Some(v);
    }
    d
}

/// Flag beats file; both are parsed with the library's own readers so the
/// accepted spellings match everywhere.
fn parsed<T: FromStr>(flag: Option<&str>, file: Option<&str>) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    flag.or(file)
        .map(|s| T::from_str(s).map_err(|e| Failure::Usage(anyhow!("{e}"))))
        .transpose()
}

fn parse_algorithms<'a>(
    names: impl Iterator<Item = &'a str>,
) -> Result<Vec<Algorithm>, Failure> {
    names
        .map(|name| {
            Algorithm::from_str(name.trim()).map_err(|e| Failure::Usage(anyhow!("{e}")))
        })
        .collect()
}
