//! Experiment runner: repeated trace-driven scenarios over fresh data
//! centers, aggregated into summary statistics.
//!
//! Two scenarios. Group runs every algorithm in lockstep on the same trace
//! against its own copy of the data center and halts the repetition at the
//! first event any algorithm fails, rolling that event back everywhere so
//! all algorithms end having served exactly the same deployments. Individual
//! lets each algorithm run alone until its own first failure and reports how
//! many deployments it survived.
//!
//! Each repetition draws its trace and its algorithm randomness from
//! dedicated ChaCha streams of the master seed, so repetitions are
//! independent of each other and of the parallel schedule: a summary is a
//! pure function of the configuration. Decision timings are the one
//! exception, which is why [`MetricsSummary::zeroed_timings`] exists.

pub mod report;

use crate::model::{DeploySummary, PlacementState, PAIR_BANDWIDTH};
use crate::placement::{place, Algorithm, PlacementOutcome};
use crate::topology::{DataCenterTopology, SwitchLayer, TopologyError};
use crate::workload::{DemandParams, TraceEvent, TraceGenerator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "placelab.results.v1";

/// Upper bound on events per repetition, a safeguard against traces that
/// never saturate the data center.
pub const EVENT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Group,
    Individual,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Group => "group",
            Scenario::Individual => "individual",
        })
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "group" => Ok(Scenario::Group),
            "individual" => Ok(Scenario::Individual),
            other => Err(format!(
                "unknown scenario {other:?} (expected group or individual)"
            )),
        }
    }
}

/// How often each algorithm's books are recounted from scratch during a
/// repetition. Violations are tallied, never fatal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditPolicy {
    EveryEvent,
    AtHalt,
    Off,
}

impl fmt::Display for AuditPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditPolicy::EveryEvent => "every-event",
            AuditPolicy::AtHalt => "at-halt",
            AuditPolicy::Off => "off",
        })
    }
}

impl FromStr for AuditPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "every-event" => Ok(AuditPolicy::EveryEvent),
            "at-halt" => Ok(AuditPolicy::AtHalt),
            "off" => Ok(AuditPolicy::Off),
            other => Err(format!(
                "unknown audit policy {other:?} (expected every-event, at-halt or off)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Physical machine count; must be a positive multiple of 36.
    pub n: usize,
    /// Distance factor scaling all inter-node distances.
    pub df: f64,
    pub demands: DemandParams,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub master_seed: u64,
    /// Fraction of deployments drawn from the three-tier template.
    pub enterprise_fraction: f64,
    pub audit: AuditPolicy,
}

impl ScenarioConfig {
    /// Experiment defaults; scenario, algorithms and seed still to choose.
    pub fn new(scenario: Scenario, algorithms: Vec<Algorithm>, master_seed: u64) -> Self {
        Self {
            scenario,
            n: 144,
            df: 2.0,
            demands: DemandParams::default(),
            algorithms,
            repetitions: 1000,
            master_seed,
            enterprise_fraction: 0.8,
            audit: AuditPolicy::EveryEvent,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.algorithms.is_empty() {
            return Err(ConfigError::NoAlgorithms);
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(ConfigError::DuplicateAlgorithm(*a));
            }
        }
        if self.scenario == Scenario::Group && self.algorithms.len() < 2 {
            return Err(ConfigError::GroupNeedsTwo);
        }
        if self.repetitions == 0 {
            return Err(ConfigError::NoRepetitions);
        }
        if !(0.0..=1.0).contains(&self.enterprise_fraction) {
            return Err(ConfigError::EnterpriseFraction(self.enterprise_fraction));
        }
        self.demands.validate().map_err(ConfigError::Demands)?;
        DataCenterTopology::build(self.n, self.df)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("no algorithms selected")]
    NoAlgorithms,
    #[error("algorithm {0} listed twice")]
    DuplicateAlgorithm(Algorithm),
    #[error("the group scenario compares algorithms; select at least two")]
    GroupNeedsTwo,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("enterprise fraction must lie in [0, 1], got {0}")]
    EnterpriseFraction(f64),
    #[error("invalid demand parameters: {0}")]
    Demands(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("sweep value {value} is not a positive whole number for {parameter}")]
    NonIntegralSweepValue { parameter: SweepParameter, value: f64 },
}

/// Streaming accumulator: count, sum, sum of squares and range. Merging two
/// accumulators equals accumulating their samples in sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub count: u64,
    pub sum: f64,
    pub sumsq: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Stat {
    pub fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sumsq += x * x;
        self.min = Some(self.min.map_or(x, |m| m.min(x)));
        self.max = Some(self.max.map_or(x, |m| m.max(x)));
    }

    pub fn merge(&mut self, other: &Stat) {
        self.count += other.count;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        self.min = match (self.min, other.min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max = match (self.max, other.max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Sample standard deviation; 0 with fewer than two samples.
    pub fn sd(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = (self.sumsq - self.sum * self.sum / n) / (n - 1.0);
        var.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerUtilization {
    pub access: Stat,
    pub aggregation: Stat,
    pub core: Stat,
}

/// Aggregates for one algorithm across all repetitions. `cost`, `ntpp` and
/// `decision_seconds` pool per-deployment samples; `deploy_count`,
/// `events_survived` and the utilizations hold one sample per repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmMetrics {
    pub algorithm: Algorithm,
    pub deploy_count: Stat,
    pub events_survived: Stat,
    pub cost: Stat,
    pub ntpp: Stat,
    pub decision_seconds: Stat,
    pub utilization: LayerUtilization,
    pub audit_violations: u64,
}

impl AlgorithmMetrics {
    fn empty(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            deploy_count: Stat::default(),
            events_survived: Stat::default(),
            cost: Stat::default(),
            ntpp: Stat::default(),
            decision_seconds: Stat::default(),
            utilization: LayerUtilization::default(),
            audit_violations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub schema: String,
    pub config: ScenarioConfig,
    pub per_algorithm: Vec<AlgorithmMetrics>,
    /// Events materialised per repetition; lets the trace of any repetition
    /// be regenerated from the master seed alone.
    pub rep_events: Vec<u64>,
}

impl MetricsSummary {
    /// Copy with wall-clock timings blanked, for bit-exact comparisons.
    pub fn zeroed_timings(&self) -> Self {
        let mut out = self.clone();
        for am in &mut out.per_algorithm {
            am.decision_seconds = Stat::default();
        }
        out
    }

    pub fn algorithm(&self, a: Algorithm) -> Option<&AlgorithmMetrics> {
        self.per_algorithm.iter().find(|m| m.algorithm == a)
    }
}

/// RNG seeded from the master seed on a dedicated stream. Stream 8r+1 drives
/// repetition r's trace and streams 8r+2+i its algorithms, so traces and
/// placement randomness never alias across repetitions.
fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// The RNG that generated repetition `rep`'s trace.
pub fn trace_rng(master_seed: u64, rep: u64) -> ChaCha8Rng {
    stream_rng(master_seed, rep * 8 + 1)
}

fn algorithm_rng(master_seed: u64, rep: u64, index: usize) -> ChaCha8Rng {
    stream_rng(master_seed, rep * 8 + 2 + index as u64)
}

struct RepAlgo {
    deploys: u64,
    events_survived: u64,
    cost: Stat,
    ntpp: Stat,
    decision: Stat,
    utilization: [f64; 3],
    audit_violations: u64,
}

impl RepAlgo {
    fn new() -> Self {
        Self {
            deploys: 0,
            events_survived: 0,
            cost: Stat::default(),
            ntpp: Stat::default(),
            decision: Stat::default(),
            utilization: [0.0; 3],
            audit_violations: 0,
        }
    }

    fn record_deploy(&mut self, summary: &DeploySummary) {
        self.deploys += 1;
        self.cost.add(summary.total_cost);
        self.ntpp.add(summary.ntpp_links as f64);
    }
}

struct RepResult {
    per_algo: Vec<RepAlgo>,
    events_generated: u64,
}

fn audit_tally(st: &PlacementState) -> u64 {
    u64::from(st.audit().is_err())
}

/// Mean utilization per switch layer: traversing reserved traffic over
/// switch capacity (degree times the pair bandwidth), averaged over every
/// switch of the layer. A switch carrying more than its capacity reads as
/// fully utilized, so each sample stays inside the unit interval.
fn layer_utilization(st: &PlacementState) -> [f64; 3] {
    let dc = st.topology();
    let traffic = st.switch_traffic();
    let mut sums = [0.0f64; 3];
    let mut counts = [0u64; 3];
    for (node, layer) in dc.switches() {
        let capacity = dc.degree(node) as f64 * PAIR_BANDWIDTH;
        let load = traffic.get(&node).copied().unwrap_or(0.0);
        let i = match layer {
            SwitchLayer::Access => 0,
            SwitchLayer::Aggregation => 1,
            SwitchLayer::Core => 2,
        };
        sums[i] += (load / capacity).min(1.0);
        counts[i] += 1;
    }
    let mut out = [0.0; 3];
    for i in 0..3 {
        if counts[i] > 0 {
            out[i] = sums[i] / counts[i] as f64;
        }
    }
    out
}

fn timed_place(
    algorithm: Algorithm,
    st: &mut PlacementState,
    id: &str,
    ae: &crate::model::ApplicationEnvironment,
    rng: &mut ChaCha8Rng,
    decision: &mut Stat,
) -> PlacementOutcome {
    let t0 = Instant::now();
    let outcome =
        place(algorithm, st, id, ae, rng, None).expect("generated workloads never misuse state");
    decision.add(t0.elapsed().as_secs_f64());
    outcome
}

fn run_group_rep(config: &ScenarioConfig, dc: &Arc<DataCenterTopology>, rep: u64) -> RepResult {
    let mut gen = TraceGenerator::new(
        config.demands,
        config.enterprise_fraction,
        trace_rng(config.master_seed, rep),
    );
    let mut states: Vec<PlacementState> = config
        .algorithms
        .iter()
        .map(|_| PlacementState::new(Arc::clone(dc)))
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..config.algorithms.len())
        .map(|i| algorithm_rng(config.master_seed, rep, i))
        .collect();
    let mut per: Vec<RepAlgo> = config.algorithms.iter().map(|_| RepAlgo::new()).collect();

    let mut event_index = 0usize;
    while event_index < EVENT_CAP {
        let ev = gen.event(event_index).clone();
        let mut halted = false;
        match ev {
            TraceEvent::Deploy { id, ae } => {
                let ae = ae.build().expect("generated AEs are valid");
                let outcomes: Vec<Option<DeploySummary>> = config
                    .algorithms
                    .iter()
                    .enumerate()
                    .map(|(i, &alg)| {
                        match timed_place(
                            alg,
                            &mut states[i],
                            &id,
                            &ae,
                            &mut rngs[i],
                            &mut per[i].decision,
                        ) {
                            PlacementOutcome::Placed(s) => Some(s),
                            PlacementOutcome::Infeasible => None,
                        }
                    })
                    .collect();
                if outcomes.iter().all(Option::is_some) {
                    for (p, s) in per.iter_mut().zip(&outcomes) {
                        p.record_deploy(s.as_ref().unwrap());
                    }
                } else {
                    // the halting event must not count anywhere, so the
                    // algorithms that did place it take it back
                    for (i, outcome) in outcomes.iter().enumerate() {
                        if outcome.is_some() {
                            states[i]
                                .terminate_deployment(&id)
                                .expect("just placed under this id");
                        }
                    }
                    halted = true;
                }
            }
            TraceEvent::Terminate { id } => {
                for st in &mut states {
                    st.terminate_deployment(&id)
                        .expect("lockstep keeps every live id deployed everywhere");
                }
            }
        }
        if config.audit == AuditPolicy::EveryEvent {
            for (p, st) in per.iter_mut().zip(&states) {
                p.audit_violations += audit_tally(st);
            }
        }
        if halted {
            break;
        }
        event_index += 1;
    }

    for (p, st) in per.iter_mut().zip(&states) {
        p.events_survived = event_index as u64;
        if config.audit == AuditPolicy::AtHalt {
            p.audit_violations += audit_tally(st);
        }
        p.utilization = layer_utilization(st);
    }
    RepResult {
        per_algo: per,
        events_generated: gen.generated().len() as u64,
    }
}

fn run_individual_rep(
    config: &ScenarioConfig,
    dc: &Arc<DataCenterTopology>,
    rep: u64,
) -> RepResult {
    let mut gen = TraceGenerator::new(
        config.demands,
        config.enterprise_fraction,
        trace_rng(config.master_seed, rep),
    );
    let mut per = Vec::with_capacity(config.algorithms.len());
    for (i, &alg) in config.algorithms.iter().enumerate() {
        let mut st = PlacementState::new(Arc::clone(dc));
        let mut rng = algorithm_rng(config.master_seed, rep, i);
        let mut p = RepAlgo::new();
        let mut event_index = 0usize;
        while event_index < EVENT_CAP {
            let ev = gen.event(event_index).clone();
            let mut halted = false;
            match ev {
                TraceEvent::Deploy { id, ae } => {
                    let ae = ae.build().expect("generated AEs are valid");
                    match timed_place(alg, &mut st, &id, &ae, &mut rng, &mut p.decision) {
                        PlacementOutcome::Placed(s) => p.record_deploy(&s),
                        PlacementOutcome::Infeasible => halted = true,
                    }
                }
                TraceEvent::Terminate { id } => {
                    st.terminate_deployment(&id)
                        .expect("every id deployed before the first failure is live");
                }
            }
            if config.audit == AuditPolicy::EveryEvent {
                p.audit_violations += audit_tally(&st);
            }
            if halted {
                break;
            }
            event_index += 1;
        }
        p.events_survived = event_index as u64;
        if config.audit == AuditPolicy::AtHalt {
            p.audit_violations += audit_tally(&st);
        }
        p.utilization = layer_utilization(&st);
        per.push(p);
    }
    RepResult {
        per_algo: per,
        events_generated: gen.generated().len() as u64,
    }
}

/// Runs the configured scenario over all repetitions (in parallel) and
/// aggregates. Everything except the decision timings is a deterministic
/// function of the configuration.
pub fn run(config: &ScenarioConfig) -> Result<MetricsSummary, ConfigError> {
    config.validate()?;
    let dc = Arc::new(DataCenterTopology::build(config.n, config.df)?);
    let rep_results: Vec<RepResult> = (0..config.repetitions as u64)
        .into_par_iter()
        .map(|rep| match config.scenario {
            Scenario::Group => run_group_rep(config, &dc, rep),
            Scenario::Individual => run_individual_rep(config, &dc, rep),
        })
        .collect();

    let mut per_algorithm: Vec<AlgorithmMetrics> = config
        .algorithms
        .iter()
        .map(|&a| AlgorithmMetrics::empty(a))
        .collect();
    let mut rep_events = Vec::with_capacity(rep_results.len());
    for rr in &rep_results {
        rep_events.push(rr.events_generated);
        for (am, ra) in per_algorithm.iter_mut().zip(&rr.per_algo) {
            am.deploy_count.add(ra.deploys as f64);
            am.events_survived.add(ra.events_survived as f64);
            am.cost.merge(&ra.cost);
            am.ntpp.merge(&ra.ntpp);
            am.decision_seconds.merge(&ra.decision);
            am.utilization.access.add(ra.utilization[0]);
            am.utilization.aggregation.add(ra.utilization[1]);
            am.utilization.core.add(ra.utilization[2]);
            am.audit_violations += ra.audit_violations;
        }
    }
    Ok(MetricsSummary {
        schema: SCHEMA_VERSION.to_string(),
        config: config.clone(),
        per_algorithm,
        rep_events,
    })
}

/// The axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    N,
    /// All three demand means together.
    Mean,
    MeanCom,
    MeanStr,
    MeanVlbw,
    Sd,
    SdVlbw,
    Df,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::N => "n",
            SweepParameter::Mean => "mean",
            SweepParameter::MeanCom => "mean-com",
            SweepParameter::MeanStr => "mean-str",
            SweepParameter::MeanVlbw => "mean-vlbw",
            SweepParameter::Sd => "sd",
            SweepParameter::SdVlbw => "sd-vlbw",
            SweepParameter::Df => "df",
        }
    }

    fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = base.clone();
        match self {
            SweepParameter::N => {
                if value <= 0.0 || value.fract() != 0.0 {
                    return Err(ConfigError::NonIntegralSweepValue {
                        parameter: self,
                        value,
                    });
                }
                cfg.n = value as usize;
            }
            SweepParameter::Mean => cfg.demands = cfg.demands.with_homogeneous_mean(value),
            SweepParameter::MeanCom => cfg.demands.mean_com = value,
            SweepParameter::MeanStr => cfg.demands.mean_str = value,
            SweepParameter::MeanVlbw => cfg.demands.mean_vlbw = value,
            SweepParameter::Sd => cfg.demands.sd = value,
            SweepParameter::SdVlbw => cfg.demands.sd_vlbw = Some(value),
            SweepParameter::Df => cfg.df = value,
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(SweepParameter::N),
            "mean" => Ok(SweepParameter::Mean),
            "mean-com" => Ok(SweepParameter::MeanCom),
            "mean-str" => Ok(SweepParameter::MeanStr),
            "mean-vlbw" => Ok(SweepParameter::MeanVlbw),
            "sd" => Ok(SweepParameter::Sd),
            "sd-vlbw" => Ok(SweepParameter::SdVlbw),
            "df" => Ok(SweepParameter::Df),
            other => Err(format!(
                "unknown sweep parameter {other:?} (expected n, mean, mean-com, \
                 mean-str, mean-vlbw, sd, sd-vlbw or df)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: MetricsSummary,
}

/// Runs the scenario once per value, varying one parameter and keeping the
/// master seed, so points differ only through the swept axis.
pub fn sweep(
    base: &ScenarioConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<SweepPoint>, ConfigError> {
    values
        .iter()
        .map(|&value| {
            let cfg = parameter.apply(base, value)?;
            Ok(SweepPoint {
                value,
                summary: run(&cfg)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::ALL_ALGORITHMS;

    fn tiny_config(scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig {
            repetitions: 6,
            n: 36,
            ..ScenarioConfig::new(scenario, ALL_ALGORITHMS.to_vec(), 99)
        }
    }

    #[test]
    fn stats_accumulate_and_merge_like_one_stream() {
        let mut all = Stat::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            all.add(x);
        }
        assert_eq!(all.mean(), 2.5);
        assert!((all.sd() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((all.min, all.max), (Some(1.0), Some(4.0)));

        let mut left = Stat::default();
        let mut right = Stat::default();
        left.add(1.0);
        left.add(2.0);
        right.add(3.0);
        right.add(4.0);
        left.merge(&right);
        assert_eq!(left, all);

        assert_eq!(Stat::default().mean(), 0.0);
        assert_eq!(Stat::default().sd(), 0.0);
    }

    #[test]
    fn group_runs_are_reproducible_bit_for_bit() {
        let config = tiny_config(Scenario::Group);
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a.zeroed_timings(), b.zeroed_timings());
    }

    #[test]
    fn lockstep_gives_every_algorithm_the_same_deployments() {
        let summary = run(&tiny_config(Scenario::Group)).unwrap();
        let ndap = summary.algorithm(Algorithm::Ndap).unwrap();
        for am in &summary.per_algorithm {
            assert_eq!(am.deploy_count, ndap.deploy_count);
            assert_eq!(am.events_survived, ndap.events_survived);
            assert_eq!(am.audit_violations, 0);
        }
        assert!(ndap.deploy_count.mean() >= 1.0);
        assert_eq!(summary.rep_events.len(), 6);
    }

    #[test]
    fn utilization_snapshots_stay_inside_the_unit_interval() {
        let summary = run(&tiny_config(Scenario::Group)).unwrap();
        for am in &summary.per_algorithm {
            for stat in [
                &am.utilization.access,
                &am.utilization.aggregation,
                &am.utilization.core,
            ] {
                assert!(stat.min.unwrap() >= 0.0);
                assert!(stat.max.unwrap() <= 1.0);
            }
        }
    }

    #[test]
    fn individual_lets_algorithms_part_ways() {
        let summary = run(&tiny_config(Scenario::Individual)).unwrap();
        for am in &summary.per_algorithm {
            assert!(am.deploy_count.mean() >= 1.0);
            assert_eq!(am.audit_violations, 0);
            assert_eq!(am.deploy_count.count, 6);
        }
    }

    #[test]
    fn sweeps_vary_exactly_the_requested_axis() {
        let base = ScenarioConfig {
            repetitions: 2,
            n: 36,
            ..ScenarioConfig::new(Scenario::Group, ALL_ALGORITHMS.to_vec(), 5)
        };
        let points = sweep(&base, SweepParameter::MeanVlbw, &[0.2, 0.5]).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].summary.config.demands.mean_vlbw, 0.2);
        assert_eq!(points[1].summary.config.demands.mean_vlbw, 0.5);
        assert_eq!(points[0].summary.config.demands.mean_com, 0.3);
        assert_eq!(
            points[0].summary.config.master_seed,
            points[1].summary.config.master_seed
        );
    }

    #[test]
    fn group_config_with_one_algorithm_is_rejected() {
        let config = ScenarioConfig {
            n: 36,
            ..ScenarioConfig::new(Scenario::Group, vec![Algorithm::Ndap], 1)
        };
        assert!(matches!(
            config.validate(),
            Err(ConfigError::GroupNeedsTwo)
        ));
    }

    #[test]
    fn off_grid_machine_counts_are_rejected() {
        let config = ScenarioConfig {
            n: 100,
            ..tiny_config(Scenario::Group)
        };
        assert!(matches!(config.validate(), Err(ConfigError::Topology(_))));
    }
}
