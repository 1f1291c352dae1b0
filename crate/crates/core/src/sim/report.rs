//! Result serialization: a flat CSV for plotting and a JSON document
//! carrying the full summary.
//!
//! The CSV holds only values that are deterministic for a given
//! configuration and seed, so running the same experiment twice yields
//! byte-identical files. Wall-clock decision timings live in the JSON.

use super::{AlgorithmMetrics, MetricsSummary, SweepParameter, SweepPoint, SCHEMA_VERSION};
use serde::Serialize;
use std::io::{self, Write};

pub const CSV_COMMENT: &str = "# schema: placelab.results.v1";

const CSV_HEADER: [&str; 28] = [
    "scenario",
    "parameter",
    "value",
    "n",
    "df",
    "mean_com",
    "mean_str",
    "mean_vlbw",
    "sd",
    "sd_com_str",
    "sd_vlbw",
    "repetitions",
    "master_seed",
    "enterprise_fraction",
    "algorithm",
    "deployments",
    "deploy_count_mean",
    "deploy_count_sd",
    "events_survived_mean",
    "cost_mean",
    "cost_sd",
    "cost_min",
    "cost_max",
    "ntpp_mean",
    "util_access_mean",
    "util_aggregation_mean",
    "util_core_mean",
    "audit_violations",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row(summary: &MetricsSummary, am: &AlgorithmMetrics, parameter: &str, value: &str) -> Vec<String> {
    let cfg = &summary.config;
    vec![
        cfg.scenario.to_string(),
        parameter.to_string(),
        value.to_string(),
        cfg.n.to_string(),
        cfg.df.to_string(),
        cfg.demands.mean_com.to_string(),
        cfg.demands.mean_str.to_string(),
        cfg.demands.mean_vlbw.to_string(),
        cfg.demands.sd.to_string(),
        opt(cfg.demands.sd_com_str),
        opt(cfg.demands.sd_vlbw),
        cfg.repetitions.to_string(),
        cfg.master_seed.to_string(),
        cfg.enterprise_fraction.to_string(),
        am.algorithm.to_string(),
        am.cost.count.to_string(),
        am.deploy_count.mean().to_string(),
        am.deploy_count.sd().to_string(),
        am.events_survived.mean().to_string(),
        am.cost.mean().to_string(),
        am.cost.sd().to_string(),
        opt(am.cost.min),
        opt(am.cost.max),
        am.ntpp.mean().to_string(),
        am.utilization.access.mean().to_string(),
        am.utilization.aggregation.mean().to_string(),
        am.utilization.core.mean().to_string(),
        am.audit_violations.to_string(),
    ]
}

fn csv_writer<W: Write>(mut w: W) -> io::Result<csv::Writer<W>> {
    writeln!(w, "{CSV_COMMENT}")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER).map_err(io::Error::other)?;
    Ok(wtr)
}

/// One row per algorithm; `parameter` and `value` stay empty.
pub fn write_run_csv<W: Write>(w: W, summary: &MetricsSummary) -> io::Result<()> {
    let mut wtr = csv_writer(w)?;
    for am in &summary.per_algorithm {
        wtr.write_record(row(summary, am, "", ""))
            .map_err(io::Error::other)?;
    }
    wtr.flush()
}

/// One row per swept value and algorithm, in sweep order.
pub fn write_sweep_csv<W: Write>(
    w: W,
    parameter: SweepParameter,
    points: &[SweepPoint],
) -> io::Result<()> {
    let mut wtr = csv_writer(w)?;
    for point in points {
        for am in &point.summary.per_algorithm {
            wtr.write_record(row(
                &point.summary,
                am,
                parameter.name(),
                &point.value.to_string(),
            ))
            .map_err(io::Error::other)?;
        }
    }
    wtr.flush()
}

pub fn write_run_json<W: Write>(mut w: W, summary: &MetricsSummary) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, summary).map_err(io::Error::other)?;
    writeln!(w)
}

#[derive(Serialize)]
struct SweepReport<'a> {
    schema: &'static str,
    parameter: &'static str,
    points: &'a [SweepPoint],
}

pub fn write_sweep_json<W: Write>(
    mut w: W,
    parameter: SweepParameter,
    points: &[SweepPoint],
) -> io::Result<()> {
    let report = SweepReport {
        schema: SCHEMA_VERSION,
        parameter: parameter.name(),
        points,
    };
    serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::other)?;
    writeln!(w)
}
