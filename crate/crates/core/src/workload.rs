//! Synthetic workload: AE templates, demand sampling, and deploy/terminate
//! event traces.
//!
//! Two canonical application shapes drive the experiments: a three-tier
//! enterprise stack (5 VMs, 3 blocks, 4 compute links, 5 data links) and a
//! Montage-style workflow (7 VMs, 4 blocks, 5 compute links, 9 data links).
//! Demands are drawn per instance from normal distributions and clamped into
//! [0.01, 1.0], so every sampled AE is valid by construction.
//!
//! A trace is a sequence of deploy/terminate events: deploys outnumber
//! terminations two to one, the victim of a termination is chosen uniformly
//! among live AEs, and roughly 80% of deployed AEs are enterprise stacks.
//! Everything is a deterministic function of the RNG handed in.

use crate::model::{AeDocument, ApplicationEnvironment, DataBlock, VirtualMachine, VlDocument};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

pub const DEMAND_FLOOR: f64 = 0.01;
pub const DEMAND_CEILING: f64 = 1.0;
/// Deployments outnumber terminations 2:1 in expectation.
pub const DEPLOY_PROBABILITY: f64 = 2.0 / 3.0;
/// Fraction of deployments that are three-tier enterprise stacks.
pub const DEFAULT_ENTERPRISE_FRACTION: f64 = 0.8;

/// Means and standard deviations for sampled demands. `sd` applies across
/// the board unless a per-family override is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandParams {
    /// Mean of VM cpu and memory demands.
    pub mean_com: f64,
    /// Mean of data block storage demands.
    pub mean_str: f64,
    /// Mean of virtual link bandwidths.
    pub mean_vlbw: f64,
    /// Shared standard deviation.
    pub sd: f64,
    /// Override for cpu/mem/storage draws.
    pub sd_com_str: Option<f64>,
    /// Override for bandwidth draws.
    pub sd_vlbw: Option<f64>,
}

impl Default for DemandParams {
    fn default() -> Self {
        Self {
            mean_com: 0.3,
            mean_str: 0.4,
            mean_vlbw: 0.35,
            sd: 0.5,
            sd_com_str: None,
            sd_vlbw: None,
        }
    }
}

impl DemandParams {
    pub fn sd_com_str(&self) -> f64 {
        self.sd_com_str.unwrap_or(self.sd)
    }

    pub fn sd_vlbw(&self) -> f64 {
        self.sd_vlbw.unwrap_or(self.sd)
    }

    /// Sets all three means at once (the homogeneous sweep axis).
    pub fn with_homogeneous_mean(mut self, mean: f64) -> Self {
        self.mean_com = mean;
        self.mean_str = mean;
        self.mean_vlbw = mean;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("mean_com", self.mean_com),
            ("mean_str", self.mean_str),
            ("mean_vlbw", self.mean_vlbw),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("sd", self.sd),
            ("sd_com_str", self.sd_com_str()),
            ("sd_vlbw", self.sd_vlbw()),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let normal = Normal::new(mean, sd).expect("validated standard deviation");
    normal.sample(rng).clamp(DEMAND_FLOOR, DEMAND_CEILING)
}

/// Application shape: node ids and the links between them, no demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeTemplate {
    pub name: String,
    pub vms: Vec<String>,
    pub dbs: Vec<String>,
    pub vls: Vec<TemplateLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateLink {
    pub a: String,
    pub b: String,
}

fn link(a: &str, b: &str) -> TemplateLink {
    TemplateLink {
        a: a.to_string(),
        b: b.to_string(),
    }
}

/// Web, application and database tiers: 5 VMs, 3 blocks, 4 compute links,
/// 5 data links.
pub fn three_tier_template() -> AeTemplate {
    AeTemplate {
        name: "three-tier".into(),
        vms: ["web1", "web2", "app1", "app2", "dbsrv"]
            .map(String::from)
            .to_vec(),
        dbs: ["DB1", "DB2", "DB3"].map(String::from).to_vec(),
        vls: vec![
            link("web1", "app1"),
            link("web2", "app2"),
            link("app1", "dbsrv"),
            link("app2", "dbsrv"),
            link("web1", "DB1"),
            link("web2", "DB1"),
            link("app1", "DB2"),
            link("app2", "DB2"),
            link("dbsrv", "DB3"),
        ],
    }
}

/// Workflow pipeline: 7 VMs, 4 blocks, a 5-link compute ring over the first
/// five VMs, 9 data links (VM6 and VM7 join through data only).
pub fn montage_template() -> AeTemplate {
    AeTemplate {
        name: "montage".into(),
        vms: ["VM1", "VM2", "VM3", "VM4", "VM5", "VM6", "VM7"]
            .map(String::from)
            .to_vec(),
        dbs: ["DB1", "DB2", "DB3", "DB4"].map(String::from).to_vec(),
        vls: vec![
            link("VM1", "VM2"),
            link("VM2", "VM3"),
            link("VM3", "VM4"),
            link("VM4", "VM5"),
            link("VM5", "VM1"),
            link("VM1", "DB1"),
            link("VM2", "DB1"),
            link("VM2", "DB2"),
            link("VM3", "DB2"),
            link("VM4", "DB3"),
            link("VM5", "DB3"),
            link("VM6", "DB4"),
            link("VM7", "DB4"),
            link("VM5", "DB4"),
        ],
    }
}

impl AeTemplate {
    /// Samples one instance. Draw order is fixed: per VM cpu then mem, then
    /// per block storage, then per link bandwidth, all in template order.
    pub fn sample_document(&self, params: &DemandParams, rng: &mut ChaCha8Rng) -> AeDocument {
        let sd_cs = params.sd_com_str();
        let sd_bw = params.sd_vlbw();
        AeDocument {
            vms: self
                .vms
                .iter()
                .map(|id| VirtualMachine {
                    id: id.clone(),
                    cpu: draw(rng, params.mean_com, sd_cs),
                    mem: draw(rng, params.mean_com, sd_cs),
                })
                .collect(),
            dbs: self
                .dbs
                .iter()
                .map(|id| DataBlock {
                    id: id.clone(),
                    storage: draw(rng, params.mean_str, sd_cs),
                })
                .collect(),
            vls: self
                .vls
                .iter()
                .map(|l| VlDocument {
                    a: l.a.clone(),
                    b: l.b.clone(),
                    bw: draw(rng, params.mean_vlbw, sd_bw),
                })
                .collect(),
        }
    }

    pub fn sample(
        &self,
        params: &DemandParams,
        rng: &mut ChaCha8Rng,
    ) -> ApplicationEnvironment {
        self.sample_document(params, rng)
            .build()
            .expect("clamped draws always yield a valid AE")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum TraceEvent {
    Deploy { id: String, ae: AeDocument },
    Terminate { id: String },
}

impl TraceEvent {
    pub fn id(&self) -> &str {
        match self {
            TraceEvent::Deploy { id, .. } | TraceEvent::Terminate { id } => id,
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: deploy of {id:?} while it is already live")]
    DuplicateDeploy { line: usize, id: String },
    #[error("line {line}: terminate of {id:?} which is not live")]
    TerminateUnknown { line: usize, id: String },
    #[error("line {line}: AE {id:?} is invalid: {detail}")]
    InvalidAe {
        line: usize,
        id: String,
        detail: String,
    },
}

/// An ordered list of deploy/terminate events, exportable as JSON lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventTrace(pub Vec<TraceEvent>);

impl EventTrace {
    /// Every deploy id fresh among the live set, every terminate live, every
    /// AE document valid.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut live: Vec<&str> = Vec::new();
        for (i, ev) in self.0.iter().enumerate() {
            let line = i + 1;
            match ev {
                TraceEvent::Deploy { id, ae } => {
                    if live.iter().any(|l| l == id) {
                        return Err(TraceError::DuplicateDeploy {
                            line,
                            id: id.clone(),
                        });
                    }
                    let report = ae.validate();
                    if !report.is_empty() {
                        return Err(TraceError::InvalidAe {
                            line,
                            id: id.clone(),
                            detail: report
                                .iter()
                                .map(|v| v.to_string())
                                .collect::<Vec<_>>()
                                .join("; "),
                        });
                    }
                    live.push(id);
                }
                TraceEvent::Terminate { id } => {
                    let Some(pos) = live.iter().position(|l| l == id) else {
                        return Err(TraceError::TerminateUnknown {
                            line,
                            id: id.clone(),
                        });
                    };
                    live.remove(pos);
                }
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        for ev in &self.0 {
            serde_json::to_writer(&mut w, ev).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line_text = line?;
            if line_text.trim().is_empty() {
                continue;
            }
            let ev = serde_json::from_str(&line_text)
                .map_err(|source| TraceError::Parse { line: i + 1, source })?;
            events.push(ev);
        }
        let trace = Self(events);
        trace.validate()?;
        Ok(trace)
    }
}

/// Lazily extended event stream. The simulator does not know in advance how
/// many events a run survives, so events materialise on first access and
/// stay cached; every algorithm replaying the same generator sees identical
/// instances.
pub struct TraceGenerator {
    rng: ChaCha8Rng,
    params: DemandParams,
    enterprise_fraction: f64,
    three_tier: AeTemplate,
    montage: AeTemplate,
    counter: u64,
    live: Vec<String>,
    events: Vec<TraceEvent>,
}

impl TraceGenerator {
    pub fn new(params: DemandParams, enterprise_fraction: f64, rng: ChaCha8Rng) -> Self {
        Self {
            rng,
            params,
            enterprise_fraction,
            three_tier: three_tier_template(),
            montage: montage_template(),
            counter: 0,
            live: Vec::new(),
            events: Vec::new(),
        }
    }

    /// The event at `index`, generating up to it if necessary.
    pub fn event(&mut self, index: usize) -> &TraceEvent {
        while self.events.len() <= index {
            self.advance();
        }
        &self.events[index]
    }

    pub fn generated(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_trace(mut self, length: usize) -> EventTrace {
        while self.events.len() < length {
            self.advance();
        }
        self.events.truncate(length);
        EventTrace(self.events)
    }

    fn advance(&mut self) {
        // the type draw is always consumed; a terminate with nothing live
        // flips to a deploy
        let roll: f64 = self.rng.random();
        let deploy = roll < DEPLOY_PROBABILITY || self.live.is_empty();
        let event = if deploy {
            let template_roll: f64 = self.rng.random();
            let template = if template_roll < self.enterprise_fraction {
                &self.three_tier
            } else {
                &self.montage
            };
            let ae = template.sample_document(&self.params, &mut self.rng);
            let id = format!("ae{:06}", self.counter);
            self.counter += 1;
            self.live.push(id.clone());
            TraceEvent::Deploy { id, ae }
        } else {
            let victim = self.rng.random_range(0..self.live.len());
            let id = self.live.remove(victim);
            TraceEvent::Terminate { id }
        };
        self.events.push(event);
    }
}

/// Materialises a fixed-length trace.
pub fn generate_trace(
    params: DemandParams,
    enterprise_fraction: f64,
    length: usize,
    rng: ChaCha8Rng,
) -> EventTrace {
    TraceGenerator::new(params, enterprise_fraction, rng).into_trace(length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn template_counts_match_the_canonical_shapes() {
        let tt = three_tier_template().sample(&DemandParams::default(), &mut rng(1));
        assert_eq!(
            (
                tt.n_v(),
                tt.n_d(),
                tt.compute_link_count(),
                tt.data_link_count()
            ),
            (5, 3, 4, 5)
        );
        let mt = montage_template().sample(&DemandParams::default(), &mut rng(1));
        assert_eq!(
            (
                mt.n_v(),
                mt.n_d(),
                mt.compute_link_count(),
                mt.data_link_count()
            ),
            (7, 4, 5, 9)
        );
        assert!(tt.validate().is_empty());
        assert!(mt.validate().is_empty());
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_spread_yields_the_means_exactly() {
        let params = DemandParams {
            sd: 0.0,
            ..DemandParams::default()
        };
        let ae = three_tier_template().sample(&params, &mut rng(9));
        for vm in ae.vms() {
            assert_eq!(vm.cpu, 0.3);
            assert_eq!(vm.mem, 0.3);
        }
        for db in ae.dbs() {
            assert_eq!(db.storage, 0.4);
        }
        for vl in ae.vls() {
            assert_eq!(vl.bandwidth, 0.35);
        }
    }

    #[test]
    fn wild_draws_are_clamped_into_the_unit_band() {
        let params = DemandParams {
            mean_com: 0.5,
            mean_str: 0.5,
            mean_vlbw: 0.5,
            sd: 5.0,
            sd_com_str: None,
            sd_vlbw: None,
        };
        let mut r = rng(4);
        let mut floor_hit = false;
        let mut ceiling_hit = false;
        for _ in 0..50 {
            let ae = montage_template().sample(&params, &mut r);
            for vm in ae.vms() {
                for v in [vm.cpu, vm.mem] {
                    assert!((DEMAND_FLOOR..=DEMAND_CEILING).contains(&v));
                    floor_hit |= v == DEMAND_FLOOR;
                    ceiling_hit |= v == DEMAND_CEILING;
                }
            }
        }
        assert!(floor_hit && ceiling_hit, "sd=5 should slam both bounds");
    }

    #[test]
    fn same_seed_same_instances() {
        let params = DemandParams::default();
        let a = three_tier_template().sample(&params, &mut rng(42));
        let b = three_tier_template().sample(&params, &mut rng(42));
        assert_eq!(a, b);

        let t1 = generate_trace(params, DEFAULT_ENTERPRISE_FRACTION, 300, rng(42));
        let t2 = generate_trace(params, DEFAULT_ENTERPRISE_FRACTION, 300, rng(42));
        assert_eq!(t1, t2);
    }

    #[test]
    fn per_family_spread_overrides_take_effect() {
        let params = DemandParams {
            sd: 0.0,
            sd_vlbw: Some(0.4),
            ..DemandParams::default()
        };
        let ae = three_tier_template().sample(&params, &mut rng(11));
        assert!(ae.vms().iter().all(|vm| vm.cpu == 0.3 && vm.mem == 0.3));
        assert!(
            ae.vls().iter().any(|vl| vl.bandwidth != 0.35),
            "bandwidths should scatter while demands stay fixed"
        );
    }

    #[test]
    fn long_trace_hits_the_configured_ratios() {
        let trace = generate_trace(
            DemandParams::default(),
            DEFAULT_ENTERPRISE_FRACTION,
            10_000,
            rng(7),
        );
        trace.validate().unwrap();
        let deploys: Vec<_> = trace
            .0
            .iter()
            .filter_map(|ev| match ev {
                TraceEvent::Deploy { ae, .. } => Some(ae),
                TraceEvent::Terminate { .. } => None,
            })
            .collect();
        let deploy_fraction = deploys.len() as f64 / trace.0.len() as f64;
        assert!(
            (deploy_fraction - DEPLOY_PROBABILITY).abs() < 0.02,
            "deploy fraction {deploy_fraction}"
        );
        let enterprise = deploys.iter().filter(|ae| ae.vms.len() == 5).count();
        let enterprise_fraction = enterprise as f64 / deploys.len() as f64;
        assert!(
            (enterprise_fraction - 0.8).abs() < 0.02,
            "enterprise fraction {enterprise_fraction}"
        );
    }

    #[test]
    fn first_event_is_always_a_deploy() {
        for seed in 0..20 {
            let trace = generate_trace(
                DemandParams::default(),
                DEFAULT_ENTERPRISE_FRACTION,
                1,
                rng(seed),
            );
            assert!(matches!(trace.0[0], TraceEvent::Deploy { .. }));
        }
    }

    #[test]
    fn jsonl_round_trip_preserves_the_trace() {
        let trace = generate_trace(
            DemandParams::default(),
            DEFAULT_ENTERPRISE_FRACTION,
            60,
            rng(3),
        );
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let back = EventTrace::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn importing_a_broken_trace_names_the_line() {
        let text = r#"{"event":"terminate","id":"ghost"}"#;
        let err = EventTrace::read_jsonl(text.as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            TraceError::TerminateUnknown { line: 1, ref id } if id == "ghost"
        ));
    }

    #[test]
    fn template_json_round_trip() {
        let t = montage_template();
        let text = serde_json::to_string(&t).unwrap();
        let back: AeTemplate = serde_json::from_str(&text).unwrap();
        assert_eq!(t, back);
    }
}
