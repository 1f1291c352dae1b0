//! Application environments (AEs) and the mutable placement state of one
//! data center.
//!
//! An AE bundles virtual machines, data blocks and the virtual links that
//! connect them. Placement assigns every VM to a compute facet and every data
//! block to a storage facet; each cross-node link then reserves its bandwidth
//! on the pool of the underlying node pair. All demands and capacities live
//! in (0, 1] (facets are unit sized).
//!
//! `PlacementState` is a transactional ledger. Algorithms stage their debits
//! through a [`Txn`] whose undo journal restores the exact prior bits on
//! abort, and termination *replays* the debits of the surviving deployments
//! in ledger order instead of crediting demands back. Replaying sidesteps
//! floating-point drift: deploy-then-terminate leaves the state bit-identical
//! to one where the deployment never happened, which the audit checks with
//! plain equality.

use crate::topology::{
    BandwidthPools, CnId, DataCenterTopology, NodeId, PoolError, SnId,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Every facet offers one unit of its resource.
pub const FACET_CAPACITY: f64 = 1.0;
/// Every distinct node pair offers one unit of bandwidth.
pub const PAIR_BANDWIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualMachine {
    pub id: String,
    pub cpu: f64,
    pub mem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBlock {
    pub id: String,
    #[serde(rename = "str")]
    pub storage: f64,
}

/// Application node: a VM or a data block, by position within its AE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnRef {
    Vm(usize),
    Db(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// VM-to-VM communication link.
    Compute,
    /// VM-to-data-block access link.
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualLink {
    pub kind: LinkKind,
    pub a: AnRef,
    pub b: AnRef,
    pub bandwidth: f64,
}

/// One defect found while validating an AE description.
#[derive(Debug, Error, PartialEq)]
pub enum AeViolation {
    #[error("duplicate application node id {0:?}")]
    DuplicateId(String),
    #[error("{quantity} demand of {id:?} must lie in (0, 1], got {value}")]
    DemandOutOfRange {
        id: String,
        quantity: &'static str,
        value: f64,
    },
    #[error("virtual link {index} references unknown node id {id:?}")]
    DanglingEndpoint { index: usize, id: String },
    #[error("virtual link {index} connects two data blocks")]
    DataToDataLink { index: usize },
    #[error("virtual link {index} connects a node to itself")]
    SelfLoop { index: usize },
    #[error("virtual link {index} duplicates an earlier node pair")]
    DuplicatePair { index: usize },
    #[error("bandwidth of virtual link {index} must lie in (0, 1], got {value}")]
    BandwidthOutOfRange { index: usize, value: f64 },
}

/// JSON form of an AE. Link endpoints are node ids; the link kind follows
/// from what the ids name (two VMs, or a VM and a data block).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AeDocument {
    #[serde(default)]
    pub vms: Vec<VirtualMachine>,
    #[serde(default)]
    pub dbs: Vec<DataBlock>,
    #[serde(default)]
    pub vls: Vec<VlDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlDocument {
    pub a: String,
    pub b: String,
    pub bw: f64,
}

fn in_unit_interval(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl AeDocument {
    /// Full validation report; empty means the document can be built.
    pub fn validate(&self) -> Vec<AeViolation> {
        let mut report = Vec::new();
        let mut ids: BTreeMap<&str, AnRef> = BTreeMap::new();
        for (i, vm) in self.vms.iter().enumerate() {
            if ids.insert(&vm.id, AnRef::Vm(i)).is_some() {
                report.push(AeViolation::DuplicateId(vm.id.clone()));
            }
            for (quantity, value) in [("cpu", vm.cpu), ("mem", vm.mem)] {
                if !in_unit_interval(value) {
                    report.push(AeViolation::DemandOutOfRange {
                        id: vm.id.clone(),
                        quantity,
                        value,
                    });
                }
            }
        }
        for (j, db) in self.dbs.iter().enumerate() {
            if ids.insert(&db.id, AnRef::Db(j)).is_some() {
                report.push(AeViolation::DuplicateId(db.id.clone()));
            }
            if !in_unit_interval(db.storage) {
                report.push(AeViolation::DemandOutOfRange {
                    id: db.id.clone(),
                    quantity: "str",
                    value: db.storage,
                });
            }
        }
        let mut seen_pairs = BTreeSet::new();
        for (index, vl) in self.vls.iter().enumerate() {
            let a = ids.get(vl.a.as_str()).copied();
            let b = ids.get(vl.b.as_str()).copied();
            if a.is_none() {
                report.push(AeViolation::DanglingEndpoint {
                    index,
                    id: vl.a.clone(),
                });
            }
            if b.is_none() {
                report.push(AeViolation::DanglingEndpoint {
                    index,
                    id: vl.b.clone(),
                });
            }
            if !in_unit_interval(vl.bw) {
                report.push(AeViolation::BandwidthOutOfRange {
                    index,
                    value: vl.bw,
                });
            }
            let (Some(a), Some(b)) = (a, b) else { continue };
            if a == b {
                report.push(AeViolation::SelfLoop { index });
                continue;
            }
            if let (AnRef::Db(_), AnRef::Db(_)) = (a, b) {
                report.push(AeViolation::DataToDataLink { index });
                continue;
            }
            let pair = if a <= b { (a, b) } else { (b, a) };
            if !seen_pairs.insert(pair) {
                report.push(AeViolation::DuplicatePair { index });
            }
        }
        report
    }

    /// Builds the indexed AE, or returns everything wrong with the document.
    pub fn build(&self) -> Result<ApplicationEnvironment, Vec<AeViolation>> {
        let report = self.validate();
        if !report.is_empty() {
            return Err(report);
        }
        let mut ids: BTreeMap<&str, AnRef> = BTreeMap::new();
        for (i, vm) in self.vms.iter().enumerate() {
            ids.insert(&vm.id, AnRef::Vm(i));
        }
        for (j, db) in self.dbs.iter().enumerate() {
            ids.insert(&db.id, AnRef::Db(j));
        }
        let vls = self
            .vls
            .iter()
            .map(|vl| {
                let a = ids[vl.a.as_str()];
                let b = ids[vl.b.as_str()];
                // normalise data links to (vm, db) endpoint order
                let (a, b, kind) = match (a, b) {
                    (AnRef::Vm(_), AnRef::Vm(_)) => (a, b, LinkKind::Compute),
                    (AnRef::Vm(_), AnRef::Db(_)) => (a, b, LinkKind::Data),
                    (AnRef::Db(_), AnRef::Vm(_)) => (b, a, LinkKind::Data),
                    (AnRef::Db(_), AnRef::Db(_)) => unreachable!("validated"),
                };
                VirtualLink {
                    kind,
                    a,
                    b,
                    bandwidth: vl.bw,
                }
            })
            .collect();
        Ok(ApplicationEnvironment::from_validated(
            self.vms.clone(),
            self.dbs.clone(),
            vls,
        ))
    }
}

/// A composite application: VMs, data blocks and the links between them.
/// Instances are immutable and always structurally valid (built through
/// [`AeDocument::build`] or [`ApplicationEnvironment::from_parts`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ApplicationEnvironment {
    vms: Vec<VirtualMachine>,
    dbs: Vec<DataBlock>,
    vls: Vec<VirtualLink>,
    /// Per application node: (vl index, peer) in vl-index order.
    adjacency: Vec<Vec<(u32, AnRef)>>,
}

impl ApplicationEnvironment {
    fn from_validated(
        vms: Vec<VirtualMachine>,
        dbs: Vec<DataBlock>,
        vls: Vec<VirtualLink>,
    ) -> Self {
        let n = vms.len() + dbs.len();
        let mut adjacency = vec![Vec::new(); n];
        let an_index =
            |an: AnRef| match an {
                AnRef::Vm(i) => i,
                AnRef::Db(j) => vms.len() + j,
            };
        for (idx, vl) in vls.iter().enumerate() {
            adjacency[an_index(vl.a)].push((idx as u32, vl.b));
            adjacency[an_index(vl.b)].push((idx as u32, vl.a));
        }
        Self {
            vms,
            dbs,
            vls,
            adjacency,
        }
    }

    /// Convenience constructor: links given as (id, id, bandwidth) triples.
    pub fn from_parts(
        vms: Vec<VirtualMachine>,
        dbs: Vec<DataBlock>,
        links: &[(&str, &str, f64)],
    ) -> Result<Self, Vec<AeViolation>> {
        AeDocument {
            vms,
            dbs,
            vls: links
                .iter()
                .map(|&(a, b, bw)| VlDocument {
                    a: a.to_string(),
                    b: b.to_string(),
                    bw,
                })
                .collect(),
        }
        .build()
    }

    pub fn to_document(&self) -> AeDocument {
        AeDocument {
            vms: self.vms.clone(),
            dbs: self.dbs.clone(),
            vls: self
                .vls
                .iter()
                .map(|vl| VlDocument {
                    a: self.an_id(vl.a).to_string(),
                    b: self.an_id(vl.b).to_string(),
                    bw: vl.bandwidth,
                })
                .collect(),
        }
    }

    pub fn vms(&self) -> &[VirtualMachine] {
        &self.vms
    }

    pub fn dbs(&self) -> &[DataBlock] {
        &self.dbs
    }

    pub fn vls(&self) -> &[VirtualLink] {
        &self.vls
    }

    pub fn n_v(&self) -> usize {
        self.vms.len()
    }

    pub fn n_d(&self) -> usize {
        self.dbs.len()
    }

    pub fn compute_link_count(&self) -> usize {
        self.vls
            .iter()
            .filter(|vl| vl.kind == LinkKind::Compute)
            .count()
    }

    pub fn data_link_count(&self) -> usize {
        self.vls.iter().filter(|vl| vl.kind == LinkKind::Data).count()
    }

    pub fn an_id(&self, an: AnRef) -> &str {
        match an {
            AnRef::Vm(i) => &self.vms[i].id,
            AnRef::Db(j) => &self.dbs[j].id,
        }
    }

    fn an_index(&self, an: AnRef) -> usize {
        match an {
            AnRef::Vm(i) => i,
            AnRef::Db(j) => self.vms.len() + j,
        }
    }

    /// Links touching `an` as (vl index, peer), in vl-index order.
    pub fn links_of(&self, an: AnRef) -> &[(u32, AnRef)] {
        &self.adjacency[self.an_index(an)]
    }

    pub fn vm_has_data_link(&self, vm: usize) -> bool {
        self.links_of(AnRef::Vm(vm))
            .iter()
            .any(|&(vl, _)| self.vls[vl as usize].kind == LinkKind::Data)
    }

    pub fn validate(&self) -> Vec<AeViolation> {
        self.to_document().validate()
    }
}

/// One cross-node bandwidth reservation; `a <= b` (canonical pool key).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservation {
    pub a: NodeId,
    pub b: NodeId,
    pub bandwidth: f64,
}

/// Where every application node of a deployed AE went, in which order the
/// nodes were placed, and what the placement costs.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentRecord {
    pub ae: ApplicationEnvironment,
    pub vm_hosts: Vec<CnId>,
    pub db_hosts: Vec<SnId>,
    pub placement_order: Vec<AnRef>,
    pub reservations: Vec<Reservation>,
    pub per_vl_costs: Vec<f64>,
    pub total_cost: f64,
}

impl DeploymentRecord {
    pub fn assignment(&self) -> Assignment {
        Assignment {
            vm_hosts: self.vm_hosts.clone(),
            db_hosts: self.db_hosts.clone(),
            order: self.placement_order.clone(),
        }
    }
}

/// A complete placement decision, ready to be applied transactionally.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub vm_hosts: Vec<CnId>,
    pub db_hosts: Vec<SnId>,
    /// Order in which the application nodes take their capacity.
    pub order: Vec<AnRef>,
}

/// What a committed deployment reported back.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploySummary {
    pub total_cost: f64,
    pub per_vl_costs: Vec<f64>,
    /// Links consumed while placing nodes (peers already placed at the time).
    pub ntpp_links: u32,
    pub an_steps: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("an AE with id {0:?} is already deployed")]
    DuplicateAeId(String),
    #[error("no deployed AE has id {0:?}")]
    UnknownAeId(String),
    #[error("{cn} cannot supply cpu {requested} (available {available})")]
    InsufficientCpu {
        cn: CnId,
        requested: f64,
        available: f64,
    },
    #[error("{cn} cannot supply mem {requested} (available {available})")]
    InsufficientMem {
        cn: CnId,
        requested: f64,
        available: f64,
    },
    #[error("{sn} cannot supply str {requested} (available {available})")]
    InsufficientStr {
        sn: SnId,
        requested: f64,
        available: f64,
    },
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("malformed assignment: {0}")]
    AssignmentShape(String),
    #[error("cannot commit: not every application node is placed")]
    IncompleteAssignment,
}

/// Mismatch between the live ledger and an independent recount.
#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("{what} residual of {which} is {live}, recount says {recounted}")]
    ResidualMismatch {
        what: &'static str,
        which: String,
        live: f64,
        recounted: f64,
    },
    #[error("{what} residual of {which} is negative: {value}")]
    NegativeResidual {
        what: &'static str,
        which: String,
        value: f64,
    },
    #[error("pool {a}-{b} holds {live}, recount says {recounted}")]
    PoolMismatch {
        a: NodeId,
        b: NodeId,
        live: f64,
        recounted: f64,
    },
    #[error("deployment {id:?} stores reservations that do not match its assignment")]
    ReservationMismatch { id: String },
}

enum JournalEntry {
    Cpu(CnId, f64),
    Mem(CnId, f64),
    Str(SnId, f64),
    Pool(NodeId, NodeId, Option<f64>),
}

/// Mutable placement bookkeeping for one data center: facet residuals, pair
/// bandwidth pools, and the insertion-ordered ledger of live deployments.
#[derive(Debug, Clone)]
pub struct PlacementState {
    dc: Arc<DataCenterTopology>,
    cpu_avail: Vec<f64>,
    mem_avail: Vec<f64>,
    str_avail: Vec<f64>,
    pools: BandwidthPools,
    deployed: IndexMap<String, DeploymentRecord>,
    journal: Vec<JournalEntry>,
}

impl fmt::Debug for JournalEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JournalEntry::Cpu(cn, v) => write!(f, "cpu {cn} <- {v}"),
            JournalEntry::Mem(cn, v) => write!(f, "mem {cn} <- {v}"),
            JournalEntry::Str(sn, v) => write!(f, "str {sn} <- {v}"),
            JournalEntry::Pool(a, b, v) => write!(f, "pool {a}-{b} <- {v:?}"),
        }
    }
}

impl Clone for JournalEntry {
    fn clone(&self) -> Self {
        match *self {
            JournalEntry::Cpu(cn, v) => JournalEntry::Cpu(cn, v),
            JournalEntry::Mem(cn, v) => JournalEntry::Mem(cn, v),
            JournalEntry::Str(sn, v) => JournalEntry::Str(sn, v),
            JournalEntry::Pool(a, b, v) => JournalEntry::Pool(a, b, v),
        }
    }
}

impl PartialEq for PlacementState {
    fn eq(&self, other: &Self) -> bool {
        *self.dc == *other.dc
            && self.cpu_avail == other.cpu_avail
            && self.mem_avail == other.mem_avail
            && self.str_avail == other.str_avail
            && self.pools == other.pools
            && self.journal.is_empty()
            && other.journal.is_empty()
            // ledger order matters: termination replays it
            && self.deployed.len() == other.deployed.len()
            && self
                .deployed
                .iter()
                .zip(other.deployed.iter())
                .all(|((ka, va), (kb, vb))| ka == kb && va == vb)
    }
}

impl PlacementState {
    pub fn new(dc: Arc<DataCenterTopology>) -> Self {
        let cn = dc.cn_count();
        let sn = dc.sn_count();
        Self {
            dc,
            cpu_avail: vec![FACET_CAPACITY; cn],
            mem_avail: vec![FACET_CAPACITY; cn],
            str_avail: vec![FACET_CAPACITY; sn],
            pools: BandwidthPools::new(PAIR_BANDWIDTH),
            deployed: IndexMap::new(),
            journal: Vec::new(),
        }
    }

    pub fn topology(&self) -> &DataCenterTopology {
        &self.dc
    }

    pub fn topology_handle(&self) -> Arc<DataCenterTopology> {
        Arc::clone(&self.dc)
    }

    pub fn cpu_available(&self, cn: CnId) -> f64 {
        self.cpu_avail[cn.0 as usize]
    }

    pub fn mem_available(&self, cn: CnId) -> f64 {
        self.mem_avail[cn.0 as usize]
    }

    pub fn str_available(&self, sn: SnId) -> f64 {
        self.str_avail[sn.0 as usize]
    }

    pub fn pools(&self) -> &BandwidthPools {
        &self.pools
    }

    pub fn deployment(&self, id: &str) -> Option<&DeploymentRecord> {
        self.deployed.get(id)
    }

    pub fn deployment_count(&self) -> usize {
        self.deployed.len()
    }

    pub fn deployments(&self) -> impl Iterator<Item = (&str, &DeploymentRecord)> {
        self.deployed.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_deployed(&self, id: &str) -> bool {
        self.deployed.contains_key(id)
    }

    /// Opens a transaction for placing `ae` under `id`. Dropping the
    /// transaction without committing restores the state bit-for-bit.
    pub fn begin<'a>(
        &'a mut self,
        id: &str,
        ae: &'a ApplicationEnvironment,
    ) -> Result<Txn<'a>, StateError> {
        if self.deployed.contains_key(id) {
            return Err(StateError::DuplicateAeId(id.to_string()));
        }
        assert!(
            self.journal.is_empty(),
            "a previous transaction left journal entries behind"
        );
        Ok(Txn {
            id: id.to_string(),
            vm_hosts: vec![None; ae.n_v()],
            db_hosts: vec![None; ae.n_d()],
            order: Vec::with_capacity(ae.n_v() + ae.n_d()),
            vl_reserved: vec![false; ae.vls().len()],
            reservations: Vec::new(),
            ntpp_links: 0,
            committed: false,
            ae,
            st: self,
        })
    }

    /// Transactionally applies a complete placement decision: all debits land
    /// in `assignment.order`, or none do.
    pub fn apply_deployment(
        &mut self,
        id: &str,
        ae: &ApplicationEnvironment,
        assignment: &Assignment,
    ) -> Result<DeploySummary, StateError> {
        if assignment.vm_hosts.len() != ae.n_v() || assignment.db_hosts.len() != ae.n_d() {
            return Err(StateError::AssignmentShape(
                "host list lengths do not match the AE".to_string(),
            ));
        }
        if assignment.order.len() != ae.n_v() + ae.n_d() {
            return Err(StateError::AssignmentShape(
                "placement order must cover every application node once".to_string(),
            ));
        }
        let mut seen = vec![false; ae.n_v() + ae.n_d()];
        for &an in &assignment.order {
            let (idx, in_range) = match an {
                AnRef::Vm(i) => (i, i < ae.n_v()),
                AnRef::Db(j) => (ae.n_v() + j, j < ae.n_d()),
            };
            if !in_range || seen[idx] {
                return Err(StateError::AssignmentShape(
                    "placement order must cover every application node once".to_string(),
                ));
            }
            seen[idx] = true;
        }
        for &cn in &assignment.vm_hosts {
            if cn.0 as usize >= self.dc.cn_count() {
                return Err(StateError::AssignmentShape(format!(
                    "{cn} is not a compute facet of this data center"
                )));
            }
        }
        for &sn in &assignment.db_hosts {
            if sn.0 as usize >= self.dc.sn_count() {
                return Err(StateError::AssignmentShape(format!(
                    "{sn} is not a storage facet of this data center"
                )));
            }
        }

        let mut txn = self.begin(id, ae)?;
        for &an in &assignment.order {
            match an {
                AnRef::Vm(i) => {
                    txn.place_vm(i, assignment.vm_hosts[i])?;
                }
                AnRef::Db(j) => {
                    txn.place_db(j, assignment.db_hosts[j])?;
                }
            }
        }
        txn.commit()
    }

    /// Removes a deployment and recounts every facet and pool it touched by
    /// replaying the surviving ledger, so the result is bit-identical to a
    /// history in which this AE was never deployed.
    pub fn terminate_deployment(&mut self, id: &str) -> Result<DeploymentRecord, StateError> {
        let record = self
            .deployed
            .shift_remove(id)
            .ok_or_else(|| StateError::UnknownAeId(id.to_string()))?;

        let cns: BTreeSet<CnId> = record.vm_hosts.iter().copied().collect();
        let sns: BTreeSet<SnId> = record.db_hosts.iter().copied().collect();
        let pools: BTreeSet<(NodeId, NodeId)> =
            record.reservations.iter().map(|r| (r.a, r.b)).collect();

        for &cn in &cns {
            let mut cpu = FACET_CAPACITY;
            let mut mem = FACET_CAPACITY;
            for rec in self.deployed.values() {
                for &an in &rec.placement_order {
                    if let AnRef::Vm(i) = an {
                        if rec.vm_hosts[i] == cn {
                            cpu -= rec.ae.vms()[i].cpu;
                            mem -= rec.ae.vms()[i].mem;
                        }
                    }
                }
            }
            self.cpu_avail[cn.0 as usize] = cpu;
            self.mem_avail[cn.0 as usize] = mem;
        }
        for &sn in &sns {
            let mut str_ = FACET_CAPACITY;
            for rec in self.deployed.values() {
                for &an in &rec.placement_order {
                    if let AnRef::Db(j) = an {
                        if rec.db_hosts[j] == sn {
                            str_ -= rec.ae.dbs()[j].storage;
                        }
                    }
                }
            }
            self.str_avail[sn.0 as usize] = str_;
        }
        for &(a, b) in &pools {
            let mut avail = PAIR_BANDWIDTH;
            for rec in self.deployed.values() {
                for r in &rec.reservations {
                    if (r.a, r.b) == (a, b) {
                        avail -= r.bandwidth;
                    }
                }
            }
            self.pools
                .raw_set(a, b, if avail == PAIR_BANDWIDTH { None } else { Some(avail) });
        }
        Ok(record)
    }

    /// Communication cost of a live deployment: each virtual link once,
    /// bandwidth times the distance between its endpoints' nodes, summed in
    /// the AE's link order.
    pub fn deploy_cost(&self, id: &str) -> Result<f64, StateError> {
        let record = self
            .deployed
            .get(id)
            .ok_or_else(|| StateError::UnknownAeId(id.to_string()))?;
        Ok(assignment_cost(
            &self.dc,
            &record.ae,
            &record.vm_hosts,
            &record.db_hosts,
        ))
    }

    /// Literal ordered-pairs reading of the objective: VM pairs are
    /// enumerated in both directions, so compute links count twice while data
    /// links count once. Kept for comparison with the single-count deployCost
    /// convention used everywhere else.
    pub fn deploy_cost_ordered(&self, id: &str) -> Result<f64, StateError> {
        let record = self
            .deployed
            .get(id)
            .ok_or_else(|| StateError::UnknownAeId(id.to_string()))?;
        let ae = &record.ae;
        let mut total = 0.0;
        for i in 0..ae.n_v() {
            for &(vl, peer) in ae.links_of(AnRef::Vm(i)) {
                let link = &ae.vls()[vl as usize];
                let peer_node = match peer {
                    AnRef::Vm(j) => self.dc.cn_node(record.vm_hosts[j]),
                    AnRef::Db(k) => self.dc.sn_node(record.db_hosts[k]),
                };
                let my_node = self.dc.cn_node(record.vm_hosts[i]);
                total += link.bandwidth * self.dc.distance(my_node, peer_node);
            }
        }
        Ok(total)
    }

    /// Reserved traffic traversing each switch, attributed along tree routes.
    pub fn switch_traffic(&self) -> BTreeMap<NodeId, f64> {
        let mut traffic = BTreeMap::new();
        for rec in self.deployed.values() {
            for r in &rec.reservations {
                for (sw, _) in self.dc.route_switches(r.a, r.b) {
                    *traffic.entry(sw).or_insert(0.0) += r.bandwidth;
                }
            }
        }
        traffic
    }

    /// Recounts the whole ledger from scratch and compares bit-for-bit
    /// against the live residuals and pools; also re-derives each record's
    /// reservations from its assignment. Any difference, or a negative facet
    /// residual, is a violation. Pool ledgers are exempt from the negativity
    /// check: they deliberately run below zero when links outgrow a pair,
    /// and the public availability clamps at zero instead.
    pub fn audit(&self) -> Result<(), AuditError> {
        let mut cpu = vec![FACET_CAPACITY; self.dc.cn_count()];
        let mut mem = vec![FACET_CAPACITY; self.dc.cn_count()];
        let mut str_ = vec![FACET_CAPACITY; self.dc.sn_count()];
        let mut pools: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();

        for (id, rec) in &self.deployed {
            for &an in &rec.placement_order {
                match an {
                    AnRef::Vm(i) => {
                        let cn = rec.vm_hosts[i].0 as usize;
                        cpu[cn] -= rec.ae.vms()[i].cpu;
                        mem[cn] -= rec.ae.vms()[i].mem;
                    }
                    AnRef::Db(j) => {
                        str_[rec.db_hosts[j].0 as usize] -= rec.ae.dbs()[j].storage;
                    }
                }
            }
            for r in &rec.reservations {
                *pools.entry((r.a, r.b)).or_insert(PAIR_BANDWIDTH) -= r.bandwidth;
            }
            let expected = derive_reservations(
                &rec.ae,
                &rec.placement_order,
                |an| match an {
                    AnRef::Vm(i) => self.dc.cn_node(rec.vm_hosts[i]),
                    AnRef::Db(j) => self.dc.sn_node(rec.db_hosts[j]),
                },
            );
            if expected != rec.reservations {
                return Err(AuditError::ReservationMismatch { id: id.clone() });
            }
        }
        pools.retain(|_, v| *v != PAIR_BANDWIDTH);

        for (i, (&live, &recounted)) in
            self.cpu_avail.iter().zip(cpu.iter()).enumerate()
        {
            check_residual("cpu", CnId(i as u32).to_string(), live, recounted)?;
        }
        for (i, (&live, &recounted)) in
            self.mem_avail.iter().zip(mem.iter()).enumerate()
        {
            check_residual("mem", CnId(i as u32).to_string(), live, recounted)?;
        }
        for (i, (&live, &recounted)) in
            self.str_avail.iter().zip(str_.iter()).enumerate()
        {
            check_residual("str", SnId(i as u32).to_string(), live, recounted)?;
        }

        let live_pools: BTreeMap<(NodeId, NodeId), f64> = self
            .pools
            .entries()
            .map(|(a, b, v)| ((a, b), v))
            .collect();
        if live_pools != pools {
            for (&(a, b), &live) in &live_pools {
                let recounted = pools.get(&(a, b)).copied().unwrap_or(PAIR_BANDWIDTH);
                if live != recounted {
                    return Err(AuditError::PoolMismatch {
                        a,
                        b,
                        live,
                        recounted,
                    });
                }
            }
            for (&(a, b), &recounted) in &pools {
                let live = live_pools.get(&(a, b)).copied().unwrap_or(PAIR_BANDWIDTH);
                if live != recounted {
                    return Err(AuditError::PoolMismatch {
                        a,
                        b,
                        live,
                        recounted,
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_residual(
    what: &'static str,
    which: String,
    live: f64,
    recounted: f64,
) -> Result<(), AuditError> {
    if live != recounted {
        return Err(AuditError::ResidualMismatch {
            what,
            which,
            live,
            recounted,
        });
    }
    if live < 0.0 {
        return Err(AuditError::NegativeResidual {
            what,
            which,
            value: live,
        });
    }
    Ok(())
}

/// Cost of a complete assignment, independent of any ledger: each link once,
/// in AE link order. This is the exact sum committed records report.
pub fn assignment_cost(
    dc: &DataCenterTopology,
    ae: &ApplicationEnvironment,
    vm_hosts: &[CnId],
    db_hosts: &[SnId],
) -> f64 {
    let mut total = 0.0;
    for vl in ae.vls() {
        total += link_cost(dc, ae, vl, vm_hosts, db_hosts);
    }
    total
}

fn link_cost(
    dc: &DataCenterTopology,
    _ae: &ApplicationEnvironment,
    vl: &VirtualLink,
    vm_hosts: &[CnId],
    db_hosts: &[SnId],
) -> f64 {
    let node = |an: AnRef| match an {
        AnRef::Vm(i) => dc.cn_node(vm_hosts[i]),
        AnRef::Db(j) => dc.sn_node(db_hosts[j]),
    };
    vl.bandwidth * dc.distance(node(vl.a), node(vl.b))
}

/// Cross-node reservations implied by placing `order` onto the given hosts:
/// when a node is placed, every link to an already-placed peer reserves its
/// bandwidth, links scanned in AE order. Same-node links reserve nothing.
fn derive_reservations(
    ae: &ApplicationEnvironment,
    order: &[AnRef],
    node_of: impl Fn(AnRef) -> NodeId,
) -> Vec<Reservation> {
    let mut placed = vec![false; ae.n_v() + ae.n_d()];
    let an_index = |an: AnRef| match an {
        AnRef::Vm(i) => i,
        AnRef::Db(j) => ae.n_v() + j,
    };
    let mut out = Vec::new();
    for &an in order {
        placed[an_index(an)] = true;
        for &(vl, peer) in ae.links_of(an) {
            if !placed[an_index(peer)] {
                continue;
            }
            if peer == an {
                continue;
            }
            let (na, nb) = (node_of(an), node_of(peer));
            if na == nb {
                continue;
            }
            let (a, b) = if na <= nb { (na, nb) } else { (nb, na) };
            out.push(Reservation {
                a,
                b,
                bandwidth: ae.vls()[vl as usize].bandwidth,
            });
        }
    }
    out
}

/// In-flight deployment. All debits go through the owning state's journal;
/// dropping the transaction un-does them bit-exactly, committing seals them
/// into a [`DeploymentRecord`].
pub struct Txn<'a> {
    st: &'a mut PlacementState,
    id: String,
    ae: &'a ApplicationEnvironment,
    vm_hosts: Vec<Option<CnId>>,
    db_hosts: Vec<Option<SnId>>,
    order: Vec<AnRef>,
    vl_reserved: Vec<bool>,
    reservations: Vec<Reservation>,
    ntpp_links: u32,
    committed: bool,
}

impl Drop for Txn<'_> {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for entry in std::mem::take(&mut self.st.journal).into_iter().rev() {
            match entry {
                JournalEntry::Cpu(cn, old) => self.st.cpu_avail[cn.0 as usize] = old,
                JournalEntry::Mem(cn, old) => self.st.mem_avail[cn.0 as usize] = old,
                JournalEntry::Str(sn, old) => self.st.str_avail[sn.0 as usize] = old,
                JournalEntry::Pool(a, b, old) => self.st.pools.raw_set(a, b, old),
            }
        }
    }
}

impl<'a> Txn<'a> {
    pub fn state(&self) -> &PlacementState {
        self.st
    }

    pub fn ae(&self) -> &ApplicationEnvironment {
        self.ae
    }

    pub fn vm_host(&self, vm: usize) -> Option<CnId> {
        self.vm_hosts[vm]
    }

    pub fn db_host(&self, db: usize) -> Option<SnId> {
        self.db_hosts[db]
    }

    pub fn an_placed(&self, an: AnRef) -> bool {
        match an {
            AnRef::Vm(i) => self.vm_hosts[i].is_some(),
            AnRef::Db(j) => self.db_hosts[j].is_some(),
        }
    }

    /// Physical node hosting `an`, if placed.
    pub fn an_node(&self, an: AnRef) -> Option<NodeId> {
        match an {
            AnRef::Vm(i) => self.vm_hosts[i].map(|cn| self.st.dc.cn_node(cn)),
            AnRef::Db(j) => self.db_hosts[j].map(|sn| self.st.dc.sn_node(sn)),
        }
    }

    pub fn vl_consumed(&self, vl: usize) -> bool {
        self.vl_reserved[vl]
    }

    /// Places a VM, debiting cpu and memory and reserving every link whose
    /// peer is already placed (in AE link order). Returns how many links the
    /// step consumed.
    pub fn place_vm(&mut self, vm: usize, cn: CnId) -> Result<u32, StateError> {
        debug_assert!(self.vm_hosts[vm].is_none(), "VM placed twice");
        let demand = &self.ae.vms()[vm];
        let idx = cn.0 as usize;
        let cpu = self.st.cpu_avail[idx];
        if demand.cpu > cpu {
            return Err(StateError::InsufficientCpu {
                cn,
                requested: demand.cpu,
                available: cpu,
            });
        }
        let mem = self.st.mem_avail[idx];
        if demand.mem > mem {
            return Err(StateError::InsufficientMem {
                cn,
                requested: demand.mem,
                available: mem,
            });
        }
        self.st.journal.push(JournalEntry::Cpu(cn, cpu));
        self.st.cpu_avail[idx] = cpu - demand.cpu;
        self.st.journal.push(JournalEntry::Mem(cn, mem));
        self.st.mem_avail[idx] = mem - demand.mem;
        self.vm_hosts[vm] = Some(cn);
        self.order.push(AnRef::Vm(vm));
        Ok(self.reserve_ready_links(AnRef::Vm(vm)))
    }

    /// Places a data block, debiting storage and reserving every link whose
    /// peer is already placed.
    pub fn place_db(&mut self, db: usize, sn: SnId) -> Result<u32, StateError> {
        debug_assert!(self.db_hosts[db].is_none(), "data block placed twice");
        let demand = self.ae.dbs()[db].storage;
        let idx = sn.0 as usize;
        let avail = self.st.str_avail[idx];
        if demand > avail {
            return Err(StateError::InsufficientStr {
                sn,
                requested: demand,
                available: avail,
            });
        }
        self.st.journal.push(JournalEntry::Str(sn, avail));
        self.st.str_avail[idx] = avail - demand;
        self.db_hosts[db] = Some(sn);
        self.order.push(AnRef::Db(db));
        Ok(self.reserve_ready_links(AnRef::Db(db)))
    }

    fn reserve_ready_links(&mut self, an: AnRef) -> u32 {
        let my_node = self.an_node(an).expect("an was just placed");
        let mut consumed = 0;
        for &(vl, peer) in self.ae.links_of(an) {
            let vl = vl as usize;
            if self.vl_reserved[vl] {
                continue;
            }
            let Some(peer_node) = self.an_node(peer) else {
                continue;
            };
            self.vl_reserved[vl] = true;
            consumed += 1;
            if my_node == peer_node {
                continue;
            }
            let bw = self.ae.vls()[vl].bandwidth;
            self.st
                .journal
                .push(JournalEntry::Pool(my_node, peer_node, self.st.pools.raw_get(my_node, peer_node)));
            self.st.pools.reserve_overcommit(my_node, peer_node, bw);
            let (a, b) = if my_node <= peer_node {
                (my_node, peer_node)
            } else {
                (peer_node, my_node)
            };
            self.reservations.push(Reservation { a, b, bandwidth: bw });
        }
        self.ntpp_links += consumed;
        consumed
    }

    /// Seals the deployment into the ledger. Fails (and rolls back) unless
    /// every application node has been placed.
    pub fn commit(mut self) -> Result<DeploySummary, StateError> {
        if self.vm_hosts.iter().any(Option::is_none)
            || self.db_hosts.iter().any(Option::is_none)
        {
            return Err(StateError::IncompleteAssignment);
        }
        let vm_hosts: Vec<CnId> = self.vm_hosts.iter().map(|h| h.unwrap()).collect();
        let db_hosts: Vec<SnId> = self.db_hosts.iter().map(|h| h.unwrap()).collect();

        let mut per_vl_costs = Vec::with_capacity(self.ae.vls().len());
        let mut total_cost = 0.0;
        for vl in self.ae.vls() {
            let c = link_cost(&self.st.dc, self.ae, vl, &vm_hosts, &db_hosts);
            per_vl_costs.push(c);
            total_cost += c;
        }

        let record = DeploymentRecord {
            ae: self.ae.clone(),
            vm_hosts,
            db_hosts,
            placement_order: std::mem::take(&mut self.order),
            reservations: std::mem::take(&mut self.reservations),
            per_vl_costs: per_vl_costs.clone(),
            total_cost,
        };
        let summary = DeploySummary {
            total_cost,
            per_vl_costs,
            ntpp_links: self.ntpp_links,
            an_steps: record.placement_order.len() as u32,
        };
        self.st.journal.clear();
        self.st.deployed.insert(std::mem::take(&mut self.id), record);
        self.committed = true;
        Ok(summary)
    }

    /// Discards the transaction, restoring the state bit-for-bit.
    pub fn abort(self) {}
}
