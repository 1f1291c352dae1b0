//! Three-tier data-center topology: node inventory, tree wiring, hop
//! distances, and pairwise bandwidth pools.
//!
//! A data center of size `n` (a positive multiple of 36) contains `n` compute
//! servers, `n/4` storage devices and a three-layer switching fabric, wired as
//! a tree. Capacity is expressed in *facets*: a compute facet (CN) is one unit
//! of cpu plus one unit of memory, a storage facet (SN) one unit of storage.
//! High-end storage devices and core switches are multi-function and carry a
//! compute facet in addition to their primary role, which yields `7n/6`
//! compute facets and `n/4` storage facets overall.
//!
//! Bandwidth is modelled as one pool of capacity 1.0 per unordered pair of
//! physical nodes. Traffic between two facets of the same node is a memory
//! copy: distance zero, unlimited bandwidth. The tree is used for routing
//! only, i.e. for hop counts and for attributing reserved traffic to the
//! switches it traverses.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Physical node index within one topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Compute facet index (position in the CN list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CnId(pub u32);

/// Storage facet index (position in the SN list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node{}", self.0)
    }
}

impl fmt::Display for CnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cn{}", self.0)
    }
}

impl fmt::Display for SnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sn{}", self.0)
    }
}

/// What a physical node is and which facets it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    /// Compute server: one compute facet.
    Server,
    /// High-end storage device with spare computing: compute + storage facet.
    HighEndStorage,
    /// Regular storage device: one storage facet.
    RegularStorage,
    /// Core switch with spare computing: switching + one compute facet.
    CoreSwitch,
    AggregationSwitch,
    /// Access switch on the computing side (uplinks servers to aggregation).
    ComputeAccessSwitch,
    /// Access switch on the storage side (uplinks storage devices to core).
    StorageAccessSwitch,
}

/// Switching layer of the fabric; both access flavours report `Access`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchLayer {
    Access,
    Aggregation,
    Core,
}

impl NodeKind {
    pub fn has_compute_facet(self) -> bool {
        matches!(
            self,
            NodeKind::Server | NodeKind::HighEndStorage | NodeKind::CoreSwitch
        )
    }

    pub fn has_storage_facet(self) -> bool {
        matches!(self, NodeKind::HighEndStorage | NodeKind::RegularStorage)
    }

    pub fn switch_layer(self) -> Option<SwitchLayer> {
        match self {
            NodeKind::CoreSwitch => Some(SwitchLayer::Core),
            NodeKind::AggregationSwitch => Some(SwitchLayer::Aggregation),
            NodeKind::ComputeAccessSwitch | NodeKind::StorageAccessSwitch => {
                Some(SwitchLayer::Access)
            }
            _ => None,
        }
    }

    pub fn is_switch(self) -> bool {
        self.switch_layer().is_some()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("data-center size {0} is not a positive multiple of 36")]
    InvalidSize(usize),
    #[error("distance factor must be positive and finite, got {0}")]
    InvalidDistanceFactor(f64),
    #[error("topology needs at least one node")]
    Empty,
    #[error("edge references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("{0} appears as a child in more than one edge")]
    DuplicateParent(NodeId),
    #[error("expected exactly one root node, found {0}")]
    RootCount(usize),
    #[error("edge set does not connect all nodes into a single tree")]
    Disconnected,
}

/// Node counts per kind, plus derived facet totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeCensus {
    pub servers: usize,
    pub high_end_storage: usize,
    pub regular_storage: usize,
    pub core_switches: usize,
    pub aggregation_switches: usize,
    pub compute_access_switches: usize,
    pub storage_access_switches: usize,
    pub compute_facets: usize,
    pub storage_facets: usize,
    pub nodes: usize,
    pub edges: usize,
}

/// JSON form of a topology; edges are listed parent-to-child so an import
/// reconstructs the exact tree orientation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyDocument {
    pub schema: String,
    pub df: f64,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: u32,
    pub kind: NodeKind,
}

pub const TOPOLOGY_SCHEMA: &str = "placelab.topology.v1";

/// Immutable data-center structure. Mutable placement bookkeeping (facet
/// residuals, bandwidth pools) lives in `model::PlacementState`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCenterTopology {
    n: usize,
    df: f64,
    kinds: Vec<NodeKind>,
    parent: Vec<Option<NodeId>>,
    depth: Vec<u32>,
    degree: Vec<u32>,
    cn_nodes: Vec<NodeId>,
    sn_nodes: Vec<NodeId>,
    cn_at: Vec<Option<CnId>>,
    sn_at: Vec<Option<SnId>>,
}

impl DataCenterTopology {
    /// Builds the standard data center of size `n`.
    ///
    /// Inventory: `n` servers, `5n/36` high-end plus `4n/36` regular storage
    /// devices, `n/36` core, `n/18` aggregation and `5n/12` access switches
    /// (`n/3` compute-side, `n/12` storage-side). Wiring, all round-robin by
    /// index: 3 servers per compute access switch, 6 of those per aggregation
    /// switch, 2 aggregation switches per core; 3 storage devices per storage
    /// access switch, which attaches directly to a core switch. Core switches
    /// beyond the first link back to the first, keeping the graph a tree.
    pub fn build(n: usize, df: f64) -> Result<Self, TopologyError> {
        if n == 0 || !n.is_multiple_of(36) {
            return Err(TopologyError::InvalidSize(n));
        }
        if !(df.is_finite() && df > 0.0) {
            return Err(TopologyError::InvalidDistanceFactor(df));
        }

        let servers = n;
        let high_end = 5 * n / 36;
        let regular = 4 * n / 36;
        let cores = n / 36;
        let aggs = n / 18;
        let acc_c = n / 3;
        let acc_s = n / 12;

        let he_base = servers;
        let reg_base = he_base + high_end;
        let core_base = reg_base + regular;
        let agg_base = core_base + cores;
        let accc_base = agg_base + aggs;
        let accs_base = accc_base + acc_c;
        let total = accs_base + acc_s;

        let mut kinds = Vec::with_capacity(total);
        kinds.extend(std::iter::repeat_n(NodeKind::Server, servers));
        kinds.extend(std::iter::repeat_n(NodeKind::HighEndStorage, high_end));
        kinds.extend(std::iter::repeat_n(NodeKind::RegularStorage, regular));
        kinds.extend(std::iter::repeat_n(NodeKind::CoreSwitch, cores));
        kinds.extend(std::iter::repeat_n(NodeKind::AggregationSwitch, aggs));
        kinds.extend(std::iter::repeat_n(NodeKind::ComputeAccessSwitch, acc_c));
        kinds.extend(std::iter::repeat_n(NodeKind::StorageAccessSwitch, acc_s));

        let mut parent: Vec<Option<NodeId>> = vec![None; total];
        for (i, slot) in parent.iter_mut().enumerate().take(servers) {
            *slot = Some(NodeId((accc_base + i % acc_c) as u32));
        }
        // High-end and regular devices are contiguous, so one storage index
        // covers both when striping them across the storage access switches.
        for d in 0..(high_end + regular) {
            parent[he_base + d] = Some(NodeId((accs_base + d % acc_s) as u32));
        }
        for c in 1..cores {
            parent[core_base + c] = Some(NodeId(core_base as u32));
        }
        for a in 0..aggs {
            parent[agg_base + a] = Some(NodeId((core_base + a % cores) as u32));
        }
        for j in 0..acc_c {
            parent[accc_base + j] = Some(NodeId((agg_base + j % aggs) as u32));
        }
        for m in 0..acc_s {
            parent[accs_base + m] = Some(NodeId((core_base + m % cores) as u32));
        }

        Self::assemble(n, df, kinds, parent)
    }

    /// Builds a topology from an explicit node list and parent-to-child edge
    /// list. Used by the JSON importer and by small hand-made test fabrics.
    pub fn from_parts(
        df: f64,
        kinds: Vec<NodeKind>,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self, TopologyError> {
        if kinds.is_empty() {
            return Err(TopologyError::Empty);
        }
        if !(df.is_finite() && df > 0.0) {
            return Err(TopologyError::InvalidDistanceFactor(df));
        }
        let total = kinds.len();
        let mut parent: Vec<Option<NodeId>> = vec![None; total];
        let mut has_parent = vec![false; total];
        for &(p, c) in edges {
            if p.0 as usize >= total {
                return Err(TopologyError::UnknownNode(p));
            }
            if c.0 as usize >= total {
                return Err(TopologyError::UnknownNode(c));
            }
            if has_parent[c.0 as usize] {
                return Err(TopologyError::DuplicateParent(c));
            }
            has_parent[c.0 as usize] = true;
            parent[c.0 as usize] = Some(p);
        }
        let n = kinds.iter().filter(|k| **k == NodeKind::Server).count();
        Self::assemble(n, df, kinds, parent)
    }

    fn assemble(
        n: usize,
        df: f64,
        kinds: Vec<NodeKind>,
        parent: Vec<Option<NodeId>>,
    ) -> Result<Self, TopologyError> {
        let total = kinds.len();
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(TopologyError::RootCount(roots));
        }

        // Walking to the root from every node both derives depths and proves
        // connectivity (a cycle would walk forever, so cap at `total` steps).
        let mut depth = vec![u32::MAX; total];
        for start in 0..total {
            let mut chain = Vec::new();
            let mut cur = start;
            let mut steps = 0usize;
            while depth[cur] == u32::MAX {
                chain.push(cur);
                steps += 1;
                if steps > total {
                    return Err(TopologyError::Disconnected);
                }
                match parent[cur] {
                    Some(p) => cur = p.0 as usize,
                    None => {
                        depth[cur] = 0;
                        chain.pop();
                        break;
                    }
                }
            }
            let mut d = depth[cur];
            for &node in chain.iter().rev() {
                d += 1;
                depth[node] = d;
            }
        }

        let mut degree = vec![0u32; total];
        for (child, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                degree[child] += 1;
                degree[p.0 as usize] += 1;
            }
        }

        let mut cn_nodes = Vec::new();
        let mut sn_nodes = Vec::new();
        let mut cn_at = vec![None; total];
        let mut sn_at = vec![None; total];
        for (i, kind) in kinds.iter().enumerate() {
            if kind.has_compute_facet() {
                cn_at[i] = Some(CnId(cn_nodes.len() as u32));
                cn_nodes.push(NodeId(i as u32));
            }
            if kind.has_storage_facet() {
                sn_at[i] = Some(SnId(sn_nodes.len() as u32));
                sn_nodes.push(NodeId(i as u32));
            }
        }

        Ok(Self {
            n,
            df,
            kinds,
            parent,
            depth,
            degree,
            cn_nodes,
            sn_nodes,
            cn_at,
            sn_at,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn node_kind(&self, node: NodeId) -> NodeKind {
        self.kinds[node.0 as usize]
    }

    /// Number of tree links attached to the node; a switch's port capacity is
    /// `degree x 1.0` pool units.
    pub fn degree(&self, node: NodeId) -> u32 {
        self.degree[node.0 as usize]
    }

    pub fn cn_count(&self) -> usize {
        self.cn_nodes.len()
    }

    pub fn sn_count(&self) -> usize {
        self.sn_nodes.len()
    }

    /// Physical node carrying the given compute facet.
    pub fn cn_node(&self, cn: CnId) -> NodeId {
        self.cn_nodes[cn.0 as usize]
    }

    /// Physical node carrying the given storage facet.
    pub fn sn_node(&self, sn: SnId) -> NodeId {
        self.sn_nodes[sn.0 as usize]
    }

    pub fn cn_of(&self, node: NodeId) -> Option<CnId> {
        self.cn_at[node.0 as usize]
    }

    pub fn sn_of(&self, node: NodeId) -> Option<SnId> {
        self.sn_at[node.0 as usize]
    }

    pub fn switches(&self) -> impl Iterator<Item = (NodeId, SwitchLayer)> + '_ {
        self.kinds.iter().enumerate().filter_map(|(i, k)| {
            k.switch_layer().map(|layer| (NodeId(i as u32), layer))
        })
    }

    /// Length of the tree path between two nodes, in links.
    pub fn hops(&self, a: NodeId, b: NodeId) -> u32 {
        let mut x = a.0 as usize;
        let mut y = b.0 as usize;
        if x == y {
            return 0;
        }
        let mut dx = self.depth[x];
        let mut dy = self.depth[y];
        let mut h = 0;
        while dx > dy {
            x = self.parent[x].expect("non-root node has a parent").0 as usize;
            dx -= 1;
            h += 1;
        }
        while dy > dx {
            y = self.parent[y].expect("non-root node has a parent").0 as usize;
            dy -= 1;
            h += 1;
        }
        while x != y {
            x = self.parent[x].expect("non-root node has a parent").0 as usize;
            y = self.parent[y].expect("non-root node has a parent").0 as usize;
            h += 2;
        }
        h
    }

    /// Communication distance between two nodes: hops scaled by the distance
    /// factor. Zero for a node talking to itself (memory copy).
    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.hops(a, b) as f64 * self.df
    }

    /// Switches on the unique tree path from `a` to `b` (inclusive of the
    /// endpoints when those are switches), in path order. Empty when `a == b`.
    pub fn route_switches(&self, a: NodeId, b: NodeId) -> Vec<(NodeId, SwitchLayer)> {
        if a == b {
            return Vec::new();
        }
        let mut up_a = Vec::new();
        let mut up_b = Vec::new();
        let mut x = a.0 as usize;
        let mut y = b.0 as usize;
        let mut dx = self.depth[x];
        let mut dy = self.depth[y];
        while dx > dy {
            up_a.push(x);
            x = self.parent[x].expect("non-root node has a parent").0 as usize;
            dx -= 1;
        }
        while dy > dx {
            up_b.push(y);
            y = self.parent[y].expect("non-root node has a parent").0 as usize;
            dy -= 1;
        }
        while x != y {
            up_a.push(x);
            up_b.push(y);
            x = self.parent[x].expect("non-root node has a parent").0 as usize;
            y = self.parent[y].expect("non-root node has a parent").0 as usize;
        }
        up_a.push(x); // the meeting point
        let path = up_a.into_iter().chain(up_b.into_iter().rev());
        path.filter_map(|i| {
            self.kinds[i]
                .switch_layer()
                .map(|layer| (NodeId(i as u32), layer))
        })
        .collect()
    }

    pub fn census(&self) -> NodeCensus {
        let mut c = NodeCensus {
            servers: 0,
            high_end_storage: 0,
            regular_storage: 0,
            core_switches: 0,
            aggregation_switches: 0,
            compute_access_switches: 0,
            storage_access_switches: 0,
            compute_facets: self.cn_nodes.len(),
            storage_facets: self.sn_nodes.len(),
            nodes: self.kinds.len(),
            edges: self.parent.iter().filter(|p| p.is_some()).count(),
        };
        for kind in &self.kinds {
            match kind {
                NodeKind::Server => c.servers += 1,
                NodeKind::HighEndStorage => c.high_end_storage += 1,
                NodeKind::RegularStorage => c.regular_storage += 1,
                NodeKind::CoreSwitch => c.core_switches += 1,
                NodeKind::AggregationSwitch => c.aggregation_switches += 1,
                NodeKind::ComputeAccessSwitch => c.compute_access_switches += 1,
                NodeKind::StorageAccessSwitch => c.storage_access_switches += 1,
            }
        }
        c
    }

    pub fn to_document(&self) -> TopologyDocument {
        TopologyDocument {
            schema: TOPOLOGY_SCHEMA.to_string(),
            df: self.df,
            nodes: self
                .kinds
                .iter()
                .enumerate()
                .map(|(i, k)| NodeDocument {
                    id: i as u32,
                    kind: *k,
                })
                .collect(),
            edges: self
                .parent
                .iter()
                .enumerate()
                .filter_map(|(child, p)| p.map(|p| (p.0, child as u32)))
                .collect(),
        }
    }

    pub fn from_document(doc: &TopologyDocument) -> Result<Self, TopologyError> {
        let mut kinds = vec![None; doc.nodes.len()];
        for node in &doc.nodes {
            let slot = kinds
                .get_mut(node.id as usize)
                .ok_or(TopologyError::UnknownNode(NodeId(node.id)))?;
            *slot = Some(node.kind);
        }
        let kinds: Vec<NodeKind> = kinds
            .into_iter()
            .enumerate()
            .map(|(i, k)| k.ok_or(TopologyError::UnknownNode(NodeId(i as u32))))
            .collect::<Result<_, _>>()?;
        let edges: Vec<(NodeId, NodeId)> = doc
            .edges
            .iter()
            .map(|&(p, c)| (NodeId(p), NodeId(c)))
            .collect();
        Self::from_parts(doc.df, kinds, &edges)
    }
}

/// Bandwidth bookkeeping for node pairs. Every unordered pair of distinct
/// nodes can carry `capacity` units; a node talking to itself is a memory
/// copy and is never limited. Entries materialise lazily on first touch, so
/// an absent entry means a pristine pool.
///
/// The stored residual is a pure ledger: deployment reservations debit it
/// without a floor, so it can run below zero when the links placed onto one
/// pair outgrow it. `available` clamps the view at zero; consumers that need
/// the raw ledger read `entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthPools {
    capacity: f64,
    avail: BTreeMap<(NodeId, NodeId), f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error(
        "cannot reserve {requested} on pool {a}-{b}: only {available} available"
    )]
    OverReservation {
        a: NodeId,
        b: NodeId,
        requested: f64,
        available: f64,
    },
    #[error(
        "cannot release {requested} on pool {a}-{b}: only {reserved} is reserved"
    )]
    OverRelease {
        a: NodeId,
        b: NodeId,
        requested: f64,
        reserved: f64,
    },
}

fn pool_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl BandwidthPools {
    pub fn new(capacity: f64) -> Self {
        assert!(capacity > 0.0, "pool capacity must be positive");
        Self {
            capacity,
            avail: BTreeMap::new(),
        }
    }

    pub fn pair_capacity(&self) -> f64 {
        self.capacity
    }

    /// Remaining bandwidth between two nodes; infinite on the diagonal,
    /// never negative (an overdrawn ledger reads as 0).
    pub fn available(&self, a: NodeId, b: NodeId) -> f64 {
        if a == b {
            return f64::INFINITY;
        }
        self.avail
            .get(&pool_key(a, b))
            .copied()
            .unwrap_or(self.capacity)
            .max(0.0)
    }

    /// Takes `bw` out of the pair pool. Intra-node traffic is a no-op.
    pub fn reserve(&mut self, a: NodeId, b: NodeId, bw: f64) -> Result<(), PoolError> {
        debug_assert!(bw > 0.0, "reservations must be positive");
        if a == b {
            return Ok(());
        }
        let key = pool_key(a, b);
        let avail = self.avail.get(&key).copied().unwrap_or(self.capacity);
        if bw > avail {
            return Err(PoolError::OverReservation {
                a: key.0,
                b: key.1,
                requested: bw,
                available: avail,
            });
        }
        self.avail.insert(key, avail - bw);
        Ok(())
    }

    /// Takes `bw` out of the pair pool with no floor: the ledger may go
    /// negative, after which `available` reports 0. Intra-node traffic is a
    /// no-op.
    pub fn reserve_overcommit(&mut self, a: NodeId, b: NodeId, bw: f64) {
        debug_assert!(bw > 0.0, "reservations must be positive");
        if a == b {
            return;
        }
        let key = pool_key(a, b);
        let avail = self.avail.get(&key).copied().unwrap_or(self.capacity);
        self.avail.insert(key, avail - bw);
    }

    /// Returns `bw` to the pair pool. Intra-node traffic is a no-op.
    pub fn release(&mut self, a: NodeId, b: NodeId, bw: f64) -> Result<(), PoolError> {
        debug_assert!(bw > 0.0, "releases must be positive");
        if a == b {
            return Ok(());
        }
        let key = pool_key(a, b);
        let avail = self.avail.get(&key).copied().unwrap_or(self.capacity);
        let reserved = self.capacity - avail;
        if bw > reserved {
            return Err(PoolError::OverRelease {
                a: key.0,
                b: key.1,
                requested: bw,
                reserved,
            });
        }
        let restored = avail + bw;
        if restored == self.capacity {
            self.avail.remove(&key);
        } else {
            self.avail.insert(key, restored);
        }
        Ok(())
    }

    /// Touched pools and their remaining bandwidth (pristine pools omitted).
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.avail.iter().map(|(&(a, b), &v)| (a, b, v))
    }

    pub(crate) fn raw_get(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.avail.get(&pool_key(a, b)).copied()
    }

    pub(crate) fn raw_set(&mut self, a: NodeId, b: NodeId, value: Option<f64>) {
        let key = pool_key(a, b);
        match value {
            Some(v) => {
                self.avail.insert(key, v);
            }
            None => {
                self.avail.remove(&key);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_inventory_matches_derivation() {
        let dc = DataCenterTopology::build(36, 2.0).unwrap();
        let c = dc.census();
        assert_eq!(c.servers, 36);
        assert_eq!(c.high_end_storage, 5);
        assert_eq!(c.regular_storage, 4);
        assert_eq!(c.core_switches, 1);
        assert_eq!(c.aggregation_switches, 2);
        assert_eq!(c.compute_access_switches, 12);
        assert_eq!(c.storage_access_switches, 3);
        assert_eq!(c.compute_facets, 42);
        assert_eq!(c.storage_facets, 9);
    }

    #[test]
    fn facet_count_identities_hold_across_sizes() {
        for n in [36, 72, 144, 288, 1152] {
            let dc = DataCenterTopology::build(n, 1.0).unwrap();
            let c = dc.census();
            assert_eq!(c.compute_facets, 7 * n / 6, "n={n}");
            assert_eq!(c.storage_facets, n / 4, "n={n}");
            assert_eq!(
                c.nodes,
                n + n / 4 + n / 36 + n / 18 + 5 * n / 12,
                "n={n}"
            );
            assert_eq!(c.edges, c.nodes - 1, "n={n}: tree edge count");
        }
    }

    #[test]
    fn rejects_sizes_off_the_grid() {
        assert_eq!(
            DataCenterTopology::build(35, 2.0).unwrap_err(),
            TopologyError::InvalidSize(35)
        );
        assert_eq!(
            DataCenterTopology::build(0, 2.0).unwrap_err(),
            TopologyError::InvalidSize(0)
        );
        assert_eq!(
            DataCenterTopology::build(36, 0.0).unwrap_err(),
            TopologyError::InvalidDistanceFactor(0.0)
        );
    }

    #[test]
    fn every_node_reaches_the_root() {
        let dc = DataCenterTopology::build(144, 2.0).unwrap();
        for i in 0..dc.node_count() {
            // depth is only finite when the parent walk terminated at the root
            assert!(dc.depth[i] < dc.node_count() as u32);
        }
    }

    #[test]
    fn hop_counts_match_hand_traced_paths() {
        let dc = DataCenterTopology::build(36, 2.0).unwrap();
        let s0 = NodeId(0);
        assert_eq!(dc.hops(s0, s0), 0);
        // servers 0 and 12 share compute access switch 0 (12 % 12 == 0)
        assert_eq!(dc.hops(s0, NodeId(12)), 2);
        // server 2 sits under access switch 2, same aggregation switch as 0
        assert_eq!(dc.hops(s0, NodeId(2)), 4);
        // server 1 is under aggregation switch 1: up to the core and back down
        assert_eq!(dc.hops(s0, NodeId(1)), 6);
    }

    #[test]
    fn distance_scales_linearly_with_the_factor() {
        let a = NodeId(0);
        let b = NodeId(1);
        let base = DataCenterTopology::build(36, 2.0).unwrap();
        assert_eq!(base.distance(a, b), 12.0);
        for k in [2.0, 4.0, 8.0] {
            let scaled = DataCenterTopology::build(36, 2.0 * k).unwrap();
            assert_eq!(scaled.distance(a, b), k * base.distance(a, b));
        }
    }

    #[test]
    fn routes_collect_the_traversed_switches() {
        let dc = DataCenterTopology::build(36, 2.0).unwrap();
        assert!(dc.route_switches(NodeId(0), NodeId(0)).is_empty());

        // same access switch: exactly that switch
        let route = dc.route_switches(NodeId(0), NodeId(12));
        assert_eq!(route.len(), 1);
        assert_eq!(route[0].1, SwitchLayer::Access);

        // server to a storage device always crosses the core layer
        let storage = dc.sn_node(SnId(0));
        let route = dc.route_switches(NodeId(0), storage);
        assert!(route.iter().any(|(_, l)| *l == SwitchLayer::Core));
        assert_eq!(route.len() + 1, dc.hops(NodeId(0), storage) as usize);
    }

    #[test]
    fn multi_core_fabric_stays_connected() {
        // n=144 has 4 core switches; paths across them exist and stay sane
        let dc = DataCenterTopology::build(144, 1.0).unwrap();
        let c = dc.census();
        assert_eq!(c.core_switches, 4);
        // server 0 hangs under aggregation 0 -> core 0; server 1 under
        // aggregation 1 -> core 1, so the path crosses the core-to-core link
        assert_eq!(dc.hops(NodeId(0), NodeId(1)), 7);
    }

    #[test]
    fn pool_reservations_and_releases_balance() {
        let mut pools = BandwidthPools::new(1.0);
        let (a, b) = (NodeId(3), NodeId(7));
        assert_eq!(pools.available(a, b), 1.0);
        pools.reserve(a, b, 0.4).unwrap();
        assert_eq!(pools.available(a, b), 0.6);
        assert_eq!(pools.available(b, a), 0.6, "pools are unordered");
        let err = pools.reserve(a, b, 0.7).unwrap_err();
        assert!(matches!(err, PoolError::OverReservation { .. }));
        assert_eq!(pools.available(a, b), 0.6, "failed reserve changes nothing");
        pools.release(a, b, 0.4).unwrap();
        assert_eq!(pools.available(a, b), 1.0);
        assert_eq!(pools.entries().count(), 0, "restored pool leaves no entry");
        assert!(matches!(
            pools.release(a, b, 0.1),
            Err(PoolError::OverRelease { .. })
        ));
    }

    #[test]
    fn intra_node_bandwidth_is_unlimited() {
        let mut pools = BandwidthPools::new(1.0);
        let x = NodeId(5);
        assert_eq!(pools.available(x, x), f64::INFINITY);
        pools.reserve(x, x, 123.0).unwrap();
        assert_eq!(pools.available(x, x), f64::INFINITY);
        assert_eq!(pools.entries().count(), 0);
    }

    #[test]
    fn document_round_trip_reproduces_the_topology() {
        let dc = DataCenterTopology::build(72, 4.0).unwrap();
        let json = serde_json::to_string(&dc.to_document()).unwrap();
        let doc: TopologyDocument = serde_json::from_str(&json).unwrap();
        let back = DataCenterTopology::from_document(&doc).unwrap();
        assert_eq!(dc, back);
    }

    #[test]
    fn import_rejects_broken_edge_sets() {
        let mut doc = DataCenterTopology::build(36, 2.0).unwrap().to_document();
        doc.edges.pop();
        assert_eq!(
            DataCenterTopology::from_document(&doc).unwrap_err(),
            TopologyError::RootCount(2)
        );
    }
}
