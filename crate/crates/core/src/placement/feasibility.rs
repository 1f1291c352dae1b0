//! Candidate evaluation shared by the placement algorithms.
//!
//! While a transaction is open, an unplaced application node has a *peer
//! profile*: the bandwidth its not-yet-reserved links demand towards peers
//! that already sit on physical nodes. A candidate host is feasible when
//! each of those links individually fits the pool it would draw on; links
//! to peers on the host itself are free. Only when one step drops two VMs
//! onto the same compute facet are their demands towards a shared peer
//! added up, because both reservations then hit the pool at once. Cost is
//! the same demand weighted by distance.

use crate::model::{AnRef, PlacementState, Txn, VirtualMachine};
use crate::topology::{BandwidthPools, CnId, DataCenterTopology, NodeId, SnId};

/// Bandwidth an unplaced node will need towards already-placed peers.
#[derive(Debug, Clone, Default)]
pub(crate) struct PeerProfile {
    /// One entry per pending link, in AE link order: (peer, its node, bw).
    links: Vec<(AnRef, NodeId, f64)>,
}

impl PeerProfile {
    /// Profile of `an` in the current transaction: links that are not yet
    /// reserved and whose peer is placed.
    pub(crate) fn of(txn: &Txn<'_>, an: AnRef) -> Self {
        let ae = txn.ae();
        let mut links = Vec::new();
        for &(vl, peer) in ae.links_of(an) {
            if txn.vl_consumed(vl as usize) {
                continue;
            }
            let Some(peer_node) = txn.an_node(peer) else {
                continue;
            };
            links.push((peer, peer_node, ae.vls()[vl as usize].bandwidth));
        }
        Self { links }
    }

    /// Would every pending link fit its pool from `host`, each checked on
    /// its own? Peers on `host` itself cost nothing.
    pub(crate) fn feasible_from(&self, pools: &BandwidthPools, host: NodeId) -> bool {
        self.links
            .iter()
            .all(|&(_, node, bw)| node == host || bw <= pools.available(host, node))
    }

    /// Communication cost of serving the profile from `host`: bandwidth
    /// times distance, summed in AE link order.
    pub(crate) fn cost_from(&self, dc: &DataCenterTopology, host: NodeId) -> f64 {
        self.links
            .iter()
            .map(|&(_, node, bw)| bw * dc.distance(host, node))
            .sum()
    }
}

pub(crate) fn vm_fits(st: &PlacementState, vm: &VirtualMachine, cn: CnId) -> bool {
    vm.cpu <= st.cpu_available(cn) && vm.mem <= st.mem_available(cn)
}

pub(crate) fn vm_pair_fits(
    st: &PlacementState,
    vm1: &VirtualMachine,
    vm2: &VirtualMachine,
    cn: CnId,
) -> bool {
    vm1.cpu + vm2.cpu <= st.cpu_available(cn) && vm1.mem + vm2.mem <= st.mem_available(cn)
}

pub(crate) fn db_fits(st: &PlacementState, storage: f64, sn: SnId) -> bool {
    storage <= st.str_available(sn)
}

/// Bandwidth check for placing a VM on node `u` and its block on node `w`
/// in one step. The link between them must fit the `u`-`w` pool (free when
/// the nodes coincide); each side's other pending links are checked on
/// their own, exactly as in the single-endpoint cases.
pub(crate) fn data_pair_feasible(
    pools: &BandwidthPools,
    u: NodeId,
    vm_profile: &PeerProfile,
    w: NodeId,
    db_profile: &PeerProfile,
    link_bw: f64,
) -> bool {
    if u != w && link_bw > pools.available(u, w) {
        return false;
    }
    vm_profile.feasible_from(pools, u) && db_profile.feasible_from(pools, w)
}

/// Bandwidth check for placing two VMs in one step. On distinct nodes each
/// side stands alone plus the link itself; on a shared compute facet both
/// reservations hit the pools at once, so demands towards a common peer are
/// summed before the comparison.
pub(crate) fn vm_pair_feasible(
    pools: &BandwidthPools,
    u: NodeId,
    p1: &PeerProfile,
    w: NodeId,
    p2: &PeerProfile,
    link_bw: f64,
) -> bool {
    if u != w {
        return link_bw <= pools.available(u, w)
            && p1.feasible_from(pools, u)
            && p2.feasible_from(pools, w)
    }
    // joint demand per peer: a peer linked to both VMs loads its pool with
    // the sum of both bandwidths
    for &(peer, node, bw) in &p1.links {
        if node == u {
            continue;
        }
        let joint: f64 = bw
            + p2.links
                .iter()
                .filter(|&&(q, _, _)| q == peer)
                .map(|&(_, _, b)| b)
                .sum::<f64>();
        if joint > pools.available(u, node) {
            return false;
        }
    }
    for &(peer, node, bw) in &p2.links {
        if node == u || p1.links.iter().any(|&(q, _, _)| q == peer) {
            continue;
        }
        if bw > pools.available(u, node) {
            return false;
        }
    }
    true
}
