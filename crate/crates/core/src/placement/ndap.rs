//! Network- and data-location-aware placement.
//!
//! The heuristic walks the AE's links, heaviest first, and decides hosts per
//! link rather than per node: data links before compute links, because data
//! traffic is the dominant cost and blocks are the least mobile. Each step
//! scans candidate facets for the link's unplaced endpoint(s) and takes the
//! assignment whose marginal cost (this link plus every other pending link
//! to an already-placed peer, bandwidth times distance) is smallest. Ties
//! keep the first candidate in facet-id order, which makes runs with equal
//! inputs reproduce decision for decision.
//!
//! Placing an endpoint immediately reserves all its links to placed peers,
//! so later steps see the narrowed pools. A step with no feasible candidate
//! aborts the whole deployment.

use super::feasibility::{
    data_pair_feasible, db_fits, vm_fits, vm_pair_feasible, vm_pair_fits, PeerProfile,
};
use super::{DecisionStep, PlaceError, PlacementOutcome, StepCase};
use crate::model::{AnRef, ApplicationEnvironment, LinkKind, PlacementState, Txn};
use crate::topology::{CnId, SnId};

pub(super) fn place(
    st: &mut PlacementState,
    id: &str,
    ae: &ApplicationEnvironment,
    mut trace: Option<&mut Vec<DecisionStep>>,
) -> Result<PlacementOutcome, PlaceError> {
    let mut txn = st.begin(id, ae)?;

    let mut data_links: Vec<usize> = Vec::new();
    let mut compute_links: Vec<usize> = Vec::new();
    for (i, vl) in ae.vls().iter().enumerate() {
        match vl.kind {
            LinkKind::Data => data_links.push(i),
            LinkKind::Compute => compute_links.push(i),
        }
    }
    // stable sorts keep AE order among equal bandwidths
    let by_bw_desc = |a: &usize, b: &usize| {
        ae.vls()[*b]
            .bandwidth
            .partial_cmp(&ae.vls()[*a].bandwidth)
            .expect("bandwidths are finite")
    };
    data_links.sort_by(by_bw_desc);
    compute_links.sort_by(by_bw_desc);

    for vl in data_links {
        let (AnRef::Vm(vm), AnRef::Db(db)) = (ae.vls()[vl].a, ae.vls()[vl].b) else {
            unreachable!("data links are normalised to (vm, db)");
        };
        let done = match (txn.vm_host(vm).is_some(), txn.db_host(db).is_some()) {
            (false, false) => data_link_pair(&mut txn, vl, vm, db, trace.as_deref_mut())?,
            (false, true) => one_vm_side(
                &mut txn,
                StepCase::DataLinkVmSide,
                Some(vl),
                vm,
                trace.as_deref_mut(),
            )?,
            (true, false) => db_side(&mut txn, vl, db, trace.as_deref_mut())?,
            (true, true) => true,
        };
        if !done {
            return Ok(PlacementOutcome::Infeasible);
        }
    }

    for vl in compute_links {
        let (AnRef::Vm(vm1), AnRef::Vm(vm2)) = (ae.vls()[vl].a, ae.vls()[vl].b) else {
            unreachable!("compute links join two VMs");
        };
        let done = match (txn.vm_host(vm1).is_some(), txn.vm_host(vm2).is_some()) {
            (false, false) => compute_link_pair(&mut txn, vl, vm1, vm2, trace.as_deref_mut())?,
            (false, true) => one_vm_side(
                &mut txn,
                StepCase::ComputeLinkOneSide,
                Some(vl),
                vm1,
                trace.as_deref_mut(),
            )?,
            (true, false) => one_vm_side(
                &mut txn,
                StepCase::ComputeLinkOneSide,
                Some(vl),
                vm2,
                trace.as_deref_mut(),
            )?,
            (true, true) => true,
        };
        if !done {
            return Ok(PlacementOutcome::Infeasible);
        }
    }

    // nodes no link ever touched (degree zero) still need a host
    for vm in 0..ae.n_v() {
        if txn.vm_host(vm).is_none()
            && !one_vm_side(&mut txn, StepCase::Isolated, None, vm, trace.as_deref_mut())?
        {
            return Ok(PlacementOutcome::Infeasible);
        }
    }
    for db in 0..ae.n_d() {
        if txn.db_host(db).is_none() && !isolated_db(&mut txn, db, trace.as_deref_mut())? {
            return Ok(PlacementOutcome::Infeasible);
        }
    }

    Ok(PlacementOutcome::Placed(txn.commit()?))
}

/// Both endpoints of a data link are unplaced: scan every feasible
/// (compute facet, storage facet) pair and take the cheapest.
fn data_link_pair(
    txn: &mut Txn<'_>,
    vl: usize,
    vm: usize,
    db: usize,
    trace: Option<&mut Vec<DecisionStep>>,
) -> Result<bool, PlaceError> {
    let ae = txn.ae();
    let bw = ae.vls()[vl].bandwidth;
    let vm_demand = ae.vms()[vm].clone();
    let db_demand = ae.dbs()[db].storage;
    let vm_profile = PeerProfile::of(txn, AnRef::Vm(vm));
    let db_profile = PeerProfile::of(txn, AnRef::Db(db));

    let (best, alternatives) = {
        let st = txn.state();
        let dc = st.topology();

        let mut cn_cands = Vec::new();
        for c in 0..dc.cn_count() as u32 {
            let cn = CnId(c);
            if !vm_fits(st, &vm_demand, cn) {
                continue;
            }
            let u = dc.cn_node(cn);
            if !vm_profile.feasible_from(st.pools(), u) {
                continue;
            }
            cn_cands.push((cn, u, vm_profile.cost_from(dc, u)));
        }
        let mut sn_cands = Vec::new();
        for s in 0..dc.sn_count() as u32 {
            let sn = SnId(s);
            if !db_fits(st, db_demand, sn) {
                continue;
            }
            let w = dc.sn_node(sn);
            if !db_profile.feasible_from(st.pools(), w) {
                continue;
            }
            sn_cands.push((sn, w, db_profile.cost_from(dc, w)));
        }

        let mut best: Option<(f64, CnId, SnId)> = None;
        let mut alternatives = 0usize;
        for &(cn, u, vm_cost) in &cn_cands {
            for &(sn, w, db_cost) in &sn_cands {
                if !data_pair_feasible(st.pools(), u, &vm_profile, w, &db_profile, bw) {
                    continue;
                }
                alternatives += 1;
                let cost = bw * dc.distance(u, w) + vm_cost + db_cost;
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, cn, sn));
                }
            }
        }
        (best, alternatives)
    };

    let Some((cost, cn, sn)) = best else {
        return Ok(false);
    };
    txn.place_vm(vm, cn)?;
    txn.place_db(db, sn)?;
    if let Some(t) = trace {
        t.push(DecisionStep {
            case: StepCase::DataLinkPair,
            link: Some(vl),
            placed: vec![
                (txn.ae().vms()[vm].id.clone(), cn.to_string()),
                (txn.ae().dbs()[db].id.clone(), sn.to_string()),
            ],
            step_cost: cost,
            alternatives,
        });
    }
    Ok(true)
}

/// An unplaced VM picks the compute facet minimising the cost of all its
/// pending links to placed peers. Serves data links, compute links and
/// isolated VMs alike; for isolated VMs the profile is empty and the first
/// fitting facet wins.
fn one_vm_side(
    txn: &mut Txn<'_>,
    case: StepCase,
    vl: Option<usize>,
    vm: usize,
    trace: Option<&mut Vec<DecisionStep>>,
) -> Result<bool, PlaceError> {
    let vm_demand = txn.ae().vms()[vm].clone();
    let profile = PeerProfile::of(txn, AnRef::Vm(vm));

    let (best, alternatives) = {
        let st = txn.state();
        let dc = st.topology();
        let mut best: Option<(f64, CnId)> = None;
        let mut alternatives = 0usize;
        for c in 0..dc.cn_count() as u32 {
            let cn = CnId(c);
            if !vm_fits(st, &vm_demand, cn) {
                continue;
            }
            let u = dc.cn_node(cn);
            if !profile.feasible_from(st.pools(), u) {
                continue;
            }
            alternatives += 1;
            let cost = profile.cost_from(dc, u);
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, cn));
            }
        }
        (best, alternatives)
    };

    let Some((cost, cn)) = best else {
        return Ok(false);
    };
    txn.place_vm(vm, cn)?;
    if let Some(t) = trace {
        t.push(DecisionStep {
            case,
            link: vl,
            placed: vec![(txn.ae().vms()[vm].id.clone(), cn.to_string())],
            step_cost: cost,
            alternatives,
        });
    }
    Ok(true)
}

/// The VM of a data link is placed; its block picks the storage facet
/// minimising the cost of all the block's pending links.
fn db_side(
    txn: &mut Txn<'_>,
    vl: usize,
    db: usize,
    trace: Option<&mut Vec<DecisionStep>>,
) -> Result<bool, PlaceError> {
    let db_demand = txn.ae().dbs()[db].storage;
    let profile = PeerProfile::of(txn, AnRef::Db(db));

    let (best, alternatives) = {
        let st = txn.state();
        let dc = st.topology();
        let mut best: Option<(f64, SnId)> = None;
        let mut alternatives = 0usize;
        for s in 0..dc.sn_count() as u32 {
            let sn = SnId(s);
            if !db_fits(st, db_demand, sn) {
                continue;
            }
            let w = dc.sn_node(sn);
            if !profile.feasible_from(st.pools(), w) {
                continue;
            }
            alternatives += 1;
            let cost = profile.cost_from(dc, w);
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, sn));
            }
        }
        (best, alternatives)
    };

    let Some((cost, sn)) = best else {
        return Ok(false);
    };
    txn.place_db(db, sn)?;
    if let Some(t) = trace {
        t.push(DecisionStep {
            case: StepCase::DataLinkDbSide,
            link: Some(vl),
            placed: vec![(txn.ae().dbs()[db].id.clone(), sn.to_string())],
            step_cost: cost,
            alternatives,
        });
    }
    Ok(true)
}

/// Both VMs of a compute link are unplaced: scan ordered compute-facet
/// pairs, sharing a facet only when it can carry both demands at once.
fn compute_link_pair(
    txn: &mut Txn<'_>,
    vl: usize,
    vm1: usize,
    vm2: usize,
    trace: Option<&mut Vec<DecisionStep>>,
) -> Result<bool, PlaceError> {
    let ae = txn.ae();
    let bw = ae.vls()[vl].bandwidth;
    let d1 = ae.vms()[vm1].clone();
    let d2 = ae.vms()[vm2].clone();
    let p1 = PeerProfile::of(txn, AnRef::Vm(vm1));
    let p2 = PeerProfile::of(txn, AnRef::Vm(vm2));

    let (best, alternatives) = {
        let st = txn.state();
        let dc = st.topology();

        let mut cands1 = Vec::new();
        let mut cands2 = Vec::new();
        for c in 0..dc.cn_count() as u32 {
            let cn = CnId(c);
            let u = dc.cn_node(cn);
            if vm_fits(st, &d1, cn) && p1.feasible_from(st.pools(), u) {
                cands1.push((cn, u, p1.cost_from(dc, u)));
            }
            if vm_fits(st, &d2, cn) && p2.feasible_from(st.pools(), u) {
                cands2.push((cn, u, p2.cost_from(dc, u)));
            }
        }

        let mut best: Option<(f64, CnId, CnId)> = None;
        let mut alternatives = 0usize;
        for &(cn1, u, c1) in &cands1 {
            for &(cn2, w, c2) in &cands2 {
                if cn1 == cn2 && !vm_pair_fits(st, &d1, &d2, cn1) {
                    continue;
                }
                if !vm_pair_feasible(st.pools(), u, &p1, w, &p2, bw) {
                    continue;
                }
                alternatives += 1;
                let cost = bw * dc.distance(u, w) + c1 + c2;
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, cn1, cn2));
                }
            }
        }
        (best, alternatives)
    };

    let Some((cost, cn1, cn2)) = best else {
        return Ok(false);
    };
    txn.place_vm(vm1, cn1)?;
    txn.place_vm(vm2, cn2)?;
    if let Some(t) = trace {
        t.push(DecisionStep {
            case: StepCase::ComputeLinkPair,
            link: Some(vl),
            placed: vec![
                (txn.ae().vms()[vm1].id.clone(), cn1.to_string()),
                (txn.ae().vms()[vm2].id.clone(), cn2.to_string()),
            ],
            step_cost: cost,
            alternatives,
        });
    }
    Ok(true)
}

/// A block no link touches takes the first storage facet that fits.
fn isolated_db(
    txn: &mut Txn<'_>,
    db: usize,
    trace: Option<&mut Vec<DecisionStep>>,
) -> Result<bool, PlaceError> {
    let db_demand = txn.ae().dbs()[db].storage;
    let (choice, alternatives) = {
        let st = txn.state();
        let dc = st.topology();
        let mut choice = None;
        let mut alternatives = 0usize;
        for s in 0..dc.sn_count() as u32 {
            let sn = SnId(s);
            if db_fits(st, db_demand, sn) {
                alternatives += 1;
                if choice.is_none() {
                    choice = Some(sn);
                }
            }
        }
        (choice, alternatives)
    };
    let Some(sn) = choice else {
        return Ok(false);
    };
    txn.place_db(db, sn)?;
    if let Some(t) = trace {
        t.push(DecisionStep {
            case: StepCase::Isolated,
            link: None,
            placed: vec![(txn.ae().dbs()[db].id.clone(), sn.to_string())],
            step_cost: 0.0,
            alternatives,
        });
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataBlock, VirtualMachine};
    use crate::topology::{DataCenterTopology, NodeId};
    use std::sync::Arc;

    fn vm(id: &str, cpu: f64, mem: f64) -> VirtualMachine {
        VirtualMachine {
            id: id.into(),
            cpu,
            mem,
        }
    }

    fn db(id: &str, storage: f64) -> DataBlock {
        DataBlock {
            id: id.into(),
            storage,
        }
    }

    fn dc36() -> Arc<DataCenterTopology> {
        Arc::new(DataCenterTopology::build(36, 2.0).unwrap())
    }

    #[test]
    fn lone_data_link_lands_on_one_physical_node() {
        // a high-end storage device offers both facets; cost 0 beats any pair
        let mut st = PlacementState::new(dc36());
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("w", 0.3, 0.3)],
            vec![db("d", 0.3)],
            &[("w", "d", 0.5)],
        )
        .unwrap();
        let outcome = place(&mut st, "ae1", &ae, None).unwrap();
        let PlacementOutcome::Placed(summary) = outcome else {
            panic!("expected placement");
        };
        assert_eq!(summary.total_cost, 0.0);
        let rec = st.deployment("ae1").unwrap();
        let dc = st.topology();
        assert_eq!(
            dc.cn_node(rec.vm_hosts[0]),
            dc.sn_node(rec.db_hosts[0]),
            "VM and block share the node"
        );
        assert_eq!(dc.cn_node(rec.vm_hosts[0]), NodeId(36), "first such node wins ties");
        st.audit().unwrap();
    }

    #[test]
    fn pair_scan_agrees_with_exhaustive_minimum() {
        use crate::model::Assignment;
        let dc = dc36();
        let mut st = PlacementState::new(dc.clone());
        // burn the dual-facet devices down to 0.4 storage so a 0.5 block
        // cannot colocate with its VM and a real pair decision is needed
        let filler = ApplicationEnvironment::from_parts(
            vec![],
            (0..5).map(|i| db(&format!("f{i}"), 0.6)).collect(),
            &[],
        )
        .unwrap();
        st.apply_deployment(
            "filler",
            &filler,
            &Assignment {
                vm_hosts: vec![],
                db_hosts: (0..5).map(crate::topology::SnId).collect(),
                order: (0..5).map(AnRef::Db).collect(),
            },
        )
        .unwrap();
        let before = st.clone();

        let ae = ApplicationEnvironment::from_parts(
            vec![vm("w", 0.3, 0.3)],
            vec![db("d", 0.5)],
            &[("w", "d", 0.4)],
        )
        .unwrap();
        let outcome = place(&mut st, "ae1", &ae, None).unwrap();
        let PlacementOutcome::Placed(summary) = outcome else {
            panic!("expected placement");
        };

        // brute-force the same decision on the pre-placement state,
        // first-wins in the same facet-major scan order
        let mut best: Option<(f64, CnId, crate::topology::SnId)> = None;
        for c in 0..dc.cn_count() as u32 {
            for s in 0..dc.sn_count() as u32 {
                let (cn, sn) = (CnId(c), crate::topology::SnId(s));
                if before.str_available(sn) < 0.5 {
                    continue;
                }
                let cost = 0.4 * dc.distance(dc.cn_node(cn), dc.sn_node(sn));
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, cn, sn));
                }
            }
        }
        let (best_cost, best_cn, best_sn) = best.unwrap();
        assert_eq!(summary.total_cost, best_cost);
        let rec = st.deployment("ae1").unwrap();
        assert_eq!(rec.vm_hosts[0], best_cn);
        assert_eq!(rec.db_hosts[0], best_sn);
        st.audit().unwrap();
    }

    #[test]
    fn heavier_data_links_are_decided_first() {
        let mut st = PlacementState::new(dc36());
        let mut trace = Vec::new();
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("a", 0.1, 0.1), vm("b", 0.1, 0.1)],
            vec![db("light", 0.1), db("heavy", 0.1)],
            &[("a", "light", 0.2), ("b", "heavy", 0.7)],
        )
        .unwrap();
        place(&mut st, "ae1", &ae, Some(&mut trace)).unwrap();
        assert_eq!(trace[0].link, Some(1), "0.7 before 0.2");
        assert_eq!(trace[0].case, StepCase::DataLinkPair);
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn placed_peers_pull_the_next_endpoint_close() {
        let mut st = PlacementState::new(dc36());
        // dbsrv reads d3; web reads d1; web and dbsrv talk. After the data
        // pass, the compute link should not move anyone: both VMs placed.
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("web", 0.2, 0.2), vm("dbsrv", 0.2, 0.2)],
            vec![db("d1", 0.2), db("d3", 0.2)],
            &[("web", "d1", 0.5), ("dbsrv", "d3", 0.5), ("web", "dbsrv", 0.3)],
        )
        .unwrap();
        let mut trace = Vec::new();
        let outcome = place(&mut st, "ae1", &ae, Some(&mut trace)).unwrap();
        assert!(outcome.is_placed());
        assert_eq!(trace.len(), 2, "compute link consumed when dbsrv landed");
        // both data links colocate; the compute link's cost is whatever
        // distance separates the two chosen devices
        let rec = st.deployment("ae1").unwrap();
        let dc = st.topology();
        assert_eq!(dc.cn_node(rec.vm_hosts[0]), dc.sn_node(rec.db_hosts[0]));
        assert_eq!(dc.cn_node(rec.vm_hosts[1]), dc.sn_node(rec.db_hosts[1]));
        st.audit().unwrap();
    }

    #[test]
    fn infeasible_demand_leaves_no_trace() {
        use crate::model::Assignment;
        let mut st = PlacementState::new(dc36());
        // fill all nine storage facets to 0.5, then ask for two 0.7 blocks
        let filler = ApplicationEnvironment::from_parts(
            vec![],
            (0..9).map(|i| db(&format!("f{i}"), 0.5)).collect(),
            &[],
        )
        .unwrap();
        st.apply_deployment(
            "filler",
            &filler,
            &Assignment {
                vm_hosts: vec![],
                db_hosts: (0..9).map(crate::topology::SnId).collect(),
                order: (0..9).map(AnRef::Db).collect(),
            },
        )
        .unwrap();
        let snapshot = st.clone();
        let oversize = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.2, 0.2)],
            vec![db("d", 0.7), db("d2", 0.7)],
            &[("v", "d", 0.2), ("v", "d2", 0.2)],
        )
        .unwrap();
        let outcome = place(&mut st, "nope", &oversize, None).unwrap();
        assert_eq!(outcome, PlacementOutcome::Infeasible);
        assert_eq!(st, snapshot);
        st.audit().unwrap();
    }

    #[test]
    fn narrowed_pools_block_an_otherwise_fitting_pair() {
        use crate::model::Assignment;
        use crate::topology::NodeKind;
        // two dual-facet devices under one facet-less switch: every
        // cross-device link draws on the same pool
        let dc = Arc::new(
            DataCenterTopology::from_parts(
                2.0,
                vec![
                    NodeKind::HighEndStorage,
                    NodeKind::HighEndStorage,
                    NodeKind::ComputeAccessSwitch,
                ],
                &[(NodeId(2), NodeId(0)), (NodeId(2), NodeId(1))],
            )
            .unwrap(),
        );
        let mut st = PlacementState::new(dc.clone());
        // prior tenant: VM on node 0, its block on node 1, two-hop link of
        // 0.875 leaves exactly 0.125 in the pool (both powers of two)
        let tenant = ApplicationEnvironment::from_parts(
            vec![vm("t", 0.9, 0.9)],
            vec![db("td", 0.9)],
            &[("t", "td", 0.875)],
        )
        .unwrap();
        st.apply_deployment(
            "tenant",
            &tenant,
            &Assignment {
                vm_hosts: vec![dc.cn_of(NodeId(0)).unwrap()],
                db_hosts: vec![dc.sn_of(NodeId(1)).unwrap()],
                order: vec![AnRef::Vm(0), AnRef::Db(0)],
            },
        )
        .unwrap();
        let snapshot = st.clone();

        // the new pair is forced across the fabric (cpu free only on node 1,
        // storage free only on node 0) but needs more than the pool holds
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.2, 0.2)],
            vec![db("d", 0.2)],
            &[("v", "d", 0.25)],
        )
        .unwrap();
        let outcome = place(&mut st, "ae1", &ae, None).unwrap();
        assert_eq!(outcome, PlacementOutcome::Infeasible);
        assert_eq!(st, snapshot);

        // a link thin enough for the remaining 0.125 goes through
        let thin = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.2, 0.2)],
            vec![db("d", 0.2)],
            &[("v", "d", 0.125)],
        )
        .unwrap();
        let outcome = place(&mut st, "ae2", &thin, None).unwrap();
        let PlacementOutcome::Placed(summary) = outcome else {
            panic!("expected placement")
        };
        assert_eq!(
            summary.total_cost,
            0.125 * dc.distance(NodeId(0), NodeId(1))
        );
        assert_eq!(st.pools().available(NodeId(0), NodeId(1)), 0.0);
        st.audit().unwrap();
    }
}
