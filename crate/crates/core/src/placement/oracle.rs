//! Exhaustive search over complete assignments, for instances small enough
//! to enumerate. Serves as the ground truth the heuristics are measured
//! against on toy fabrics.

use super::{PlaceError, PlacementOutcome};
use crate::model::{
    AnRef, ApplicationEnvironment, Assignment, PlacementState,
};
use crate::topology::{CnId, SnId};
use std::collections::BTreeMap;

/// Hard ceilings: beyond these the search space is declared too large
/// rather than silently burning time.
pub const MAX_APPLICATION_NODES: usize = 6;
pub const MAX_FACET_PRODUCT: u32 = 64;
const MAX_COMBINATIONS: f64 = (1u64 << 24) as f64;

/// Enumerates every complete assignment of `ae` onto the current state,
/// keeps the cheapest feasible one (first wins on ties, in VM-major
/// enumeration order) and commits it through the regular transaction path.
pub fn best_placement(
    st: &mut PlacementState,
    id: &str,
    ae: &ApplicationEnvironment,
) -> Result<PlacementOutcome, PlaceError> {
    let dc = st.topology();
    let n_v = ae.n_v();
    let n_d = ae.n_d();
    let cn_count = dc.cn_count() as u32;
    let sn_count = dc.sn_count() as u32;

    if n_v + n_d > MAX_APPLICATION_NODES {
        return Err(PlaceError::SearchSpace(format!(
            "{} application nodes exceed the limit of {MAX_APPLICATION_NODES}",
            n_v + n_d
        )));
    }
    if cn_count * sn_count > MAX_FACET_PRODUCT {
        return Err(PlaceError::SearchSpace(format!(
            "{cn_count} x {sn_count} facets exceed the limit of {MAX_FACET_PRODUCT}"
        )));
    }
    let combinations =
        (cn_count as f64).powi(n_v as i32) * (sn_count as f64).powi(n_d as i32);
    if combinations > MAX_COMBINATIONS {
        return Err(PlaceError::SearchSpace(format!(
            "{combinations:.0} assignments exceed the enumeration budget"
        )));
    }

    let mut vm_hosts = vec![CnId(0); n_v];
    let mut db_hosts = vec![SnId(0); n_d];
    let mut best: Option<(f64, Vec<CnId>, Vec<SnId>)> = None;

    'outer: loop {
        if feasible(st, ae, &vm_hosts, &db_hosts) {
            let cost = crate::model::assignment_cost(dc, ae, &vm_hosts, &db_hosts);
            if best.as_ref().is_none_or(|(b, _, _)| cost < *b) {
                best = Some((cost, vm_hosts.clone(), db_hosts.clone()));
            }
        }
        // odometer over (vm_hosts, db_hosts); the last digit spins fastest
        for j in (0..n_d).rev() {
            if db_hosts[j].0 + 1 < sn_count {
                db_hosts[j].0 += 1;
                continue 'outer;
            }
            db_hosts[j].0 = 0;
        }
        for i in (0..n_v).rev() {
            if vm_hosts[i].0 + 1 < cn_count {
                vm_hosts[i].0 += 1;
                continue 'outer;
            }
            vm_hosts[i].0 = 0;
        }
        break;
    }

    let Some((_, vm_hosts, db_hosts)) = best else {
        return Ok(PlacementOutcome::Infeasible);
    };
    let order = (0..n_v)
        .map(AnRef::Vm)
        .chain((0..n_d).map(AnRef::Db))
        .collect();
    let summary = st.apply_deployment(
        id,
        ae,
        &Assignment {
            vm_hosts,
            db_hosts,
            order,
        },
    )?;
    Ok(PlacementOutcome::Placed(summary))
}

/// Aggregate feasibility of a complete assignment: per-facet demand sums
/// against the current residuals. Bandwidth never vetoes an assignment,
/// matching the deployment path, where reservations draw pools down without
/// a floor.
fn feasible(
    st: &PlacementState,
    ae: &ApplicationEnvironment,
    vm_hosts: &[CnId],
    db_hosts: &[SnId],
) -> bool {
    let mut cpu: BTreeMap<CnId, f64> = BTreeMap::new();
    let mut mem: BTreeMap<CnId, f64> = BTreeMap::new();
    for (i, &cn) in vm_hosts.iter().enumerate() {
        *cpu.entry(cn).or_insert(0.0) += ae.vms()[i].cpu;
        *mem.entry(cn).or_insert(0.0) += ae.vms()[i].mem;
    }
    for (&cn, &need) in &cpu {
        if need > st.cpu_available(cn) {
            return false;
        }
    }
    for (&cn, &need) in &mem {
        if need > st.mem_available(cn) {
            return false;
        }
    }
    let mut str_: BTreeMap<SnId, f64> = BTreeMap::new();
    for (j, &sn) in db_hosts.iter().enumerate() {
        *str_.entry(sn).or_insert(0.0) += ae.dbs()[j].storage;
    }
    for (&sn, &need) in &str_ {
        if need > st.str_available(sn) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataBlock, VirtualMachine};
    use crate::topology::{DataCenterTopology, NodeId, NodeKind};
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

    /// Two dual-facet devices and one plain server on a two-level tree.
    fn toy_dc() -> Arc<DataCenterTopology> {
        Arc::new(
            DataCenterTopology::from_parts(
                2.0,
                vec![
                    NodeKind::HighEndStorage,
                    NodeKind::HighEndStorage,
                    NodeKind::Server,
                    NodeKind::ComputeAccessSwitch,
                ],
                &[
                    (NodeId(3), NodeId(0)),
                    (NodeId(3), NodeId(1)),
                    (NodeId(3), NodeId(2)),
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn finds_the_colocated_optimum() {
        let mut st = PlacementState::new(toy_dc());
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.4, 0.4)],
            vec![db("d", 0.4)],
            &[("v", "d", 0.5)],
        )
        .unwrap();
        let outcome = best_placement(&mut st, "x", &ae).unwrap();
        assert_eq!(outcome.total_cost(), Some(0.0));
        let rec = st.deployment("x").unwrap();
        assert_eq!(rec.vm_hosts[0], CnId(0), "first optimum in scan order");
        assert_eq!(rec.db_hosts[0], SnId(0));
        st.audit().unwrap();
    }

    #[test]
    fn resource_pressure_forces_the_split_the_oracle_prices_correctly() {
        use crate::model::Assignment;
        let dc = toy_dc();
        let mut st = PlacementState::new(dc.clone());
        // by hand: storage nearly full on device 0, cpu nearly full on
        // device 1, so a new pair can never colocate
        let filler = ApplicationEnvironment::from_parts(
            vec![vm("c", 0.9, 0.9)],
            vec![db("f", 0.9)],
            &[],
        )
        .unwrap();
        st.apply_deployment(
            "filler",
            &filler,
            &Assignment {
                vm_hosts: vec![CnId(1)],
                db_hosts: vec![SnId(0)],
                order: vec![AnRef::Vm(0), AnRef::Db(0)],
            },
        )
        .unwrap();

        // the block only fits device 1, the VM anywhere but device 1
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.4, 0.4)],
            vec![db("d", 0.4)],
            &[("v", "d", 0.5)],
        )
        .unwrap();
        let outcome = best_placement(&mut st, "x", &ae).unwrap();
        let rec = st.deployment("x").unwrap();
        assert_eq!(rec.db_hosts[0], SnId(1));
        assert_ne!(dc.cn_node(rec.vm_hosts[0]), NodeId(1));
        assert_eq!(outcome.total_cost(), Some(0.5 * 4.0), "one two-hop crossing");
        st.audit().unwrap();
    }

    #[test]
    fn infeasible_when_nothing_fits() {
        let mut st = PlacementState::new(toy_dc());
        let filler = ApplicationEnvironment::from_parts(
            vec![],
            vec![db("f1", 0.9), db("f2", 0.9)],
            &[],
        )
        .unwrap();
        best_placement(&mut st, "filler", &filler).unwrap();
        let snapshot = st.clone();
        let ae = ApplicationEnvironment::from_parts(
            vec![],
            vec![db("d", 0.5)],
            &[],
        )
        .unwrap();
        let outcome = best_placement(&mut st, "x", &ae).unwrap();
        assert_eq!(outcome, PlacementOutcome::Infeasible);
        assert_eq!(st, snapshot);
    }

    #[test]
    fn oversized_instances_are_rejected() {
        let mut st = PlacementState::new(toy_dc());
        let vms: Vec<_> = (0..7).map(|i| vm(&format!("v{i}"), 0.01, 0.01)).collect();
        let ae = ApplicationEnvironment::from_parts(vms, vec![], &[]).unwrap();
        assert!(matches!(
            best_placement(&mut st, "x", &ae),
            Err(PlaceError::SearchSpace(_))
        ));

        let big_dc = Arc::new(DataCenterTopology::build(72, 2.0).unwrap());
        let mut st = PlacementState::new(big_dc);
        let small = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.1, 0.1)],
            vec![],
            &[],
        )
        .unwrap();
        assert!(matches!(
            best_placement(&mut st, "x", &small),
            Err(PlaceError::SearchSpace(_))
        ));
    }

    #[test]
    fn drained_pools_never_veto_the_cheapest_assignment() {
        use crate::model::Assignment;
        let dc = toy_dc();
        let mut st = PlacementState::new(dc.clone());
        // corner the fabric: cpu free only on device 0, storage free only on
        // device 1, and narrow their pool down to 0.125
        let filler = ApplicationEnvironment::from_parts(
            vec![vm("c1", 0.9, 0.9), vm("c2", 0.9, 0.9), vm("t", 0.05, 0.05)],
            vec![db("f", 0.9), db("td", 0.05)],
            &[("t", "td", 0.875)],
        )
        .unwrap();
        st.apply_deployment(
            "filler",
            &filler,
            &Assignment {
                vm_hosts: vec![CnId(1), CnId(2), CnId(0)],
                db_hosts: vec![SnId(0), SnId(1)],
                order: vec![
                    AnRef::Vm(0),
                    AnRef::Vm(1),
                    AnRef::Vm(2),
                    AnRef::Db(0),
                    AnRef::Db(1),
                ],
            },
        )
        .unwrap();

        // the only host pair with room is forced; its link of 0.25 exceeds
        // the 0.125 the pool has left and overcommits it
        let ae = ApplicationEnvironment::from_parts(
            vec![vm("v", 0.4, 0.4)],
            vec![db("d", 0.4)],
            &[("v", "d", 0.25)],
        )
        .unwrap();
        let outcome = best_placement(&mut st, "x", &ae).unwrap();
        assert_eq!(outcome.total_cost(), Some(0.25 * 4.0));
        assert_eq!(st.pools().available(NodeId(0), NodeId(1)), 0.0);
        let raw: Vec<f64> = st
            .pools()
            .entries()
            .filter(|&(a, b, _)| (a, b) == (NodeId(0), NodeId(1)))
            .map(|(_, _, v)| v)
            .collect();
        assert_eq!(raw, vec![-0.125], "the ledger keeps the true balance");
        st.audit().unwrap();
    }
}
