//! First-fit-decreasing baseline.
//!
//! A bin-packing view of the problem: hosts are ranked once per deployment
//! by free capacity (descending), demands by size (descending), and every
//! node takes the first host that fits. Bandwidth is only ever a constraint
//! here, never an objective, so the packing is deliberately blind to where
//! traffic will flow.

use super::feasibility::{db_fits, vm_fits, PeerProfile};
use super::{PlaceError, PlacementOutcome};
use crate::model::{AnRef, ApplicationEnvironment, PlacementState};
use crate::topology::{CnId, SnId};

pub(super) fn place(
    st: &mut PlacementState,
    id: &str,
    ae: &ApplicationEnvironment,
) -> Result<PlacementOutcome, PlaceError> {
    // rank hosts by free capacity before anything lands; stable sorts keep
    // facet-id order among equals
    let mut cn_order: Vec<CnId> = (0..st.topology().cn_count() as u32).map(CnId).collect();
    cn_order.sort_by(|&a, &b| {
        let fa = (st.cpu_available(a) + st.mem_available(a)) / 2.0;
        let fb = (st.cpu_available(b) + st.mem_available(b)) / 2.0;
        fb.partial_cmp(&fa).expect("residuals are finite")
    });
    let mut sn_order: Vec<SnId> = (0..st.topology().sn_count() as u32).map(SnId).collect();
    sn_order.sort_by(|&a, &b| {
        st.str_available(b)
            .partial_cmp(&st.str_available(a))
            .expect("residuals are finite")
    });

    let mut db_order: Vec<usize> = (0..ae.n_d()).collect();
    db_order.sort_by(|&a, &b| {
        ae.dbs()[b]
            .storage
            .partial_cmp(&ae.dbs()[a].storage)
            .expect("demands are finite")
    });
    let mut vm_order: Vec<usize> = (0..ae.n_v()).collect();
    vm_order.sort_by(|&a, &b| {
        let da = (ae.vms()[a].cpu + ae.vms()[a].mem) / 2.0;
        let db = (ae.vms()[b].cpu + ae.vms()[b].mem) / 2.0;
        db.partial_cmp(&da).expect("demands are finite")
    });

    let mut txn = st.begin(id, ae)?;

    for db in db_order {
        let storage = ae.dbs()[db].storage;
        let profile = PeerProfile::of(&txn, AnRef::Db(db));
        let chosen = sn_order.iter().copied().find(|&sn| {
            db_fits(txn.state(), storage, sn)
                && profile.feasible_from(
                    txn.state().pools(),
                    txn.state().topology().sn_node(sn),
                )
        });
        let Some(sn) = chosen else {
            return Ok(PlacementOutcome::Infeasible);
        };
        txn.place_db(db, sn)?;
    }

    for vm in vm_order {
        let demand = ae.vms()[vm].clone();
        let profile = PeerProfile::of(&txn, AnRef::Vm(vm));
        let chosen = cn_order.iter().copied().find(|&cn| {
            vm_fits(txn.state(), &demand, cn)
                && profile.feasible_from(
                    txn.state().pools(),
                    txn.state().topology().cn_node(cn),
                )
        });
        let Some(cn) = chosen else {
            return Ok(PlacementOutcome::Infeasible);
        };
        txn.place_vm(vm, cn)?;
    }

    Ok(PlacementOutcome::Placed(txn.commit()?))
}
