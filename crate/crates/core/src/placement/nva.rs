//! Network-agnostic placement baseline.
//!
//! Data blocks land on uniformly random feasible storage facets, sampled
//! with up to 100 attempts each. VMs that read data then pick the compute
//! facet with the cheapest traffic to their placed peers; VMs without data
//! links are placed uniformly at random like the blocks. The baseline
//! respects every capacity and bandwidth constraint, it just never lets the
//! network steer where data goes.

use super::feasibility::{db_fits, vm_fits, PeerProfile};
use super::{PlaceError, PlacementOutcome};
use crate::model::{AnRef, ApplicationEnvironment, PlacementState};
use crate::topology::{CnId, SnId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const RANDOM_ATTEMPTS: u32 = 100;

pub(super) fn place(
    st: &mut PlacementState,
    id: &str,
    ae: &ApplicationEnvironment,
    rng: &mut ChaCha8Rng,
) -> Result<PlacementOutcome, PlaceError> {
    let mut txn = st.begin(id, ae)?;

    for db in 0..ae.n_d() {
        let storage = ae.dbs()[db].storage;
        let sn_count = txn.state().topology().sn_count() as u32;
        let mut chosen = None;
        for _ in 0..RANDOM_ATTEMPTS {
            let sn = SnId(rng.random_range(0..sn_count));
            let profile = PeerProfile::of(&txn, AnRef::Db(db));
            let node = txn.state().topology().sn_node(sn);
            if db_fits(txn.state(), storage, sn)
                && profile.feasible_from(txn.state().pools(), node)
            {
                chosen = Some(sn);
                break;
            }
        }
        let Some(sn) = chosen else {
            return Ok(PlacementOutcome::Infeasible);
        };
        txn.place_db(db, sn)?;
    }

    // data-reading VMs choose their host by peer traffic
    for vm in 0..ae.n_v() {
        if !ae.vm_has_data_link(vm) {
            continue;
        }
        let demand = ae.vms()[vm].clone();
        let profile = PeerProfile::of(&txn, AnRef::Vm(vm));
        let best = {
            let st = txn.state();
            let dc = st.topology();
            let mut best: Option<(f64, CnId)> = None;
            for c in 0..dc.cn_count() as u32 {
                let cn = CnId(c);
                if !vm_fits(st, &demand, cn) {
                    continue;
                }
                let node = dc.cn_node(cn);
                if !profile.feasible_from(st.pools(), node) {
                    continue;
                }
                let cost = profile.cost_from(dc, node);
                if best.is_none_or(|(b, _)| cost < b) {
                    best = Some((cost, cn));
                }
            }
            best
        };
        let Some((_, cn)) = best else {
            return Ok(PlacementOutcome::Infeasible);
        };
        txn.place_vm(vm, cn)?;
    }

    // the rest are placed like the blocks: anywhere feasible
    for vm in 0..ae.n_v() {
        if txn.vm_host(vm).is_some() {
            continue;
        }
        let demand = ae.vms()[vm].clone();
        let cn_count = txn.state().topology().cn_count() as u32;
        let mut chosen = None;
        for _ in 0..RANDOM_ATTEMPTS {
            let cn = CnId(rng.random_range(0..cn_count));
            let profile = PeerProfile::of(&txn, AnRef::Vm(vm));
            let node = txn.state().topology().cn_node(cn);
            if vm_fits(txn.state(), &demand, cn)
                && profile.feasible_from(txn.state().pools(), node)
            {
                chosen = Some(cn);
                break;
            }
        }
        let Some(cn) = chosen else {
            return Ok(PlacementOutcome::Infeasible);
        };
        txn.place_vm(vm, cn)?;
    }

    Ok(PlacementOutcome::Placed(txn.commit()?))
}
