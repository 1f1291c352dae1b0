//! Randomized invariants over the workload generator, the placement state
//! machine and the distance metric.

use placelab_core::model::PlacementState;
use placelab_core::placement::{place, ALL_ALGORITHMS};
use placelab_core::topology::DataCenterTopology;
use placelab_core::workload::{montage_template, three_tier_template, DemandParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Whatever the distribution parameters, sampling yields a structurally
    /// valid instance with every demand inside the unit band.
    #[test]
    fn sampled_instances_always_validate(
        seed in any::<u64>(),
        mean_com in 0.01f64..1.5,
        mean_str in 0.01f64..1.5,
        mean_vlbw in 0.01f64..1.5,
        sd in 0.0f64..3.0,
        montage in any::<bool>(),
    ) {
        let params = DemandParams {
            mean_com,
            mean_str,
            mean_vlbw,
            sd,
            sd_com_str: None,
            sd_vlbw: None,
        };
        let template = if montage { montage_template() } else { three_tier_template() };
        let ae = template.sample(&params, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(ae.validate().is_empty());
        let in_band = |v: f64| (0.01..=1.0).contains(&v);
        prop_assert!(ae.vms().iter().all(|vm| in_band(vm.cpu) && in_band(vm.mem)));
        prop_assert!(ae.dbs().iter().all(|db| in_band(db.storage)));
        prop_assert!(ae.vls().iter().all(|vl| in_band(vl.bandwidth)));
    }

    /// Deploying and terminating one instance leaves the data center
    /// bit-identical to one that never hosted it, whichever algorithm
    /// placed it.
    #[test]
    fn placement_is_fully_reversible(
        seed in any::<u64>(),
        alg_index in 0usize..3,
        montage in any::<bool>(),
    ) {
        let dc = Arc::new(DataCenterTopology::build(36, 2.0).unwrap());
        let template = if montage { montage_template() } else { three_tier_template() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ae = template.sample(&DemandParams::default(), &mut rng);

        let mut st = PlacementState::new(Arc::clone(&dc));
        let outcome = place(
            ALL_ALGORITHMS[alg_index],
            &mut st,
            "probe",
            &ae,
            &mut rng,
            None,
        ).unwrap();
        if outcome.is_placed() {
            st.audit().unwrap();
            st.terminate_deployment("probe").unwrap();
        }
        prop_assert!(st == PlacementState::new(dc));
    }

    /// The distance factor is a pure scale: doubling it doubles every
    /// facet-to-facet distance exactly, and distances stay symmetric.
    #[test]
    fn distances_scale_with_the_factor(
        df_exp in 1u32..5,
        a in any::<u32>(),
        b in any::<u32>(),
    ) {
        let base = DataCenterTopology::build(72, 1.0).unwrap();
        let factor = (1u32 << df_exp) as f64;
        let scaled = DataCenterTopology::build(72, factor).unwrap();
        let cn = base.cn_node(placelab_core::topology::CnId(a % base.cn_count() as u32));
        let sn = base.sn_node(placelab_core::topology::SnId(b % base.sn_count() as u32));
        prop_assert_eq!(base.distance(cn, sn), base.distance(sn, cn));
        prop_assert_eq!(scaled.distance(cn, sn), factor * base.distance(cn, sn));
    }
}
