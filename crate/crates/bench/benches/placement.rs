//! Per-deployment decision latency of the three placement algorithms on
//! warm data centers at desk scale and at full scale.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use placelab_core::model::PlacementState;
use placelab_core::placement::{place, Algorithm, PlacementOutcome, ALL_ALGORITHMS};
use placelab_core::sim::trace_rng;
use placelab_core::topology::DataCenterTopology;
use placelab_core::workload::{generate_trace, DemandParams, TraceEvent};
use placelab_core::ApplicationEnvironment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const SEED: u64 = 61;
const WARM_LIVE: usize = 10;

/// Plays a deterministic trace onto a fresh data center until `WARM_LIVE`
/// deployments are live, then hands back the state and the next
/// application as the probe.
fn warm_state(n: usize) -> (PlacementState, ApplicationEnvironment) {
    let dc = Arc::new(DataCenterTopology::build(n, 2.0).unwrap());
    let mut st = PlacementState::new(dc);
    let trace = generate_trace(
        DemandParams::default(),
        0.8,
        6 * WARM_LIVE,
        trace_rng(SEED, 0),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for event in &trace.0 {
        match event {
            TraceEvent::Deploy { id, ae } => {
                let ae = ae.build().unwrap();
                if st.deployment_count() >= WARM_LIVE {
                    return (st, ae);
                }
                let outcome = place(Algorithm::Ndap, &mut st, id, &ae, &mut rng, None).unwrap();
                assert!(outcome.is_placed(), "warmup must not exhaust the fabric");
            }
            TraceEvent::Terminate { id } => {
                st.terminate_deployment(id).unwrap();
            }
        }
    }
    panic!("trace too short to warm {WARM_LIVE} live deployments");
}

fn bench_place(c: &mut Criterion) {
    let mut group = c.benchmark_group("place_on_warm_dc");
    group.sample_size(20);
    for n in [144usize, 1152] {
        let (state, probe) = warm_state(n);
        for algorithm in ALL_ALGORITHMS {
            let mut st = state.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
            group.bench_function(BenchmarkId::new(algorithm.name(), n), |b| {
                b.iter(|| {
                    let outcome =
                        place(algorithm, &mut st, "probe", &probe, &mut rng, None).unwrap();
                    if let PlacementOutcome::Placed(_) = outcome {
                        st.terminate_deployment("probe").unwrap();
                    }
                    outcome
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_place);
criterion_main!(benches);
