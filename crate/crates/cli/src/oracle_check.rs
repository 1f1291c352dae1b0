//! Cross-check of the greedy search against the exhaustive oracle on
//! fabrics small enough to enumerate. A healthy pair never lets the greedy
//! result undercut the enumerated optimum, and never lets the oracle call
//! a greedily placeable instance infeasible.

use crate::config::Failure;
use anyhow::anyhow;
use clap::Args;
use placelab_core::model::{DataBlock, PlacementState, VirtualMachine};
use placelab_core::placement::{self, oracle, Algorithm, PlacementOutcome};
use placelab_core::topology::{DataCenterTopology, NodeId, NodeKind};
use placelab_core::ApplicationEnvironment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Costs are exact sums of products, identical on both paths, so the only
/// tolerance is one ulp of headroom against accumulation-order noise.
const COST_SLACK: f64 = 1e-9;

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Random toy instances to compare
    #[arg(long, default_value_t = 200)]
    instances: usize,

    /// Seed for instance sampling
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

type FabricShape = (Vec<NodeKind>, Vec<(u32, u32)>);

/// Three hand-sized fabrics: a shared-switch pair of dual-facet devices
/// plus a server, a two-rack tree, and a minimal server-storage pair.
fn toy_fabrics() -> Vec<Arc<DataCenterTopology>> {
    let shapes: [FabricShape; 3] = [
        (
            vec![
                NodeKind::HighEndStorage,
                NodeKind::HighEndStorage,
                NodeKind::Server,
                NodeKind::ComputeAccessSwitch,
            ],
            vec![(3, 0), (3, 1), (3, 2)],
        ),
        (
            vec![
                NodeKind::Server,
                NodeKind::HighEndStorage,
                NodeKind::Server,
                NodeKind::HighEndStorage,
                NodeKind::ComputeAccessSwitch,
                NodeKind::ComputeAccessSwitch,
                NodeKind::AggregationSwitch,
            ],
            vec![(6, 4), (6, 5), (4, 0), (4, 1), (5, 2), (5, 3)],
        ),
        (
            vec![
                NodeKind::HighEndStorage,
                NodeKind::Server,
                NodeKind::ComputeAccessSwitch,
            ],
            vec![(2, 0), (2, 1)],
        ),
    ];
    shapes
        .into_iter()
        .map(|(kinds, edges)| {
            let edges: Vec<(NodeId, NodeId)> = edges
                .into_iter()
                .map(|(p, c)| (NodeId(p), NodeId(c)))
                .collect();
            Arc::new(DataCenterTopology::from_parts(2.0, kinds, &edges).unwrap())
        })
        .collect()
}

/// Up to three application nodes with random demands and link structure,
/// never empty.
fn random_toy_ae(rng: &mut ChaCha8Rng) -> ApplicationEnvironment {
    loop {
        let nv = rng.random_range(0..=3usize);
        let nd_min = usize::from(nv == 0);
        let nd = rng.random_range(nd_min..=(3 - nv).max(nd_min));
        let vms: Vec<VirtualMachine> = (0..nv)
            .map(|i| VirtualMachine {
                id: format!("v{i}"),
                cpu: rng.random_range(0.05..0.9),
                mem: rng.random_range(0.05..0.9),
            })
            .collect();
        let dbs: Vec<DataBlock> = (0..nd)
            .map(|i| DataBlock {
                id: format!("d{i}"),
                storage: rng.random_range(0.05..0.9),
            })
            .collect();
        let mut links: Vec<(String, String, f64)> = Vec::new();
        for i in 0..nv {
            for j in (i + 1)..nv {
                if rng.random_bool(0.5) {
                    links.push((format!("v{i}"), format!("v{j}"), rng.random_range(0.05..0.6)));
                }
            }
            for j in 0..nd {
                if rng.random_bool(0.6) {
                    links.push((format!("v{i}"), format!("d{j}"), rng.random_range(0.05..0.6)));
                }
            }
        }
        let refs: Vec<(&str, &str, f64)> = links
            .iter()
            .map(|(a, b, w)| (a.as_str(), b.as_str(), *w))
            .collect();
        if let Ok(ae) = ApplicationEnvironment::from_parts(vms, dbs, &refs) {
            return ae;
        }
    }
}

#[derive(Default)]
struct Tally {
    both_placed: usize,
    matched_optimum: usize,
    oracle_only: usize,
    both_infeasible: usize,
}

pub fn cmd(args: OracleCheckArgs) -> Result<(), Failure> {
    if args.instances == 0 {
        return Err(Failure::Usage(anyhow!("--instances must be at least 1")));
    }
    let fabrics = toy_fabrics();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut greedy_rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x9e3779b97f4a7c15);
    let mut tally = Tally::default();

    for i in 0..args.instances {
        let dc = &fabrics[i % fabrics.len()];
        let ae = random_toy_ae(&mut rng);

        let mut greedy_state = PlacementState::new(Arc::clone(dc));
        let greedy = placement::place(
            Algorithm::Ndap,
            &mut greedy_state,
            "probe",
            &ae,
            &mut greedy_rng,
            None,
        )
        .map_err(Failure::runtime)?;
        let mut oracle_state = PlacementState::new(Arc::clone(dc));
        let best = oracle::best_placement(&mut oracle_state, "probe", &ae)
            .map_err(Failure::runtime)?;

        match (&greedy, &best) {
            (PlacementOutcome::Placed(g), PlacementOutcome::Placed(o)) => {
                tally.both_placed += 1;
                if g.total_cost < o.total_cost - COST_SLACK {
                    return Err(Failure::Runtime(anyhow!(
                        "instance {i}: greedy cost {} undercuts the enumerated optimum {}",
                        g.total_cost,
                        o.total_cost
                    )));
                }
                if (g.total_cost - o.total_cost).abs() <= COST_SLACK {
                    tally.matched_optimum += 1;
                }
            }
            (PlacementOutcome::Placed(_), PlacementOutcome::Infeasible) => {
                return Err(Failure::Runtime(anyhow!(
                    "instance {i}: the oracle called a greedily placeable instance infeasible"
                )));
            }
            (PlacementOutcome::Infeasible, PlacementOutcome::Placed(_)) => {
                tally.oracle_only += 1;
            }
            (PlacementOutcome::Infeasible, PlacementOutcome::Infeasible) => {
                tally.both_infeasible += 1;
            }
        }
    }

    println!(
        "oracle-check: {} instances across {} toy fabrics (seed {})",
        args.instances,
        fabrics.len(),
        args.seed
    );
    println!("  both placed             {}", tally.both_placed);
    println!("  greedy matched optimum  {}", tally.matched_optimum);
    println!("  oracle-only placements  {}", tally.oracle_only);
    println!("  both infeasible         {}", tally.both_infeasible);
    println!("ok: the enumerated optimum was never beaten, 0 violations");
    Ok(())
}
