//! Placement laboratory for composite applications on simulated data
//! centers.
//!
//! The crate models a three-tier tree data center ([`topology`]), composite
//! applications of VMs and data blocks joined by virtual links ([`model`]),
//! and placement algorithms that map one onto the other ([`placement`]).
//! [`workload`] synthesises applications and deploy/terminate traces,
//! [`sim`] runs the comparative experiments and writes their reports.

pub mod model;
pub mod placement;
pub mod sim;
pub mod topology;
pub mod workload;

pub use model::{AeDocument, ApplicationEnvironment, PlacementState};
pub use placement::{place, Algorithm, PlacementOutcome, ALL_ALGORITHMS};
pub use sim::{
    run, sweep, MetricsSummary, Scenario, ScenarioConfig, SweepParameter, SweepPoint,
};
pub use topology::DataCenterTopology;
pub use workload::{DemandParams, EventTrace, TraceEvent};
