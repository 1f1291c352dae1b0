//! Placement algorithms: map the VMs and data blocks of one AE onto the
//! facets of a data center, reserving link bandwidth as they go.
//!
//! Three online heuristics share one entry point, [`place`]:
//!
//! * [`Algorithm::Ndap`] walks the AE's links in decreasing bandwidth order
//!   (data links first) and places both endpoints of each link where the
//!   marginal communication cost is smallest.
//! * [`Algorithm::Nva`] ignores the network when choosing hosts for data
//!   blocks (uniform random among feasible) and only minimises traffic for
//!   VMs that read data.
//! * [`Algorithm::Ffd`] is first-fit decreasing on resource demands with
//!   hosts ordered by free capacity.
//!
//! All of them stage their work in a transaction, so a deployment either
//! lands completely or leaves no trace. The [`oracle`] module additionally
//! offers exhaustive search for instances small enough to enumerate.

mod feasibility;
mod ffd;
mod ndap;
mod nva;
pub mod oracle;

use crate::model::{ApplicationEnvironment, DeploySummary, PlacementState, StateError};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ndap,
    Nva,
    Ffd,
}

pub const ALL_ALGORITHMS: [Algorithm; 3] = [Algorithm::Ndap, Algorithm::Nva, Algorithm::Ffd];

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ndap => "ndap",
            Algorithm::Nva => "nva",
            Algorithm::Ffd => "ffd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown algorithm {0:?} (expected ndap, nva or ffd)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ndap" => Ok(Algorithm::Ndap),
            "nva" => Ok(Algorithm::Nva),
            "ffd" => Ok(Algorithm::Ffd),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Result of asking an algorithm to deploy one AE.
#[derive(Debug, Clone, PartialEq)]
pub enum PlacementOutcome {
    Placed(DeploySummary),
    /// No feasible hosts; the state is untouched.
    Infeasible,
}

impl PlacementOutcome {
    pub fn is_placed(&self) -> bool {
        matches!(self, PlacementOutcome::Placed(_))
    }

    pub fn total_cost(&self) -> Option<f64> {
        match self {
            PlacementOutcome::Placed(s) => Some(s.total_cost),
            PlacementOutcome::Infeasible => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PlaceError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("instance too large for exhaustive search: {0}")]
    SearchSpace(String),
}

/// Which placement rule produced a trace step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepCase {
    /// Data link, both endpoints unplaced: joint host-pair scan.
    DataLinkPair,
    /// Data link, block already placed: the VM picks its host.
    DataLinkVmSide,
    /// Data link, VM already placed: the block picks its host.
    DataLinkDbSide,
    /// Compute link, both VMs unplaced: joint host-pair scan.
    ComputeLinkPair,
    /// Compute link, one VM placed: the other picks its host.
    ComputeLinkOneSide,
    /// Node without any links, placed on the first fitting facet.
    Isolated,
}

/// One NDAP decision, for diagnostics and step-level verification.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionStep {
    pub case: StepCase,
    /// Index of the link that drove the step, if any.
    pub link: Option<usize>,
    /// (application node id, chosen facet) in placement order.
    pub placed: Vec<(String, String)>,
    /// Marginal cost the step added (bandwidth times distance, summed over
    /// the links the step consumed).
    pub step_cost: f64,
    /// Feasible candidates the scan compared.
    pub alternatives: usize,
}

/// Deploys `ae` under `id` with the chosen algorithm. `trace`, if given,
/// collects NDAP's per-step decisions. On `Infeasible` the state is exactly
/// as before the call.
pub fn place(
    algorithm: Algorithm,
    st: &mut PlacementState,
    id: &str,
    ae: &ApplicationEnvironment,
    rng: &mut ChaCha8Rng,
    trace: Option<&mut Vec<DecisionStep>>,
) -> Result<PlacementOutcome, PlaceError> {
    match algorithm {
        Algorithm::Ndap => ndap::place(st, id, ae, trace),
        Algorithm::Nva => nva::place(st, id, ae, rng),
        Algorithm::Ffd => ffd::place(st, id, ae),
    }
}
