//! The multiplication algorithms: few-triangles processing over a virtual
//! instance, dense-cluster extraction with in-cluster solvers, and the
//! top-level drivers that chain both phases.
//!
//! Everything here produces [`Program`]s from a [`Shape`] alone and runs
//! them through [`Network`]; values never influence a schedule.

mod clusters;
mod few_triangles;
mod toplevel;
mod virtualize;

pub use clusters::{
    extract_clustering, find_dense_cluster, find_dense_cluster_with, partition_clusterings,
    schedule_clustered, solve_clustered, ClusterRoutine, ClusterSearch, Clustering,
    EXHAUSTIVE_SEARCH_LIMIT,
};
pub use few_triangles::{process_few_triangles, schedule_few_triangles};
pub use toplevel::{
    multiply_for_combo, multiply_generic_d2, multiply_naive, multiply_us_us_as, MultiplyOutcome,
};
pub use virtualize::{build_virtual_instance, VirtualInstance, VirtualTriangle};

use std::fmt;

use crate::netsim::Violation;
use crate::routing::RoutingError;
use crate::spmat::PatternError;
use crate::support::SupportError;

#[derive(Debug)]
pub enum AlgoError {
    Support(SupportError),
    Routing(RoutingError),
    Sim(Violation),
    Pattern(PatternError),
    /// More triangles than the anchor arrays can carry.
    Capacity { triangles: usize, kappa: usize, n: usize },
    /// A node pair touches more triangles than the declared `m`.
    PairOverflow { max_pair: usize, m: usize },
    /// Triangle count below the density threshold a phase requires.
    BelowThreshold { have: usize, need: f64 },
    /// Triangle count above the ceiling a phase requires.
    AboveCeiling { have: usize, limit: f64 },
    /// Clusters need 3d computers each; the network is too small.
    ClusterTooWide { d: usize, n: usize },
    /// A clustering whose clusters share nodes or whose triangles escape
    /// their cluster.
    MalformedClustering,
}

impl fmt::Display for AlgoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoError::Support(e) => write!(f, "{}", e),
            AlgoError::Routing(e) => write!(f, "{}", e),
            AlgoError::Sim(v) => write!(f, "model violation: {}", v),
            AlgoError::Pattern(e) => write!(f, "{}", e),
            AlgoError::Capacity { triangles, kappa, n } => {
                write!(f, "{} triangles exceed kappa*n = {}*{}", triangles, kappa, n)
            }
            AlgoError::PairOverflow { max_pair, m } => {
                write!(f, "a pair touches {} triangles, limit m = {}", max_pair, m)
            }
            AlgoError::BelowThreshold { have, need } => {
                write!(f, "{} triangles below the required threshold {:.1}", have, need)
            }
            AlgoError::AboveCeiling { have, limit } => {
                write!(f, "{} triangles above the permitted ceiling {:.1}", have, limit)
            }
            AlgoError::ClusterTooWide { d, n } => {
                write!(f, "clusters need 3d = {} computers, network has {}", 3 * d, n)
            }
            AlgoError::MalformedClustering => write!(f, "clustering invariants violated"),
        }
    }
}

impl std::error::Error for AlgoError {}

impl From<SupportError> for AlgoError {
    fn from(e: SupportError) -> AlgoError {
        AlgoError::Support(e)
    }
}

impl From<RoutingError> for AlgoError {
    fn from(e: RoutingError) -> AlgoError {
        AlgoError::Routing(e)
    }
}

impl From<Violation> for AlgoError {
    fn from(v: Violation) -> AlgoError {
        AlgoError::Sim(v)
    }
}

impl From<PatternError> for AlgoError {
    fn from(e: PatternError) -> AlgoError {
        AlgoError::Pattern(e)
    }
}
