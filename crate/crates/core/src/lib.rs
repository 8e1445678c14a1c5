//! Hypercuboid cascaded coded distributed computing.
//!
//! * [`lattice`]: node sets, lattice indexing, single and double node groups.
//! * [`placement`]: file mapping, function assignment, Map and Reduce.
//! * [`shuffle`]: IG and LC shuffle planning, encoding and decoding.
//! * [`simulator`]: end-to-end runs with verification and load accounting.
//! * [`analytics`]: closed-form loads, baseline and converse bounds.
//! * [`sweep`]: figure presets and CSV output.

pub mod analytics;
pub mod gf256;
pub mod lattice;
pub mod placement;
pub mod rational;
pub mod shuffle;
pub mod simulator;
pub mod sweep;

pub use analytics::{AnalyticsError, BoundReport};
pub use lattice::{HypercuboidShape, LatticeError, LatticeIndex, NodeId};
pub use placement::{IvStore, Placement, PlacementConfig, PlacementError};
pub use rational::Rational;
pub use shuffle::{ShuffleError, ShufflePlan};
pub use simulator::{simulate, verify_only, Fault, SimError, SimOptions, SimulationReport};

use thiserror::Error;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Shuffle(#[from] ShuffleError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}
