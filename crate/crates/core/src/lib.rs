//! Permutation-cycle solver for the assignment problem over derangements and
//! the asymmetric traveling salesman problem.
//!
//! The solve runs in three phases:
//!
//! 1. [`phase1`] greedily improves a derangement with negatively valued
//!    permutation cycles grown from the per-row sorted index ([`minm`]).
//! 2. [`phase2`] reaches the assignment optimum by eliminating negative cycles
//!    of the reduced matrix with a Floyd–Warshall style negative-path search.
//! 3. [`phase3`] patches the assignment optimum into a tour using bounded-value
//!    cycles of the reduced matrix.
//!
//! [`oracle`] holds independent exact baselines used to cross-check every
//! phase. Vertices are 0-based in the API and printed 1-based.

pub mod error;
pub mod instance;
pub mod matrix;
pub mod minm;
pub mod oracle;
pub mod perm;
pub mod phase1;
pub mod phase2;
pub mod phase3;
pub mod solve;
pub mod trace;

pub use error::{CoreError, InstanceError, OracleError, Phase2Error, Phase3Error};
pub use matrix::{Cost, CostMatrix, INF};
pub use perm::{Cycle, Derangement, PermSet, ValuedCycle};

/// The bundled 20-vertex worked example instance.
pub const EXAMPLE2_MAT: &str = include_str!("../fixtures/example2.mat");

/// Parses the bundled 20-vertex worked example.
pub fn example2() -> CostMatrix {
    instance::parse_matrix(EXAMPLE2_MAT).expect("bundled fixture is well-formed")
}
