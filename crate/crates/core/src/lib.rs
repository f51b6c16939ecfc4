//! Grand-canonical finite-volume statistical mechanics for classical pair
//! potentials, and an inverse solver that recovers a pair potential from its
//! pair structure.
//!
//! The crate is organised bottom-up:
//!
//! - [`potentials`]: admissible radial pair potentials, certificates, stability.
//! - [`system`]: boxes, configurations, Hamiltonians, cell lists.
//! - [`oracle`]: quadrature-exact partition functions, correlation functions
//!   and Janossy densities for tiny systems.
//! - [`gcmc`]: grand-canonical Metropolis sampler.
//! - [`estimators`]: density, pair correlation, RDF, GNZ residuals.
//! - [`thermo`]: specific energy, entropy, grand potential, variational gap.
//! - [`inverse`]: iterative Boltzmann inversion and uniqueness experiments.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod estimators;
pub mod frames;
pub mod gcmc;
pub mod inverse;
pub mod oracle;
pub mod potentials;
pub mod stats;
pub mod system;
pub mod thermo;

pub use energy::Energy;
pub use error::{Error, Result};
pub use potentials::{PairPotential, SpaceDim};
pub use system::{Boundary, BoxSpec, Configuration};

/// Format version embedded in every JSON artifact.
pub const FORMAT_VERSION: &str = "gibbs-inverse/1";
