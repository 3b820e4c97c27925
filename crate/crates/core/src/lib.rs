//! Two-flavor collective neutrino oscillations as interacting spins, with
//! exact state-vector and matrix-product-state time evolution and local
//! quantum-resource measures (entanglement entropy, non-local stabilizer
//! Rényi entropy, antiflatness).

pub mod cli;
pub mod error;
pub mod exact;
pub mod krylov;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod observables;
pub mod resources;

pub use error::{Error, Result};
pub use exact::{EvolutionParams, ExactStepper, Integrator, StateVector};
pub use model::{Basis, CouplingProfile, Flavor, HamiltonianTerms, MassOrdering, SystemSpec};
pub use resources::{EntanglementSpectrum, ResourceRecord};
