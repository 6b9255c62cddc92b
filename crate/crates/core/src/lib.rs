//! Modular commutators of many-body quantum states.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensorcore`]: sector-blocked state vectors, Schmidt decompositions,
//!   reduced density matrices and modular Hamiltonians.
//! * [`laughlin`]: the golden-angle sphere lattice and the lattice Laughlin
//!   (semion) wavefunction defined on it.
//! * [`partition`]: Haar-random tetrahedral four-region partitions of the sphere.
//! * [`modular`]: the modular commutator `J(A,B,C)`, conditional mutual
//!   information, topological entanglement entropy and the modular-flow response.
//! * [`teststates`]: small structured states (Markov chains, real Gibbs states,
//!   random and classical states) used to exercise exact identities.
//! * [`fitting`]: weighted nonlinear least squares for finite-size extrapolation.
//! * [`current`]: exact-rational modular-current calculus on triangular-lattice disks.

pub mod current;
pub mod error;
pub mod fitting;
pub mod laughlin;
pub mod modular;
pub mod partition;
pub mod tensorcore;
pub mod teststates;

pub use error::{Error, Result};
pub use tensorcore::{Basis, DensityMatrix, PureState, SchmidtData, SiteSet};
