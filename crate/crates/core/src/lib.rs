//! Simulation of single-photon collective excitation in a Rydberg-blockaded
//! atomic ensemble.
//!
//! The ensemble is described in the permutation-symmetric basis of level
//! occupations `(n_g, n_s, n_r; n_ph)`. Three model tiers are available:
//! the full ground/storage/Rydberg model with a quantized signal mode, the
//! adiabatically eliminated Raman model, and a two-level model restricted to
//! the ground and single-excitation states.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod pulse;
pub mod quadrature;
pub mod runner;
pub mod sparse;

pub use num_complex::Complex64 as C64;

pub use dynamics::{propagate, propagate_reverse, Trajectory};
pub use error::{Result, SimError};
pub use hamiltonian::HamiltonianModel;
pub use hilbert::{enumerate_basis, make_state, BasisLabel, Level, StateVector, SymmetricBasis};
pub use observables::RunReport;
pub use params::{ModelFlags, PhysicalParams, PulseEnvelope, SimulationGrid, Tier};
pub use pulse::{blockade_sweep, solve_pi_pulse, FreeParameter};
