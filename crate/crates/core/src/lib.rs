//! Free-energy-barrier certificates for stabilizer Hamiltonians.
//!
//! The crate covers the symplectic Pauli algebra ([`pauli`]), stabilizer
//! Hamiltonians with their syndrome energies and step barriers
//! ([`hamiltonian`]), Pauli flows and their free-energy functional
//! ([`flow`]), explicit small-scale Davies generators with support-number
//! and mixing-time bounds ([`davies`]) and a kinetic Monte Carlo simulator of
//! the population dynamics ([`kmc`]).

pub mod codes;
pub mod davies;
pub mod flow;
pub mod hamiltonian;
pub mod io;
pub mod kmc;
pub mod pauli;

pub use hamiltonian::{RateKind, SpectralRateFunction, StabilizerHamiltonian, Term};
pub use pauli::{GeneratorBasis, Letter, PauliError, PauliOperator, Syndrome};

/// Schema tag written into every serialized report.
pub const SCHEMA_VERSION: &str = "febarrier/1";
