//! Discrete N-fermion quantum mechanics on `grid^N`.

pub mod determinant;
pub mod eigen;
pub mod hamiltonian;
pub mod operator;
pub mod sector;
pub mod spectrum;
pub mod wavefunction;

pub use determinant::{lowdin, Determinant};
pub use eigen::{EigenOptions, LinearMap, SolverInfo, SolverKind};
pub use hamiltonian::{
    apply_hamiltonian, couplings, density_pair, energy, expectation, hamiltonian_operator, EnergyDecomposition,
    HamiltonianKind, Potentials,
};
pub use operator::{pair_table, soft_coulomb, TensorOperator};
pub use sector::Sector;
pub use spectrum::{ground_state, ground_state_of, ground_state_with, GroundStateOptions, SpectrumResult, SpectrumSummary};
pub use wavefunction::WaveFunction;
