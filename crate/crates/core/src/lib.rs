//! Desk-scale laboratory for current density functional theory on finite
//! grids: constrained-search functionals over the density pair
//! (rho, paramagnetic current), one-electron v-representability, and an
//! N-representable Kohn-Sham scheme, each checked against exact
//! diagonalization.

pub mod csearch;
pub mod error;
pub mod io;
pub mod kohnsham;
pub mod lattice;
pub mod manybody;
pub mod optim;
pub mod pair;
pub mod scalar;
pub mod vrep;

pub use error::{CdftError, Result};
pub use scalar::{Complex, Real};

// `f64` instantiations of the generic types.
pub type Grid64 = lattice::Grid<f64>;
pub type ScalarField64 = lattice::ScalarField<f64>;
pub type ComplexField64 = lattice::ComplexField<f64>;
pub type VectorField64 = lattice::VectorField<f64>;
pub type Potentials64 = manybody::Potentials<f64>;
pub type WaveFunction64 = manybody::WaveFunction<f64>;
pub type Determinant64 = manybody::Determinant<f64>;
pub type SpectrumResult64 = manybody::SpectrumResult<f64>;
pub type DensityPair64 = pair::DensityPair<f64>;
pub type CsearchProblem64 = csearch::CsearchProblem<f64>;
pub type CsearchResult64 = csearch::CsearchResult<f64>;
pub type VrepReport64 = vrep::VrepReport<f64>;
pub type CounterexampleSpec64 = vrep::CounterexampleSpec<f64>;
pub type ScfResult64 = kohnsham::ScfResult<f64>;
pub type MinimizeGResult64 = kohnsham::MinimizeGResult<f64>;
