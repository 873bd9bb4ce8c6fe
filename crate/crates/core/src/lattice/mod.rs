//! Discrete real-space calculus: grids, fields, central differences and
//! midpoint quadrature.

mod field;
mod grid;
mod ops;

pub use field::{ComplexField, ComplexVectorField, Field, ScalarField, VecField, VectorField};
pub use grid::{Boundary, Grid, NeighborTable};
pub use ops::{curl, inner, integrate, integrate_dot, integrate_product, laplacian_values, partial_values, Curl, Norms};
