//! Cell-centered finite volumes on uniform boxes in one to three
//! dimensions: grid and field types, the Neumann operator `A`, the Robin
//! operator `B`, quadrature and snapshot serialization.

mod field;
mod grid;
pub mod io;
mod operators;
mod quadrature;

pub use field::Field;
pub use grid::Grid;
pub use operators::{OperatorA, OperatorB, SymmetricOperator};
pub use quadrature::{
    boundary_integrate, gradient_sq_density, h1_seminorm, inner, integrate, l1_norm, l2_norm, linf_norm,
};
