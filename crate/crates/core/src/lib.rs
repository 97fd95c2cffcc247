//! Finite-element solver for a Stokes fluid coupled through a closed
//! interface to a thin elastic layer (1D wave equation along the interface)
//! and a thick Lamé body.
//!
//! The resolvent `(λI − A)Φ = Φ*` is solved through a structure-only mixed
//! system: the fluid enters through its Dirichlet-to-Neumann map, and the
//! zero-flux condition on the interface velocity is the single saddle
//! constraint. Implicit Euler on top of the resolvent gives the semigroup.
//!
//! Everything is generic over the scalar type; `f64` aliases live at the
//! crate root.

pub mod checks;
pub mod datum;
pub mod element;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod infsup;
pub mod manufactured;
pub mod monolithic;
pub mod pressure;
pub mod quadrature;
pub mod scalar;
pub mod semigroup;
pub mod sparse;
pub mod resolvent;
pub mod state_io;
pub mod stokes;
pub mod vtk;

pub use error::{FsiError, Result};
pub use scalar::Real;

pub type Mesh64 = geometry::Mesh<f64>;
pub type FunctionSpaces64 = fem::FunctionSpaces<f64>;
pub type FemOperators64 = fem::FemOperators<f64>;
pub type StateVector64 = fem::StateVector<f64>;
pub type MaterialParams64 = fem::MaterialParams<f64>;
