//! Numerical laboratory for the two-parameter mean field equation
//! `−Δu = ρ₁(e^u/∫e^u − 1) − ρ₂(e^{−u}/∫e^{−u} − 1)` on closed surfaces of unit area.

pub mod barycenter;
pub mod cli;
pub mod error;
pub mod functional;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod solver;
pub mod surface;

pub use error::{MfeError, Result};
pub use functional::{MfeParams, MtReport};
pub use operators::{DiscreteOperators, Eigenpair, GreenColumn, ScalarField};
pub use surface::{MeshId, SurfaceMesh};
