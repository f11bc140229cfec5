//! Mapped tent pitching (MTP) solvers for symmetric linear hyperbolic
//! systems on 1D/2D simplicial meshes.
//!
//! The crate is organized along the stages of an MTP computation:
//!
//! - [`mesh`]: simplicial meshes, facet topology and generators
//!   (intervals, structured squares, Peterson band meshes);
//! - [`hypersys`]: definitions of symmetric hyperbolic systems
//!   (coefficients, boundary operators, stabilization) and numeric
//!   verification of their structural assumptions;
//! - [`pitch`]: causal tent slab construction by greedy advancing-front
//!   pitching;
//! - [`quadrature`] / [`basis`]: exact simplex quadrature and per-element
//!   orthonormal DG bases;
//! - [`tentops`]: per-tent operator assembly for the mapped equation
//!   (mass operators, DG stiffness, boundary load, associated norms);
//! - [`steppers`]: tent propagators (tent-implicit, iterated explicit,
//!   structure-aware Taylor with subtents) plus stability diagnostics;
//! - [`driver`]: global front-to-front propagation, initial projection,
//!   front norms and error measurement.

pub mod basis;
pub mod driver;
pub mod error;
pub mod hypersys;
pub mod linalg;
pub mod mesh;
pub mod pitch;
pub mod quadrature;
pub mod steppers;
pub mod tentops;

pub use error::{Error, Result};
