//! Numerical toolkit for the single-atom Coulomb radial eigenproblem.
//!
//! The crate evaluates hydrogenic radial functions in closed form, discretizes
//! the non-relativistic and relativistic radial operators, and runs spectral
//! experiments on them: cluster detection, perturbation tracking, Weyl counts,
//! contour projectors, trace identities and eigenfunction envelope scans.

pub mod bounds_lab;
pub mod clusters;
pub mod density;
pub mod error;
pub mod perturbation;
pub mod projectors;
pub mod quadrature;
pub mod radial_operator;
pub mod specfun;
pub mod tridiag;

pub use error::{Error, Result};
pub use perturbation::{PerturbationSpec, Profile};
pub use radial_operator::{DiscreteOperator, EigenPair, RadialGrid};
pub use specfun::{QuantumNumbers, TurningPoints};
