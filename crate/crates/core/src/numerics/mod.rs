//! Numerical kernels shared across the library.

pub mod cubic;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod tridiag;

pub use ode::{Flow, OdeError, OdeOptions, Step};
