//! Numerical laboratory for a three-component ODE–PDE carcinogenesis model:
//! steady states, diffusion-driven instability, stationary patterns, unstable
//! spectra and time-dependent simulation.
//!
//! The model core and the ODE, root and quadrature kernels are generic over
//! [`scalar::Real`]; the aliases below fix the scalar to `f64`.

pub mod io;
pub mod kinetics;
pub mod model;
pub mod numerics;
pub mod pattern;
pub mod pde;
pub mod scalar;
pub mod spectral;

pub use scalar::Real;

pub type ModelParams = model::ModelParams<f64>;
pub type SteadyState = model::SteadyState<f64>;
pub type DdiReport = model::DdiReport<f64>;
pub type Mat3 = model::Mat3<f64>;
