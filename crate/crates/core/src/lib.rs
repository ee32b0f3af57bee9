//! Atom-in-front-of-a-mirror toolkit: a truncated multimode-cavity model of the
//! delayed-feedback problem, the master-equation machinery to run it, and two
//! exact references (the delay equation and a discretized chain).

pub mod chain;
pub mod dde;
pub mod error;
pub mod exec;
pub mod model;
pub mod quantum;
pub mod scattering;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
