//! Truncated Hilbert spaces, operators and the master-equation workloads.

pub mod evolve;
pub mod hamiltonian;
pub mod liouvillian;
pub mod mcwf;
pub mod ode;
pub mod operator;
pub mod space;
pub mod state;
pub mod steady;

pub use evolve::{integrate_me, uniform_grid, Diagnostics, EvolutionResult, MeOptions, OperatorProbe, Probe, Reduction, Series};
pub use hamiltonian::{build_hamiltonian, collective_mode, driven_qubit, jump_operators, DriveDissipationSpec, Jump, JumpMode};
pub use liouvillian::{build_liouvillian, DriveTerm, Liouvillian};
pub use mcwf::{mcwf_evolve, McwfOptions};
pub use operator::{embed, QuantumOperator};
pub use space::CompositeSpace;
pub use state::{DensityMatrix, StateVector};
pub use steady::{steady_state, SteadyOptions};
