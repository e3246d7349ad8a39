//! Open-quantum-system heat pump engine for small qubit registers driven
//! slowly through a two-parameter field `X = (B_x, B_z)`.
//!
//! The crate covers the frozen Lindblad generator, the adiabatic-response
//! expansion to second order in the driving speed, instantaneous energy and
//! entropy balance, closed-cycle pumped heats and dissipated work, and
//! closed-form single-qubit references.

pub mod error;
pub mod lattice;
pub mod lindblad;
pub mod numerics;
pub mod response;
pub mod thermo;
pub mod cycle;
pub mod oracles;

pub use error::{Error, Result};
pub use lattice::{BathSpec, FieldCoupling, SystemConfig};
pub use lindblad::FrozenSolution;
pub use numerics::{KernelPolicy, Numerics, Stencil};
