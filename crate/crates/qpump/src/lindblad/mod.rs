//! Frozen-Hamiltonian Lindblad generator: eigenframe, Bohr channels, Ohmic
//! rates, dissipators, steady state and the traceless-subspace inverse.
//!
//! Operators are vectorised by stacking columns, `vec(A)[i + N j] = A[i, j]`,
//! so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

mod basis;
mod frozen;
mod solver;
mod superop;

pub use basis::{bohr_channels, eigendecompose, ohmic_rate, BohrChannel, FrozenBasis};
pub use frozen::FrozenSolution;
pub use superop::{
    dissipator, inverse_on_traceless, inverse_superoperator, lindbladian, steady_state, steady_state_with, unvectorize,
    vectorize, SteadyState, SuperRole, Superoperator,
};
