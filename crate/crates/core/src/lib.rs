//! Liquid-state NMR quantum-computing simulator.
//!
//! The crate executes pulse sequences on weakly coupled spin-1/2 systems
//! using a dense deviation density matrix, mirrors states as product-operator
//! expansions, builds the composite z-pulse and controlled n-th-root-NOT
//! constructions, and implements the two-readout phase estimation and
//! correction loop.
//!
//! # Conventions
//!
//! * Basis states are ordered as a tensor product over the spins in
//!   configuration order, spin 0 being the most significant bit. Bit value 0
//!   is spin-up (Iz = +1/2).
//! * Rotations are left-handed, the precession sense of a positive-γ nucleus:
//!   a rotation by θ about axis `a` is `exp(+iθ·I_a)`, and free precession
//!   under `H` for a time `t` is `ρ → e^{+iHt} ρ e^{-iHt}`. With this choice
//!   `(π/2)_{-y}` takes `Iz` to `+Ix` and J evolution takes `Ix` to
//!   `Ix·cos(πJt) − 2IyIz·sin(πJt)`.
//! * All states are deviation density matrices: the identity part is dropped.

pub mod density;
pub mod error;
mod linalg;
pub mod prodop;
pub mod readout;
pub mod sequence;
pub mod spin;

pub use density::{Axis, DensityState, RotationSpec};
pub use error::{Error, Result};
pub use prodop::{Letter, OperatorExpansion, ProductTerm};
pub use sequence::{PulseEvent, Sequence};
pub use spin::{CouplingMask, Species, Spin, SpinSystem};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type Matrix = ndarray::Array2<C64>;
