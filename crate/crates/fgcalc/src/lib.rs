//! Symbolic tensor calculus for complete contractions of curvature tensors
//! in a formal dimension `n`.
//!
//! The engine represents linear combinations of complete (and partial)
//! contractions of factors like `∇^(m)W_{ijkl}` with coefficients that are
//! exact rational functions of the dimension, works in the quotient ring
//! "modulo contractions of length ≥ L+1", and implements
//!
//! * canonical forms for contractions under the Riemann/Weyl symmetry group,
//! * Weyl/Schouten decomposition and first conformal variation,
//! * the ambient-metric expansion pipeline (assignments + break-up rules),
//! * machine checks of the exact coefficient identities the above produce.

pub mod ambient;
pub mod calculus;
pub mod coeff;
pub mod dsl;
pub mod tensor;
pub mod verify;

pub use coeff::{PolyInN, RationalInN};
pub use tensor::{
    Contraction, Factor, FactorKind, LinComb, ScalarName, SlotRole, Term, TruncationPolicy,
};
