//! Differential invariants of one-parameter local transformation groups.
//!
//! Given a vector field `Q = xi^a d/dx_a + eta^i d/du^i` together with a
//! universal invariant (a complete set of m+n-1 functionally independent
//! invariants `I^q` and a companion `J` with `QJ = 1`), this crate
//! constructs complete sets of differential invariants of arbitrary order,
//! classifies invariant differentials, reconstructs the field from its
//! invariants, obtains `J` by one quadrature (symbolically from a supplied
//! antiderivative or numerically along the characteristic flow), and
//! generates and solves in closed form the associated Riccati-type systems
//! of first-derivative coordinates along invariant level sets. Every
//! construction is verified numerically on seeded sample domains.
//!
//! The symbolic layer keeps exact rational constants; the numeric kernel
//! (evaluation, sampling, flow integration) is generic over
//! [`scalar::Real`], with [`Scalar`] pinning f64 for the verification
//! layers.

pub mod error;
pub mod expr;
pub mod fixtures;
pub mod invariants;
pub mod invdiff;
pub mod jet;
pub mod linalg;
pub mod number;
pub mod ode;
pub mod prolong;
pub mod quadrature;
pub mod riccati;
pub mod sample;
pub mod scalar;

/// The scalar type used by the verification layers and the CLI.
pub type Scalar = f64;

pub use error::{Error, Result};
pub use expr::{parse, Bindings, Expr, FuncKind};
pub use jet::{JetSpace, MultiIndex};
pub use prolong::{prolong, ProlongedField, VectorField};
pub use sample::DomainSampler;
