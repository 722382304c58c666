//! Entangling-probe attack on BB84 quantum key distribution.
//!
//! - [`quantum`]: one- and two-qubit state vectors, operators and Born-rule sampling.
//! - [`probe`]: signal geometry, the CNOT entangler, probe states and the
//!   projective-measurement analytics.
//! - [`povm`]: the unambiguous-discrimination receiver for the probe.
//! - [`sim`]: Monte Carlo BB84 sessions with an optional probe, channel loss
//!   and selective relay.

pub mod error;
pub mod povm;
pub mod probe;
pub mod quantum;
pub mod sim;

pub use error::{Error, Result};
