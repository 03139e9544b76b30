//! Noisy trapdoor claw-free functions from LWE, the randomness-expansion
//! protocols built on them, and the small-scale machinery used to check
//! their claims: exact Gaussian distances, gadget trapdoors, a state-vector
//! simulator for the honest quantum prover, finite-dimensional device
//! analysis, and Toeplitz extraction.
//!
//! Every parameter set shipped here is a toy. Nothing in this crate is
//! cryptographically secure.

pub mod devices;
pub mod error;
pub mod extract;
pub mod gauss;
pub mod modq;
pub mod ntcf;
pub mod profile;
pub mod protocol;
pub mod qsim;
pub mod rng;
pub mod stats;
pub mod trapdoor;

pub use error::{Error, Result};
