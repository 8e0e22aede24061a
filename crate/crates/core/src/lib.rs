//! Positivity certificates for group algebras of free groups and their
//! relatives: sums-of-squares search, positive-type extension, GNS
//! reconstruction and Bell-scenario bounds.

pub mod acceptance;
pub mod algebra;
pub mod bell;
pub mod certify;
pub mod denselin;
pub mod error;
pub mod extendpt;
pub mod formats;
pub mod gnsrep;
pub mod grounded;
pub mod parallel;
pub mod rng;
pub mod sdp;
pub mod words;

pub use error::{Error, Result};
