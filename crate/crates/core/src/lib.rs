//! Quadratic residues modulo composite `Q`: enumeration, spacing statistics,
//! r-level correlations and the exact identities behind them.

pub mod correlations;
pub mod delta;
pub mod error;
pub mod exact;
pub mod modulus;
pub mod parse;
pub mod residues;
pub mod spacings;
pub mod truncation;
pub mod verify;

pub use error::{Error, Result};
pub use modulus::{factor, FactoredModulus, PrimePower};
