//! Truncated p-adic linear algebra for unitary groups in three variables
//! and their twisted counterparts over an unramified quadratic extension.

pub mod campaign;
pub mod conductor;
pub mod descent;
pub mod error;
pub mod matrices;
pub mod norms;
pub mod residue;
pub mod ring;
pub mod sample;
pub mod twisted;
pub mod zpk;

pub use error::{Error, Result};
pub use matrices::{MatrixE, Shape};
pub use ring::{EElement, Oe, RingContext, Valuation};
