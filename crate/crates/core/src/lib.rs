pub mod acceptance;
pub mod dn;
pub mod error;
pub mod factorization;
pub mod forward;
pub mod geometry;
pub mod jet;
pub mod linsolve;
pub mod matrix;
pub mod mono;
pub mod random;
pub mod reconstruction;
pub mod scalar;
pub mod symbol;
pub mod xipoly;

pub use error::{Error, Result};
pub use jet::{Jet, JetShape};
pub use mono::Mono;
pub use scalar::{Field, Rational, Scalar};
