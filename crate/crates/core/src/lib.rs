//! Trilinear maps from Weil descent of hyperelliptic jacobians.
//!
//! The library is organised bottom-up:
//!
//! - [`field`]: prime fields, extension towers `K = F_{p^d}` in a fixed power
//!   basis, linear algebra over both, polynomial utilities over the prime
//!   field, square roots and root finding.
//! - [`poly`]: dense univariate polynomials over an extension field.
//! - [`mpoly`]: sparse multivariate polynomials over `K` with optional
//!   Frobenius-power tags on variables.
//! - [`descent`]: Weil-descent tables, global descent of polynomials and
//!   varieties, the descent/ascent point maps, the global-descent recognition
//!   and basis-recovery toolkit, and tuple masking.
//! - [`jacobian`]: Mumford arithmetic on hyperelliptic jacobians with exact
//!   principal-function traces, group order, and torsion sampling.
//! - [`pairing`]: Miller functions over the trace machinery, the Weil pairing
//!   via reciprocity with the infinity correction, and the extended pairing on
//!   descent points.
//! - [`protocol`]: the three-group trilinear protocol — structured
//!   endomorphism matrices, the free-algebra encoding with switch rewriting,
//!   setup/publish, evaluation, zero testing and trapdoor decoding.
//! - [`attacks`]: the self-attack toolkit — point harvesting, nullspace
//!   dimension probes, the linear-term basis-recovery attack, and the
//!   global-descent scan.
//! - [`cli`]: the command surface used by the `trilinear` binary.

pub mod attacks;
pub mod cli;
pub mod descent;
pub mod error;
pub mod field;
pub mod jacobian;
pub mod mpoly;
pub mod pairing;
pub mod poly;
pub mod protocol;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Version tag written into every serialized artifact.
pub const FORMAT_VERSION: u32 = 1;
