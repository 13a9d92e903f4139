//! Exact and numerical tools for two-dimensional Parsell–Vinogradov systems.
//!
//! The crate is split by concern:
//!
//! - [`system`] and [`key`]: the monomial system of degree `k`, its moment map
//!   and the bit-packed keys used by the counting engine.
//! - [`counting`]: exact solution counts (brute-force oracle and a partitioned
//!   convolution engine), the relaxed real-valued variant, the perturbed quartic
//!   system and power-law exponent fits.
//! - [`transversality`]: tangent frames, the determinant pairing polynomials,
//!   exact kernel checks, isotropic subspace search, the Brascamp–Lieb rank
//!   condition, transversality estimates and zero-set square counts.
//! - [`oscillatory`]: Weyl sums, Monte Carlo torus means, restriction ratios
//!   and decoupling probes.

pub mod counting;
pub mod error;
pub mod key;
pub mod oscillatory;
pub mod system;
pub mod transversality;

pub use error::{Error, Result};
pub use key::{KeyLayout, PackedKey};
pub use system::{build_system, moment_map, predicted_exponent, MomentVector, MonomialSystem};
