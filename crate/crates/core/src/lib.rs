//! Beurling generalized number systems: template construction, random prime
//! selection, exact semigroup enumeration and measurement.
//!
//! A Beurling system is a multiset of real "primes" > 1 together with the
//! multiplicative semigroup they generate, counted with distinct
//! factorizations. This crate builds three families of monotone template
//! prime-counting functions (pole/zero prescriptions, oscillatory density
//! blocks, subtractive atomic templates on the rational primes), realizes
//! them as discrete prime sequences by inverse-CDF sampling, enumerates the
//! generated integers exactly under pluggable arithmetic weights, and fits
//! the residual exponents of the resulting counting functions.
//!
//! Modules:
//! * [`logint`] — series kernel for the logarithmic integrals Li/li with
//!   complex exponents, their Mellin transforms, and Riemann zeta values.
//! * [`templates`] — the three template families as [`templates::TemplateFn`].
//! * [`sampler`] — deterministic-per-seed inverse-CDF prime sampling and
//!   deviation diagnostics.
//! * [`semigroup`] — exact semigroup enumeration, Dirichlet hyperbola
//!   convolution, classical sieve, and system transforms.
//! * [`analysis`] — residual exponent fits, Euler products, Dirichlet
//!   series, and the zeta-side factorization checks.
//! * [`config`] — serializable system specs, presets and run manifests.

pub mod analysis;
pub mod config;
pub mod error;
pub mod logint;
pub mod sampler;
pub mod semigroup;
pub mod templates;

pub(crate) mod quad;
pub(crate) mod rng;
pub(crate) mod util;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;
