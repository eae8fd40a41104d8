//! Jackson-damped kernel polynomial method (KPM) for spectral density
//! estimation of real symmetric matrices with `‖A‖₂ ≤ 1`.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature for the
//! process-wide Jackson coefficient cache.
//!
//! Pipeline:
//!
//! 1. Chebyshev moments `τ_k = (1/n) tr(T̄_k(A))` are computed exactly
//!    ([`moments::exact_moments`], [`moments::moments_from_spectrum`]) or
//!    estimated with Hutchinson probes through a matrix-vector oracle
//!    ([`moments::hutchinson_moments`], [`moments::approx_hutchinson_moments`]).
//! 2. The moments are damped with Jackson coefficients ([`jackson`]) and turned
//!    into a density `q(x) = w(x) Σ a_k T̄_k(x)` ([`kpm`]).
//! 3. The density can be integrated in closed form, discretized into `n`
//!    approximate eigenvalues, and scored in Wasserstein-1 ([`spectrum`]).
//!
//! Normalized graph adjacency matrices get a sublinear sampled matvec oracle
//! in [`graph`].
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cheb;
pub mod error;
pub mod graph;
pub mod jackson;
pub mod kpm;
pub mod moments;
pub mod oracle;
pub mod rng;
pub mod spectrum;
pub mod synth;

pub use cheb::ChebyshevSeries;
pub use error::{KpmError, Result};
pub use graph::GraphAccess;
pub use jackson::JacksonCoefficients;
pub use kpm::{DensityEstimate, DensityForm};
pub use moments::{MomentVector, Provenance};
pub use oracle::{MatVecOracle, SymmetricMatrix};
pub use spectrum::{DiscreteSpectrum, IntegrableDensity};
