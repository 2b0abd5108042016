//! Asymptotics of planar orthogonal polynomials with respect to exponentially
//! varying weights `e^{-2mQ}` near the boundary of the droplet.
//!
//! The crate is organised by role:
//!
//! - [`potential`]: external potentials `Q` (radial and Hele-Shaw families);
//! - [`droplet`]: droplets, exterior conformal maps and the modified weight;
//! - [`circlefield`]: Fourier-side functions on 𝕋, Hardy projections,
//!   Herglotz transforms and Toeplitz kernel solves;
//! - [`laplace`]: the Laplace-method operators `L_k`, `M_k`;
//! - [`expansion`]: coefficient algorithm for `B_j` and the quasipolynomials;
//! - [`oracle`]: extended-precision Gram–Schmidt reference polynomials;
//! - [`universality`]: rescaled edge densities, erf profile, Berezin density;
//! - [`flow`]: the leading-order orthogonal foliation flow;
//! - [`acceptance`]: the pinned acceptance suite;
//! - [`cli`]: the deterministic job runner behind the `planar-opoly` binary.

pub mod acceptance;
pub mod circlefield;
pub mod cli;
pub mod droplet;
pub mod error;
pub mod expansion;
pub mod flow;
pub mod laplace;
pub mod mp;
pub mod oracle;
pub mod potential;
pub mod quad;
pub mod universality;

pub use error::{Error, Result};
