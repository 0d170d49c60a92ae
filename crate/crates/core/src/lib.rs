//! Numerical certification of non-amenability for finitely generated group
//! actions on the circle.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: reduced words, Cayley balls and finitely supported kernels for
//!   free groups `F_k` and free abelian groups `Z^d`.
//! * [`spectral`]: the bottom of the spectrum of the averaged Cayley-graph
//!   Laplacian, Rayleigh quotients and Cheeger ratios.
//! * [`circle`]: sampled orientation-preserving circle diffeomorphisms and
//!   group actions by them.
//! * [`measures`]: grid measures, pushforwards, Radon–Nikodym cocycles and
//!   Hellinger distances.
//! * [`module_rep`]: the `ℓ₂(G) ⊗ C(X)` module, the representations `L_g` and
//!   `π_g`, amenability witnesses and coboundary cocycles.
//! * [`certifier`]: Hellinger/spectral-gap certificates, integrability
//!   evidence, near-isometry checks and the replay of the certificate's
//!   inequality chain.
//! * [`cli`]: JSON configuration, command dispatch and report emission.

pub mod certifier;
pub mod circle;
pub mod cli;
mod eigen;
pub mod error;
pub mod group;
pub mod measures;
pub mod module_rep;
pub mod spectral;

pub use error::{Error, Result};
