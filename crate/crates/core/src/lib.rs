//! Smoothed mean square of quadratic twists of Hecke eigenform coefficients.
//!
//! For the weight-12 form Δ with normalized coefficients λ(n), the crate
//! computes
//!
//! ```text
//! S(X, Y; Φ, Ψ) = Σ*_d ( Σ_n λ(n) χ_{8d}(n) Φ(n/Y) )² Ψ(d/X)
//! ```
//!
//! (the outer sum over odd square-free `d`) by brute force, and the constant
//! `C₀(Φ, Ψ)` with `S ≈ C₀·X·Y` by two independent routes: the diagonal
//! square-pair sum and a vertical-line integral of symmetric-square
//! L-values.

pub mod arith;
pub mod charsum;
pub mod error;
pub mod experiment;
pub mod gauss;
pub mod lfunc;
pub mod mainterm;
pub mod modform;
pub mod quad;
pub mod special;
pub mod sum;
pub mod windows;

pub use error::{Error, Result};
