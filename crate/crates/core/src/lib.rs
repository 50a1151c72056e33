//! Euler-Kronecker constants of cyclotomic fields.
//!
//! `γ_q` for `ℚ(ζ_q)` is assembled from logarithmic derivatives of Dirichlet
//! L-functions at `s = 1`, one layer per conductor dividing `q`:
//!
//! ```text
//! γ_q = γ + Σ_{1 < q* | q} Σ_{χ* primitive mod q*} L'(1, χ*) / L(1, χ*)
//! ```
//!
//! The crate also evaluates a sieve-theoretic splitting of `γ_q` into seven
//! terms at finite cut-offs `(x, x₁)` and checks that the pieces add back up,
//! and it drives dyadic-range experiments over `Q < q ≤ 2Q`.
//!
//! Layout:
//!
//! * [`arith`] sieved `Λ`, `φ`, `μ` tables and Chebyshev sums
//! * [`characters`] exact Dirichlet character groups
//! * [`special`] digamma and first Stieltjes constants at rational points
//! * [`lfunc`] `L(1,χ)`, `L'(1,χ)` and the prime-sum proxy `Φ_χ(x)`
//! * [`ek`] per-conductor totals, the on-disk cache, and `γ_q`
//! * [`decomp`] the seven-term decomposition
//! * [`experiments`] range scans, statistics, the Elliott-Halberstam probe, output files

pub mod arith;
pub mod characters;
pub mod decomp;
pub mod ek;
pub mod error;
pub mod experiments;
pub mod lfunc;
pub mod special;
pub mod summation;

pub use error::{Error, Result};

/// The Euler-Mascheroni constant to 20 significant digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;
