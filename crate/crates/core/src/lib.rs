//! Numerical core for pseudomodes of the damped wave equation
//!
//! ```text
//! u_tt + 2 a(x) u_t = u_xx - q(x) u
//! ```
//!
//! with an unbounded damping `a`. The generator `G` of the first order
//! system is studied through the quadratic pencil
//! `T(λ) = -∂² + q + 2λa + λ²`: WKB pseudomodes `f_λ` localized around the
//! turning point `a(b) = -Re λ` give `‖(G-λ)Ψ_λ‖ / ‖Ψ_λ‖ → 0` along curves in
//! the left half-plane, certifying large resolvent norms there. A finite
//! difference discretization of `G` in the energy norm provides an
//! independent check through eigenvalues and smallest singular values.
//!
//! The crate is `no_std` (with `alloc`); IO, configuration and parallel
//! fan-out live in the `pseudowave` crate.

#![no_std]
// `!(x > 0.0)` is deliberate: NaN must fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod discretize;
pub mod error;
pub mod gridfn;
pub mod profiles;
pub mod pseudomode;
pub mod residual;
pub mod wkb;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
