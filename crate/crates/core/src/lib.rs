//! Numerical laboratory for the two-dimensional nonlinear Schrödinger
//! equation with multiplicative spatial white noise,
//!
//! ```text
//! i ∂t u = Δu + u ξ − λ u |u|^p,
//! ```
//!
//! solved through mollification of the noise, Wick renormalization and the
//! exponential gauge `v = e^Y u`.
//!
//! Modules, bottom-up:
//! - [`grid`]: periodic box, unitary 2D DFT, spectral derivatives, snapshots.
//! - [`lp`]: Littlewood-Paley blocks and weighted Besov/Sobolev/Hölder norms.
//! - [`noise`]: white noise, mollifier, truncated Green function, Wick objects.
//! - [`gauge`]: maps between the original, gauged and primitive unknowns.
//! - [`dynamics`]: split-step and Runge-Kutta integrators.
//! - [`energetics`]: mass, energy and the modified-energy audit.
//! - [`harness`]: ε-ladder studies, Monte Carlo campaigns, CSV/SVG output.

pub mod error;
pub mod grid;
pub mod gauge;
pub mod lp;
pub mod noise;
pub mod energetics;
pub mod dynamics;
pub mod harness;
mod par;

pub use error::{Error, Result};
pub use grid::{Domain, Field, GridSpec};

pub type C64 = num_complex::Complex<f64>;
