//! Numerical construction of cohomogeneity-one gradient expanding Ricci
//! solitons on S¹×ℝ³ and S²×ℝ², with asymptotic-cone extraction and degree
//! certificates for the associated shooting maps.
//!
//! The metric ansatz is `g = dr² + a(r)² dθ² + b(r)² g_{S²}` (for S¹×ℝ³;
//! the roles of the collapsing directions swap for S²×ℝ²).  The soliton
//! condition reduces to a second-order system for `(a, b, f)` where `f` is
//! the potential:
//!
//! ```text
//! a'' = -2 a'b'/b + a'f' + a
//! b'' = (1 - b'²)/b - a'b'/a + b'f' + b
//! f'' = a''/a + 2 b''/b - 1
//! ```
//!
//! The boundary at `r = 0` is degenerate (one warping factor vanishes), so
//! integration starts from a Taylor jet computed in [`profile_ode`], is
//! carried outward by the error-controlled stepper in [`integrator`], and
//! the pieces downstream read off curvature ([`geometry`]), cone data
//! ([`cone_map`]), and topological degree ([`degree`]).
//!
//! Everything here is pure and `Send + Sync`; grids parallelize with rayon.

pub mod cone_map;
pub mod degree;
mod error;
pub mod geometry;
pub mod integrator;
pub mod profile_ode;

pub use error::SolitonError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SolitonError>;
