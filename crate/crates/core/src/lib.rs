//! Numerics for a two-dimensional free-boundary problem driven by the
//! A-Laplacian `div(a(|∇u|)/|∇u| ∇u)` and a transport field `H`.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`operator`]: the coefficient function `a`, the flux map and its
//!   linearization;
//! * [`geometry`]: orbits of `X' = H(X)`, the curvilinear chart built from
//!   them, its Jacobian and the crossing-time function;
//! * [`grid`] and [`solver`]: node fields on a rectangle, the finite-volume
//!   operator, a Picard solver for Dirichlet problems and the fixed-point
//!   iteration for the pair `(u, χ)`;
//! * [`barriers`]: the explicit supersolution used near a free-boundary
//!   point and the comparison solution built from it;
//! * [`free_boundary`]: pulling fields back through the chart, extracting the
//!   free-boundary graph and checking its structure.
//!
//! With the default `parallel` feature, independent work (orbits, node
//! sweeps, Monte Carlo trials) runs on rayon. Reductions are chunked with a
//! fixed chunk size so results are bit-identical with and without the
//! feature.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod error;
pub mod free_boundary;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod operator;
pub mod par;
pub mod solver;

pub use error::{Error, Result};

/// A vector in the plane.
pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
