//! Numerical analysis on finite metric measure spaces.
//!
//! A space is a finite point set with a metric and positive masses
//! ([`space`]). On top of it sit pointwise Lipschitz constants over a
//! ladder of radii ([`lipschitz`]), Poincaré constant estimates
//! ([`poincare`]), ε-path quasiconvexification ([`quasiconvex`]), net and
//! span-rank bounds ([`quasilinear`]), minimax differentials and first-order
//! dependence ([`differentiation`]), greedy coordinate atlases ([`atlas`])
//! and rescaled tangent views ([`blowup`]).

// `!(x > 0.0)` rejects NaN along with the non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod generators;
pub mod lipschitz;
pub mod space;
pub mod quasiconvex;
pub mod poincare;
pub mod quasilinear;
pub mod lp;
pub mod differentiation;
pub mod atlas;
pub mod blowup;
pub mod cli;
