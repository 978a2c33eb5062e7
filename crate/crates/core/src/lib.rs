//! Numerical laboratory for dilaton-warped product metrics.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: periodic lattices, scalar and tensor fields, stencils, quadrature
//!   and spectral filtering.
//! * [`geometry`]: generic finite-difference tensor calculus for any metric field
//!   (Christoffel symbols, Ricci tensor, scalar curvature, Hessian,
//!   Laplace–Beltrami). This is the reference every closed form is checked against.
//! * [`warped`]: the constants algebra for the warping exponents `(A, B)`, the
//!   product metric `e^{-Af} g ⊕ e^{-Bf} h` and its closed-form curvature.
//! * [`functionals`]: the 𝓕 / 𝓕_λ functionals, total scalar curvature of the
//!   product and the first-variation identity.
//! * [`flow`]: the coupled constrained-gradient flow and the decoupled
//!   Ricci flow + conjugate heat formulation.
//!
//! Node-wise work runs on rayon when the `parallel` feature is enabled (the
//! default). Every reduction uses a fixed chunking, so results are bit-identical
//! regardless of thread count or feature selection.

// NaN must fail every tolerance check, hence `!(x <= tol)` throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod par;
pub mod recipes;
pub mod warped;

pub use error::{Error, Result};
pub use grid::{Christoffel3Field, GridSpec, ScalarField, StencilOrder, SymTensorField};
