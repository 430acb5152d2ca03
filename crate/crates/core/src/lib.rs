//! Certified two-sided bounds on tensor norms and on the Hilbert-space
//! factorization constant Γ of multilinear operators between
//! finite-dimensional ℓ_p spaces.
//!
//! The toolkit never reports a bare point estimate: every number is a lower
//! or an upper bound carrying a machine-checkable certificate (an evaluation
//! point, a decomposition, a dual functional, a domination witness, or a
//! closed-form route with its constants).
//!
//! Module layout:
//!
//! - [`numerics`]: dense symmetric eigensolver, one-sided Jacobi SVD and a
//!   seeded multistart ascent engine. Everything else builds on these.
//! - [`spaces`]: finite-dimensional ℓ_p space descriptors and norms.
//! - [`tensors`]: dense tensors, decomposable points, and the crossnorms
//!   π (projective), ε (injective) and the Hilbert crossnorm, each as a
//!   certified interval.
//! - [`operators`]: multilinear operators as coefficient tensors, operator
//!   norms, and the constructions used by the certification routes.
//! - [`certificates`]: the Γ engine — domination witnesses, certified lower
//!   bounds, closed-form upper routes, witness search, interval aggregation.
//! - [`gamma_norm`]: the tensor norm γ in duality with Γ.
//! - [`polynomials`]: homogeneous polynomials via symmetric tensors and the
//!   polynomial variant of the certificates.
//!
//! Scalars are real (`f64`) throughout; complex scalars are a possible
//! extension, not an implemented one.

pub mod certificates;
pub mod gamma_norm;
pub mod numerics;
pub mod operators;
pub mod polynomials;
pub mod spaces;
pub mod tensors;

mod error;

pub use error::{Error, Result};
