//! Finite-dimensional quantum metric spaces.
//!
//! A quantum pseudometric on a von Neumann algebra `M ⊆ M_n` is stored as a
//! step filtration of operator systems `V_t ⊆ M_n`. On top of that object the
//! crate computes projection distances, neighborhoods, spectral and
//! commutation Lipschitz numbers, the standard metric constructions, and the
//! geometry of quantum codes under Hamming-type error models.
//!
//! Module layout follows the dependency order:
//! [`numerics`] → [`opspace`] → [`filtration`] → [`geometry`] →
//! [`lipschitz`] / [`constructions`] → [`codes`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod codes;
pub mod constructions;
pub mod error;
pub mod filtration;
pub mod geometry;
pub mod lipschitz;
pub mod numerics;
pub mod opspace;

pub use error::{Error, Result};
pub use filtration::{MetricContext, StepFiltration};
pub use geometry::AmplifiedProjection;
pub use numerics::{CMatrix, NumericConfig};
pub use opspace::{OperatorSubspace, VNAlgebra};
