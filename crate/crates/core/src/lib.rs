//! Constant mean curvature foliations, stability spectra and mass-detecting
//! surface integrals on asymptotically flat 3-metrics.

// Negated comparisons reject NaN on purpose; index loops mirror tensor notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod blowdown;
pub mod functionals;
pub mod harness;
pub mod metric;
pub mod solver;
pub mod sphere;
pub mod surface;
