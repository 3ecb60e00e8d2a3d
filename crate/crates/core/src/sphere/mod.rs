//! Quadrature grids and spherical-harmonic transforms on S².

pub mod grid;
pub mod harmonics;

pub use grid::{gauss_legendre, rotation_taking_z_to, QuadratureGrid};
pub use harmonics::{
    degree_order, eval_direction, index, mode_count, real_harmonic, rotated_coefficients,
    LegendreRing, SphericalBasis, SynthesizedField,
};
