//! Closed surfaces written as radial graphs `X(ω) = c + ρ(ω) ω` over S²,
//! with `ρ` stored as real spherical-harmonic coefficients.

mod diff;
mod expansion;
mod frame;
mod io;
mod radii;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::metric::MetricError;
use crate::sphere::{mode_count, QuadratureGrid, SphericalBasis};

pub use diff::{gauss_map_residual, spectral_derivatives, tangential_gradient_norm};
pub use expansion::{expansion_residual, ExpansionResidual};
pub use frame::{Measure, MetricFields, NodeGeometry, SurfaceFrame};
pub use io::{load_surface, parse_surface, store_surface, write_surface};
pub use radii::{radii, sup_distance};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("grid with {n_colat} rings cannot resolve degree {l_max}")]
    GridTooCoarse { l_max: usize, n_colat: usize },
    #[error("surface is degenerate at node {node}: {reason}")]
    DegenerateSurface { node: usize, reason: String },
    #[error("coefficient vector of length {0} is not (L+1)^2 for any L")]
    BadCoefficientCount(usize),
    #[error("integrand is not finite at node {0}")]
    NonFiniteIntegrand(usize),
    #[error("operation needs an unrotated Gauss-Legendre grid")]
    NeedsGaussGrid,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: duplicate mode (l={l}, m={m})")]
    DuplicateMode { line: usize, l: usize, m: i64 },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SurfaceError>;

/// `√(4π)`, the value of `c₀₀` for the unit sphere.
pub fn y00_scale() -> f64 {
    (4.0 * PI).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSurface {
    center: Vector3<f64>,
    coeffs: Vec<f64>,
    l_max: usize,
}

impl RadialSurface {
    pub fn new(center: Vector3<f64>, coeffs: Vec<f64>) -> Result<Self> {
        let l = (coeffs.len() as f64).sqrt().round() as usize;
        if l == 0 || l * l != coeffs.len() {
            return Err(SurfaceError::BadCoefficientCount(coeffs.len()));
        }
        Ok(Self {
            center,
            coeffs,
            l_max: l - 1,
        })
    }

    /// Round sphere of radius `radius` about `center`.
    pub fn sphere(center: Vector3<f64>, radius: f64, l_max: usize) -> Self {
        let mut coeffs = vec![0.0; mode_count(l_max)];
        coeffs[0] = radius * y00_scale();
        Self {
            center,
            coeffs,
            l_max,
        }
    }

    /// Spectral projection of a radius function given pointwise.
    pub fn from_radius_fn<F>(center: Vector3<f64>, l_max: usize, rho: F) -> Self
    where
        F: Fn(&Vector3<f64>) -> f64,
    {
        // Oversample so the projection of non-band-limited data is accurate.
        let grid = QuadratureGrid::gauss(2 * l_max + 8);
        let basis = SphericalBasis::new(&grid, l_max);
        let mut values = Vec::with_capacity(grid.len());
        for a in 0..grid.n_colat() {
            for b in 0..grid.n_lon() {
                values.push(rho(&grid.direction(a, b)));
            }
        }
        Self {
            center,
            coeffs: basis.analyze(&values),
            l_max,
        }
    }

    /// Ellipsoid `Σ (x_i − c_i)²/a_i² = 1` as a radial graph about its center.
    pub fn ellipsoid(center: Vector3<f64>, semi_axes: [f64; 3], l_max: usize) -> Self {
        Self::from_radius_fn(center, l_max, |w| {
            let q: f64 = (0..3).map(|i| (w[i] / semi_axes[i]).powi(2)).sum();
            1.0 / q.sqrt()
        })
    }

    pub fn center(&self) -> Vector3<f64> {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn set_center(&mut self, center: Vector3<f64>) {
        self.center = center;
    }

    /// Radius of the sphere with the same `c₀₀`.
    pub fn mean_radius(&self) -> f64 {
        self.coeffs[0] / y00_scale()
    }

    /// Copy with coefficients truncated or zero-padded to degree `l_max`.
    pub fn with_l_max(&self, l_max: usize) -> Self {
        let mut coeffs = vec![0.0; mode_count(l_max)];
        let n = coeffs.len().min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Self {
            center: self.center,
            coeffs,
            l_max,
        }
    }

    /// `ρ` at a unit direction.
    pub fn radius_at(&self, dir: &Vector3<f64>) -> f64 {
        crate::sphere::eval_direction(&self.coeffs, dir)
    }

    /// Surface point in direction `dir` from the center.
    pub fn point_at(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        let d = dir.normalize();
        self.center + d * self.radius_at(&d)
    }

    /// Homothety `x ↦ λx` about the origin; exact on coefficients.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self {
            center: self.center * lambda,
            coeffs: self.coeffs.iter().map(|c| c * lambda).collect(),
            l_max: self.l_max,
        }
    }

    /// Homothety about the surface's own center.
    pub fn scaled_about_center(&self, lambda: f64) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * lambda).collect(),
            l_max: self.l_max,
        }
    }

    /// Image under `x ↦ Rx` for a rotation `R`.
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        let inv = rot.transpose();
        Self {
            center: rot * self.center,
            coeffs: crate::sphere::rotated_coefficients(&self.coeffs, self.l_max, &inv),
            l_max: self.l_max,
        }
    }
}

/// A quadrature grid together with harmonic tables for one band limit.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: QuadratureGrid,
    basis: SphericalBasis,
}

impl Discretization {
    /// Gauss grid with `n_colat` rings for surfaces of degree `l_max`.
    pub fn gauss(n_colat: usize, l_max: usize) -> Result<Self> {
        if n_colat <= l_max {
            return Err(SurfaceError::GridTooCoarse { l_max, n_colat });
        }
        let grid = QuadratureGrid::gauss(n_colat);
        let basis = SphericalBasis::new(&grid, l_max);
        Ok(Self { grid, basis })
    }

    /// Grid whose pole points along `pole` with rings clustered there.
    pub fn pole_refined(
        n_colat: usize,
        l_max: usize,
        pole: Vector3<f64>,
        angular_scale: f64,
    ) -> Result<Self> {
        if n_colat <= l_max {
            return Err(SurfaceError::GridTooCoarse { l_max, n_colat });
        }
        let grid = QuadratureGrid::pole_refined(n_colat, pole, angular_scale);
        let basis = SphericalBasis::new(&grid, l_max);
        Ok(Self { grid, basis })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn basis(&self) -> &SphericalBasis {
        &self.basis
    }

    pub fn l_max(&self) -> usize {
        self.basis.l_max()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn is_rotated(&self) -> bool {
        (self.grid.orientation() - Matrix3::identity()).amax() != 0.0
    }

    /// Coefficients of `ρ` expressed in the grid's own frame.
    pub(crate) fn local_coeffs(&self, surface: &RadialSurface) -> Result<Vec<f64>> {
        if surface.l_max() > self.l_max() {
            return Err(SurfaceError::GridTooCoarse {
                l_max: surface.l_max(),
                n_colat: self.grid.n_colat(),
            });
        }
        let c = surface.with_l_max(self.l_max());
        if self.is_rotated() {
            Ok(crate::sphere::rotated_coefficients(
                c.coeffs(),
                self.l_max(),
                self.grid.orientation(),
            ))
        } else {
            Ok(c.coeffs)
        }
    }

    /// Synthesize `ρ` and its parameter derivatives at every node.
    pub fn synthesize(&self, surface: &RadialSurface) -> Result<crate::sphere::SynthesizedField> {
        Ok(self.basis.synthesize(&self.local_coeffs(surface)?))
    }
}
