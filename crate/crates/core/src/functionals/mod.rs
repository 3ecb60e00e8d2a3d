//! Flux integrals and global invariants of asymptotically flat models,
//! evaluated on coordinate spheres and on solved surfaces.

mod certificates;
mod flux;
mod mass;
mod qt;

use thiserror::Error;

use crate::metric::MetricError;
use crate::surface::SurfaceError;

pub use certificates::{curvature_certificates, CertificateReport};
pub use flux::{
    divergence_check, mass_flux_on_sphere, mass_flux_on_surface, mass_tail, shell_integral,
    DivergenceCheck, TailReport, TAIL_SHARE_LIMIT,
};
pub use mass::{adm_mass, adm_mass_with, center_of_mass, CenterReport, MassReport, MassSample};
pub use qt::{qt_decomposition, qt_integral, QTReport};

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("radii not usable: {0}")]
    RadiiTooSmall(String),
    #[error("mass vanishes; center of mass is undefined")]
    ZeroMass,
    #[error("region `{0}` contains no quadrature nodes")]
    EmptyBand(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

pub type Result<T> = std::result::Result<T, FunctionalError>;

/// Least-squares fit of `v(R) = a + c/R`; returns `(a, c, max |residual|)`.
pub fn fit_inverse_power(radii: &[f64], values: &[f64]) -> (f64, f64, f64) {
    let n = radii.len() as f64;
    let xs: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(values)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - c * mx;
    let resid = xs
        .iter()
        .zip(values)
        .map(|(x, y)| (y - a - c * x).abs())
        .fold(0.0, f64::max);
    (a, c, resid)
}
