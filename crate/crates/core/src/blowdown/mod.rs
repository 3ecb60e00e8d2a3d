//! Rescalings of surfaces and metrics, limit-shape fits, and the annular
//! bookkeeping of curvature along large surfaces.

mod annulus;
mod fit;

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{MetricError, MetricModel};
use crate::surface::{
    tangential_gradient_norm, Discretization, RadialSurface, SurfaceError, SurfaceFrame,
};

pub use annulus::{annulus_schedule, gauss_map_energy, AnnulusSchedule, EnergyBand, EnergyProfile};
pub use fit::{plane_fit, sphere_fit, FitKind, FitParameters, FitReport};

#[derive(Debug, Error)]
pub enum BlowdownError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("no nodes within window radius {0}")]
    EmptyWindow(f64),
    #[error("no intermediate region: K r0 = {inner} and s/H = {outer} give fewer than one band")]
    NoIntermediateRegion { inner: f64, outer: f64 },
    #[error("band {0} contains no quadrature nodes")]
    EmptyBand(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

pub type Result<T> = std::result::Result<T, BlowdownError>;

/// `{λx : x ∈ Σ}`.
pub fn rescale_surface(surface: &RadialSurface, lambda: f64) -> Result<RadialSurface> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(BlowdownError::InvalidInput(format!(
            "scale {lambda} must be positive"
        )));
    }
    Ok(surface.rescaled(lambda))
}

/// Model with perturbation `h^r(x) = r·h(rx)`.
pub fn rescale_metric(model: &MetricModel, r: f64) -> Result<MetricModel> {
    Ok(model.rescaled(r)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionReport {
    /// `|∇_Σ H_e|` at every node.
    pub gradient: Vec<f64>,
    pub sup_gradient: f64,
    /// `sup |x|³ |∇_Σ H_e|`.
    pub scaled_sup: f64,
}

/// Tangential gradient of the Euclidean mean curvature along the surface.
pub fn tension_scan(surface: &RadialSurface, disc: &Discretization) -> Result<TensionReport> {
    let frame = SurfaceFrame::euclidean(surface, disc)?;
    let he: Vec<f64> = frame
        .nodes()
        .iter()
        .map(|n| n.euclid.mean_curvature)
        .collect();
    let gradient = tangential_gradient_norm(&frame, disc, &he)?;
    let mut sup: f64 = 0.0;
    let mut scaled: f64 = 0.0;
    for (n, g) in frame.nodes().iter().zip(&gradient) {
        sup = sup.max(*g);
        scaled = scaled.max(n.position.norm().powi(3) * g);
    }
    Ok(TensionReport {
        gradient,
        sup_gradient: sup,
        scaled_sup: scaled,
    })
}

pub(crate) fn nearest_direction(surface: &RadialSurface) -> Vector3<f64> {
    let c = surface.center();
    if c.norm() > 0.0 {
        -c.normalize()
    } else {
        Vector3::z()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{decay_scan, DecayQuantity};

    #[test]
    fn surface_rescaling_examples() {
        let s = RadialSurface::sphere(Vector3::new(6.0, 0.0, 0.0), 10.0, 2);
        let t = rescale_surface(&s, 0.1).unwrap();
        assert!((t.center() - Vector3::new(0.6, 0.0, 0.0)).norm() < 1e-15);
        assert!((t.mean_radius() - 1.0).abs() < 1e-15);
        assert_eq!(rescale_surface(&s, 1.0).unwrap(), s);
        let e = RadialSurface::ellipsoid(Vector3::new(1.0, 2.0, 3.0), [3.0, 2.0, 1.0], 6);
        let back = rescale_surface(&rescale_surface(&e, 0.5).unwrap(), 2.0).unwrap();
        assert_eq!(back, e);
        assert!(rescale_surface(&s, 0.0).is_err());
    }

    #[test]
    fn metric_rescaling() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        assert_eq!(
            rescale_metric(&m, 1.0)
                .unwrap()
                .eval_metric(&Vector3::new(5.0, 1.0, 0.0))
                .unwrap(),
            m.eval_metric(&Vector3::new(5.0, 1.0, 0.0)).unwrap()
        );
        let r = 1e4;
        let mr = rescale_metric(&m, r).unwrap();
        let h = mr.eval_metric(&Vector3::x()).unwrap()[(0, 0)] - 1.0;
        assert!((h - r * ((1.0 + 0.5 / r).powi(4) - 1.0)).abs() < 1e-9);
        assert!((h - 2.0).abs() < 1e-3);
        // Points mapping into the core are refused.
        assert!(mr.eval_metric(&Vector3::new(1e-5, 0.0, 0.0)).is_err());
        let radii = [2.0, 4.0, 8.0, 16.0];
        let dirs = [Vector3::new(1.0, 0.5, 0.2)];
        let a = decay_scan(&m, &[200.0, 400.0, 800.0, 1600.0], &dirs).unwrap();
        let b = decay_scan(&rescale_metric(&m, 100.0).unwrap(), &radii, &dirs).unwrap();
        let ea = a.row(0, DecayQuantity::H).unwrap().fitted_exponent.unwrap();
        let eb = b.row(0, DecayQuantity::H).unwrap().fitted_exponent.unwrap();
        assert!((ea - eb).abs() < 1e-9, "{ea} {eb}");
    }

    #[test]
    fn tension_vanishes_on_spheres() {
        let d = Discretization::gauss(24, 6).unwrap();
        let s = RadialSurface::sphere(Vector3::new(1.0, -2.0, 0.5), 20.0, 6);
        let t = tension_scan(&s, &d).unwrap();
        assert!(t.sup_gradient < 1e-14, "{}", t.sup_gradient);
        let e = RadialSurface::ellipsoid(Vector3::zeros(), [3.0, 2.0, 2.0], 6);
        assert!(
            tension_scan(&e, &Discretization::gauss(24, 6).unwrap())
                .unwrap()
                .sup_gradient
                > 0.01
        );
    }
}
