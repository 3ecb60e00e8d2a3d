use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{FunctionalError, Result};
use crate::surface::{radii, Measure, NodeGeometry, RadialSurface, SurfaceFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QTReport {
    pub total: f64,
    pub b: [f64; 3],
    pub inner_part: f64,
    pub outer_part: f64,
    pub intermediate_part: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub s: f64,
    pub r0: f64,
    pub r1: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

fn unit(b: &Vector3<f64>) -> Result<()> {
    if (b.norm() - 1.0).abs() > 1e-12 {
        return Err(FunctionalError::InvalidInput(format!(
            "direction must be a unit vector, |b| = {}",
            b.norm()
        )));
    }
    Ok(())
}

fn density(n: &NodeGeometry, b: &Vector3<f64>) -> f64 {
    (n.physical.mean_curvature - n.euclid.mean_curvature) * n.euclid.normal.dot(b)
}

/// `∫ (H_g − H_e) ⟨ν_e, b⟩ dμ_e` on a physical frame.
pub fn qt_integral(frame: &SurfaceFrame, b: &Vector3<f64>) -> Result<f64> {
    unit(b)?;
    Ok(frame.integrate(Measure::Euclidean, |n| density(n, b))?)
}

/// Split the integral by node position into `|X| < K r₀`, `|X| ≥ s/H` and
/// the band in between, where `H` is the area-weighted mean of `H_g`.
pub fn qt_decomposition(
    surface: &RadialSurface,
    frame: &SurfaceFrame,
    b: &Vector3<f64>,
    k: f64,
    s: f64,
) -> Result<QTReport> {
    unit(b)?;
    if !(k > 0.0 && s > 0.0) {
        return Err(FunctionalError::InvalidInput(
            "K and s must be positive".into(),
        ));
    }
    let (r0, r1) = radii(surface);
    let h = frame.mean_of_mean_curvature(Measure::Physical);
    let (inner_r, outer_r) = (k * r0, s / h);
    if !(inner_r < outer_r) {
        return Err(FunctionalError::InvalidInput(format!(
            "K r0 = {inner_r} must lie below s/H = {outer_r}"
        )));
    }
    let mut parts = [0.0; 3];
    let mut counts = [0usize; 3];
    for (i, n) in frame.nodes().iter().enumerate() {
        let v = density(n, b);
        if !v.is_finite() {
            return Err(crate::surface::SurfaceError::NonFiniteIntegrand(i).into());
        }
        let rad = n.position.norm();
        let band = if rad < inner_r {
            0
        } else if rad >= outer_r {
            1
        } else {
            2
        };
        parts[band] += n.weight * n.euclid.area_density * v;
        counts[band] += 1;
    }
    for (c, name) in counts.iter().zip(["inner", "outer", "intermediate"]) {
        if *c == 0 {
            return Err(FunctionalError::EmptyBand(name));
        }
    }
    Ok(QTReport {
        total: parts.iter().sum(),
        b: [b.x, b.y, b.z],
        inner_part: parts[0],
        outer_part: parts[1],
        intermediate_part: parts[2],
        k,
        s,
        r0,
        r1,
        h,
    })
}
