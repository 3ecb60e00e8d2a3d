use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{fit_inverse_power, FunctionalError, Result};
use crate::metric::{decay_scan, DecayQuantity, MetricModel};
use crate::surface::{Discretization, Measure, NodeGeometry, RadialSurface, SurfaceFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassSample {
    #[serde(rename = "R")]
    pub radius: f64,
    pub mass_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub per_radius: Vec<MassSample>,
    pub extrapolated_mass: f64,
    pub extrapolation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterReport {
    pub per_radius: Vec<(f64, [f64; 3])>,
    pub center: [f64; 3],
    pub extrapolation_residual: f64,
    pub mass: f64,
    /// Set when the odd part of `h` decays slower than `|x|⁻²`.
    pub parity_warning: Option<String>,
}

const DEFAULT_RINGS: usize = 64;

fn check_radii(model: &MetricModel, radii: &[f64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(FunctionalError::RadiiTooSmall(format!(
            "need at least 3 radii, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FunctionalError::RadiiTooSmall("radii must increase".into()));
    }
    let clear = model.validity_radius() + model.core_center().norm();
    if !(radii[0] > clear) {
        return Err(FunctionalError::RadiiTooSmall(format!(
            "radius {} does not clear the core (needs > {clear})",
            radii[0]
        )));
    }
    Ok(())
}

fn sphere_frame(model: &MetricModel, radius: f64, n_colat: usize) -> Result<SurfaceFrame> {
    let disc = Discretization::gauss(n_colat, 0)?;
    let sphere = RadialSurface::sphere(Vector3::zeros(), radius, 0);
    Ok(SurfaceFrame::physical(&sphere, &disc, model)?)
}

// ∂_j h_ij − ∂_i h_jj
fn mass_vector(n: &NodeGeometry) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            v[i] += n.dh[j][(i, j)] - n.dh[i][(j, j)];
        }
    }
    v
}

/// Mass flux `(1/16π) ∫ (∂_j h_ij − ∂_i h_jj) νⁱ dμ` over one coordinate sphere.
fn sphere_mass(frame: &SurfaceFrame, measure: Measure) -> Result<f64> {
    let flux = frame.integrate(measure, |n| mass_vector(n).dot(&n.fields(measure).normal))?;
    Ok(flux / (16.0 * PI))
}

/// ADM mass from coordinate-sphere fluxes with the physical normal and
/// area element, extrapolated by `m(R) = m + c/R`.
pub fn adm_mass(model: &MetricModel, radii: &[f64]) -> Result<MassReport> {
    adm_mass_with(model, radii, DEFAULT_RINGS, Measure::Physical)
}

/// `adm_mass` with an explicit ring count and choice of normal/area element.
pub fn adm_mass_with(
    model: &MetricModel,
    radii: &[f64],
    n_colat: usize,
    measure: Measure,
) -> Result<MassReport> {
    check_radii(model, radii)?;
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let frame = sphere_frame(model, r, n_colat)?;
        per_radius.push(MassSample {
            radius: r,
            mass_estimate: sphere_mass(&frame, measure)?,
        });
    }
    let values: Vec<f64> = per_radius.iter().map(|s| s.mass_estimate).collect();
    let (m, _, resid) = fit_inverse_power(radii, &values);
    Ok(MassReport {
        per_radius,
        extrapolated_mass: m,
        extrapolation_residual: resid,
    })
}

/// Sample the odd part of `h` on dyadic radii and report slow decay.
fn parity_check(model: &MetricModel, r_min: f64) -> Result<Option<String>> {
    let radii: Vec<f64> = (0..4).map(|k| r_min * 2f64.powi(k)).collect();
    let dirs = [
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -2.0, 0.5),
    ];
    let report = decay_scan(model, &radii, &dirs)?;
    let bad: Vec<String> = report
        .violations()
        .filter(|r| r.quantity == DecayQuantity::Odd)
        .map(|r| format!("direction {} exponent {:?}", r.direction, r.fitted_exponent))
        .collect();
    Ok(if bad.is_empty() {
        None
    } else {
        Some(format!(
            "odd part decays slower than |x|^-2: {}",
            bad.join(", ")
        ))
    })
}

/// Center of mass: per radius
/// `[∫ x^α (∂_i h_ij − ∂_j h_ii) ν^j dμ − ∫ (h_iα νⁱ − h_ii ν^α) dμ] / 16πm`
/// with the physical normal and area element, extrapolated like the mass.
pub fn center_of_mass(model: &MetricModel, radii: &[f64]) -> Result<CenterReport> {
    check_radii(model, radii)?;
    let mass = adm_mass(model, radii)?.extrapolated_mass;
    if !(mass.abs() > 1e-12) {
        return Err(FunctionalError::ZeroMass);
    }
    let parity_warning = parity_check(model, radii[0])?;
    let measure = Measure::Physical;
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let frame = sphere_frame(model, r, DEFAULT_RINGS)?;
        let mut c = [0.0; 3];
        for (alpha, ca) in c.iter_mut().enumerate() {
            let v = frame.integrate(measure, |n| {
                let nu = &n.fields(measure).normal;
                let h: &Matrix3<f64> = &n.h;
                let mv = mass_vector(n);
                let trace = h.trace();
                n.position[alpha] * mv.dot(nu) - ((h * nu)[alpha] - trace * nu[alpha])
            })?;
            *ca = v / (16.0 * PI * mass);
        }
        per_radius.push((r, c));
    }
    let mut center = [0.0; 3];
    let mut resid: f64 = 0.0;
    for (alpha, out) in center.iter_mut().enumerate() {
        let values: Vec<f64> = per_radius.iter().map(|(_, c)| c[alpha]).collect();
        let (v, _, res) = fit_inverse_power(radii, &values);
        *out = v;
        resid = resid.max(res);
    }
    Ok(CenterReport {
        per_radius,
        center,
        extrapolation_residual: resid,
        mass,
        parity_warning,
    })
}
