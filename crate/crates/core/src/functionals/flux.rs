use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FunctionalError, Result};
use crate::metric::{linearized_curvature, MetricModel};
use crate::sphere::{gauss_legendre, QuadratureGrid};
use crate::surface::{Discretization, Measure, NodeGeometry, RadialSurface, SurfaceFrame};

/// Tail share above which `mass_tail` flags its estimate.
pub const TAIL_SHARE_LIMIT: f64 = 0.1;

// −½ ∂_i h_il + ½ ∂_l h_ii
fn flux_vector(n: &NodeGeometry) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    for l in 0..3 {
        for i in 0..3 {
            v[l] += -0.5 * n.dh[i][(i, l)] + 0.5 * n.dh[l][(i, i)];
        }
    }
    v
}

/// `∫ (−½ ν^l ∂_i h_il + ½ ν^l ∂_l h_ii) dμ_e` with the Euclidean normal.
/// The surface must enclose the core of the model.
pub fn mass_flux_on_surface(
    surface: &RadialSurface,
    frame: &SurfaceFrame,
    model: &MetricModel,
) -> Result<f64> {
    let core = model.core_center();
    let offset = core - surface.center();
    let inside = offset.norm() == 0.0 || offset.norm() < surface.radius_at(&offset.normalize());
    if !inside {
        return Err(FunctionalError::InvalidInput(
            "surface does not enclose the core".into(),
        ));
    }
    Ok(frame.integrate(Measure::Euclidean, |n| flux_vector(n).dot(&n.euclid.normal))?)
}

/// The same flux over the coordinate sphere of radius `r` about the origin.
pub fn mass_flux_on_sphere(model: &MetricModel, r: f64, n_colat: usize) -> Result<f64> {
    let sphere = RadialSurface::sphere(Vector3::zeros(), r, 0);
    let disc = Discretization::gauss(n_colat, 0)?;
    let frame = SurfaceFrame::physical(&sphere, &disc, model)?;
    mass_flux_on_surface(&sphere, &frame, model)
}

/// Composite Gauss–Legendre nodes for `∫_a^b f(t) dt` in `ln t`, with
/// the Jacobian `t` folded into the weights.
fn log_radial_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let (la, lb) = (a.ln(), b.ln());
    let width = (lb - la) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = la + p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            let s = lo + 0.5 * width * (xi + 1.0);
            let t = s.exp();
            out.push((t, 0.5 * width * wi * t));
        }
    }
    out
}

/// `∫ (h_il,il − h_ii,ll) dv_e` over the region between the surface and the
/// coordinate sphere `|x| = outer_radius`, in polar coordinates about the
/// surface center. `n_colat` sets the angular Gauss grid.
pub fn shell_integral(
    model: &MetricModel,
    surface: &RadialSurface,
    outer_radius: f64,
    n_colat: usize,
) -> Result<f64> {
    let grid = QuadratureGrid::gauss(n_colat);
    let c = surface.center();
    let mut jobs = Vec::with_capacity(grid.len());
    for a in 0..grid.n_colat() {
        for b in 0..grid.n_lon() {
            let w = grid.direction(a, b);
            let inner = surface.radius_at(&w);
            let cw = c.dot(&w);
            let disc = cw * cw - c.norm_squared() + outer_radius * outer_radius;
            let outer = -cw + disc.max(0.0).sqrt();
            if !(outer > inner) {
                return Err(FunctionalError::InvalidInput(format!(
                    "coordinate sphere of radius {outer_radius} does not enclose the surface"
                )));
            }
            jobs.push((w, inner, outer, grid.weight(a, b)));
        }
    }
    let (x, wq) = gauss_legendre(24);
    let parts: Result<Vec<f64>> = jobs
        .par_iter()
        .map(|(w, inner, outer, weight)| {
            let half = 0.5 * (outer - inner);
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&wq) {
                let t = inner + half * (xi + 1.0);
                let jet = model.eval_metric_jet(&(c + w * t))?;
                acc += half * wi * t * t * linearized_curvature(&jet);
            }
            Ok(acc * weight)
        })
        .collect();
    Ok(parts?.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCheck {
    pub surface_flux: f64,
    pub sphere_flux: f64,
    pub shell_integral: f64,
    /// `surface_flux − sphere_flux`.
    pub flux_difference: f64,
    /// `½ shell_integral`, which the difference must equal.
    pub predicted: f64,
    pub relative_error: f64,
}

/// Compare the flux difference between a surface and an enclosing
/// coordinate sphere against the volume integral of the linearized
/// scalar curvature over the shell between them.
pub fn divergence_check(
    surface: &RadialSurface,
    frame: &SurfaceFrame,
    model: &MetricModel,
    outer_radius: f64,
    n_colat: usize,
) -> Result<DivergenceCheck> {
    let surface_flux = mass_flux_on_surface(surface, frame, model)?;
    let sphere_flux = mass_flux_on_sphere(model, outer_radius, n_colat)?;
    let shell = shell_integral(model, surface, outer_radius, n_colat)?;
    let diff = surface_flux - sphere_flux;
    let predicted = 0.5 * shell;
    let scale = diff.abs().max(predicted.abs());
    let relative_error = if scale > 0.0 {
        (diff - predicted).abs() / scale
    } else {
        0.0
    };
    Ok(DivergenceCheck {
        surface_flux,
        sphere_flux,
        shell_integral: shell,
        flux_difference: diff,
        predicted,
        relative_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub r: f64,
    /// Quadrature from `r` to the cutoff plus the appended tail estimate.
    pub value: f64,
    pub cutoff: f64,
    pub tail_estimate: f64,
    pub tail_share: f64,
    /// Tail estimate above `TAIL_SHARE_LIMIT` of the value.
    pub tail_dominates: bool,
}

/// `F(r) = ∫_{|x|>r} |h_ij,ij − h_ii,jj| dv_e` by a radial–angular product
/// rule up to `10⁶·m` (at least `10³·r`), with the remainder estimated from
/// `|x|⁻⁴` decay of the density.
pub fn mass_tail(model: &MetricModel, r: f64) -> Result<TailReport> {
    let clear = model.validity_radius() + model.core_center().norm();
    if !(r > clear) {
        return Err(FunctionalError::RadiiTooSmall(format!(
            "tail radius {r} does not clear the core (needs > {clear})"
        )));
    }
    if model.is_flat() {
        return Ok(TailReport {
            r,
            value: 0.0,
            cutoff: r,
            tail_estimate: 0.0,
            tail_share: 0.0,
            tail_dominates: false,
        });
    }
    let cutoff = (1e6 * model.mass_parameter()).max(1e3 * r);
    let decades = (cutoff / r).log2().ceil() as usize;
    let rule = log_radial_rule(r, cutoff, decades.max(1), 8);
    let grid = QuadratureGrid::gauss(24);
    let shell_density = |t: f64| -> Result<f64> {
        let mut acc = 0.0;
        for a in 0..grid.n_colat() {
            for b in 0..grid.n_lon() {
                let jet = model.eval_metric_jet(&(grid.direction(a, b) * t))?;
                acc += grid.weight(a, b) * linearized_curvature(&jet).abs();
            }
        }
        Ok(acc * t * t)
    };
    let parts: Result<Vec<f64>> = rule
        .par_iter()
        .map(|&(t, w)| Ok(w * shell_density(t)?))
        .collect();
    let body: f64 = parts?.iter().sum();
    // Density per unit radius ~ A t⁻², so the remainder is D(cutoff)·cutoff.
    let tail_estimate = shell_density(cutoff)? * cutoff;
    let value = body + tail_estimate;
    let tail_share = if value > 0.0 {
        tail_estimate / value
    } else {
        0.0
    };
    Ok(TailReport {
        r,
        value,
        cutoff,
        tail_estimate,
        tail_share,
        tail_dominates: tail_share > TAIL_SHARE_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn frame(s: &RadialSurface, n: usize, m: &MetricModel) -> SurfaceFrame {
        let disc = Discretization::gauss(n, s.l_max()).unwrap();
        SurfaceFrame::physical(s, &disc, m).unwrap()
    }

    // ∫_r^∞ 4π t² · 6 ψ² m² / t⁴ dt with ψ = 1 + m/2t.
    fn schwarzschild_tail(m: f64, r: f64) -> f64 {
        24.0 * PI * m * m * (1.0 / r + m / (2.0 * r * r) + m * m / (12.0 * r.powi(3)))
    }

    #[test]
    fn flat_flux_vanishes() {
        let s = RadialSurface::ellipsoid(Vector3::new(1.0, 0.0, 0.0), [3.0, 2.0, 1.5], 8);
        let f = mass_flux_on_surface(
            &s,
            &frame(&s, 20, &MetricModel::flat()),
            &MetricModel::flat(),
        );
        assert_eq!(f.unwrap(), 0.0);
        assert_eq!(mass_tail(&MetricModel::flat(), 10.0).unwrap().value, 0.0);
    }

    #[test]
    fn centered_sphere_flux_matches_closed_form() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        for r in [250.0, 1000.0] {
            let f = mass_flux_on_sphere(&m, r, 16).unwrap();
            let exact = -8.0 * PI * (1.0 + 0.5 / r).powi(3);
            assert!((f - exact).abs() < 1e-12 * exact.abs(), "{f} {exact}");
        }
        let f = mass_flux_on_sphere(&m, 1000.0, 16).unwrap();
        assert!((f + 25.1704).abs() < 1e-4);
    }

    #[test]
    fn ellipsoid_flux_is_within_tail_of_limit() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let s = RadialSurface::ellipsoid(Vector3::zeros(), [1500.0, 1000.0, 1000.0], 24);
        let f = mass_flux_on_surface(&s, &frame(&s, 48, &m), &m).unwrap();
        let tail = mass_tail(&m, 1000.0).unwrap().value;
        assert!((tail - 0.075).abs() < 0.002, "{tail}");
        assert!((f + 8.0 * PI).abs() <= tail, "{f}");
    }

    #[test]
    fn tail_matches_radial_oracle() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let t100 = mass_tail(&m, 100.0).unwrap();
        let oracle = schwarzschild_tail(1.0, 100.0);
        assert!(
            (t100.value - oracle).abs() < 1e-6 * oracle,
            "{} {oracle}",
            t100.value
        );
        assert!((t100.value - 0.754).abs() < 0.02 * 0.754);
        assert!(!t100.tail_dominates);
        let t200 = mass_tail(&m, 200.0).unwrap();
        assert!(t200.value < t100.value);
        assert!(mass_tail(&m, 0.6).is_err());
    }

    #[test]
    fn divergence_identity_closes() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let s = RadialSurface::ellipsoid(Vector3::new(0.5, -0.3, 0.2), [24.0, 20.0, 17.0], 16);
        let chk = divergence_check(&s, &frame(&s, 40, &m), &m, 64.0, 40).unwrap();
        assert!(chk.relative_error < 1e-4, "{chk:?}");
        // The difference is not trivially small.
        assert!(chk.flux_difference.abs() > 1e-2);
    }

    #[test]
    fn mass_flux_tracks_adm_mass() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let radii = [100.0, 200.0, 400.0, 800.0];
        let fluxes: Vec<f64> = radii
            .iter()
            .map(|&r| mass_flux_on_sphere(&m, r, 16).unwrap())
            .collect();
        let (limit, _, resid) = super::super::fit_inverse_power(&radii, &fluxes);
        let mass = super::super::adm_mass(&m, &radii).unwrap();
        let tol = resid + 8.0 * PI * mass.extrapolation_residual + 1e-3;
        assert!((limit + 8.0 * PI * mass.extrapolated_mass).abs() < tol);
    }

    #[test]
    fn rejects_surface_missing_the_core() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let s = RadialSurface::sphere(Vector3::new(50.0, 0.0, 0.0), 10.0, 0);
        assert!(mass_flux_on_surface(&s, &frame(&s, 8, &m), &m).is_err());
    }
}
