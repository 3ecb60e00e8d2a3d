use nalgebra::{Matrix2, Matrix3, Vector3};

use super::{Discretization, RadialSurface, Result, SurfaceError};
use crate::metric::{christoffel, ricci, MetricModel};

/// Which area element to integrate against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Euclidean,
    Physical,
}

/// Normal, fundamental forms and curvatures of the surface in one metric.
/// Forms are in the grid's `(θ, φ)` parameters; the normal is outward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricFields {
    pub normal: Vector3<f64>,
    pub first_form: Matrix2<f64>,
    pub inv_first_form: Matrix2<f64>,
    pub second_form: Matrix2<f64>,
    pub mean_curvature: f64,
    /// `|A|²`.
    pub norm_a2: f64,
    /// `|Å|²`.
    pub norm_aring2: f64,
    /// `√det f` per unit `dθ dφ`.
    pub area_density: f64,
}

impl MetricFields {
    fn compute(
        tangents: &[Vector3<f64>; 2],
        second: &[[Vector3<f64>; 2]; 2],
        euclid_normal: &Vector3<f64>,
        g: &Matrix3<f64>,
        gamma: Option<&[Matrix3<f64>; 3]>,
        node: usize,
    ) -> Result<Self> {
        let degenerate = |reason: &str| SurfaceError::DegenerateSurface {
            node,
            reason: reason.to_string(),
        };
        let gx = [g * tangents[0], g * tangents[1]];
        let first = Matrix2::new(
            tangents[0].dot(&gx[0]),
            tangents[0].dot(&gx[1]),
            tangents[1].dot(&gx[0]),
            tangents[1].dot(&gx[1]),
        );
        let det = first.determinant();
        if !(det > 0.0) {
            return Err(degenerate("induced metric determinant is not positive"));
        }
        let inv = first
            .try_inverse()
            .ok_or_else(|| degenerate("induced metric is singular"))?;
        let normal = match gamma {
            None => euclid_normal.normalize(),
            Some(_) => {
                let ginv = g
                    .cholesky()
                    .ok_or_else(|| degenerate("ambient metric is not positive definite"))?
                    .inverse();
                let up = ginv * euclid_normal;
                up / euclid_normal.dot(&up).sqrt()
            }
        };
        let gn = g * normal;
        let mut b = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = second[i][j];
                if let Some(gm) = gamma {
                    for k in 0..3 {
                        acc[k] += tangents[i].dot(&(gm[k] * tangents[j]));
                    }
                }
                b[(i, j)] = -gn.dot(&acc);
            }
        }
        b = 0.5 * (b + b.transpose());
        let h = (inv * b).trace();
        let mixed = inv * b;
        let norm_a2 = (mixed * mixed).trace();
        let traceless = b - first * (0.5 * h);
        let mt = inv * traceless;
        let norm_aring2 = (mt * mt).trace().max(0.0);
        Ok(Self {
            normal,
            first_form: first,
            inv_first_form: inv,
            second_form: b,
            mean_curvature: h,
            norm_a2,
            norm_aring2,
            area_density: det.sqrt(),
        })
    }
}

/// Geometry at one quadrature node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGeometry {
    /// World-frame unit direction from the surface center.
    pub direction: Vector3<f64>,
    pub rho: f64,
    pub position: Vector3<f64>,
    /// `X_θ`, `X_φ` in the grid parameters.
    pub tangents: [Vector3<f64>; 2],
    /// Second parameter derivatives `X_ab`.
    pub second: [[Vector3<f64>; 2]; 2],
    /// `∫ · dθ dφ` quadrature weight.
    pub weight: f64,
    pub euclid: MetricFields,
    pub physical: MetricFields,
    /// `Ric_g(ν_g, ν_g)`.
    pub ric_nn: f64,
    /// `g(ω, ν_g)`: normal speed of a unit radial displacement.
    pub normal_speed: f64,
    /// `h = g − δ` at the node and its coordinate derivatives.
    pub h: Matrix3<f64>,
    pub dh: [Matrix3<f64>; 3],
}

impl NodeGeometry {
    pub fn fields(&self, measure: Measure) -> &MetricFields {
        match measure {
            Measure::Euclidean => &self.euclid,
            Measure::Physical => &self.physical,
        }
    }

    /// Gauss-map gradient `|∇_e ν_e|`, equal to `|A_e|`.
    pub fn gauss_map_gradient(&self) -> f64 {
        self.euclid.norm_a2.sqrt()
    }

    /// The induced inverse metric as an ambient tensor `f^{ij}`.
    pub fn ambient_inverse_form(&self, measure: Measure) -> Matrix3<f64> {
        let inv = &self.fields(measure).inv_first_form;
        let mut out = Matrix3::zeros();
        for a in 0..2 {
            for b in 0..2 {
                out += self.tangents[a] * self.tangents[b].transpose() * inv[(a, b)];
            }
        }
        out
    }
}

/// Per-node geometry of a radial surface on one discretization.
#[derive(Debug, Clone)]
pub struct SurfaceFrame {
    nodes: Vec<NodeGeometry>,
    n_colat: usize,
    n_lon: usize,
}

impl SurfaceFrame {
    /// Euclidean fields only; the physical fields coincide with them.
    pub fn euclidean(surface: &RadialSurface, disc: &Discretization) -> Result<Self> {
        Self::build(surface, disc, None)
    }

    /// Euclidean and physical fields for `model`.
    pub fn physical(
        surface: &RadialSurface,
        disc: &Discretization,
        model: &MetricModel,
    ) -> Result<Self> {
        if model.is_flat() {
            return Self::build(surface, disc, None);
        }
        Self::build(surface, disc, Some(model))
    }

    fn build(
        surface: &RadialSurface,
        disc: &Discretization,
        model: Option<&MetricModel>,
    ) -> Result<Self> {
        let grid = disc.grid();
        let rho = disc.synthesize(surface)?;
        let q = grid.orientation();
        let c = surface.center();
        let n_lon = grid.n_lon();
        let mut nodes = Vec::with_capacity(grid.len());
        for a in 0..grid.n_colat() {
            let (st, ct) = (grid.sin_colat()[a], grid.cos_colat()[a]);
            let weight = grid.param_weight(a);
            for b in 0..n_lon {
                let i = a * n_lon + b;
                let phi = grid.longitudes()[b];
                let (sp, cp) = phi.sin_cos();
                let w = q * Vector3::new(st * cp, st * sp, ct);
                let w_t = q * Vector3::new(ct * cp, ct * sp, -st);
                let w_p = q * Vector3::new(-st * sp, st * cp, 0.0);
                let w_tp = q * Vector3::new(-ct * sp, ct * cp, 0.0);
                let w_pp = q * Vector3::new(-st * cp, -st * sp, 0.0);
                let (r, rt, rp) = (rho.value[i], rho.d_theta[i], rho.d_phi[i]);
                let (rtt, rtp, rpp) = (rho.d_theta_theta[i], rho.d_theta_phi[i], rho.d_phi_phi[i]);
                if !(r > 0.0) {
                    return Err(SurfaceError::DegenerateSurface {
                        node: i,
                        reason: format!("radius {r} is not positive"),
                    });
                }
                let x = c + w * r;
                let xt = w * rt + w_t * r;
                let xp = w * rp + w_p * r;
                let xtt = w * rtt + w_t * (2.0 * rt) - w * r;
                let xtp = w * rtp + w_p * rt + w_t * rp + w_tp * r;
                let xpp = w * rpp + w_p * (2.0 * rp) + w_pp * r;
                let tangents = [xt, xp];
                let second = [[xtt, xtp], [xtp, xpp]];
                let n_e = xt.cross(&xp);
                let euclid =
                    MetricFields::compute(&tangents, &second, &n_e, &Matrix3::identity(), None, i)?;
                let (physical, ric_nn, normal_speed, h, dh) = match model {
                    None => (
                        euclid,
                        0.0,
                        w.dot(&euclid.normal),
                        Matrix3::zeros(),
                        [Matrix3::zeros(); 3],
                    ),
                    Some(m) => {
                        let jet = m.eval_metric_jet(&x)?;
                        let gamma = christoffel(&jet)?;
                        let ric = ricci(&jet)?;
                        let f = MetricFields::compute(
                            &tangents,
                            &second,
                            &n_e,
                            &jet.g,
                            Some(&gamma),
                            i,
                        )?;
                        let ric_nn = f.normal.dot(&(ric * f.normal));
                        let speed = w.dot(&(jet.g * f.normal));
                        (f, ric_nn, speed, jet.h(), jet.dg)
                    }
                };
                nodes.push(NodeGeometry {
                    direction: w,
                    rho: r,
                    position: x,
                    tangents,
                    second,
                    weight,
                    euclid,
                    physical,
                    ric_nn,
                    normal_speed,
                    h,
                    dh,
                });
            }
        }
        Ok(Self {
            nodes,
            n_colat: grid.n_colat(),
            n_lon,
        })
    }

    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_colat(&self) -> usize {
        self.n_colat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    /// Quadrature weight times area density at every node.
    pub fn area_weights(&self, measure: Measure) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| n.weight * n.fields(measure).area_density)
            .collect()
    }

    pub fn mean_curvatures(&self, measure: Measure) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| n.fields(measure).mean_curvature)
            .collect()
    }

    /// `Σ w · integrand · dμ` over the nodes.
    pub fn surface_integral(&self, integrand: &[f64], measure: Measure) -> Result<f64> {
        assert_eq!(
            integrand.len(),
            self.nodes.len(),
            "integrand length mismatch"
        );
        let mut total = 0.0;
        for (i, (n, f)) in self.nodes.iter().zip(integrand).enumerate() {
            if !f.is_finite() {
                return Err(SurfaceError::NonFiniteIntegrand(i));
            }
            total += n.weight * n.fields(measure).area_density * f;
        }
        Ok(total)
    }

    /// `surface_integral` with the integrand given per node.
    pub fn integrate<F>(&self, measure: Measure, f: F) -> Result<f64>
    where
        F: Fn(&NodeGeometry) -> f64,
    {
        let values: Vec<f64> = self.nodes.iter().map(f).collect();
        self.surface_integral(&values, measure)
    }

    pub fn area(&self, measure: Measure) -> f64 {
        self.area_weights(measure).iter().sum()
    }

    /// Area-weighted mean of the mean curvature.
    pub fn mean_of_mean_curvature(&self, measure: Measure) -> f64 {
        let w = self.area_weights(measure);
        let num: f64 = self
            .nodes
            .iter()
            .zip(&w)
            .map(|(n, w)| n.fields(measure).mean_curvature * w)
            .sum();
        num / w.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disc(l: usize) -> Discretization {
        Discretization::gauss(l + 8, l).unwrap()
    }

    #[test]
    fn round_sphere_euclidean() {
        let s = RadialSurface::sphere(Vector3::zeros(), 10.0, 4);
        let f = SurfaceFrame::euclidean(&s, &disc(4)).unwrap();
        for n in f.nodes() {
            assert!((n.euclid.mean_curvature - 0.2).abs() < 1e-14);
            assert!(n.euclid.norm_aring2 < 1e-28);
            assert!((n.euclid.normal - n.direction).norm() < 1e-14);
        }
        let area = f
            .surface_integral(&vec![1.0; f.len()], Measure::Euclidean)
            .unwrap();
        assert!((area - 400.0 * PI).abs() < 1e-10);
        let h2: Vec<f64> = f
            .nodes()
            .iter()
            .map(|n| n.euclid.mean_curvature.powi(2))
            .collect();
        let w = f.surface_integral(&h2, Measure::Euclidean).unwrap();
        assert!((w - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn translated_sphere() {
        let c = Vector3::new(5.0, 0.0, 0.0);
        let s = RadialSurface::sphere(c, 1.0, 2);
        let f = SurfaceFrame::euclidean(&s, &disc(2)).unwrap();
        for n in f.nodes() {
            assert!((n.euclid.mean_curvature - 2.0).abs() < 1e-13);
            assert!((n.euclid.normal - (n.position - c)).norm() < 1e-13);
        }
    }

    fn spheroid_mean_curvature(p: &Vector3<f64>) -> f64 {
        // Semi-axes (2, 1, 1), major axis along x.
        let (a, b) = (2.0f64, 1.0f64);
        let q = p.x * p.x / a.powi(4) + (p.y * p.y + p.z * p.z) / b.powi(4);
        let k_meridian = 1.0 / (a * a * b * b * q.powf(1.5));
        let k_parallel = 1.0 / (b * b * q.sqrt());
        k_meridian + k_parallel
    }

    fn spheroid_error(l: usize) -> f64 {
        let s = RadialSurface::ellipsoid(Vector3::zeros(), [2.0, 1.0, 1.0], l);
        let d = Discretization::gauss(l + 16, l).unwrap();
        let f = SurfaceFrame::euclidean(&s, &d).unwrap();
        f.nodes()
            .iter()
            .map(|n| {
                let p = n.position;
                // Project the (slightly inexact) node onto the exact spheroid.
                let k = 1.0 / (p.x * p.x / 4.0 + p.y * p.y + p.z * p.z).sqrt();
                (n.euclid.mean_curvature - spheroid_mean_curvature(&(p * k))).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn prolate_spheroid_curvature() {
        assert!((spheroid_mean_curvature(&Vector3::new(2.0, 0.0, 0.0)) - 4.0).abs() < 1e-15);
        let e16 = spheroid_error(16);
        let e32 = spheroid_error(32);
        assert!(e32 < 1e-4, "{e16} {e32}");
        assert!(e16 / e32 >= 1e3, "{e16} {e32}");
    }

    #[test]
    fn forms_are_consistent() {
        let s = RadialSurface::ellipsoid(Vector3::new(0.3, 0.0, -0.2), [1.5, 1.0, 1.2], 16);
        let m = MetricModel::schwarzschild(0.2)
            .unwrap()
            .with_inner_radius(0.2)
            .unwrap();
        let f = SurfaceFrame::physical(&s.rescaled(3.0), &disc(16), &m).unwrap();
        for n in f.nodes() {
            for fl in [&n.euclid, &n.physical] {
                let lhs = fl.norm_aring2;
                let rhs = fl.norm_a2 - 0.5 * fl.mean_curvature.powi(2);
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn schwarzschild_centered_sphere() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let r = 10.0;
        let s = RadialSurface::sphere(Vector3::zeros(), r, 4);
        let f = SurfaceFrame::physical(&s, &disc(4), &m).unwrap();
        let psi = 1.0 + 0.5 / r;
        let expect = (2.0 / r) * (1.0 - 0.5 / r) / psi.powi(3);
        assert!((expect - 0.164130).abs() < 1e-6);
        for n in f.nodes() {
            assert!((n.physical.mean_curvature - expect).abs() < 1e-13);
            assert!(n.physical.norm_aring2 < 1e-24);
            assert!((n.physical.area_density / n.euclid.area_density - psi.powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_model_matches_euclidean() {
        let s = RadialSurface::ellipsoid(Vector3::zeros(), [1.5, 1.0, 1.2], 10);
        let a = SurfaceFrame::physical(&s, &disc(10), &MetricModel::flat()).unwrap();
        let b = SurfaceFrame::euclidean(&s, &disc(10)).unwrap();
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert_eq!(x.physical, y.euclid);
        }
    }

    #[test]
    fn constant_field_flux_vanishes() {
        let s = RadialSurface::ellipsoid(Vector3::new(0.1, 0.2, 0.0), [1.5, 1.0, 1.2], 20);
        let f = SurfaceFrame::euclidean(&s, &disc(20)).unwrap();
        let bvec = Vector3::new(0.3, -0.4, 0.5);
        let v = f
            .integrate(Measure::Euclidean, |n| n.euclid.normal.dot(&bvec))
            .unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn rejects_non_finite_integrands() {
        let s = RadialSurface::sphere(Vector3::zeros(), 1.0, 2);
        let f = SurfaceFrame::euclidean(&s, &disc(2)).unwrap();
        let mut v = vec![1.0; f.len()];
        v[3] = f64::NAN;
        assert!(matches!(
            f.surface_integral(&v, Measure::Euclidean),
            Err(SurfaceError::NonFiniteIntegrand(3))
        ));
    }

    #[test]
    fn pole_refined_grid_matches_gauss() {
        let s = RadialSurface::ellipsoid(Vector3::zeros(), [1.5, 1.0, 1.2], 12);
        let g = SurfaceFrame::euclidean(&s, &disc(12)).unwrap();
        let d = Discretization::pole_refined(96, 12, Vector3::new(1.0, 1.0, 0.0), 0.05).unwrap();
        let p = SurfaceFrame::euclidean(&s, &d).unwrap();
        let h2 = |f: &SurfaceFrame| {
            f.integrate(Measure::Euclidean, |n| n.euclid.mean_curvature.powi(2))
                .unwrap()
        };
        assert!((h2(&g) - h2(&p)).abs() < 1e-6 * h2(&g));
    }
}
