use nalgebra::Vector3;

use super::RadialSurface;
use crate::sphere::QuadratureGrid;

/// Minimum and maximum of `|X|` over the surface.
///
/// Scans a grid oversampled four times relative to the surface degree,
/// then polishes the extreme nodes by Newton's method in the tangent plane
/// of the direction sphere.
pub fn radii(surface: &RadialSurface) -> (f64, f64) {
    let n = (4 * (surface.l_max() + 1)).max(32);
    let grid = QuadratureGrid::gauss(n);
    let mut best_min = (f64::INFINITY, Vector3::z());
    let mut best_max = (0.0, Vector3::z());
    for a in 0..grid.n_colat() {
        for b in 0..grid.n_lon() {
            let d = grid.direction(a, b);
            let r = surface.point_at(&d).norm();
            if r < best_min.0 {
                best_min = (r, d);
            }
            if r > best_max.0 {
                best_max = (r, d);
            }
        }
    }
    let r0 = polish(surface, best_min.1, 1.0).min(best_min.0);
    let r1 = polish(surface, best_max.1, -1.0).max(best_max.0);
    (r0, r1)
}

// Local extremum of sign·|X(d)|² near d0; returns |X| there.
fn polish(surface: &RadialSurface, d0: Vector3<f64>, sign: f64) -> f64 {
    let f = |d: &Vector3<f64>| sign * surface.point_at(d).norm_squared();
    let mut d = d0;
    let mut best = f(&d);
    let h = 1e-4;
    for _ in 0..40 {
        let e1 = crate::sphere::rotation_taking_z_to(d)
            .column(0)
            .into_owned();
        let e2 = d.cross(&e1);
        let at = |u: f64, v: f64| f(&(d + e1 * u + e2 * v).normalize());
        let f0 = best;
        let (fp0, fm0, f0p, f0m) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let g = [(fp0 - fm0) / (2.0 * h), (f0p - f0m) / (2.0 * h)];
        let huu = (fp0 - 2.0 * f0 + fm0) / (h * h);
        let hvv = (f0p - 2.0 * f0 + f0m) / (h * h);
        let huv = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        let det = huu * hvv - huv * huv;
        let (mut du, mut dv) = if huu > 0.0 && det > 0.0 {
            (
                -(hvv * g[0] - huv * g[1]) / det,
                -(huu * g[1] - huv * g[0]) / det,
            )
        } else {
            let scale = 1e-2 / (g[0].hypot(g[1]) + f64::MIN_POSITIVE);
            (-g[0] * scale, -g[1] * scale)
        };
        let mut improved = false;
        for _ in 0..30 {
            let cand = (d + e1 * du + e2 * dv).normalize();
            let fc = f(&cand);
            if fc < best {
                best = fc;
                d = cand;
                improved = true;
                break;
            }
            du *= 0.5;
            dv *= 0.5;
        }
        if !improved || du.hypot(dv) < 1e-13 {
            break;
        }
    }
    (sign * best).max(0.0).sqrt()
}

/// Sup over directions of `|X_a(ω) − X_b(ω)|`, an upper bound for the
/// Hausdorff distance of the two surfaces.
pub fn sup_distance(a: &RadialSurface, b: &RadialSurface) -> f64 {
    let n = (4 * (a.l_max().max(b.l_max()) + 1)).max(16);
    let grid = QuadratureGrid::gauss(n);
    let mut sup: f64 = 0.0;
    for i in 0..grid.n_colat() {
        for j in 0..grid.n_lon() {
            let d = grid.direction(i, j);
            sup = sup.max((a.point_at(&d) - b.point_at(&d)).norm());
        }
    }
    sup
}
