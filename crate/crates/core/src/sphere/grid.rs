//! Tensor-product quadrature grids on the unit sphere.
//!
//! A grid is a set of colatitude rings (each with a weight for
//! `∫ f sinθ dθ`) times `n_lon` equally spaced longitudes. The standard
//! grid uses Gauss–Legendre rings and integrates band-limited functions
//! exactly. The pole-refined grid rotates its pole onto a chosen direction
//! and clusters rings there through an exponential colatitude map.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Quadrature grid over S².
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    colat: Vec<f64>,
    cos_colat: Vec<f64>,
    sin_colat: Vec<f64>,
    colat_weight: Vec<f64>,
    n_lon: usize,
    lon: Vec<f64>,
    orientation: Matrix3<f64>,
    gauss: bool,
}

impl QuadratureGrid {
    /// Gauss–Legendre rings in colatitude, `2·n_colat` longitudes.
    pub fn gauss(n_colat: usize) -> Self {
        let (x, w) = gauss_legendre(n_colat);
        // Order rings from the north pole (θ = 0) southwards.
        let mut colat = Vec::with_capacity(n_colat);
        let mut weight = Vec::with_capacity(n_colat);
        for i in (0..n_colat).rev() {
            colat.push(x[i].acos());
            weight.push(w[i]);
        }
        Self::from_rings(colat, weight, 2 * n_colat, Matrix3::identity(), true)
    }

    /// Grid whose pole points along `pole` (world frame) with rings
    /// clustered near that pole. `angular_scale` is the colatitude scale of
    /// the finest feature to resolve; rings reach down to about a tenth of it.
    pub fn pole_refined(n_colat: usize, pole: Vector3<f64>, angular_scale: f64) -> Self {
        let scale = angular_scale.clamp(1e-12, 1.0);
        let beta = exponential_rate(0.1 * scale);
        let (x, w) = gauss_legendre(n_colat);
        let denom = beta.exp_m1();
        let mut colat = Vec::with_capacity(n_colat);
        let mut weight = Vec::with_capacity(n_colat);
        for (xi, wi) in x.iter().zip(&w) {
            // u in [0, 1]; θ = π (e^{βu} − 1)/(e^β − 1).
            let u = 0.5 * (xi + 1.0);
            let theta = PI * (beta * u).exp_m1() / denom;
            let dtheta_du = PI * beta * (beta * u).exp() / denom;
            colat.push(theta);
            weight.push(0.5 * wi * dtheta_du * theta.sin());
        }
        Self::from_rings(
            colat,
            weight,
            2 * n_colat,
            rotation_taking_z_to(pole),
            false,
        )
    }

    fn from_rings(
        colat: Vec<f64>,
        colat_weight: Vec<f64>,
        n_lon: usize,
        orientation: Matrix3<f64>,
        gauss: bool,
    ) -> Self {
        let cos_colat = colat.iter().map(|t| t.cos()).collect();
        let sin_colat = colat.iter().map(|t| t.sin()).collect();
        let lon = (0..n_lon)
            .map(|b| 2.0 * PI * b as f64 / n_lon as f64)
            .collect();
        Self {
            colat,
            cos_colat,
            sin_colat,
            colat_weight,
            n_lon,
            lon,
            orientation,
            gauss,
        }
    }

    pub fn n_colat(&self) -> usize {
        self.colat.len()
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn len(&self) -> usize {
        self.colat.len() * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True for the unrotated Gauss–Legendre grid (exact analysis available).
    pub fn is_gauss(&self) -> bool {
        self.gauss
    }

    pub fn colatitudes(&self) -> &[f64] {
        &self.colat
    }

    pub fn cos_colat(&self) -> &[f64] {
        &self.cos_colat
    }

    pub fn sin_colat(&self) -> &[f64] {
        &self.sin_colat
    }

    pub fn colat_weights(&self) -> &[f64] {
        &self.colat_weight
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.lon
    }

    pub fn lon_weight(&self) -> f64 {
        2.0 * PI / self.n_lon as f64
    }

    /// Rotation from grid-frame to world-frame directions.
    pub fn orientation(&self) -> &Matrix3<f64> {
        &self.orientation
    }

    pub fn node_index(&self, ring: usize, lon: usize) -> usize {
        ring * self.n_lon + lon
    }

    /// Solid-angle weight of node `(ring, lon)`; the weights sum to 4π.
    pub fn weight(&self, ring: usize, _lon: usize) -> f64 {
        self.colat_weight[ring] * self.lon_weight()
    }

    /// Weight for integrating against `dθ dφ` (used with area densities).
    pub fn param_weight(&self, ring: usize) -> f64 {
        self.colat_weight[ring] / self.sin_colat[ring] * self.lon_weight()
    }

    /// Unit direction of a node in the grid frame.
    pub fn local_direction(&self, ring: usize, lon: usize) -> Vector3<f64> {
        let (s, c) = (self.sin_colat[ring], self.cos_colat[ring]);
        let phi = self.lon[lon];
        Vector3::new(s * phi.cos(), s * phi.sin(), c)
    }

    /// Unit direction of a node in the world frame.
    pub fn direction(&self, ring: usize, lon: usize) -> Vector3<f64> {
        self.orientation * self.local_direction(ring, lon)
    }

    pub fn total_weight(&self) -> f64 {
        self.colat_weight.iter().sum::<f64>() * 2.0 * PI
    }
}

fn exponential_rate(theta_min: f64) -> f64 {
    // Solve π β / (e^β − 1) = θ_min for β > 0 (spacing at the pole).
    let target = theta_min.max(1e-14);
    if target >= PI {
        return 1e-6;
    }
    let mut beta: f64 = (PI / target).ln().max(1.0);
    for _ in 0..60 {
        let f = (PI * beta / beta.exp_m1()).ln() - target.ln();
        let e = beta.exp();
        let df = 1.0 / beta - e / (e - 1.0);
        let next = beta - f / df;
        if (next - beta).abs() < 1e-14 {
            beta = next;
            break;
        }
        beta = next.max(1e-3);
    }
    beta
}

/// Proper rotation mapping the z axis onto `dir`.
pub fn rotation_taking_z_to(dir: Vector3<f64>) -> Matrix3<f64> {
    let z = dir.normalize();
    let helper = if z.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let x = (helper - z * helper.dot(&z)).normalize();
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}
