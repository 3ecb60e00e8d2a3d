//! Real orthonormal spherical harmonics on tensor-product grids.
//!
//! Coefficients are stored flat with `index(l, m) = l² + l + m`,
//! `-l ≤ m ≤ l`. For `m > 0` the basis function is `√2 P̄_lm cos mφ`, for
//! `m < 0` it is `√2 P̄_l|m| sin |m|φ`, and `P̄_lm` is the associated Legendre
//! function normalised so that every basis function has unit L² norm.
//! No Condon–Shortley phase.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};

use super::grid::QuadratureGrid;

#[inline]
pub fn index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Total number of modes with degree ≤ `l_max`.
#[inline]
pub fn mode_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// `(l, m)` for a flat index.
pub fn degree_order(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    let l = if l * l > idx { l - 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalised associated Legendre values and their first two colatitude
/// derivatives at one colatitude, for `0 ≤ m ≤ l ≤ l_max`.
#[derive(Debug, Clone)]
pub struct LegendreRing {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
}

impl LegendreRing {
    pub fn new(l_max: usize, cos_t: f64, sin_t: f64) -> Self {
        let n = tri(l_max, l_max) + 1;
        let mut p = vec![0.0; n];
        p[0] = 0.5 / PI.sqrt();
        for m in 1..=l_max {
            let mf = m as f64;
            p[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * p[tri(m - 1, m - 1)];
        }
        for m in 0..l_max {
            p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_t * p[tri(m, m)];
        }
        for m in 0..=l_max {
            let mf = m as f64;
            for l in (m + 2)..=l_max {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                p[tri(l, m)] = a * (cos_t * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
            }
        }
        let dp = raise_lower(l_max, &p);
        let d2p = raise_lower(l_max, &dp);
        Self { p, dp, d2p }
    }

    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.p[tri(l, m)]
    }
}

// d/dθ via the ladder identity; no division by sin θ.
fn raise_lower(l_max: usize, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for l in 0..=l_max {
        let lf = l as f64;
        let at = |m: usize| if m <= l { f[tri(l, m)] } else { 0.0 };
        if l >= 1 {
            out[tri(l, 0)] = -(lf * (lf + 1.0)).sqrt() * at(1);
        }
        for m in 1..=l {
            let mf = m as f64;
            let up = ((lf + mf) * (lf - mf + 1.0)).sqrt();
            let down = ((lf - mf) * (lf + mf + 1.0)).sqrt();
            out[tri(l, m)] = 0.5 * (up * at(m - 1) - down * at(m + 1));
        }
    }
    out
}

/// Values and parameter derivatives of a field at every grid node.
#[derive(Debug, Clone, Default)]
pub struct SynthesizedField {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_theta_theta: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi_phi: Vec<f64>,
}

/// Spherical-harmonic tables bound to one grid and one maximal degree.
#[derive(Debug, Clone)]
pub struct SphericalBasis {
    l_max: usize,
    n_colat: usize,
    n_lon: usize,
    rings: Vec<LegendreRing>,
    // cos(mφ_b), sin(mφ_b) laid out [b * (l_max + 1) + m].
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
    ring_weight: Vec<f64>,
    lon_weight: f64,
    exact: bool,
}

impl SphericalBasis {
    pub fn new(grid: &QuadratureGrid, l_max: usize) -> Self {
        let rings = grid
            .cos_colat()
            .iter()
            .zip(grid.sin_colat())
            .map(|(&c, &s)| LegendreRing::new(l_max, c, s))
            .collect();
        let n_lon = grid.n_lon();
        let mut cos_m = vec![0.0; n_lon * (l_max + 1)];
        let mut sin_m = vec![0.0; n_lon * (l_max + 1)];
        for (b, phi) in grid.longitudes().iter().enumerate() {
            for m in 0..=l_max {
                let a = m as f64 * phi;
                cos_m[b * (l_max + 1) + m] = a.cos();
                sin_m[b * (l_max + 1) + m] = a.sin();
            }
        }
        Self {
            l_max,
            n_colat: grid.n_colat(),
            n_lon,
            rings,
            cos_m,
            sin_m,
            ring_weight: grid.colat_weights().to_vec(),
            lon_weight: grid.lon_weight(),
            exact: grid.is_gauss() && l_max < grid.n_colat() && 2 * l_max < n_lon,
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn mode_count(&self) -> usize {
        mode_count(self.l_max)
    }

    pub fn n_colat(&self) -> usize {
        self.n_colat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    /// Whether `analyze` inverts `synthesize` exactly on this grid.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn ring(&self, a: usize) -> &LegendreRing {
        &self.rings[a]
    }

    #[inline]
    pub fn cos_m(&self, b: usize, m: usize) -> f64 {
        self.cos_m[b * (self.l_max + 1) + m]
    }

    #[inline]
    pub fn sin_m(&self, b: usize, m: usize) -> f64 {
        self.sin_m[b * (self.l_max + 1) + m]
    }

    /// Colatitude factor of basis function `idx` (including the √2), and
    /// its first and second θ derivatives, on ring `a`.
    #[inline]
    pub fn colat_factor(&self, a: usize, l: usize, m: i64) -> (f64, f64, f64) {
        let ring = &self.rings[a];
        let am = m.unsigned_abs() as usize;
        let k = tri(l, am);
        let s = if m == 0 { 1.0 } else { SQRT_2 };
        (s * ring.p[k], s * ring.dp[k], s * ring.d2p[k])
    }

    /// Longitude factor of order `m` and its φ derivative at longitude `b`.
    #[inline]
    pub fn lon_factor(&self, b: usize, m: i64) -> (f64, f64) {
        match m.cmp(&0) {
            std::cmp::Ordering::Equal => (1.0, 0.0),
            std::cmp::Ordering::Greater => {
                let k = m as usize;
                let mf = m as f64;
                (self.cos_m(b, k), -mf * self.sin_m(b, k))
            }
            std::cmp::Ordering::Less => {
                let k = (-m) as usize;
                let mf = k as f64;
                (self.sin_m(b, k), mf * self.cos_m(b, k))
            }
        }
    }

    /// Field values only.
    pub fn synthesize_values(&self, coeffs: &[f64]) -> Vec<f64> {
        let lc = self.coefficient_degree(coeffs);
        let mut out = vec![0.0; self.n_colat * self.n_lon];
        let mut ca = vec![0.0; lc + 1];
        let mut sa = vec![0.0; lc + 1];
        for a in 0..self.n_colat {
            self.ring_series(a, coeffs, lc, 0, &mut ca, &mut sa);
            for b in 0..self.n_lon {
                let mut v = ca[0];
                for m in 1..=lc {
                    v += ca[m] * self.cos_m(b, m) + sa[m] * self.sin_m(b, m);
                }
                out[a * self.n_lon + b] = v;
            }
        }
        out
    }

    /// Values and first and second parameter derivatives.
    pub fn synthesize(&self, coeffs: &[f64]) -> SynthesizedField {
        let lc = self.coefficient_degree(coeffs);
        let n = self.n_colat * self.n_lon;
        let mut f = SynthesizedField {
            value: vec![0.0; n],
            d_theta: vec![0.0; n],
            d_phi: vec![0.0; n],
            d_theta_theta: vec![0.0; n],
            d_theta_phi: vec![0.0; n],
            d_phi_phi: vec![0.0; n],
        };
        let mut c = [vec![0.0; lc + 1], vec![0.0; lc + 1], vec![0.0; lc + 1]];
        let mut s = [vec![0.0; lc + 1], vec![0.0; lc + 1], vec![0.0; lc + 1]];
        for a in 0..self.n_colat {
            for order in 0..3 {
                let (cc, ss) = (&mut c[order], &mut s[order]);
                self.ring_series(a, coeffs, lc, order, cc, ss);
            }
            for b in 0..self.n_lon {
                let i = a * self.n_lon + b;
                let (mut v, mut vt, mut vtt) = (c[0][0], c[1][0], c[2][0]);
                let (mut vp, mut vtp, mut vpp) = (0.0, 0.0, 0.0);
                for m in 1..=lc {
                    let (cm, sm) = (self.cos_m(b, m), self.sin_m(b, m));
                    let mf = m as f64;
                    v += c[0][m] * cm + s[0][m] * sm;
                    vt += c[1][m] * cm + s[1][m] * sm;
                    vtt += c[2][m] * cm + s[2][m] * sm;
                    vp += mf * (s[0][m] * cm - c[0][m] * sm);
                    vtp += mf * (s[1][m] * cm - c[1][m] * sm);
                    vpp -= mf * mf * (c[0][m] * cm + s[0][m] * sm);
                }
                f.value[i] = v;
                f.d_theta[i] = vt;
                f.d_theta_theta[i] = vtt;
                f.d_phi[i] = vp;
                f.d_theta_phi[i] = vtp;
                f.d_phi_phi[i] = vpp;
            }
        }
        f
    }

    fn coefficient_degree(&self, coeffs: &[f64]) -> usize {
        let mut lc = (coeffs.len() as f64).sqrt() as usize;
        while lc * lc > coeffs.len() {
            lc -= 1;
        }
        lc.saturating_sub(1).min(self.l_max)
    }

    // Fourier coefficients of a ring: order 0 values, 1 = d/dθ, 2 = d²/dθ².
    fn ring_series(
        &self,
        a: usize,
        coeffs: &[f64],
        lc: usize,
        order: usize,
        cos_part: &mut [f64],
        sin_part: &mut [f64],
    ) {
        let ring = &self.rings[a];
        let table = match order {
            0 => &ring.p,
            1 => &ring.dp,
            _ => &ring.d2p,
        };
        cos_part.iter_mut().for_each(|x| *x = 0.0);
        sin_part.iter_mut().for_each(|x| *x = 0.0);
        for l in 0..=lc {
            cos_part[0] += coeffs[index(l, 0)] * table[tri(l, 0)];
            for m in 1..=l {
                let pv = SQRT_2 * table[tri(l, m)];
                cos_part[m] += coeffs[index(l, m as i64)] * pv;
                sin_part[m] += coeffs[index(l, -(m as i64))] * pv;
            }
        }
    }

    /// Quadrature projection of nodal values onto the basis. Exact inverse
    /// of synthesis for band-limited data when `is_exact()`.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        self.analyze_weighted(values, None)
    }

    /// Projection `∫ f Y_p w dσ` with an optional extra per-node weight.
    pub fn analyze_weighted(&self, values: &[f64], extra: Option<&[f64]>) -> Vec<f64> {
        let l_max = self.l_max;
        let mut out = vec![0.0; mode_count(l_max)];
        let mut gc = vec![0.0; l_max + 1];
        let mut gs = vec![0.0; l_max + 1];
        for a in 0..self.n_colat {
            gc.iter_mut().for_each(|x| *x = 0.0);
            gs.iter_mut().for_each(|x| *x = 0.0);
            for b in 0..self.n_lon {
                let i = a * self.n_lon + b;
                let f = values[i] * extra.map_or(1.0, |e| e[i]);
                for m in 0..=l_max {
                    gc[m] += f * self.cos_m(b, m);
                    gs[m] += f * self.sin_m(b, m);
                }
            }
            let w = self.ring_weight[a] * self.lon_weight;
            let ring = &self.rings[a];
            for l in 0..=l_max {
                out[index(l, 0)] += w * ring.p[tri(l, 0)] * gc[0];
                for m in 1..=l {
                    let pv = w * SQRT_2 * ring.p[tri(l, m)];
                    out[index(l, m as i64)] += pv * gc[m];
                    out[index(l, -(m as i64))] += pv * gs[m];
                }
            }
        }
        out
    }
}

/// Evaluate a coefficient vector at an arbitrary unit direction.
pub fn eval_direction(coeffs: &[f64], dir: &Vector3<f64>) -> f64 {
    let l_max = {
        let mut l = (coeffs.len() as f64).sqrt() as usize;
        while l * l > coeffs.len() {
            l -= 1;
        }
        l.saturating_sub(1)
    };
    let d = dir.normalize();
    let cos_t = d.z.clamp(-1.0, 1.0);
    let sin_t = (d.x * d.x + d.y * d.y).sqrt();
    let phi = d.y.atan2(d.x);
    let ring = LegendreRing::new(l_max, cos_t, sin_t);
    let mut v = 0.0;
    for l in 0..=l_max {
        v += coeffs[index(l, 0)] * ring.get(l, 0);
        for m in 1..=l {
            let pv = SQRT_2 * ring.get(l, m);
            let a = m as f64 * phi;
            v += pv
                * (coeffs[index(l, m as i64)] * a.cos() + coeffs[index(l, -(m as i64))] * a.sin());
        }
    }
    v
}

/// Coefficients of `ω ↦ f(Q ω)` for a band-limited `f` and rotation `Q`.
pub fn rotated_coefficients(coeffs: &[f64], l_max: usize, rot: &Matrix3<f64>) -> Vec<f64> {
    let grid = QuadratureGrid::gauss(l_max + 1);
    let basis = SphericalBasis::new(&grid, l_max);
    let mut values = Vec::with_capacity(grid.len());
    for a in 0..grid.n_colat() {
        for b in 0..grid.n_lon() {
            values.push(eval_direction(coeffs, &(rot * grid.local_direction(a, b))));
        }
    }
    basis.analyze(&values)
}

/// Real spherical harmonic `Y_lm` evaluated at a direction.
pub fn real_harmonic(l: usize, m: i64, dir: &Vector3<f64>) -> f64 {
    let mut c = vec![0.0; mode_count(l)];
    c[index(l, m)] = 1.0;
    eval_direction(&c, dir)
}
