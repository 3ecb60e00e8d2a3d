//! Weak-form matrices `B_pq = ∫ Σ_uv C_uv D_u Y_p D_v Y_q` over grid nodes,
//! where `D_0 = id`, `D_1 = ∂_θ`, `D_2 = ∂_φ`. Assembly is sum-factorized:
//! longitude sums are formed once per ring and order pair.

use nalgebra::DMatrix;

use crate::sphere::{degree_order, mode_count};
use crate::surface::Discretization;

/// Colatitude and longitude factors of every basis function on a grid.
#[derive(Debug, Clone)]
pub struct ModeTables {
    l_max: usize,
    n_colat: usize,
    n_lon: usize,
    orders: Vec<i64>,
    // [a * n + p]
    p: Vec<f64>,
    dp: Vec<f64>,
    // [b * (2L+1) + (m + L)]
    t: Vec<f64>,
    dt: Vec<f64>,
}

impl ModeTables {
    pub fn new(disc: &Discretization) -> Self {
        let basis = disc.basis();
        let l_max = basis.l_max();
        let n = mode_count(l_max);
        let n_colat = basis.n_colat();
        let n_lon = basis.n_lon();
        let orders: Vec<i64> = (0..n).map(|p| degree_order(p).1).collect();
        let mut p = vec![0.0; n_colat * n];
        let mut dp = vec![0.0; n_colat * n];
        for a in 0..n_colat {
            for q in 0..n {
                let (l, m) = degree_order(q);
                let (v, d, _) = basis.colat_factor(a, l, m);
                p[a * n + q] = v;
                dp[a * n + q] = d;
            }
        }
        let w = 2 * l_max + 1;
        let mut t = vec![0.0; n_lon * w];
        let mut dt = vec![0.0; n_lon * w];
        for b in 0..n_lon {
            for m in -(l_max as i64)..=(l_max as i64) {
                let (v, d) = basis.lon_factor(b, m);
                let k = b * w + (m + l_max as i64) as usize;
                t[k] = v;
                dt[k] = d;
            }
        }
        Self {
            l_max,
            n_colat,
            n_lon,
            orders,
            p,
            dp,
            t,
            dt,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.orders.len()
    }

    /// `Y_q` and its parameter derivatives at node `(a, b)`.
    pub fn eval(&self, q: usize, a: usize, b: usize) -> [f64; 3] {
        let n = self.orders.len();
        let w = 2 * self.l_max + 1;
        let k = b * w + (self.orders[q] + self.l_max as i64) as usize;
        let (pv, dpv) = (self.p[a * n + q], self.dp[a * n + q]);
        [pv * self.t[k], dpv * self.t[k], pv * self.dt[k]]
    }

    /// Assemble `B` from per-node coefficients `coef[i][u][v]`.
    /// `symmetric` promises `C_uv = C_vu` and fills only the upper triangle
    /// before mirroring.
    pub fn assemble(&self, coef: &[[[f64; 3]; 3]], symmetric: bool) -> DMatrix<f64> {
        let n = self.orders.len();
        let w = 2 * self.l_max + 1;
        let lm = self.l_max as i64;
        assert_eq!(coef.len(), self.n_colat * self.n_lon);
        let mut active = [[false; 3]; 3];
        for c in coef {
            for u in 0..3 {
                for v in 0..3 {
                    active[u][v] |= c[u][v] != 0.0;
                }
            }
        }
        let pairs: Vec<(usize, usize)> = (0..3)
            .flat_map(|u| (0..3).map(move |v| (u, v)))
            .filter(|&(u, v)| active[u][v])
            .collect();
        let mut out = vec![0.0; n * n];
        let mut g = vec![vec![0.0; w * w]; pairs.len()];
        let mut tmp = vec![0.0; w];
        let midx: Vec<usize> = self.orders.iter().map(|m| (m + lm) as usize).collect();
        for a in 0..self.n_colat {
            // Longitude sums G^{uv}(m1, m2) = Σ_b C_uv Φ^u_{m1} Φ^v_{m2}.
            for (k, &(u, v)) in pairs.iter().enumerate() {
                let gk = &mut g[k];
                gk.iter_mut().for_each(|x| *x = 0.0);
                for b in 0..self.n_lon {
                    let c = coef[a * self.n_lon + b][u][v];
                    if c == 0.0 {
                        continue;
                    }
                    let phi_u = if u == 2 { &self.dt } else { &self.t };
                    let phi_v = if v == 2 { &self.dt } else { &self.t };
                    let row_u = &phi_u[b * w..(b + 1) * w];
                    let row_v = &phi_v[b * w..(b + 1) * w];
                    for (t, rv) in tmp.iter_mut().zip(row_v) {
                        *t = c * rv;
                    }
                    for (m1, &fu) in row_u.iter().enumerate() {
                        if fu == 0.0 {
                            continue;
                        }
                        let dst = &mut gk[m1 * w..(m1 + 1) * w];
                        for (d, t) in dst.iter_mut().zip(&tmp) {
                            *d += fu * t;
                        }
                    }
                }
            }
            let pa = &self.p[a * n..(a + 1) * n];
            let dpa = &self.dp[a * n..(a + 1) * n];
            let alpha = |u: usize, q: usize| if u == 1 { dpa[q] } else { pa[q] };
            for p in 0..n {
                let m1 = midx[p];
                let q0 = if symmetric { p } else { 0 };
                for (k, &(u, v)) in pairs.iter().enumerate() {
                    let ap = alpha(u, p);
                    if ap == 0.0 {
                        continue;
                    }
                    let grow = &g[k][m1 * w..(m1 + 1) * w];
                    let av: &[f64] = if v == 1 { dpa } else { pa };
                    let row = &mut out[p * n..(p + 1) * n];
                    for q in q0..n {
                        row[q] += ap * av[q] * grow[midx[q]];
                    }
                }
            }
        }
        if symmetric {
            for p in 0..n {
                for q in 0..p {
                    out[p * n + q] = out[q * n + p];
                }
            }
        }
        DMatrix::from_row_slice(n, n, &out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::index;

    #[test]
    fn mass_matrix_is_identity_on_unit_sphere() {
        let d = Discretization::gauss(10, 6).unwrap();
        let t = ModeTables::new(&d);
        let g = d.grid();
        let coef: Vec<[[f64; 3]; 3]> = (0..g.n_colat())
            .flat_map(|a| {
                (0..g.n_lon()).map(move |b| {
                    let mut c = [[0.0; 3]; 3];
                    c[0][0] = g.weight(a, b);
                    c
                })
            })
            .collect();
        let m = t.assemble(&coef, true);
        assert!((m - DMatrix::identity(49, 49)).amax() < 1e-13);
    }

    #[test]
    fn stiffness_matches_laplacian_eigenvalues() {
        // ∫ ∇Y_p·∇Y_q dσ on the unit sphere = l(l+1) δ_pq.
        let d = Discretization::gauss(12, 6).unwrap();
        let t = ModeTables::new(&d);
        let g = d.grid();
        let coef: Vec<[[f64; 3]; 3]> = (0..g.n_colat())
            .flat_map(|a| {
                (0..g.n_lon()).map(move |_| {
                    let s = g.sin_colat()[a];
                    let wp = g.param_weight(a);
                    let mut c = [[0.0; 3]; 3];
                    c[1][1] = wp * s;
                    c[2][2] = wp / s;
                    c
                })
            })
            .collect();
        let k = t.assemble(&coef, false);
        for l in 0..=6usize {
            let p = index(l, 0);
            assert!((k[(p, p)] - (l * (l + 1)) as f64).abs() < 1e-11);
        }
        let mut off = k.clone();
        off.fill_diagonal(0.0);
        assert!(off.amax() < 1e-11);
    }
}
