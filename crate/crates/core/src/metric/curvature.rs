use nalgebra::{Matrix3, Vector3};

use super::{MetricError, MetricJet, MetricModel, Result};

/// Full scalar curvature together with the linearized combination
/// `h_ij,ij − h_ii,jj`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCurvature {
    pub full: f64,
    pub linearized: f64,
}

fn inverse(jet: &MetricJet) -> Result<Matrix3<f64>> {
    let p = jet.position;
    jet.g
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(MetricError::NotPositiveDefinite([p.x, p.y, p.z]))
}

/// `Γ[k][(i, j)] = Γ^k_ij`.
pub fn christoffel(jet: &MetricJet) -> Result<[Matrix3<f64>; 3]> {
    let ginv = inverse(jet)?;
    Ok(christoffel_with(&ginv, &jet.dg))
}

// Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij), lowered index first.
fn lowered(dg: &[Matrix3<f64>; 3]) -> [Matrix3<f64>; 3] {
    let mut out = [Matrix3::zeros(); 3];
    for (l, gl) in out.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                gl[(i, j)] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
            }
        }
    }
    out
}

fn christoffel_with(ginv: &Matrix3<f64>, dg: &[Matrix3<f64>; 3]) -> [Matrix3<f64>; 3] {
    let low = lowered(dg);
    let mut gamma = [Matrix3::zeros(); 3];
    for (k, gk) in gamma.iter_mut().enumerate() {
        for (l, gl) in low.iter().enumerate() {
            *gk += gl * ginv[(k, l)];
        }
    }
    gamma
}

/// Ricci tensor `R_ij = ∂_kΓ^k_ij − ∂_jΓ^k_ik + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik`.
pub fn ricci(jet: &MetricJet) -> Result<Matrix3<f64>> {
    let ginv = inverse(jet)?;
    let gamma = christoffel_with(&ginv, &jet.dg);
    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}.
    let dginv: Vec<Matrix3<f64>> = (0..3).map(|m| -(ginv * jet.dg[m] * ginv)).collect();
    let low = lowered(&jet.dg);
    // dgamma[m][k] = ∂_m Γ^k (as a matrix in i, j).
    let mut dgamma = [[Matrix3::zeros(); 3]; 3];
    for (m, row) in dgamma.iter_mut().enumerate() {
        let dlow = lowered(&jet.d2g[m]);
        for (k, out) in row.iter_mut().enumerate() {
            for l in 0..3 {
                *out += low[l] * dginv[m][(k, l)] + dlow[l] * ginv[(k, l)];
            }
        }
    }
    let mut ric = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += dgamma[k][k][(i, j)] - dgamma[j][k][(i, k)];
                for l in 0..3 {
                    v += gamma[k][(k, l)] * gamma[l][(i, j)] - gamma[k][(j, l)] * gamma[l][(i, k)];
                }
            }
            ric[(i, j)] = v;
        }
    }
    Ok(0.5 * (ric + ric.transpose()))
}

/// `Ric(v, v)` for a vector `v`.
pub fn ricci_along(jet: &MetricJet, v: &Vector3<f64>) -> Result<f64> {
    Ok(v.dot(&(ricci(jet)? * v)))
}

pub(crate) fn linearized_curvature(jet: &MetricJet) -> f64 {
    let mut v = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            v += jet.d2g[i][j][(i, j)] - jet.d2g[j][j][(i, i)];
        }
    }
    v
}

pub fn scalar_curvature(model: &MetricModel, x: &Vector3<f64>) -> Result<ScalarCurvature> {
    let jet = model.eval_metric_jet(x)?;
    let ginv = inverse(&jet)?;
    let ric = ricci(&jet)?;
    Ok(ScalarCurvature {
        full: (ginv * ric).trace(),
        linearized: linearized_curvature(&jet),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{AngularProfile, MultipoleTerm, Parity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_is_flat() {
        let s = scalar_curvature(&MetricModel::flat(), &Vector3::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(s.full, 0.0);
        assert_eq!(s.linearized, 0.0);
    }

    #[test]
    fn schwarzschild_values() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let s = scalar_curvature(&m, &Vector3::new(10.0, 0.0, 0.0)).unwrap();
        assert!(s.full.abs() < 1e-10);
        let psi: f64 = 1.05;
        let expect = -6.0 * psi * psi / 1e4;
        assert!((s.linearized - expect).abs() < 1e-15, "{}", s.linearized);
        assert!((s.linearized + 6.6e-4).abs() < 2e-6);
    }

    #[test]
    fn schwarzschild_is_scalar_flat_everywhere() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let x = d * rng.gen_range(1.0..1000.0);
            assert!(scalar_curvature(&m, &x).unwrap().full.abs() < 1e-9);
        }
    }

    #[test]
    fn conformal_ricci_closed_form() {
        // Conformally flat with harmonic ψ: Ric_rr = −2m/(r³ψ²), tangential = −Ric_rr/2.
        let model = MetricModel::schwarzschild(1.0).unwrap();
        let r = 7.0;
        let jet = model.eval_metric_jet(&Vector3::new(0.0, r, 0.0)).unwrap();
        let ric = ricci(&jet).unwrap();
        let psi = 1.0 + 0.5 / r;
        let expect = -2.0 / (r.powi(3) * psi * psi);
        assert!(
            (ric[(1, 1)] - expect).abs() < 1e-14,
            "{} vs {}",
            ric[(1, 1)],
            expect
        );
        assert!((ric[(0, 0)] + 0.5 * expect).abs() < 1e-14);
    }

    #[test]
    fn linearized_matches_full_at_leading_order() {
        let quad = MultipoleTerm::new(
            Matrix3::new(0.0, 0.3, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.2),
            -1.0,
            AngularProfile::Quadrupole {
                axes: [Vector3::x(), Vector3::z()],
            },
            Parity::Even,
        )
        .unwrap();
        let model = MetricModel::perturbed(0.0, vec![quad]).unwrap();
        let x1 = Vector3::new(300.0, 200.0, -100.0);
        let a = scalar_curvature(&model, &x1).unwrap();
        assert!((a.full - a.linearized).abs() < 1e-2 * a.linearized.abs());
    }
}
