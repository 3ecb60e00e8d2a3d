use nalgebra::Matrix2;

use super::{Discretization, RadialSurface, Result, SurfaceFrame};
use crate::metric::MetricModel;

/// Remainder of the first-order expansion of `H_g − H_e` in `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResidual {
    pub residual: Vec<f64>,
    pub sup: f64,
    /// `|h||∂h| + |h|²|A|` per node.
    pub bound: Vec<f64>,
    /// Smallest `C` with `|residual| ≤ C·bound` at every node.
    pub fitted_constant: f64,
}

/// Per-node `(H_g − H_e) − [−f^{ik}h_kl f^{lj}A_ij + ½Hν^iν^j h_ij
/// − f^{ij}ν^l ∂_i h_jl + ½f^{ij}ν^l ∂_l h_ij]`, with Euclidean `f`, `A`,
/// `H`, `ν` in the bracket.
pub fn expansion_residual(
    surface: &RadialSurface,
    disc: &Discretization,
    model: &MetricModel,
) -> Result<ExpansionResidual> {
    let frame = SurfaceFrame::physical(surface, disc, model)?;
    let mut residual = Vec::with_capacity(frame.len());
    let mut bound = Vec::with_capacity(frame.len());
    for n in frame.nodes() {
        let e = &n.euclid;
        let nu = e.normal;
        let h = n.h;
        let mut ht = Matrix2::zeros();
        for a in 0..2 {
            for b in 0..2 {
                ht[(a, b)] = n.tangents[a].dot(&(h * n.tangents[b]));
            }
        }
        let inv = e.inv_first_form;
        let t1 = -(inv * ht * inv * e.second_form).trace();
        let t2 = 0.5 * e.mean_curvature * nu.dot(&(h * nu));
        let p = n.ambient_inverse_form(super::Measure::Euclidean);
        let mut t3 = 0.0;
        let mut t4 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    t3 -= p[(i, j)] * nu[l] * n.dh[i][(j, l)];
                    t4 += 0.5 * p[(i, j)] * nu[l] * n.dh[l][(i, j)];
                }
            }
        }
        let r = (n.physical.mean_curvature - e.mean_curvature) - (t1 + t2 + t3 + t4);
        let hn = h.norm();
        let dhn = n.dh.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        residual.push(r);
        bound.push(hn * dhn + hn * hn * e.norm_a2.sqrt());
    }
    let sup = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let fitted_constant = residual
        .iter()
        .zip(&bound)
        .map(|(r, b)| if *b > 0.0 { r.abs() / b } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(ExpansionResidual {
        residual,
        sup,
        bound,
        fitted_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn flat_residual_vanishes() {
        let s = RadialSurface::ellipsoid(Vector3::zeros(), [1.5, 1.0, 1.0], 8);
        let d = Discretization::gauss(16, 8).unwrap();
        let r = expansion_residual(&s, &d, &MetricModel::flat()).unwrap();
        assert_eq!(r.sup, 0.0);
    }

    #[test]
    fn schwarzschild_remainder_is_second_order() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let d = Discretization::gauss(8, 2).unwrap();
        let a =
            expansion_residual(&RadialSurface::sphere(Vector3::zeros(), 50.0, 2), &d, &m).unwrap();
        let b =
            expansion_residual(&RadialSurface::sphere(Vector3::zeros(), 100.0, 2), &d, &m).unwrap();
        assert!(a.fitted_constant <= 10.0, "{}", a.fitted_constant);
        let ratio = a.sup / b.sup;
        assert!((ratio - 8.0).abs() < 0.5, "{ratio}");
    }
}
