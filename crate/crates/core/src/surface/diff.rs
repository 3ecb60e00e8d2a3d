use nalgebra::Vector3;

use super::{Discretization, RadialSurface, Result, SurfaceError, SurfaceFrame};
use crate::sphere::{SphericalBasis, SynthesizedField};

/// Spectral derivatives of nodal values, resolved to the grid's full band
/// limit. Needs an unrotated Gauss grid.
pub fn spectral_derivatives(disc: &Discretization, values: &[f64]) -> Result<SynthesizedField> {
    let grid = disc.grid();
    if !grid.is_gauss() {
        return Err(SurfaceError::NeedsGaussGrid);
    }
    let basis = SphericalBasis::new(grid, grid.n_colat() - 1);
    Ok(basis.synthesize(&basis.analyze(values)))
}

/// `|∇_Σ u|` in the Euclidean induced metric at every node.
pub fn tangential_gradient_norm(
    frame: &SurfaceFrame,
    disc: &Discretization,
    values: &[f64],
) -> Result<Vec<f64>> {
    let d = spectral_derivatives(disc, values)?;
    Ok(frame
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let g = [d.d_theta[i], d.d_phi[i]];
            let inv = &n.euclid.inv_first_form;
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += inv[(a, b)] * g[a] * g[b];
                }
            }
            s.max(0.0).sqrt()
        })
        .collect())
}

/// Sup over nodes of the tangential part of `Δ_e ν + |∇_e ν|² ν − ∇_e H_e`.
pub fn gauss_map_residual(surface: &RadialSurface, disc: &Discretization) -> Result<f64> {
    let frame = SurfaceFrame::euclidean(surface, disc)?;
    let nodes = frame.nodes();
    let comp: Vec<SynthesizedField> = (0..3)
        .map(|k| {
            let v: Vec<f64> = nodes.iter().map(|n| n.euclid.normal[k]).collect();
            spectral_derivatives(disc, &v)
        })
        .collect::<Result<_>>()?;
    let hv: Vec<f64> = nodes.iter().map(|n| n.euclid.mean_curvature).collect();
    let hd = spectral_derivatives(disc, &hv)?;
    let mut sup: f64 = 0.0;
    for (i, n) in nodes.iter().enumerate() {
        let inv = &n.euclid.inv_first_form;
        // Γ^c_ab = E^{cd} ⟨X_ab, X_d⟩.
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    gamma[c][a][b] = (0..2)
                        .map(|d| inv[(c, d)] * n.second[a][b].dot(&n.tangents[d]))
                        .sum();
                }
            }
        }
        let laplace = |f: &SynthesizedField| {
            let first = [f.d_theta[i], f.d_phi[i]];
            let hess = [
                [f.d_theta_theta[i], f.d_theta_phi[i]],
                [f.d_theta_phi[i], f.d_phi_phi[i]],
            ];
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let cov = hess[a][b] - gamma[0][a][b] * first[0] - gamma[1][a][b] * first[1];
                    s += inv[(a, b)] * cov;
                }
            }
            s
        };
        let lap = Vector3::new(laplace(&comp[0]), laplace(&comp[1]), laplace(&comp[2]));
        let hg = [hd.d_theta[i], hd.d_phi[i]];
        let mut grad_h = Vector3::zeros();
        for a in 0..2 {
            for b in 0..2 {
                grad_h += n.tangents[a] * (inv[(a, b)] * hg[b]);
            }
        }
        let nu = n.euclid.normal;
        let r = lap + nu * n.euclid.norm_a2 - grad_h;
        let tangential = r - nu * r.dot(&nu);
        sup = sup.max(tangential.norm());
    }
    Ok(sup)
}
