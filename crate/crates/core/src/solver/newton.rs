use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use super::galerkin::ModeTables;
use super::{l1_axis, JacobianMode, Result, SolverError, SolverOptions};
use crate::metric::{MetricError, MetricModel};
use crate::sphere::{degree_order, index};
use crate::surface::{
    spectral_derivatives, Discretization, RadialSurface, SurfaceError, SurfaceFrame,
};

/// Converged leaf with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcSolution {
    pub surface: RadialSurface,
    pub iterations: usize,
    /// `sup |H_g − H_target|` on the final surface.
    pub sup_residual: f64,
    /// Size of the last Newton step (RMS radial displacement plus center shift).
    pub last_step: f64,
}

struct Evaluation {
    frame: SurfaceFrame,
    galerkin: DVector<f64>,
    sup: f64,
    l2: f64,
}

struct Problem<'a> {
    model: &'a MetricModel,
    disc: Discretization,
    tables: ModeTables,
    h_target: f64,
    rho_unknowns: Vec<usize>,
    rows: Vec<usize>,
    move_center: bool,
}

fn validity(e: SurfaceError) -> SolverError {
    match e {
        SurfaceError::Metric(m @ MetricError::PointInsideCore { .. }) => {
            SolverError::LeftValidityRegion(m.to_string())
        }
        other => SolverError::Surface(other),
    }
}

impl Problem<'_> {
    fn evaluate(&self, surface: &RadialSurface) -> Result<Evaluation> {
        let frame = SurfaceFrame::physical(surface, &self.disc, self.model).map_err(validity)?;
        let grid = self.disc.grid();
        let n_lon = grid.n_lon();
        let mut values = Vec::with_capacity(frame.len());
        let mut extra = Vec::with_capacity(frame.len());
        let mut sup: f64 = 0.0;
        let mut l2 = 0.0;
        for (i, n) in frame.nodes().iter().enumerate() {
            let r = n.physical.mean_curvature - self.h_target;
            sup = sup.max(r.abs());
            l2 += n.weight * n.physical.area_density * r * r;
            values.push(r);
            extra.push(n.physical.area_density / grid.sin_colat()[i / n_lon]);
        }
        let galerkin = DVector::from_vec(self.disc.basis().analyze_weighted(&values, Some(&extra)));
        Ok(Evaluation {
            frame,
            galerkin,
            sup,
            l2: l2.sqrt(),
        })
    }

    // ∫ ⟨∇Y_p, ∇(s Y_q)⟩ − V Y_p s Y_q dμ_g for all p, q.
    fn radial_jacobian(&self, frame: &SurfaceFrame) -> Result<DMatrix<f64>> {
        let speed: Vec<f64> = frame.nodes().iter().map(|n| n.normal_speed).collect();
        let ds = spectral_derivatives(&self.disc, &speed)?;
        let coef: Vec<[[f64; 3]; 3]> = frame
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let p = &n.physical;
                let w = n.weight * p.area_density;
                let inv = &p.inv_first_form;
                let s = speed[i];
                let grad = [ds.d_theta[i], ds.d_phi[i]];
                let v = p.norm_a2 + n.ric_nn;
                let mut c = [[0.0; 3]; 3];
                c[0][0] = -w * v * s;
                for a in 0..2 {
                    for b in 0..2 {
                        c[1 + a][1 + b] = w * inv[(a, b)] * s;
                        c[1 + a][0] += w * inv[(a, b)] * grad[b];
                    }
                }
                c
            })
            .collect();
        Ok(self.tables.assemble(&coef, false))
    }

    fn jacobian(
        &self,
        surface: &RadialSurface,
        eval: &Evaluation,
        mode: JacobianMode,
    ) -> Result<DMatrix<f64>> {
        let n_unk = self.rho_unknowns.len() + if self.move_center { 3 } else { 0 };
        let mut jac = DMatrix::zeros(self.rows.len(), n_unk);
        let radius = surface.mean_radius();
        match mode {
            JacobianMode::AnalyticJacobi => {
                let full = self.radial_jacobian(&eval.frame)?;
                for (col, &q) in self.rho_unknowns.iter().enumerate() {
                    for (row, &p) in self.rows.iter().enumerate() {
                        jac[(row, col)] = full[(p, q)];
                    }
                }
            }
            JacobianMode::FiniteDifference => {
                let delta = 1e-5 * radius;
                for (col, &q) in self.rho_unknowns.iter().enumerate() {
                    let mut plus = surface.clone();
                    plus.coeffs_mut()[q] += delta;
                    let mut minus = surface.clone();
                    minus.coeffs_mut()[q] -= delta;
                    let rp = self.evaluate(&plus)?.galerkin;
                    let rm = self.evaluate(&minus)?.galerkin;
                    for (row, &p) in self.rows.iter().enumerate() {
                        jac[(row, col)] = (rp[p] - rm[p]) / (2.0 * delta);
                    }
                }
            }
        }
        if self.move_center {
            let delta = 1e-4 * radius;
            let base = self.rho_unknowns.len();
            for k in 0..3 {
                let e = Vector3::ith(k, delta);
                let mut plus = surface.clone();
                plus.set_center(surface.center() + e);
                let mut minus = surface.clone();
                minus.set_center(surface.center() - e);
                let rp = self.evaluate(&plus)?.galerkin;
                let rm = self.evaluate(&minus)?.galerkin;
                for (row, &p) in self.rows.iter().enumerate() {
                    jac[(row, base + k)] = (rp[p] - rm[p]) / (2.0 * delta);
                }
            }
        }
        Ok(jac)
    }

    fn apply(&self, surface: &RadialSurface, step: &DVector<f64>, alpha: f64) -> RadialSurface {
        let mut out = surface.clone();
        for (k, &q) in self.rho_unknowns.iter().enumerate() {
            out.coeffs_mut()[q] += alpha * step[k];
        }
        if self.move_center {
            let b = self.rho_unknowns.len();
            let dc = Vector3::new(step[b], step[b + 1], step[b + 2]);
            out.set_center(surface.center() + dc * alpha);
        }
        out
    }

    fn step_size(&self, step: &DVector<f64>) -> f64 {
        let nr = self.rho_unknowns.len();
        let rho: f64 = step.rows(0, nr).norm() / (4.0 * PI).sqrt();
        let center = if self.move_center {
            step.rows(nr, 3).norm()
        } else {
            0.0
        };
        rho + center
    }
}

/// Move the `l = 1` part of `ρ` into the center, to first order.
fn absorb_translation(surface: &mut RadialSurface) {
    let k = (3.0 / (4.0 * PI)).sqrt();
    let mut shift = Vector3::zeros();
    for m in -1..=1 {
        let i = index(1, m);
        if i < surface.coeffs().len() {
            shift += l1_axis(m) * (surface.coeffs()[i] * k);
            surface.coeffs_mut()[i] = 0.0;
        }
    }
    let c = surface.center();
    surface.set_center(c + shift);
}

const MAX_HALVINGS: usize = 12;

/// Newton iteration for `H_g = h_target` on radial graphs.
///
/// Unknowns are the `ρ` coefficients with `l ≠ 1` and the center; the
/// equations are the Galerkin residuals `∫ Y_p (H_g − H_target) dμ_g` for
/// all modes up to `l_max`. For a flat metric the center is frozen and the
/// `l = 1` equations are dropped.
pub fn solve_cmc(
    model: &MetricModel,
    h_target: f64,
    init: &RadialSurface,
    opts: &SolverOptions,
) -> Result<CmcSolution> {
    opts.validate()?;
    if !(h_target > 0.0) || !h_target.is_finite() {
        return Err(SolverError::InvalidInput(format!(
            "target mean curvature {h_target} must be positive"
        )));
    }
    let disc = opts.discretization()?;
    let tables = ModeTables::new(&disc);
    let n = tables.mode_count();
    let move_center = !model.is_flat();
    let rho_unknowns: Vec<usize> = (0..n).filter(|&p| degree_order(p).0 != 1).collect();
    let rows: Vec<usize> = if move_center {
        (0..n).collect()
    } else {
        rho_unknowns.clone()
    };
    let problem = Problem {
        model,
        disc,
        tables,
        h_target,
        rho_unknowns,
        rows,
        move_center,
    };
    let mut surface = init.with_l_max(opts.l_max);
    absorb_translation(&mut surface);
    let mut eval = problem.evaluate(&surface)?;
    let mut iterations = 0;
    loop {
        let jac = problem.jacobian(&surface, &eval, opts.jacobian_mode)?;
        let rhs = -DVector::from_iterator(
            problem.rows.len(),
            problem.rows.iter().map(|&p| eval.galerkin[p]),
        );
        let step = solve_linear(jac, rhs)?;
        let size = problem.step_size(&step);
        let radius = surface.mean_radius().abs();
        if eval.sup <= opts.tol_residual && size <= opts.tol_step * radius {
            let polished = problem.apply(&surface, &step, 1.0);
            if let Ok(e) = problem.evaluate(&polished) {
                if e.sup <= opts.tol_residual {
                    return Ok(CmcSolution {
                        surface: polished,
                        iterations: iterations + 1,
                        sup_residual: e.sup,
                        last_step: size,
                    });
                }
            }
            return Ok(CmcSolution {
                surface,
                iterations,
                sup_residual: eval.sup,
                last_step: size,
            });
        }
        if iterations >= opts.max_newton_iters {
            return Err(SolverError::NoConvergence {
                iterations,
                residual: eval.sup,
            });
        }
        let mut alpha = opts.damping;
        let mut accepted = None;
        let mut last_err = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = problem.apply(&surface, &step, alpha);
            match problem.evaluate(&trial) {
                Ok(e) if e.l2 < eval.l2 || e.sup <= opts.tol_residual => {
                    accepted = Some((trial, e));
                    break;
                }
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((s, e)) => {
                surface = s;
                eval = e;
                iterations += 1;
            }
            None => {
                return Err(match last_err {
                    Some(e @ SolverError::LeftValidityRegion(_)) => e,
                    _ => SolverError::NoConvergence {
                        iterations,
                        residual: eval.sup,
                    },
                })
            }
        }
    }
}

fn solve_linear(jac: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let scale = jac.amax();
    let lu = jac.lu();
    let u = lu.u();
    let pivot = (0..u.nrows())
        .map(|i| u[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    let rel = if scale > 0.0 { pivot / scale } else { 0.0 };
    if !(rel >= 1e-12) {
        return Err(SolverError::JacobianSingular { pivot: rel });
    }
    lu.solve(&rhs)
        .ok_or(SolverError::JacobianSingular { pivot: rel })
}
