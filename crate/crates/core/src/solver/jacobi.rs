use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::galerkin::ModeTables;
use super::{Result, SolverError};
use crate::metric::MetricModel;
use crate::surface::{Discretization, RadialSurface, SurfaceFrame};

/// Galerkin matrices of the stability form in the harmonic basis:
/// `M_pq = ∫ Y_p Y_q dμ_g` and
/// `Q_pq = ∫ ⟨∇Y_p, ∇Y_q⟩ − (|A|² + Ric(ν,ν)) Y_p Y_q dμ_g`.
#[derive(Debug, Clone)]
pub struct WeakForms {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub area: f64,
}

impl WeakForms {
    /// `∫ f dμ_g` for coefficients `f`.
    pub fn integral(&self, f: &DVector<f64>) -> f64 {
        (4.0 * PI).sqrt() * self.mass.row(0).dot(&f.transpose())
    }
}

pub fn weak_forms(frame: &SurfaceFrame, tables: &ModeTables) -> WeakForms {
    let mut mcoef = Vec::with_capacity(frame.len());
    let mut qcoef = Vec::with_capacity(frame.len());
    for n in frame.nodes() {
        let p = &n.physical;
        let w = n.weight * p.area_density;
        let inv = &p.inv_first_form;
        let v = p.norm_a2 + n.ric_nn;
        let mut m = [[0.0; 3]; 3];
        m[0][0] = w;
        let mut q = [[0.0; 3]; 3];
        q[0][0] = -w * v;
        q[1][1] = w * inv[(0, 0)];
        q[1][2] = w * inv[(0, 1)];
        q[2][1] = w * inv[(1, 0)];
        q[2][2] = w * inv[(1, 1)];
        mcoef.push(m);
        qcoef.push(q);
    }
    let mass = tables.assemble(&mcoef, true);
    let stiffness = tables.assemble(&qcoef, true);
    let area = frame.area(crate::surface::Measure::Physical);
    WeakForms {
        mass,
        stiffness,
        area,
    }
}

/// Galerkin image of the Jacobi operator `−Δ − (|A|² + Ric(ν,ν))` applied
/// to the function with coefficients `f`. Returns coefficients of
/// `M⁻¹ Q f`. With `project` the mean is removed first; otherwise a
/// function whose normalized mean exceeds 1e-8 is rejected.
pub fn jacobi_apply(
    surface: &RadialSurface,
    disc: &Discretization,
    model: &MetricModel,
    f: &[f64],
    project: bool,
) -> Result<Vec<f64>> {
    let frame = SurfaceFrame::physical(surface, disc, model)?;
    let tables = ModeTables::new(disc);
    let forms = weak_forms(&frame, &tables);
    let n = tables.mode_count();
    if f.len() > n {
        return Err(SolverError::InvalidInput(format!(
            "function has {} coefficients, basis has {n}",
            f.len()
        )));
    }
    let mut fv = DVector::zeros(n);
    fv.rows_mut(0, f.len()).copy_from_slice(f);
    let mean = forms.integral(&fv);
    let norm = fv.dot(&(&forms.mass * &fv)).max(0.0).sqrt() * forms.area.sqrt();
    if project {
        fv[0] -= (4.0 * PI).sqrt() * mean / forms.area;
    } else if mean.abs() > 1e-8 * norm {
        return Err(SolverError::NotMeanZero(mean.abs() / norm));
    }
    let chol = forms
        .mass
        .clone()
        .cholesky()
        .ok_or(SolverError::MassMatrixIndefinite)?;
    let out = chol.solve(&(&forms.stiffness * fv));
    Ok(out.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Lowest eigenvalues on mean-zero functions, ascending.
    pub eigenvalues: Vec<f64>,
    /// Harmonic coefficients of the eigenfunctions, `L²(dμ_g)`-orthonormal.
    pub eigenfunctions: Vec<Vec<f64>>,
}

/// The `k` lowest eigenvalues of the Jacobi operator restricted to
/// mean-zero functions.
///
/// With `M = LLᵀ` the problem becomes symmetric, `L⁻¹QL⁻ᵀ y = λ y`. Because
/// `Y₀₀` is the first basis function, the mean-zero constraint reads
/// `y₀ = 0` and is enforced by dropping the first row and column.
pub fn stability_spectrum(
    surface: &RadialSurface,
    disc: &Discretization,
    model: &MetricModel,
    k: usize,
) -> Result<SpectrumReport> {
    let frame = SurfaceFrame::physical(surface, disc, model)?;
    let tables = ModeTables::new(disc);
    let forms = weak_forms(&frame, &tables);
    spectrum_from_forms(&forms, k)
}

pub(crate) fn spectrum_from_forms(forms: &WeakForms, k: usize) -> Result<SpectrumReport> {
    let n = forms.mass.nrows();
    let chol = forms
        .mass
        .clone()
        .cholesky()
        .ok_or(SolverError::MassMatrixIndefinite)?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&forms.stiffness)
        .ok_or(SolverError::MassMatrixIndefinite)?;
    let b = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(SolverError::MassMatrixIndefinite)?;
    let reduced = b.view((1, 1), (n - 1, n - 1)).into_owned();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let k = k.min(n - 1);
    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        eigenvalues.push(eig.eigenvalues[i]);
        let mut yv = DVector::zeros(n);
        yv.rows_mut(1, n - 1).copy_from(&eig.eigenvectors.column(i));
        let c = lt
            .solve_upper_triangular(&yv)
            .ok_or(SolverError::MassMatrixIndefinite)?;
        eigenfunctions.push(c.iter().copied().collect());
    }
    Ok(SpectrumReport {
        eigenvalues,
        eigenfunctions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{index, mode_count};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(l: usize) -> (Discretization, usize) {
        (Discretization::gauss(l + 6, l).unwrap(), mode_count(l))
    }

    #[test]
    fn flat_sphere_examples() {
        let (d, n) = setup(6);
        let r = 10.0;
        let s = RadialSurface::sphere(Vector3::zeros(), r, 6);
        let flat = MetricModel::flat();
        let mut f = vec![0.0; n];
        f[index(1, 0)] = 1.0;
        let out = jacobi_apply(&s, &d, &flat, &f, false).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-14));
        let mut f = vec![0.0; n];
        f[index(2, 0)] = 1.0;
        let out = jacobi_apply(&s, &d, &flat, &f, false).unwrap();
        for (i, v) in out.iter().enumerate() {
            let expect = if i == index(2, 0) { 4.0 / (r * r) } else { 0.0 };
            assert!((v - expect).abs() < 1e-14, "{i}: {v}");
        }
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        assert!(matches!(
            jacobi_apply(&s, &d, &flat, &c, false),
            Err(SolverError::NotMeanZero(_))
        ));
    }

    #[test]
    fn flat_sphere_spectrum() {
        let (d, _) = setup(8);
        let s = RadialSurface::sphere(Vector3::zeros(), 10.0, 8);
        let rep = stability_spectrum(&s, &d, &MetricModel::flat(), 5).unwrap();
        for i in 0..3 {
            assert!(rep.eigenvalues[i].abs() < 1e-10, "{:?}", rep.eigenvalues);
        }
        assert!((rep.eigenvalues[3] - 0.04).abs() < 1e-12);
    }

    #[test]
    fn schwarzschild_lowest_eigenvalue() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let (d, _) = setup(6);
        let r = 20.0;
        let s = RadialSurface::sphere(Vector3::zeros(), r, 6);
        let rep = stability_spectrum(&s, &d, &m, 4).unwrap();
        // Translations of a centered coordinate sphere: λ = 6m / (rψ²)³.
        let psi = 1.0 + 0.5 / r;
        let expect = 6.0 / (r * psi * psi).powi(3);
        assert!(rep.eigenvalues[0] > 0.0);
        assert!(
            (rep.eigenvalues[0] - expect).abs() < 1e-9 * expect.max(1e-6),
            "{:?} {expect}",
            rep.eigenvalues
        );
        // Eigenfunctions are mean-zero and orthonormal.
        let frame = SurfaceFrame::physical(&s, &d, &m).unwrap();
        let forms = weak_forms(&frame, &ModeTables::new(&d));
        for (i, a) in rep.eigenfunctions.iter().enumerate() {
            let av = DVector::from_vec(a.clone());
            assert!(forms.integral(&av).abs() < 1e-10);
            for (j, b) in rep.eigenfunctions.iter().enumerate() {
                let bv = DVector::from_vec(b.clone());
                let ip = av.dot(&(&forms.mass * &bv));
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_is_symmetric() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let (d, n) = setup(8);
        let s = RadialSurface::ellipsoid(Vector3::new(0.5, -0.2, 0.1), [12.0, 10.0, 9.0], 8);
        let frame = SurfaceFrame::physical(&s, &d, &m).unwrap();
        let forms = weak_forms(&frame, &ModeTables::new(&d));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            f[0] = 0.0;
            h[0] = 0.0;
            let lf = DVector::from_vec(jacobi_apply(&s, &d, &m, &f, true).unwrap());
            let lh = DVector::from_vec(jacobi_apply(&s, &d, &m, &h, true).unwrap());
            let mut fv = DVector::from_vec(f);
            let mut hv = DVector::from_vec(h);
            fv[0] -= (4.0 * PI).sqrt() * forms.integral(&fv) / forms.area;
            hv[0] -= (4.0 * PI).sqrt() * forms.integral(&hv) / forms.area;
            let a = lf.dot(&(&forms.mass * &hv));
            let b = fv.dot(&(&forms.mass * &lh));
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} {b}");
        }
    }

    #[test]
    fn matches_normal_variation_of_mean_curvature() {
        // On a centered Schwarzschild sphere the normal speed is constant,
        // so a radial perturbation εf/s is a normal perturbation εf.
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let (d, n) = setup(6);
        let r = 15.0;
        let s = RadialSurface::sphere(Vector3::zeros(), r, 6);
        let frame = SurfaceFrame::physical(&s, &d, &m).unwrap();
        let speed = frame.nodes()[0].normal_speed;
        let mut f = vec![0.0; n];
        f[index(2, 1)] = 1.0;
        f[index(3, -2)] = 0.5;
        let lf = jacobi_apply(&s, &d, &m, &f, false).unwrap();
        let eps = 1e-5;
        let mut pert = s.clone();
        for (c, v) in pert.coeffs_mut().iter_mut().zip(&f) {
            *c += eps * v / speed;
        }
        let h0 = frame.mean_curvatures(crate::surface::Measure::Physical);
        let h1 = SurfaceFrame::physical(&pert, &d, &m)
            .unwrap()
            .mean_curvatures(crate::surface::Measure::Physical);
        let dh: Vec<f64> = h1.iter().zip(&h0).map(|(a, b)| (a - b) / eps).collect();
        let dh_coeffs = d.basis().analyze(&dh);
        let scale = lf.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in dh_coeffs.iter().zip(&lf) {
            assert!((a - b).abs() < 1e-4 * scale, "{a} {b}");
        }
    }
}
