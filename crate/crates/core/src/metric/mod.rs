//! Asymptotically flat metric models with analytic derivative jets.
//!
//! Every model has the form `g = δ + h` on `|x − center| ≥ inner_radius`,
//! where `h` is the isotropic Schwarzschild perturbation `((1 + m/2r)⁴ − 1)δ`
//! plus an optional list of multipole terms `P · Y(x̂) · r^p`. A model can
//! also be viewed at a blow-down scale `λ`, in which case it evaluates
//! `h^λ(x) = λ h(λx)`.

mod config;
mod curvature;
mod decay;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{MetricConfig, TermConfig};
pub(crate) use curvature::linearized_curvature;
pub use curvature::{christoffel, ricci, ricci_along, scalar_curvature, ScalarCurvature};
pub use decay::{decay_scan, DecayQuantity, DecayReport, DecayRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error(
        "point {point:?} lies inside the model core (|x - center| = {distance} < {inner_radius})"
    )]
    PointInsideCore {
        point: [f64; 3],
        distance: f64,
        inner_radius: f64,
    },
    #[error("invalid multipole term: {0}")]
    InvalidTerm(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite([f64; 3]),
    #[error("decay scan needs at least 4 radii, got {0}")]
    InsufficientSamples(usize),
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Flat,
    SchwarzschildIsotropic,
    #[serde(rename = "perturbed_af")]
    PerturbedAF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularProfile {
    Constant,
    Dipole {
        axis: Vector3<f64>,
    },
    /// `(a·x̂)(b·x̂) − (a·b)/3`.
    Quadrupole {
        axes: [Vector3<f64>; 2],
    },
}

impl AngularProfile {
    /// Parity of the angular factor under `x ↦ −x`.
    pub fn parity(&self) -> Parity {
        match self {
            AngularProfile::Dipole { .. } => Parity::Odd,
            _ => Parity::Even,
        }
    }

    fn degree(&self) -> i32 {
        match self {
            AngularProfile::Constant => 0,
            AngularProfile::Dipole { .. } => 1,
            AngularProfile::Quadrupole { .. } => 2,
        }
    }

    // Homogeneous polynomial Q(y), its gradient and Hessian.
    fn polynomial(&self, y: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        match self {
            AngularProfile::Constant => (1.0, Vector3::zeros(), Matrix3::zeros()),
            AngularProfile::Dipole { axis } => (axis.dot(y), *axis, Matrix3::zeros()),
            AngularProfile::Quadrupole { axes: [a, b] } => {
                let ab = a.dot(b);
                let (ay, by) = (a.dot(y), b.dot(y));
                let q = ay * by - ab * y.norm_squared() / 3.0;
                let grad = a * by + b * ay - y * (2.0 * ab / 3.0);
                let hess =
                    a * b.transpose() + b * a.transpose() - Matrix3::identity() * (2.0 * ab / 3.0);
                (q, grad, hess)
            }
        }
    }
}

/// One perturbation term `h_ij = P_ij · Q(x) |x|^{p − deg Q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleTerm {
    tensor_pattern: Matrix3<f64>,
    radial_exponent: f64,
    angular_profile: AngularProfile,
    parity: Parity,
}

impl MultipoleTerm {
    pub fn new(
        tensor_pattern: Matrix3<f64>,
        radial_exponent: f64,
        angular_profile: AngularProfile,
        parity: Parity,
    ) -> Result<Self> {
        if (tensor_pattern - tensor_pattern.transpose()).amax() > 1e-14 {
            return Err(MetricError::InvalidTerm(
                "tensor pattern must be symmetric".into(),
            ));
        }
        if !(radial_exponent <= -1.0) {
            return Err(MetricError::InvalidTerm(format!(
                "radial exponent {radial_exponent} must be <= -1"
            )));
        }
        if angular_profile.parity() != parity {
            return Err(MetricError::InvalidTerm(format!(
                "declared parity {parity:?} does not match the angular profile"
            )));
        }
        if parity == Parity::Odd && radial_exponent > -2.0 {
            return Err(MetricError::InvalidTerm(format!(
                "odd terms must decay at least like |x|^-2 (got exponent {radial_exponent})"
            )));
        }
        let angular_profile = match angular_profile {
            AngularProfile::Constant => AngularProfile::Constant,
            AngularProfile::Dipole { axis } => AngularProfile::Dipole {
                axis: normalized(axis)?,
            },
            AngularProfile::Quadrupole { axes: [a, b] } => AngularProfile::Quadrupole {
                axes: [normalized(a)?, normalized(b)?],
            },
        };
        Ok(Self {
            tensor_pattern,
            radial_exponent,
            angular_profile,
            parity,
        })
    }

    pub fn tensor_pattern(&self) -> &Matrix3<f64> {
        &self.tensor_pattern
    }

    pub fn radial_exponent(&self) -> f64 {
        self.radial_exponent
    }

    pub fn angular_profile(&self) -> &AngularProfile {
        &self.angular_profile
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    // Scalar factor φ(y) with gradient and Hessian.
    fn scalar_jet(&self, y: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let q_exp = self.radial_exponent - self.angular_profile.degree() as f64;
        let (poly, grad_p, hess_p) = self.angular_profile.polynomial(y);
        let r2 = y.norm_squared();
        let r = r2.sqrt();
        let rq = r.powf(q_exp);
        let rq2 = rq / r2;
        let value = poly * rq;
        let grad = grad_p * rq + y * (q_exp * poly * rq2);
        let yy = y * y.transpose();
        let hess = hess_p * rq
            + (grad_p * y.transpose() + y * grad_p.transpose()) * (q_exp * rq2)
            + Matrix3::identity() * (q_exp * poly * rq2)
            + yy * (q_exp * (q_exp - 2.0) * poly * rq2 / r2);
        (value, grad, hess)
    }
}

fn normalized(v: Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(MetricError::InvalidTerm(
            "axis vectors must be nonzero".into(),
        ));
    }
    Ok(v / n)
}

/// Metric, first and second coordinate derivatives at one point.
/// `dg[k]` is `∂_k g`, `d2g[l][k]` is `∂_l ∂_k g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub g: Matrix3<f64>,
    pub dg: [Matrix3<f64>; 3],
    pub d2g: [[Matrix3<f64>; 3]; 3],
    pub position: Vector3<f64>,
}

impl MetricJet {
    fn flat(position: Vector3<f64>) -> Self {
        Self {
            g: Matrix3::identity(),
            dg: [Matrix3::zeros(); 3],
            d2g: [[Matrix3::zeros(); 3]; 3],
            position,
        }
    }

    /// The perturbation `h = g − δ`.
    pub fn h(&self) -> Matrix3<f64> {
        self.g - Matrix3::identity()
    }

    /// Frobenius norm of `∂h` over all 27 components.
    pub fn dh_norm(&self) -> f64 {
        self.dg.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn d2h_norm(&self) -> f64 {
        self.d2g
            .iter()
            .flat_map(|row| row.iter())
            .map(|m| m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// Even/odd split of `h` at a point, `f(x) ± f(−x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityPair {
    pub even_part: Matrix3<f64>,
    pub odd_part: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricModel {
    kind: MetricKind,
    mass_parameter: f64,
    perturbation_terms: Vec<MultipoleTerm>,
    inner_radius: f64,
    center: Vector3<f64>,
    scale: f64,
}

impl MetricModel {
    pub fn flat() -> Self {
        Self {
            kind: MetricKind::Flat,
            mass_parameter: 0.0,
            perturbation_terms: Vec::new(),
            inner_radius: 1.0,
            center: Vector3::zeros(),
            scale: 1.0,
        }
    }

    /// Isotropic Schwarzschild with the default core `max(1, m)`.
    pub fn schwarzschild(mass: f64) -> Result<Self> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(MetricError::InvalidModel(format!(
                "mass {mass} must be >= 0"
            )));
        }
        Ok(Self {
            kind: MetricKind::SchwarzschildIsotropic,
            mass_parameter: mass,
            perturbation_terms: Vec::new(),
            inner_radius: mass.max(1.0),
            center: Vector3::zeros(),
            scale: 1.0,
        })
    }

    /// Schwarzschild background of mass `mass` (possibly zero) plus terms.
    pub fn perturbed(mass: f64, terms: Vec<MultipoleTerm>) -> Result<Self> {
        let mut model = Self::schwarzschild(mass)?;
        model.kind = MetricKind::PerturbedAF;
        model.perturbation_terms = terms;
        Ok(model)
    }

    /// Same model with `h` evaluated at `x − center`.
    pub fn translated(mut self, center: Vector3<f64>) -> Self {
        self.center += center;
        self
    }

    pub fn with_inner_radius(mut self, inner_radius: f64) -> Result<Self> {
        if !(inner_radius > 0.0) {
            return Err(MetricError::InvalidModel(format!(
                "inner radius {inner_radius} must be positive"
            )));
        }
        if self.kind != MetricKind::Flat && inner_radius <= 0.5 * self.mass_parameter {
            return Err(MetricError::InvalidModel(format!(
                "inner radius {inner_radius} must exceed m/2 = {}",
                0.5 * self.mass_parameter
            )));
        }
        self.inner_radius = inner_radius;
        Ok(self)
    }

    /// Blow-down view `h^r(x) = r h(rx)`. Composes with earlier rescalings.
    pub fn rescaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(MetricError::InvalidModel(format!(
                "scale {r} must be positive"
            )));
        }
        let mut out = self.clone();
        out.scale *= r;
        Ok(out)
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn mass_parameter(&self) -> f64 {
        self.mass_parameter
    }

    pub fn perturbation_terms(&self) -> &[MultipoleTerm] {
        &self.perturbation_terms
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn center(&self) -> Vector3<f64> {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// True when `h` vanishes identically.
    pub fn is_flat(&self) -> bool {
        match self.kind {
            MetricKind::Flat => true,
            MetricKind::SchwarzschildIsotropic => self.mass_parameter == 0.0,
            MetricKind::PerturbedAF => {
                self.mass_parameter == 0.0
                    && self
                        .perturbation_terms
                        .iter()
                        .all(|t| t.tensor_pattern.amax() == 0.0)
            }
        }
    }

    /// Core radius in the coordinates this model is queried in.
    pub fn validity_radius(&self) -> f64 {
        self.inner_radius / self.scale
    }

    /// Core center in the coordinates this model is queried in.
    pub fn core_center(&self) -> Vector3<f64> {
        self.center / self.scale
    }

    /// Whether `x` lies in the region where the model is defined.
    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        self.kind == MetricKind::Flat || (x * self.scale - self.center).norm() >= self.inner_radius
    }

    fn check_point(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let y = x * self.scale - self.center;
        if self.kind != MetricKind::Flat && y.norm() < self.inner_radius {
            return Err(MetricError::PointInsideCore {
                point: [x.x, x.y, x.z],
                distance: y.norm(),
                inner_radius: self.inner_radius,
            });
        }
        Ok(y)
    }

    /// Analytic jet of `g` at `x`.
    pub fn eval_metric_jet(&self, x: &Vector3<f64>) -> Result<MetricJet> {
        let y = self.check_point(x)?;
        if self.kind == MetricKind::Flat {
            return Ok(MetricJet::flat(*x));
        }
        let (h, dh, d2h) = self.base_perturbation(&y);
        let s = self.scale;
        let mut jet = MetricJet::flat(*x);
        jet.g += h * s;
        for k in 0..3 {
            jet.dg[k] = dh[k] * (s * s);
            for l in 0..3 {
                jet.d2g[l][k] = d2h[l][k] * (s * s * s);
            }
        }
        Ok(jet)
    }

    /// `g` only.
    pub fn eval_metric(&self, x: &Vector3<f64>) -> Result<Matrix3<f64>> {
        let y = self.check_point(x)?;
        if self.kind == MetricKind::Flat {
            return Ok(Matrix3::identity());
        }
        Ok(Matrix3::identity() + self.base_value(&y) * self.scale)
    }

    fn base_value(&self, y: &Vector3<f64>) -> Matrix3<f64> {
        let mut h = Matrix3::zeros();
        if self.mass_parameter > 0.0 {
            let psi = 1.0 + 0.5 * self.mass_parameter / y.norm();
            h += Matrix3::identity() * (psi.powi(4) - 1.0);
        }
        for t in &self.perturbation_terms {
            let q_exp = t.radial_exponent - t.angular_profile.degree() as f64;
            let (poly, _, _) = t.angular_profile.polynomial(y);
            h += t.tensor_pattern * (poly * y.norm().powf(q_exp));
        }
        h
    }

    #[allow(clippy::type_complexity)]
    fn base_perturbation(
        &self,
        y: &Vector3<f64>,
    ) -> (Matrix3<f64>, [Matrix3<f64>; 3], [[Matrix3<f64>; 3]; 3]) {
        let mut h = Matrix3::zeros();
        let mut dh = [Matrix3::zeros(); 3];
        let mut d2h = [[Matrix3::zeros(); 3]; 3];
        let mut add_scalar =
            |pattern: &Matrix3<f64>, v: f64, grad: Vector3<f64>, hess: Matrix3<f64>| {
                h += pattern * v;
                for k in 0..3 {
                    dh[k] += pattern * grad[k];
                    for l in 0..3 {
                        d2h[l][k] += pattern * hess[(l, k)];
                    }
                }
            };
        if self.mass_parameter > 0.0 {
            let (u, grad, hess) = conformal_factor_jet(self.mass_parameter, y);
            add_scalar(&Matrix3::identity(), u - 1.0, grad, hess);
        }
        for t in &self.perturbation_terms {
            let (v, grad, hess) = t.scalar_jet(y);
            add_scalar(&t.tensor_pattern, v, grad, hess);
        }
        (h, dh, d2h)
    }

    /// Central-difference jet, step `eta·|x|`. Oracle for the analytic jet.
    pub fn finite_difference_jet(&self, x: &Vector3<f64>, eta: f64) -> Result<MetricJet> {
        self.check_point(x)?;
        let step = eta * x.norm().max(1.0);
        let mut jet = MetricJet::flat(*x);
        jet.g = self.eval_metric(x)?;
        for k in 0..3 {
            let e = Vector3::ith(k, step);
            let gp = self.eval_metric(&(x + e))?;
            let gm = self.eval_metric(&(x - e))?;
            jet.dg[k] = (gp - gm) / (2.0 * step);
        }
        for l in 0..3 {
            let e = Vector3::ith(l, step);
            let jp = self.eval_metric_jet(&(x + e))?;
            let jm = self.eval_metric_jet(&(x - e))?;
            for k in 0..3 {
                jet.d2g[l][k] = (jp.dg[k] - jm.dg[k]) / (2.0 * step);
            }
        }
        Ok(jet)
    }

    /// `h(x) ± h(−x)`.
    pub fn parity_decompose(&self, x: &Vector3<f64>) -> Result<ParityPair> {
        let hp = self.eval_metric(x)? - Matrix3::identity();
        let hm = self.eval_metric(&(-x))? - Matrix3::identity();
        Ok(ParityPair {
            even_part: hp + hm,
            odd_part: hp - hm,
        })
    }
}

/// `u = ψ⁴` with `ψ = 1 + m/2r`, its gradient and Hessian at `y`.
fn conformal_factor_jet(mass: f64, y: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let r = y.norm();
    let psi = 1.0 + 0.5 * mass / r;
    let dpsi = -0.5 * mass / (r * r);
    let d2psi = mass / (r * r * r);
    let u = psi.powi(4);
    let du = 4.0 * psi.powi(3) * dpsi;
    let d2u = 12.0 * psi * psi * dpsi * dpsi + 4.0 * psi.powi(3) * d2psi;
    let yhat = y / r;
    let grad = yhat * du;
    let proj = yhat * yhat.transpose();
    let hess = proj * d2u + (Matrix3::identity() - proj) * (du / r);
    (u, grad, hess)
}
