//! Newton continuation for constant mean curvature spheres and the
//! stability spectrum of the Jacobi operator.

mod foliation;
pub mod galerkin;
mod jacobi;
mod newton;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::MetricModel;
use crate::surface::{Discretization, Measure, RadialSurface, SurfaceError, SurfaceFrame};

pub use foliation::{continue_foliation, FoliationEntry, FoliationRecord};
pub use jacobi::{jacobi_apply, stability_spectrum, weak_forms, SpectrumReport, WeakForms};
pub use newton::{solve_cmc, CmcSolution};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (sup residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian is numerically singular (relative pivot {pivot:e})")]
    JacobianSingular { pivot: f64 },
    #[error("surface left the metric's validity region: {0}")]
    LeftValidityRegion(String),
    #[error("function is not mean-zero (|∫f dμ| / (‖f‖·|Σ|^½) = {0:e})")]
    NotMeanZero(f64),
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("mass matrix is not positive definite")]
    MassMatrixIndefinite,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    AnalyticJacobi,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Sup-norm tolerance on `H_g − H_target`.
    pub tol_residual: f64,
    /// Tolerance on the final Newton step, relative to the mean radius.
    pub tol_step: f64,
    pub max_newton_iters: usize,
    /// Initial step fraction; backtracking halves it further when needed.
    pub damping: f64,
    pub l_max: usize,
    /// Gauss rings; `None` picks `⌈3(L+1)/2⌉ + 2`.
    pub n_colat: Option<usize>,
    pub jacobian_mode: JacobianMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            tol_step: 1e-10,
            max_newton_iters: 30,
            damping: 1.0,
            l_max: 12,
            n_colat: None,
            jacobian_mode: JacobianMode::AnalyticJacobi,
        }
    }
}

impl SolverOptions {
    pub fn with_l_max(l_max: usize) -> Self {
        Self {
            l_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) || !(self.tol_step > 0.0) {
            return Err(SolverError::InvalidInput(
                "tolerances must be positive".into(),
            ));
        }
        if self.l_max < 2 {
            return Err(SolverError::InvalidInput("l_max must be at least 2".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::InvalidInput(
                "damping must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn grid_rings(&self) -> usize {
        self.n_colat
            .unwrap_or((3 * (self.l_max + 1)).div_ceil(2) + 2)
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Ok(Discretization::gauss(self.grid_rings(), self.l_max)?)
    }
}

/// `H_g − H_target` at every node.
pub fn mean_curvature_residual(
    surface: &RadialSurface,
    disc: &Discretization,
    model: &MetricModel,
    h_target: f64,
) -> Result<Vec<f64>> {
    let frame = SurfaceFrame::physical(surface, disc, model)?;
    Ok(frame
        .mean_curvatures(Measure::Physical)
        .into_iter()
        .map(|h| h - h_target)
        .collect())
}

/// Unit vectors along which the `l = 1` harmonics `Y_{1,1}, Y_{1,-1}, Y_{1,0}`
/// are proportional to the coordinates.
pub(crate) fn l1_axis(m: i64) -> Vector3<f64> {
    match m {
        1 => Vector3::x(),
        -1 => Vector3::y(),
        _ => Vector3::z(),
    }
}
