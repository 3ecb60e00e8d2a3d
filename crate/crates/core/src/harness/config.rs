use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{invalid, Result};
use crate::metric::{MetricConfig, MetricKind, MetricModel};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Mass,
    CenterOfMass,
    Foliate,
    Stability,
    QtScan,
    Blowdown,
    Certificates,
    UniquenessProbe,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Mass => "mass",
            ExperimentKind::CenterOfMass => "center_of_mass",
            ExperimentKind::Foliate => "foliate",
            ExperimentKind::Stability => "stability",
            ExperimentKind::QtScan => "qt_scan",
            ExperimentKind::Blowdown => "blowdown",
            ExperimentKind::Certificates => "certificates",
            ExperimentKind::UniquenessProbe => "uniqueness_probe",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Gauss rings for flux integrals, or rings of the pole-refined grid
    /// for off-center spheres.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_colat: Option<usize>,
}

/// Numeric parameters shared by the experiments. Empty lists select the
/// experiment's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub radii: Vec<f64>,
    pub h_list: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub s: f64,
    /// Log-width `L` of the annuli.
    #[serde(rename = "L")]
    pub log_width: f64,
    pub b: [f64; 3],
    /// Distance from the origin to the nearest point of the off-center spheres.
    pub near_distance: f64,
    pub seed: u64,
    pub trials: usize,
    /// Relative size of random perturbations in the uniqueness probe.
    pub perturbation: f64,
    /// Window radius for plane fits after blowing down by `1/r₀`.
    pub window: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            radii: Vec::new(),
            h_list: Vec::new(),
            k: 10.0,
            s: 0.1,
            log_width: 1.0,
            b: [-1.0, 0.0, 0.0],
            near_distance: 10.0,
            seed: 0,
            trials: 20,
            perturbation: 0.05,
            window: 5.0,
        }
    }
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    pub n_colat: Option<usize>,
    pub l_max: Option<usize>,
}

/// Experiment description read from TOML.
///
/// ```toml
/// experiment = "mass"
/// output_dir = "out/mass"
///
/// [metric]
/// kind = "schwarzschild_isotropic"
/// mass = 1.0
///
/// [solver]
/// l_max = 12
///
/// [grid]
/// n_colat = 64
///
/// [params]
/// radii = [100.0, 200.0, 400.0, 800.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub metric: MetricConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn positive_list(path: &str, v: &[f64]) -> Result<()> {
    if let Some((i, x)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !(**x > 0.0 && x.is_finite()))
    {
        return Err(invalid(
            &format!("{path}[{i}]"),
            format!("{x} must be positive"),
        ));
    }
    Ok(())
}

fn positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(path, format!("{v} must be positive")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| invalid("", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(kind) = o.experiment {
            if let Some(own) = self.experiment {
                if own != kind {
                    return Err(invalid(
                        "experiment",
                        format!(
                            "config declares `{}` but `{}` was requested",
                            own.name(),
                            kind.name()
                        ),
                    ));
                }
            }
            self.experiment = Some(kind);
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
        if let Some(n) = o.n_colat {
            self.grid.n_colat = Some(n);
        }
        if let Some(l) = o.l_max {
            self.solver.l_max = l;
        }
        Ok(())
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .ok_or_else(|| invalid("experiment", "no experiment selected"))
    }

    /// Check every numeric parameter and build the metric.
    pub fn validate(&self) -> Result<MetricModel> {
        self.kind()?;
        let p = &self.params;
        positive_list("params.radii", &p.radii)?;
        positive_list("params.h_list", &p.h_list)?;
        positive("params.K", p.k)?;
        positive("params.s", p.s)?;
        positive("params.L", p.log_width)?;
        positive("params.near_distance", p.near_distance)?;
        positive("params.perturbation", p.perturbation)?;
        positive("params.window", p.window)?;
        if p.b.iter().map(|x| x * x).sum::<f64>().sqrt() == 0.0
            || p.b.iter().any(|x| !x.is_finite())
        {
            return Err(invalid("params.b", "direction must be a nonzero vector"));
        }
        if p.trials < 2 {
            return Err(invalid("params.trials", "need at least two trials"));
        }
        if let Some(n) = self.grid.n_colat {
            if n < 2 {
                return Err(invalid("grid.n_colat", "need at least two rings"));
            }
        }
        self.solver
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        if let Some(n) = self.solver.n_colat {
            if n <= self.solver.l_max {
                return Err(invalid("solver.n_colat", "must exceed solver.l_max"));
            }
        }
        self.metric
            .build()
            .map_err(|e| invalid("metric", e.to_string()))
    }

    /// Mass of the model when it is known in closed form.
    pub(crate) fn exact_mass(&self) -> Option<f64> {
        match self.metric.kind {
            MetricKind::Flat => Some(0.0),
            _ if self.metric.terms.is_empty() => Some(self.metric.mass),
            _ => None,
        }
    }

    /// True when the model is rotationally symmetric about the origin.
    pub(crate) fn is_round(&self) -> bool {
        match self.metric.kind {
            MetricKind::Flat => true,
            _ => {
                self.metric.terms.is_empty()
                    && self
                        .metric
                        .center
                        .is_none_or(|c| c.iter().all(|x| *x == 0.0))
            }
        }
    }
}
