use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{AngularProfile, MetricError, MetricKind, MetricModel, MultipoleTerm, Parity, Result};

/// Structured-text description of a metric model.
///
/// ```toml
/// kind = "perturbed_af"
/// mass = 1.0
/// inner_radius = 2.0          # optional, defaults to max(1, mass)
/// center = [0.0, 0.0, 0.0]    # optional translation of the model
///
/// [[terms]]
/// pattern = [[0.1, 0.0, 0.0], [0.0, -0.1, 0.0], [0.0, 0.0, 0.0]]
/// exponent = -1.0
/// profile = "quadrupole"
/// axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
/// parity = "even"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: MetricKind,
    #[serde(default)]
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub pattern: [[f64; 3]; 3],
    pub exponent: f64,
    pub profile: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<[[f64; 3]; 2]>,
    pub parity: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Constant,
    Dipole,
    Quadrupole,
}

impl TermConfig {
    pub fn build(&self) -> Result<MultipoleTerm> {
        let p = &self.pattern;
        let pattern = Matrix3::new(
            p[0][0], p[0][1], p[0][2], p[1][0], p[1][1], p[1][2], p[2][0], p[2][1], p[2][2],
        );
        let profile = match self.profile {
            ProfileKind::Constant => AngularProfile::Constant,
            ProfileKind::Dipole => {
                let a = self
                    .axis
                    .ok_or_else(|| MetricError::InvalidTerm("dipole term needs `axis`".into()))?;
                AngularProfile::Dipole {
                    axis: Vector3::from(a),
                }
            }
            ProfileKind::Quadrupole => {
                let [a, b] = self.axes.ok_or_else(|| {
                    MetricError::InvalidTerm("quadrupole term needs `axes`".into())
                })?;
                AngularProfile::Quadrupole {
                    axes: [Vector3::from(a), Vector3::from(b)],
                }
            }
        };
        MultipoleTerm::new(pattern, self.exponent, profile, self.parity)
    }
}

impl MetricConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn build(&self) -> Result<MetricModel> {
        let mut model = match self.kind {
            MetricKind::Flat => {
                if self.mass != 0.0 || !self.terms.is_empty() {
                    return Err(MetricError::InvalidModel(
                        "flat metric takes no mass or terms".into(),
                    ));
                }
                MetricModel::flat()
            }
            MetricKind::SchwarzschildIsotropic => {
                if !self.terms.is_empty() {
                    return Err(MetricError::InvalidModel(
                        "schwarzschild_isotropic takes no perturbation terms".into(),
                    ));
                }
                MetricModel::schwarzschild(self.mass)?
            }
            MetricKind::PerturbedAF => {
                let terms = self
                    .terms
                    .iter()
                    .map(TermConfig::build)
                    .collect::<Result<Vec<_>>>()?;
                MetricModel::perturbed(self.mass, terms)?
            }
        };
        if let Some(r) = self.inner_radius {
            model = model.with_inner_radius(r)?;
        }
        if let Some(c) = self.center {
            model = model.translated(Vector3::from(c));
        }
        Ok(model)
    }
}
