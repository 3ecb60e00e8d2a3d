use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::{MetricError, MetricModel, Result};

/// Relative slack allowed above a declared decay exponent.
pub const DECAY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayQuantity {
    H,
    Dh,
    D2h,
    Odd,
}

impl DecayQuantity {
    /// Exponent required of an asymptotically flat, RT-parity model.
    pub fn declared_exponent(self) -> f64 {
        match self {
            DecayQuantity::H => -1.0,
            DecayQuantity::Dh => -2.0,
            DecayQuantity::D2h => -3.0,
            DecayQuantity::Odd => -2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub direction: usize,
    #[serde(skip)]
    pub direction_vector: Vector3<f64>,
    pub quantity: DecayQuantity,
    /// `None` when the quantity vanishes (exponent not applicable).
    pub fitted_exponent: Option<f64>,
    /// Largest deviation of `log|q|` from the fitted line.
    pub max_residual: Option<f64>,
    #[serde(skip)]
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    pub fn violations(&self) -> impl Iterator<Item = &DecayRow> {
        self.rows.iter().filter(|r| r.violation)
    }

    pub fn row(&self, direction: usize, quantity: DecayQuantity) -> Option<&DecayRow> {
        self.rows
            .iter()
            .find(|r| r.direction == direction && r.quantity == quantity)
    }

    /// CSV with columns `direction,quantity,fitted_exponent,max_residual`;
    /// inapplicable exponents are left empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf8 csv")
    }
}

/// Log-log slope of `magnitudes` against `radii`, with max residual.
fn fit_power_law(radii: &[f64], magnitudes: &[f64]) -> Option<(f64, f64)> {
    if magnitudes.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return None;
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).abs())
        .fold(0.0, f64::max);
    Some((slope, resid))
}

/// Regress the decay of `|h|`, `|∂h|`, `|∂²h|` and the odd part along each
/// direction and flag exponents above the declared orders.
pub fn decay_scan(
    model: &MetricModel,
    radii: &[f64],
    directions: &[Vector3<f64>],
) -> Result<DecayReport> {
    if radii.len() < 4 {
        return Err(MetricError::InsufficientSamples(radii.len()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(MetricError::InvalidModel(
            "radii must be positive and increasing".into(),
        ));
    }
    let mut report = DecayReport::default();
    for (di, dir) in directions.iter().enumerate() {
        let u = dir.normalize();
        let mut mags = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for &r in radii {
            let x = u * r;
            let jet = model.eval_metric_jet(&x)?;
            mags[0].push(jet.h().norm());
            mags[1].push(jet.dh_norm());
            mags[2].push(jet.d2h_norm());
            let hm = model.eval_metric(&(-x))? - Matrix3::identity();
            mags[3].push((jet.h() - hm).norm());
        }
        let quantities = [
            DecayQuantity::H,
            DecayQuantity::Dh,
            DecayQuantity::D2h,
            DecayQuantity::Odd,
        ];
        for (q, m) in quantities.into_iter().zip(mags.iter()) {
            let fit = fit_power_law(radii, m);
            let violation = fit
                .map(|(e, _)| e > q.declared_exponent() + DECAY_TOLERANCE)
                .unwrap_or(false);
            report.rows.push(DecayRow {
                direction: di,
                direction_vector: u,
                quantity: q,
                fitted_exponent: fit.map(|f| f.0),
                max_residual: fit.map(|f| f.1),
                violation,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{AngularProfile, MultipoleTerm, Parity};

    fn radii() -> Vec<f64> {
        vec![50.0, 100.0, 200.0, 400.0, 800.0]
    }

    fn dirs() -> Vec<Vector3<f64>> {
        vec![
            Vector3::x(),
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(0.0, -0.3, 1.0),
        ]
    }

    #[test]
    fn schwarzschild_decays_like_one_over_r() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let rep = decay_scan(&m, &radii(), &dirs()).unwrap();
        for d in 0..3 {
            let e = rep
                .row(d, DecayQuantity::H)
                .unwrap()
                .fitted_exponent
                .unwrap();
            assert!((e + 1.0).abs() < 0.02, "{e}");
            let e = rep
                .row(d, DecayQuantity::D2h)
                .unwrap()
                .fitted_exponent
                .unwrap();
            assert!((e + 3.0).abs() < 0.02, "{e}");
            assert!(rep
                .row(d, DecayQuantity::Odd)
                .unwrap()
                .fitted_exponent
                .is_none());
        }
        assert_eq!(rep.violations().count(), 0);
    }

    #[test]
    fn flat_is_not_applicable() {
        let rep = decay_scan(&MetricModel::flat(), &radii(), &dirs()).unwrap();
        assert!(rep
            .rows
            .iter()
            .all(|r| r.fitted_exponent.is_none() && !r.violation));
        let csv = rep.to_csv();
        assert!(csv.starts_with("direction,quantity,fitted_exponent,max_residual\n"));
        assert!(csv.contains("0,h,,\n"));
    }

    #[test]
    fn odd_dipole_exponent() {
        let t = MultipoleTerm::new(
            Matrix3::identity(),
            -2.0,
            AngularProfile::Dipole { axis: Vector3::x() },
            Parity::Odd,
        )
        .unwrap();
        let m = MetricModel::perturbed(1.0, vec![t]).unwrap();
        let rep = decay_scan(&m, &radii(), &[Vector3::new(1.0, 0.5, 0.0)]).unwrap();
        let e = rep
            .row(0, DecayQuantity::Odd)
            .unwrap()
            .fitted_exponent
            .unwrap();
        assert!(e <= -2.0 + 1e-9, "{e}");
        assert_eq!(rep.violations().count(), 0);
    }

    #[test]
    fn needs_four_radii() {
        let err = decay_scan(&MetricModel::flat(), &[1.0, 2.0, 3.0], &dirs());
        assert_eq!(err, Err(MetricError::InsufficientSamples(3)));
    }

    #[test]
    fn rescaling_keeps_exponent() {
        let m = MetricModel::schwarzschild(1.0).unwrap();
        let a = decay_scan(&m, &radii(), &dirs()).unwrap();
        let b = decay_scan(&m.rescaled(10.0).unwrap(), &radii(), &dirs()).unwrap();
        let ea = a.row(0, DecayQuantity::H).unwrap().fitted_exponent.unwrap();
        let eb = b.row(0, DecayQuantity::H).unwrap().fitted_exponent.unwrap();
        assert!((ea - eb).abs() < 0.01);
    }
}
