use nalgebra::Vector3;
use serde::Serialize;

use super::jacobi::stability_spectrum;
use super::{solve_cmc, Result, SolverError, SolverOptions};
use crate::metric::MetricModel;
use crate::surface::{radii, RadialSurface};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoliationEntry {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(skip)]
    pub surface: RadialSurface,
    pub r0: f64,
    pub r1: f64,
    pub center: [f64; 3],
    pub lowest_meanzero_eigenvalue: f64,
    /// The lowest few mean-zero eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub newton_iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FoliationRecord {
    pub entries: Vec<FoliationEntry>,
    /// Why the record stops early, if it does.
    pub failure: Option<String>,
}

impl FoliationRecord {
    /// CSV with columns `H,r0,r1,cx,cy,cz,lambda1,iters,residual`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "H", "r0", "r1", "cx", "cy", "cz", "lambda1", "iters", "residual",
        ])
        .expect("in-memory csv write");
        for e in &self.entries {
            w.write_record(&[
                e.h.to_string(),
                e.r0.to_string(),
                e.r1.to_string(),
                e.center[0].to_string(),
                e.center[1].to_string(),
                e.center[2].to_string(),
                e.lowest_meanzero_eigenvalue.to_string(),
                e.newton_iters.to_string(),
                e.residual.to_string(),
            ])
            .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf8 csv")
    }
}

/// Number of mean-zero eigenvalues kept per leaf.
pub const LEAF_EIGENVALUES: usize = 4;

/// Solve a decreasing sequence of leaves, each started from the previous
/// one scaled about its center by `H_k / H_{k+1}`. The record stops at the
/// first failed leaf and keeps the reason.
pub fn continue_foliation(
    model: &MetricModel,
    h_list: &[f64],
    opts: &SolverOptions,
) -> Result<FoliationRecord> {
    if h_list.is_empty() || h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(SolverError::InvalidInput(
            "H values must be positive".into(),
        ));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SolverError::InvalidInput(
            "H values must be strictly decreasing".into(),
        ));
    }
    let r_start = 2.0 / h_list[0];
    if r_start <= model.validity_radius() + model.core_center().norm() {
        return Err(SolverError::InvalidInput(format!(
            "first leaf radius {r_start} does not clear the core"
        )));
    }
    let disc = opts.discretization()?;
    let mut record = FoliationRecord::default();
    let mut init = RadialSurface::sphere(Vector3::zeros(), r_start, opts.l_max);
    for (k, &h) in h_list.iter().enumerate() {
        if k > 0 {
            init = init.scaled_about_center(h_list[k - 1] / h);
        }
        let sol = match solve_cmc(model, h, &init, opts) {
            Ok(s) => s,
            Err(e) => {
                record.failure = Some(format!("H = {h}: {e}"));
                break;
            }
        };
        let spectrum = match stability_spectrum(&sol.surface, &disc, model, LEAF_EIGENVALUES) {
            Ok(s) => s,
            Err(e) => {
                record.failure = Some(format!("H = {h}: spectrum: {e}"));
                break;
            }
        };
        let (r0, r1) = radii(&sol.surface);
        let c = sol.surface.center();
        record.entries.push(FoliationEntry {
            h,
            surface: sol.surface.clone(),
            r0,
            r1,
            center: [c.x, c.y, c.z],
            lowest_meanzero_eigenvalue: spectrum.eigenvalues[0],
            eigenvalues: spectrum.eigenvalues,
            newton_iters: sol.iterations,
            residual: sol.sup_residual,
        });
        init = sol.surface;
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_foliation_is_round() {
        let rec = continue_foliation(
            &MetricModel::flat(),
            &[0.2, 0.1, 0.05],
            &SolverOptions::with_l_max(4),
        )
        .unwrap();
        assert!(rec.failure.is_none());
        for (e, r) in rec.entries.iter().zip([10.0, 20.0, 40.0]) {
            assert!((e.r0 - r).abs() < 1e-9 && (e.r1 - r).abs() < 1e-9);
            for l in &e.eigenvalues[..3] {
                assert!(l.abs() < 1e-9);
            }
        }
        let csv = rec.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("H,r0,r1,cx,cy,cz,lambda1,iters,residual\n"));
    }

    #[test]
    fn rejects_bad_h_lists() {
        let o = SolverOptions::with_l_max(4);
        let m = MetricModel::schwarzschild(1.0).unwrap();
        assert!(continue_foliation(&m, &[0.1, 0.2], &o).is_err());
        assert!(continue_foliation(&m, &[3.0], &o).is_err());
    }
}
