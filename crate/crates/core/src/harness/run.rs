use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Check, Relation, Report, StageRecord, Table};
use super::Result;
use crate::blowdown::{
    annulus_schedule, gauss_map_energy, plane_fit, rescale_surface, sphere_fit, tension_scan,
    FitParameters,
};
use crate::functionals::{
    adm_mass_with, center_of_mass, curvature_certificates, mass_flux_on_sphere, mass_tail,
    qt_decomposition, qt_integral,
};
use crate::metric::MetricModel;
use crate::solver::{continue_foliation, solve_cmc, FoliationRecord, SolverOptions};
use crate::sphere::index;
use crate::surface::{radii, sup_distance, Discretization, Measure, RadialSurface, SurfaceFrame};

type StageResult<T> = std::result::Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Runner<'a> {
    report: Report,
    out: Option<PathBuf>,
    cfg: &'a ExperimentConfig,
    model: MetricModel,
    table_error: Option<super::HarnessError>,
}

impl Runner<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> StageResult<T>) -> Option<T> {
        let start = Instant::now();
        let result = f(self);
        self.report
            .timings
            .push((name.to_string(), start.elapsed().as_secs_f64()));
        let (ok, error, value) = match result {
            Ok(v) => (true, None, Some(v)),
            Err(e) => (false, Some(e), None),
        };
        self.report.stages.push(StageRecord {
            name: name.to_string(),
            ok,
            error,
        });
        value
    }

    /// Record a table and write its CSV right away.
    fn table(&mut self, t: Table) {
        if let Some(dir) = &self.out {
            if let Err(e) = t.write_csv(&dir.join(format!("{}.csv", t.name))) {
                self.table_error.get_or_insert(e);
            }
        }
        self.report.tables.push(t);
    }

    fn check(&mut self, name: &str, value: f64, relation: Relation, bound: f64) {
        self.report
            .checks
            .push(Check::new(name, value, relation, bound));
    }

    fn summary(&mut self, key: &str, value: f64) {
        self.report.summary.insert(key.to_string(), value);
    }

    fn note(&mut self, text: String) {
        self.report.notes.push(text);
    }

    fn opts(&self) -> SolverOptions {
        self.cfg.solver.clone()
    }
}

fn or_default(list: &[f64], default: &[f64]) -> Vec<f64> {
    if list.is_empty() {
        default.to_vec()
    } else {
        list.to_vec()
    }
}

/// `n` log-spaced values from `hi` down to `lo`.
fn log_spaced(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| hi * (lo / hi).powf(k as f64 / (n - 1) as f64))
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Number of consecutive pairs where `v` fails to decrease strictly.
fn increases(v: &[f64]) -> usize {
    v.windows(2).filter(|w| !(w[1] < w[0])).count()
}

/// Max over min with the minimum floored at `floor`.
fn spread(v: &[f64], floor: f64) -> f64 {
    let max = v.iter().cloned().fold(0.0, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min.max(floor)
}

/// Run one experiment; with an output directory, tables are written as
/// their stages finish and the report last.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let model = cfg.validate()?;
    let kind = cfg.kind()?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    // Where results go is not part of the run, so reports from different
    // output directories stay byte-identical.
    let echoed = ExperimentConfig {
        output_dir: None,
        ..cfg.clone()
    };
    let mut r = Runner {
        report: Report::new(kind, echoed),
        out: cfg.output_dir.clone(),
        cfg,
        model,
        table_error: None,
    };
    match kind {
        ExperimentKind::Mass => mass(&mut r),
        ExperimentKind::CenterOfMass => center(&mut r),
        ExperimentKind::Foliate => {
            if let Some(rec) = foliation(&mut r, &log_spaced(0.1, 1e-3, 12)) {
                leaf_shape_checks(&mut r, &rec);
            }
        }
        ExperimentKind::Stability => {
            if let Some(rec) = foliation(&mut r, &log_spaced(0.1, 1e-3, 12)) {
                leaf_shape_checks(&mut r, &rec);
                spectrum_checks(&mut r, &rec);
            }
        }
        ExperimentKind::Certificates => {
            if let Some(rec) = foliation(&mut r, &log_spaced(0.1, 1e-3, 12)) {
                certificates(&mut r, &rec);
            }
        }
        ExperimentKind::QtScan => {
            let largest = qt_scan(&mut r);
            if let Some(surface) = largest {
                energy(&mut r, &surface, true);
            }
        }
        ExperimentKind::Blowdown => blowdown(&mut r),
        ExperimentKind::UniquenessProbe => uniqueness(&mut r),
    }
    if let Some(e) = r.table_error.take() {
        return Err(e);
    }
    let mut report = r.report;
    report.finish();
    if let Some(dir) = &cfg.output_dir {
        report.write_json(dir)?;
    }
    Ok(report)
}

fn mass(r: &mut Runner) {
    let radii = or_default(&r.cfg.params.radii, &[100.0, 200.0, 400.0, 800.0]);
    let n = r.cfg.grid.n_colat.unwrap_or(64);
    let exact = r.cfg.exact_mass();
    for (stage, measure, suffix) in [
        ("adm_mass", Measure::Physical, ""),
        ("adm_mass_euclidean", Measure::Euclidean, "_euclidean"),
    ] {
        let model = r.model.clone();
        let Some(rep) = r.stage(stage, |_| {
            adm_mass_with(&model, &radii, n, measure).map_err(err)
        }) else {
            continue;
        };
        let mut t = Table::new(&format!("mass{suffix}"), &["R", "mass_estimate"]);
        for s in &rep.per_radius {
            t.push(vec![s.radius, s.mass_estimate]);
        }
        r.table(t);
        r.summary(&format!("extrapolated_mass{suffix}"), rep.extrapolated_mass);
        r.summary(
            &format!("extrapolation_residual{suffix}"),
            rep.extrapolation_residual,
        );
        if let Some(m) = exact {
            r.check(
                &format!("extrapolated_mass_error{suffix}"),
                (rep.extrapolated_mass - m).abs(),
                Relation::AtMost,
                1e-4,
            );
        }
    }
    let model = r.model.clone();
    let round = r.cfg.is_round();
    let rows = r.stage("mass_flux", |_| {
        radii
            .iter()
            .map(|&rad| {
                let flux = mass_flux_on_sphere(&model, rad, n).map_err(err)?;
                let tail = mass_tail(&model, rad).map_err(err)?;
                Ok((rad, flux, tail))
            })
            .collect::<StageResult<Vec<_>>>()
    });
    let Some(rows) = rows else { return };
    let mut t = Table::new(
        "mass_flux",
        &["R", "flux", "closed_form", "F", "tail_share"],
    );
    let mut rel: f64 = 0.0;
    let mut within: f64 = 0.0;
    for (rad, flux, tail) in &rows {
        let closed = match exact {
            Some(m) if round => -8.0 * PI * m * (1.0 + m / (2.0 * rad)).powi(3),
            _ => f64::NAN,
        };
        if closed.is_finite() && closed != 0.0 {
            rel = rel.max(((flux - closed) / closed).abs());
        }
        if let Some(m) = exact {
            if tail.value > 0.0 {
                within = within.max((flux + 8.0 * PI * m).abs() / tail.value);
            }
        }
        if tail.tail_dominates {
            r.note(format!(
                "tail estimate dominates F({rad}) (share {})",
                tail.tail_share
            ));
        }
        t.push(vec![*rad, *flux, closed, tail.value, tail.tail_share]);
    }
    r.table(t);
    r.summary("F_at_smallest_radius", rows[0].2.value);
    if let (Some(m), true) = (exact, round) {
        if m > 0.0 {
            r.check(
                "mass_flux_closed_form_relative_error",
                rel,
                Relation::AtMost,
                1e-6,
            );
            r.check("mass_flux_limit_over_tail", within, Relation::AtMost, 1.0);
        }
    }
}

fn center(r: &mut Runner) {
    let radii = or_default(&r.cfg.params.radii, &[100.0, 200.0, 400.0, 800.0]);
    let model = r.model.clone();
    let Some(rep) = r.stage("center_of_mass", |_| {
        center_of_mass(&model, &radii).map_err(err)
    }) else {
        return;
    };
    let mut t = Table::new("center_of_mass", &["R", "cx", "cy", "cz"]);
    for (rad, c) in &rep.per_radius {
        t.push(vec![*rad, c[0], c[1], c[2]]);
    }
    r.table(t);
    for (k, key) in ["center_x", "center_y", "center_z"].iter().enumerate() {
        r.summary(key, rep.center[k]);
    }
    r.summary("extrapolation_residual", rep.extrapolation_residual);
    if let Some(w) = rep.parity_warning.clone() {
        r.note(w);
    }
    if r.cfg.metric.terms.is_empty() {
        let expect = Vector3::from(r.cfg.metric.center.unwrap_or([0.0; 3]));
        let err = (Vector3::from(rep.center) - expect).norm();
        r.check("center_error", err, Relation::AtMost, 1e-3);
    }
}

fn foliation(r: &mut Runner, default_h: &[f64]) -> Option<FoliationRecord> {
    let h = or_default(&r.cfg.params.h_list, default_h);
    let model = r.model.clone();
    let opts = r.opts();
    let rec = r.stage("foliation", |_| {
        continue_foliation(&model, &h, &opts).map_err(err)
    })?;
    let mut t = Table::new(
        "foliation",
        &[
            "H", "r0", "r1", "cx", "cy", "cz", "lambda1", "iters", "residual",
        ],
    );
    let mut spectrum = Table::new(
        "spectrum",
        &["H", "lambda1", "lambda2", "lambda3", "lambda4"],
    );
    for e in &rec.entries {
        t.push(vec![
            e.h,
            e.r0,
            e.r1,
            e.center[0],
            e.center[1],
            e.center[2],
            e.lowest_meanzero_eigenvalue,
            e.newton_iters as f64,
            e.residual,
        ]);
        let mut row = vec![e.h];
        row.extend((0..4).map(|k| e.eigenvalues.get(k).copied().unwrap_or(f64::NAN)));
        spectrum.push(row);
    }
    r.table(t);
    r.table(spectrum);
    if let Some(f) = &rec.failure {
        r.note(format!("foliation stopped early: {f}"));
    }
    r.summary("leaves", rec.entries.len() as f64);
    r.check(
        "leaves_missing",
        (h.len() - rec.entries.len()) as f64,
        Relation::AtMost,
        0.0,
    );
    Some(rec)
}

fn leaf_shape_checks(r: &mut Runner, rec: &FoliationRecord) {
    if rec.entries.is_empty() || !r.cfg.is_round() {
        return;
    }
    let center = rec
        .entries
        .iter()
        .map(|e| Vector3::from(e.center).norm())
        .fold(0.0, f64::max);
    let ratio = rec
        .entries
        .iter()
        .map(|e| e.r1 / e.r0 - 1.0)
        .fold(0.0, f64::max);
    r.check("max_center_norm", center, Relation::Below, 1e-6);
    r.check("max_r1_over_r0_minus_1", ratio, Relation::AtMost, 1e-6);
    if r.model.is_flat() {
        let zero = rec
            .entries
            .iter()
            .flat_map(|e| e.eigenvalues.iter().take(3))
            .fold(0.0, |a: f64, l| a.max(l.abs()));
        r.check(
            "max_abs_translation_eigenvalue",
            zero,
            Relation::AtMost,
            1e-9,
        );
    }
}

fn spectrum_checks(r: &mut Runner, rec: &FoliationRecord) {
    if rec.entries.is_empty() || r.model.is_flat() {
        return;
    }
    let l1: Vec<f64> = rec
        .entries
        .iter()
        .map(|e| e.lowest_meanzero_eigenvalue)
        .collect();
    let scaled: Vec<f64> = rec
        .entries
        .iter()
        .map(|e| e.lowest_meanzero_eigenvalue * e.r0.powi(3))
        .collect();
    let med = median(&scaled);
    let dev = scaled
        .iter()
        .map(|s| (s / med - 1.0).abs())
        .fold(0.0, f64::max);
    r.summary("lambda1_r3_median", med);
    r.check(
        "min_lambda1",
        l1.iter().cloned().fold(f64::INFINITY, f64::min),
        Relation::Above,
        0.0,
    );
    r.check("lambda1_r3_max_relative_spread", dev, Relation::AtMost, 0.2);
}

fn certificates(r: &mut Runner, rec: &FoliationRecord) {
    let model = r.model.clone();
    let opts = r.opts();
    let rows = r.stage("certificates", |_| {
        let disc = opts.discretization().map_err(err)?;
        rec.entries
            .iter()
            .map(|e| {
                let frame = SurfaceFrame::physical(&e.surface, &disc, &model).map_err(err)?;
                let c = curvature_certificates(&frame);
                let t = tension_scan(&e.surface, &disc).map_err(err)?;
                Ok((e.h, e.r0, c, t.scaled_sup, t.sup_gradient * e.r0 * e.r0))
            })
            .collect::<StageResult<Vec<_>>>()
    });
    let Some(rows) = rows else { return };
    let mut t = Table::new(
        "certificates",
        &[
            "H",
            "r0",
            "int_H2_dmu",
            "int_Aring2_dmu",
            "sup_scaled_Aring",
            "H2_area",
            "diam_H_product",
            "willmore_remainder_scaled",
            "aring_scaled",
            "tension_scaled",
            "tension_dimensionless",
        ],
    );
    let mut rem = Vec::new();
    let mut aring = Vec::new();
    let mut tension = Vec::new();
    let mut tension_dimless: f64 = 0.0;
    for (h, r0, c, ts, td) in &rows {
        let w = (c.int_h2_dmu - 16.0 * PI).abs() * r0;
        let a = c.sup_scaled_aring * r0.sqrt();
        rem.push(w);
        aring.push(a);
        tension.push(*ts);
        tension_dimless = tension_dimless.max(*td);
        t.push(vec![
            *h,
            *r0,
            c.int_h2_dmu,
            c.int_aring2_dmu,
            c.sup_scaled_aring,
            c.h2_area,
            c.diam_h_product,
            w,
            a,
            *ts,
            *td,
        ]);
    }
    r.table(t);
    if rows.len() < 2 || r.model.is_flat() {
        return;
    }
    r.check(
        "willmore_remainder_scaled_spread",
        spread(&rem, 0.0),
        Relation::Below,
        3.0,
    );
    r.check(
        "aring_scaled_spread",
        spread(&aring, 1e-10),
        Relation::Below,
        3.0,
    );
    if r.cfg.is_round() {
        // Exact leaves have no tension; what is left is round-off of size ε·H/r0.
        r.check(
            "max_tension_dimensionless",
            tension_dimless,
            Relation::AtMost,
            1e-10,
        );
    } else {
        r.check(
            "tension_scaled_spread",
            spread(&tension, 1e-10),
            Relation::Below,
            3.0,
        );
    }
}

fn off_center_sphere(
    cfg: &ExperimentConfig,
    radius: f64,
    n: usize,
) -> Result<(RadialSurface, Discretization)> {
    let b = Vector3::from(cfg.params.b).normalize();
    let d = cfg.params.near_distance;
    let surface = RadialSurface::sphere(-b * (radius - d), radius, 0);
    let disc = Discretization::pole_refined(n, 0, b, d / radius)
        .map_err(|e| super::invalid("grid.n_colat", e.to_string()))?;
    Ok((surface, disc))
}

fn qt_scan(r: &mut Runner) -> Option<(RadialSurface, SurfaceFrame)> {
    let radii = or_default(&r.cfg.params.radii, &[1e3, 1e4, 1e5]);
    let n = r.cfg.grid.n_colat.unwrap_or(256);
    let model = r.model.clone();
    let cfg = r.cfg;
    let p = &cfg.params;
    let b = Vector3::from(p.b).normalize();
    let rows = r.stage("qt_scan", |_| {
        let mut out = Vec::new();
        for &rad in &radii {
            let (surface, disc) = off_center_sphere(cfg, rad, n).map_err(err)?;
            let frame = SurfaceFrame::physical(&surface, &disc, &model).map_err(err)?;
            let total = qt_integral(&frame, &b).map_err(err)?;
            let parts = qt_decomposition(&surface, &frame, &b, p.k, p.s).ok();
            out.push((rad, total, parts, surface, frame));
        }
        Ok(out)
    })?;
    let mut t = Table::new(
        "qt_scan",
        &[
            "R",
            "qt_total",
            "inner",
            "outer",
            "intermediate",
            "decomposed",
            "r0",
        ],
    );
    for (rad, total, parts, surface, _) in &rows {
        let (i, o, m, d) = match parts {
            Some(q) => (q.inner_part, q.outer_part, q.intermediate_part, 1.0),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        t.push(vec![*rad, *total, i, o, m, d, radii_of(surface)]);
    }
    r.table(t);
    let m = r.cfg.exact_mass().unwrap_or(0.0);
    if m > 0.0 {
        let target = -8.0 * PI * m;
        let totals: Vec<f64> = rows.iter().map(|x| x.1).collect();
        let dist: Vec<f64> = totals.iter().map(|v| (v - target).abs()).collect();
        r.check(
            "qt_monotone_violations",
            (increases(&totals) + increases(&dist)) as f64,
            Relation::AtMost,
            0.0,
        );
        let last = rows.last().expect("nonempty radii");
        r.summary("qt_total_over_limit_at_largest_R", last.1 / target);
        r.check(
            "qt_relative_error_at_largest_R",
            (last.1 / target - 1.0).abs(),
            Relation::AtMost,
            0.1,
        );
        let parts: Vec<_> = rows.iter().filter_map(|x| x.2).collect();
        if let Some(q) = last.2 {
            r.summary("inner_over_4pi_m", q.inner_part / (4.0 * PI * m));
            r.summary("outer_over_4pi_m", q.outer_part / (4.0 * PI * m));
            r.summary(
                "intermediate_over_4pi_m",
                q.intermediate_part / (4.0 * PI * m),
            );
            r.check(
                "intermediate_share_at_largest_R",
                (q.intermediate_part / q.total).abs(),
                Relation::Below,
                0.2,
            );
        } else {
            r.note("no intermediate region at the largest radius".into());
        }
        if parts.len() >= 2 {
            let gap: Vec<f64> = parts
                .iter()
                .map(|q| {
                    let quarter = 4.0 * PI * m;
                    (q.inner_part + quarter)
                        .abs()
                        .max((q.outer_part + quarter).abs())
                        .max(q.intermediate_part.abs())
                })
                .collect();
            r.check(
                "parts_trend_violations",
                increases(&gap) as f64,
                Relation::AtMost,
                0.0,
            );
        }
    }
    let (_, _, _, surface, frame) = rows.into_iter().last()?;
    Some((surface, frame))
}

fn radii_of(s: &RadialSurface) -> f64 {
    radii(s).0
}

fn energy(r: &mut Runner, largest: &(RadialSurface, SurfaceFrame), pattern_check: bool) {
    let p = r.cfg.params.clone();
    let (surface, frame) = largest;
    let Some(profile) = r.stage("gauss_map_energy", |_| {
        let sched = annulus_schedule(surface, frame, p.k, p.s, p.log_width).map_err(err)?;
        let profile = gauss_map_energy(frame, &sched);
        profile.require_populated().map_err(err)?;
        Ok(profile)
    }) else {
        return;
    };
    let mut t = Table::new(
        "energy",
        &[
            "i",
            "r_lo",
            "r_hi",
            "energy",
            "sup_grad",
            "sup_A_scaled",
            "profile_bound",
        ],
    );
    for b in &profile.bands {
        t.push(vec![
            b.i as f64,
            b.r_lo,
            b.r_hi,
            b.energy,
            b.sup_grad,
            b.sup_a_scaled,
            b.profile_bound,
        ]);
    }
    r.table(t);
    r.summary("energy_total", profile.total_energy);
    r.summary("energy_inner_cap", profile.inner_cap_energy);
    r.summary("energy_outer_cap", profile.outer_cap_energy);
    r.summary("bands", profile.schedule.l_n as f64);
    r.check(
        "energy_additivity",
        profile.additivity_error(),
        Relation::AtMost,
        1e-8,
    );
    if pattern_check {
        r.check(
            "energy_decreasing_bands_from_inner_end",
            profile.decreasing_run() as f64,
            Relation::AtLeast,
            3.0,
        );
    }
}

fn blowdown(r: &mut Runner) {
    if let Some(rec) = foliation(r, &[0.08, 0.04, 0.02, 0.01]) {
        let fits = r.stage("sphere_limit", |_| {
            rec.entries
                .iter()
                .map(|e| {
                    let s = rescale_surface(&e.surface, e.h / 2.0).map_err(err)?;
                    Ok((e.h, sphere_fit(&s).map_err(err)?))
                })
                .collect::<StageResult<Vec<_>>>()
        });
        if let Some(fits) = fits {
            let mut t = Table::new(
                "sphere_fit",
                &[
                    "H",
                    "radius",
                    "center_norm",
                    "max_deviation",
                    "rms_deviation",
                ],
            );
            let mut gap = Vec::new();
            let mut cmax: f64 = 0.0;
            for (h, f) in &fits {
                if let FitParameters::Sphere { center, radius } = f.parameters {
                    let c = Vector3::from(center).norm();
                    gap.push((radius - 1.0).abs());
                    cmax = cmax.max(c);
                    t.push(vec![*h, radius, c, f.max_deviation, f.rms_deviation]);
                }
            }
            r.table(t);
            r.check(
                "sphere_limit_trend_violations",
                increases(&gap) as f64,
                Relation::AtMost,
                0.0,
            );
            if r.cfg.is_round() {
                r.check("sphere_limit_max_center", cmax, Relation::AtMost, 1e-6);
            }
        }
    }
    let radii = or_default(&r.cfg.params.radii, &[1e3, 1e4, 1e5]);
    let n = r.cfg.grid.n_colat.unwrap_or(256);
    let cfg = r.cfg;
    let model = r.model.clone();
    let window = cfg.params.window;
    let fits = r.stage("plane_limit", |_| {
        radii
            .iter()
            .map(|&rad| {
                let (s, _) = off_center_sphere(cfg, rad, n).map_err(err)?;
                let r0 = radii_of(&s);
                let f =
                    plane_fit(&rescale_surface(&s, 1.0 / r0).map_err(err)?, window).map_err(err)?;
                Ok((rad, f))
            })
            .collect::<StageResult<Vec<_>>>()
    });
    if let Some(fits) = fits {
        let mut t = Table::new(
            "plane_fit",
            &["R", "origin_distance", "max_deviation", "rms_deviation"],
        );
        let mut dev = Vec::new();
        let mut last = f64::NAN;
        for (rad, f) in &fits {
            if let FitParameters::Plane {
                origin_distance, ..
            } = f.parameters
            {
                t.push(vec![
                    *rad,
                    origin_distance,
                    f.max_deviation,
                    f.rms_deviation,
                ]);
                dev.push(f.max_deviation);
                last = origin_distance;
            }
        }
        r.table(t);
        r.check(
            "plane_limit_distance_error",
            (last - 1.0).abs(),
            Relation::AtMost,
            1e-2,
        );
        r.check(
            "plane_limit_deviation_trend_violations",
            increases(&dev) as f64,
            Relation::AtMost,
            0.0,
        );
    }
    let largest = *radii.last().expect("nonempty radii");
    let built = r.stage("energy_frame", |_| {
        let (s, d) = off_center_sphere(cfg, largest, n).map_err(err)?;
        let f = SurfaceFrame::physical(&s, &d, &model).map_err(err)?;
        Ok((s, f))
    });
    if let Some(pair) = built {
        energy(r, &pair, false);
    }
}

fn random_initialization(rng: &mut ChaCha8Rng, radius: f64, p: f64, l_max: usize) -> RadialSurface {
    let c = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)) * (p * radius);
    let mut s = RadialSurface::sphere(c, radius * (1.0 + p * rng.gen_range(-1.0..1.0)), l_max);
    for l in 2..=4.min(l_max) {
        for m in -(l as i64)..=(l as i64) {
            s.coeffs_mut()[index(l, m)] = p * radius * rng.gen_range(-1.0..1.0) / (l * l) as f64;
        }
    }
    s
}

fn uniqueness(r: &mut Runner) {
    let h = r.cfg.params.h_list.first().copied().unwrap_or(0.05);
    let p = r.cfg.params.clone();
    let model = r.model.clone();
    let opts = r.opts();
    let Some(results) = r.stage("uniqueness_probe", |_| {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let inits: Vec<RadialSurface> = (0..p.trials)
            .map(|_| random_initialization(&mut rng, 2.0 / h, p.perturbation, opts.l_max))
            .collect();
        Ok(inits
            .par_iter()
            .map(|s| solve_cmc(&model, h, s, &opts))
            .collect::<Vec<_>>())
    }) else {
        return;
    };
    let mut t = Table::new(
        "trials",
        &[
            "trial",
            "converged",
            "iterations",
            "residual",
            "cx",
            "cy",
            "cz",
            "r0",
            "r1",
        ],
    );
    let mut ok = Vec::new();
    for (i, res) in results.iter().enumerate() {
        match res {
            Ok(sol) => {
                let c = sol.surface.center();
                let (r0, r1) = radii(&sol.surface);
                t.push(vec![
                    i as f64,
                    1.0,
                    sol.iterations as f64,
                    sol.sup_residual,
                    c.x,
                    c.y,
                    c.z,
                    r0,
                    r1,
                ]);
                ok.push(sol.surface.clone());
            }
            Err(e) => {
                t.push(vec![i as f64, 0.0, 0.0, f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]);
                r.note(format!("trial {i} failed: {e}"));
            }
        }
    }
    r.table(t);
    let pairs: Vec<(usize, usize)> = (0..ok.len())
        .flat_map(|i| (i + 1..ok.len()).map(move |j| (i, j)))
        .collect();
    let max_d = pairs
        .par_iter()
        .map(|&(i, j)| sup_distance(&ok[i], &ok[j]))
        .reduce(|| 0.0, f64::max);
    r.summary("max_pairwise_sup_distance", max_d);
    r.check(
        "trials_failed",
        (results.len() - ok.len()) as f64,
        Relation::AtMost,
        0.0,
    );
    r.check("max_pairwise_sup_distance", max_d, Relation::Below, 1e-6);
}
