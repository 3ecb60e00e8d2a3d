use serde::Serialize;

use super::{BlowdownError, Result};
use crate::surface::{radii, Measure, RadialSurface, SurfaceFrame};

/// Log-spaced bands between `K r₀` and `s/H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusSchedule {
    #[serde(rename = "K")]
    pub k: f64,
    pub s: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub l_n: usize,
    /// `K r₀ e^{iL}` for `i < l_n`, then `s/H`; the last band absorbs the remainder.
    pub boundaries: Vec<f64>,
    pub r0: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

impl AnnulusSchedule {
    pub fn new(r0: f64, h: f64, k: f64, s: f64, l: f64) -> Result<Self> {
        if !(r0 > 0.0 && h > 0.0 && k > 0.0 && s > 0.0 && l > 0.0) {
            return Err(BlowdownError::InvalidInput(
                "r0, H, K, s and L must be positive".into(),
            ));
        }
        let inner = k * r0;
        let outer = s / h;
        let span = (outer / inner).ln() / l;
        if !(span >= 1.0) {
            return Err(BlowdownError::NoIntermediateRegion { inner, outer });
        }
        let l_n = span.floor() as usize;
        let mut boundaries: Vec<f64> = (0..l_n).map(|i| inner * (i as f64 * l).exp()).collect();
        boundaries.push(outer);
        Ok(Self {
            k,
            s,
            l,
            l_n,
            boundaries,
            r0,
            h,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn outer_radius(&self) -> f64 {
        self.boundaries[self.l_n]
    }

    /// Band index `1..=l_n` for `|x|`, `0` for the inner cap and `l_n + 1`
    /// for the outer cap.
    pub fn band_of(&self, radius: f64) -> usize {
        if radius < self.boundaries[0] {
            return 0;
        }
        if radius >= self.boundaries[self.l_n] {
            return self.l_n + 1;
        }
        self.boundaries.partition_point(|b| *b <= radius)
    }

    /// `e^{−iL/2} + e^{−(l_n−i)L/2}`.
    pub fn profile_bound(&self, i: usize) -> f64 {
        (-(i as f64) * self.l / 2.0).exp() + (-((self.l_n - i) as f64) * self.l / 2.0).exp()
    }
}

/// Schedule from the surface's `r₀` and the mean of `H_g` on its frame.
pub fn annulus_schedule(
    surface: &RadialSurface,
    frame: &SurfaceFrame,
    k: f64,
    s: f64,
    l: f64,
) -> Result<AnnulusSchedule> {
    let (r0, _) = radii(surface);
    AnnulusSchedule::new(r0, frame.mean_of_mean_curvature(Measure::Physical), k, s, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBand {
    pub i: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    /// `∫ |∇_Σ ν|² dμ_e` over the nodes in the band.
    pub energy: f64,
    pub sup_grad: f64,
    #[serde(rename = "sup_A_scaled")]
    pub sup_a_scaled: f64,
    pub profile_bound: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyProfile {
    pub schedule: AnnulusSchedule,
    pub bands: Vec<EnergyBand>,
    pub inner_cap_energy: f64,
    pub outer_cap_energy: f64,
    /// `∫ |A_e|² dμ_e` over the whole surface.
    pub total_energy: f64,
}

impl EnergyProfile {
    /// `|Σ bands + caps − total| / total`.
    pub fn additivity_error(&self) -> f64 {
        let sum: f64 = self.bands.iter().map(|b| b.energy).sum::<f64>()
            + self.inner_cap_energy
            + self.outer_cap_energy;
        let scale = self.total_energy.abs();
        if scale > 0.0 {
            (sum - self.total_energy).abs() / scale
        } else {
            sum.abs()
        }
    }

    /// Error on the first band without nodes.
    pub fn require_populated(&self) -> Result<()> {
        match self.bands.iter().find(|b| b.nodes == 0) {
            Some(b) => Err(BlowdownError::EmptyBand(b.i)),
            None => Ok(()),
        }
    }

    /// Number of leading bands, counted from the inner end, along which the
    /// energy strictly decreases.
    pub fn decreasing_run(&self) -> usize {
        if self.bands.is_empty() {
            return 0;
        }
        1 + self
            .bands
            .windows(2)
            .take_while(|w| w[1].energy < w[0].energy)
            .count()
    }

    /// CSV with columns `i,r_lo,r_hi,energy,sup_grad,sup_A_scaled,profile_bound`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "i",
            "r_lo",
            "r_hi",
            "energy",
            "sup_grad",
            "sup_A_scaled",
            "profile_bound",
        ])
        .expect("in-memory csv write");
        for b in &self.bands {
            w.write_record(&[
                b.i.to_string(),
                b.r_lo.to_string(),
                b.r_hi.to_string(),
                b.energy.to_string(),
                b.sup_grad.to_string(),
                b.sup_a_scaled.to_string(),
                b.profile_bound.to_string(),
            ])
            .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf8 csv")
    }
}

/// Gauss-map energy and sup norms per band, attributing nodes by `|X|`.
/// Bands without nodes are kept with zero energy; see
/// [`EnergyProfile::require_populated`].
pub fn gauss_map_energy(frame: &SurfaceFrame, schedule: &AnnulusSchedule) -> EnergyProfile {
    let l_n = schedule.l_n;
    let mut bands: Vec<EnergyBand> = (1..=l_n)
        .map(|i| EnergyBand {
            i,
            r_lo: schedule.boundaries[i - 1],
            r_hi: schedule.boundaries[i],
            energy: 0.0,
            sup_grad: 0.0,
            sup_a_scaled: 0.0,
            profile_bound: schedule.profile_bound(i),
            nodes: 0,
        })
        .collect();
    let mut caps = [0.0, 0.0];
    let mut total = 0.0;
    for n in frame.nodes() {
        let a2 = n.euclid.norm_a2;
        let e = n.weight * n.euclid.area_density * a2;
        total += e;
        let rad = n.position.norm();
        match schedule.band_of(rad) {
            0 => caps[0] += e,
            i if i > l_n => caps[1] += e,
            i => {
                let b = &mut bands[i - 1];
                let grad = n.gauss_map_gradient();
                b.energy += e;
                b.sup_grad = b.sup_grad.max(grad);
                b.sup_a_scaled = b.sup_a_scaled.max(rad * grad);
                b.nodes += 1;
            }
        }
    }
    EnergyProfile {
        schedule: schedule.clone(),
        bands,
        inner_cap_energy: caps[0],
        outer_cap_energy: caps[1],
        total_energy: total,
    }
}
