use serde::{Deserialize, Serialize};

use crate::surface::{Measure, SurfaceFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    #[serde(rename = "int_H2_dmu")]
    pub int_h2_dmu: f64,
    #[serde(rename = "int_Aring2_dmu")]
    pub int_aring2_dmu: f64,
    /// `sup |x| |Å|` over the nodes.
    #[serde(rename = "sup_scaled_Aring")]
    pub sup_scaled_aring: f64,
    /// `H² |Σ|` with `H` the mean of `H_g`.
    #[serde(rename = "H2_area")]
    pub h2_area: f64,
    /// Largest node separation times `H`.
    #[serde(rename = "diam_H_product")]
    pub diam_h_product: f64,
}

/// Curvature integrals in the physical metric; the diameter is the largest
/// Euclidean distance between nodes.
pub fn curvature_certificates(frame: &SurfaceFrame) -> CertificateReport {
    let m = Measure::Physical;
    let w = frame.area_weights(m);
    let nodes = frame.nodes();
    let mut h2 = 0.0;
    let mut aring2 = 0.0;
    let mut sup_scaled: f64 = 0.0;
    for (n, w) in nodes.iter().zip(&w) {
        let f = &n.physical;
        h2 += w * f.mean_curvature * f.mean_curvature;
        aring2 += w * f.norm_aring2;
        sup_scaled = sup_scaled.max(n.position.norm() * f.norm_aring2.sqrt());
    }
    let area: f64 = w.iter().sum();
    let h = frame.mean_of_mean_curvature(m);
    let mut diam2: f64 = 0.0;
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            diam2 = diam2.max((a.position - b.position).norm_squared());
        }
    }
    CertificateReport {
        int_h2_dmu: h2,
        int_aring2_dmu: aring2,
        sup_scaled_aring: sup_scaled,
        h2_area: h * h * area,
        diam_h_product: diam2.sqrt() * h,
    }
}
