use rayon::prelude::*;
use serde::Serialize;

use super::extract::{extract_with_stream, CriticalCurrentEstimate, ExtractConfig};
use super::trace::IVTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyPoint {
    /// Oe.
    pub b_field: f64,
    pub eta: f64,
    pub sigma_eta: f64,
}

/// A field whose traces all failed extraction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedField {
    pub b_field: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EfficiencySeries {
    /// Sorted by field.
    pub points: Vec<EfficiencyPoint>,
    pub skipped: Vec<SkippedField>,
    /// Per-trace estimates in input order; `None` where extraction failed.
    #[serde(skip)]
    pub estimates: Vec<Option<CriticalCurrentEstimate>>,
}

/// η with first-order uncertainty from the exact partials
/// ∂η/∂|I⁺| = 2|I⁻|/(|I⁺|+|I⁻|)² and ∂η/∂|I⁻| = −2|I⁺|/(|I⁺|+|I⁻|)².
pub fn efficiency_with_sigma(est: &CriticalCurrentEstimate) -> Result<(f64, f64)> {
    let a = est.ic_plus.abs();
    let b = est.ic_minus.abs();
    let s2 = (a + b).powi(2);
    let da = 2.0 * b / s2;
    let db = -2.0 * a / s2;
    Ok((est.efficiency()?, (da * est.sigma_plus).hypot(db * est.sigma_minus)))
}

/// Extracts every trace (in parallel) and forms one point per field.
///
/// Several traces at the same field are combined by their plain mean,
/// with σ added in quadrature and divided by the count.
pub fn efficiency_series(traces: &[IVTrace], cfg: &ExtractConfig) -> Result<EfficiencySeries> {
    cfg.validate()?;
    if traces.is_empty() {
        return Err(Error::InsufficientData("no traces supplied".into()));
    }
    let results: Vec<Result<CriticalCurrentEstimate>> = traces
        .par_iter()
        .enumerate()
        .map(|(k, t)| extract_with_stream(t, cfg, k as u64))
        .collect();

    let mut fields: Vec<f64> = traces.iter().map(|t| t.b_field).collect();
    fields.sort_by(f64::total_cmp);
    fields.dedup();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for b in fields {
        let mut etas = Vec::new();
        let mut reasons = Vec::new();
        for (t, r) in traces.iter().zip(&results) {
            if t.b_field != b {
                continue;
            }
            match r {
                Ok(est) => match efficiency_with_sigma(est) {
                    Ok(e) => etas.push(e),
                    Err(e) => reasons.push(e.to_string()),
                },
                Err(e) => reasons.push(e.to_string()),
            }
        }
        if etas.is_empty() {
            log::warn!("skipping B = {b} Oe: {}", reasons.join("; "));
            skipped.push(SkippedField {
                b_field: b,
                reason: reasons.join("; "),
            });
            continue;
        }
        let n = etas.len() as f64;
        let eta = etas.iter().map(|e| e.0).sum::<f64>() / n;
        let sigma_eta = etas.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt() / n;
        points.push(EfficiencyPoint { b_field: b, eta, sigma_eta });
    }
    Ok(EfficiencySeries {
        points,
        skipped,
        estimates: results.into_iter().map(Result::ok).collect(),
    })
}
