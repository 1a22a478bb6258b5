use std::io::Write;

use serde::Serialize;

use super::extract::ExtractConfig;
use super::fit::{EfficiencyFit, FitOptions};
use super::series::{EfficiencyPoint, SkippedField};
use super::trace::LoadFailure;
use crate::error::{Error, Result};
use crate::schema::{csv_err, to_json, write_csv_preamble};

/// `b_field_oe, eta, sigma_eta`.
pub fn write_series_csv<W: Write>(mut w: W, points: &[EfficiencyPoint]) -> Result<()> {
    write_csv_preamble(&mut w, "efficiency_series", &[("n_points", points.len().to_string())])?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["b_field_oe", "eta", "sigma_eta"]).map_err(csv_err)?;
    for p in points {
        out.serialize((p.b_field, p.eta, p.sigma_eta)).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// `b_field_oe, eta, sigma_eta, model, residual, weight`.
pub fn write_residuals_csv<W: Write>(mut w: W, fit: &EfficiencyFit) -> Result<()> {
    write_csv_preamble(&mut w, "fit_residuals", &[("n_points", fit.n_points.to_string())])?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["b_field_oe", "eta", "sigma_eta", "model", "residual", "weight"])
        .map_err(csv_err)?;
    for r in &fit.residuals {
        out.serialize((r.b_field, r.eta, r.sigma_eta, r.model, r.residual, r.weight))
            .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize)]
struct FitReport<'a> {
    model: &'static str,
    #[serde(flatten)]
    fit: &'a EfficiencyFit,
    parameter_names: Vec<&'static str>,
    extraction: &'a ExtractConfig,
    options: &'a FitOptions,
    skipped_fields: &'a [SkippedField],
    unreadable_files: &'a [LoadFailure],
}

/// The fit with the settings that produced it and everything left out.
pub fn fit_json(
    fit: &EfficiencyFit,
    extraction: &ExtractConfig,
    options: &FitOptions,
    skipped: &[SkippedField],
    unreadable: &[LoadFailure],
) -> Result<String> {
    let (model, names) = if fit.d.is_some() {
        ("eta = a*sin(b*B + c) + d", vec!["a", "b", "c", "d"])
    } else {
        ("eta = a*sin(b*B + c)", vec!["a", "b", "c"])
    };
    to_json(
        "efficiency_fit",
        &FitReport {
            model,
            fit,
            parameter_names: names,
            extraction,
            options,
            skipped_fields: skipped,
            unreadable_files: unreadable,
        },
    )
}
