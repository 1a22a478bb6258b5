use std::io::Write;

use serde::Serialize;

use super::frequencies::QubitFrequencies;
use super::grid::Spectrum;
use super::params::{PhaseGrid, TransmonParams};
use super::wells::{BoundLevel, WellAnalysis};
use crate::cpr::cpr_potential;
use crate::error::Result;
use crate::schema::{csv_err, to_json, write_csv_preamble};

/// Columns `index, energy, bound_flag, well_weight`.
pub fn write_spectrum_csv<W: Write>(mut w: W, params: &TransmonParams, spectrum: &Spectrum, analysis: &WellAnalysis) -> Result<()> {
    write_csv_preamble(
        &mut w,
        "spectrum",
        &[
            ("e_j", params.e_j.to_string()),
            ("e_c", params.e_c.to_string()),
            ("eta", params.eta.to_string()),
            ("barrier_energy", analysis.barrier_energy.to_string()),
            ("bound_count", analysis.bound_count().to_string()),
        ],
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "energy", "bound_flag", "well_weight"]).map_err(csv_err)?;
    for (i, e) in spectrum.energies.iter().enumerate() {
        out.serialize((i, e, u8::from(analysis.is_bound(i)), analysis.state_weights[i]))
            .map_err(csv_err)?;
    }
    out.flush().map_err(|e| crate::Error::Parse(e.to_string()))?;
    Ok(())
}

/// Columns `phi, potential` with `potential = E_J F(φ)`.
pub fn write_potential_csv<W: Write>(mut w: W, params: &TransmonParams, grid: &PhaseGrid) -> Result<()> {
    write_csv_preamble(
        &mut w,
        "potential",
        &[("e_j", params.e_j.to_string()), ("eta", params.eta.to_string())],
    )?;
    let cpr = params.cpr();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["phi", "potential"]).map_err(csv_err)?;
    for phi in grid.points() {
        out.serialize((phi, params.e_j * cpr_potential(&cpr, phi))).map_err(csv_err)?;
    }
    out.flush().map_err(|e| crate::Error::Parse(e.to_string()))?;
    Ok(())
}

/// JSON summary of a well analysis, without wavefunctions.
#[derive(Debug, Clone, Serialize)]
pub struct WellReport {
    pub params: TransmonParams,
    pub grid: PhaseGrid,
    pub energies: Vec<f64>,
    pub well_left: f64,
    pub well_right: f64,
    pub well_min_phi: f64,
    pub barrier_energy: f64,
    pub bound_count: usize,
    pub bound_state_indices: Vec<usize>,
    pub bound_levels: Vec<BoundLevel>,
    pub state_weights: Vec<f64>,
    pub frequencies: Option<QubitFrequencies>,
}

impl WellReport {
    pub fn new(params: &TransmonParams, spectrum: &Spectrum, analysis: &WellAnalysis, frequencies: Option<QubitFrequencies>) -> Self {
        Self {
            params: *params,
            grid: spectrum.grid,
            energies: spectrum.energies.clone(),
            well_left: analysis.well_left,
            well_right: analysis.well_right,
            well_min_phi: analysis.well_min_phi,
            barrier_energy: analysis.barrier_energy,
            bound_count: analysis.bound_count(),
            bound_state_indices: analysis.bound_state_indices.clone(),
            bound_levels: analysis.bound_levels.clone(),
            state_weights: analysis.state_weights.clone(),
            frequencies,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json("well_analysis", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transmon::bound_states;

    #[test]
    fn spectrum_csv_roundtrip() {
        let p = TransmonParams::from_ratio(20.0, 0.276).unwrap();
        let (spec, wa) = bound_states(&p, &PhaseGrid::default(), 8).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &p, &spec, &wa).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema_version: 1\n"));
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        assert_eq!(rdr.headers().unwrap(), vec!["index", "energy", "bound_flag", "well_weight"]);
        let rows: Vec<(usize, f64, u8, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), spec.len());
        assert_eq!(rows.iter().filter(|r| r.2 == 1).count(), 2);
        for (r, e) in rows.iter().zip(&spec.energies) {
            assert_eq!(r.1, *e);
        }
    }

    #[test]
    fn report_json_has_schema_first() {
        let p = TransmonParams::from_ratio(20.0, 0.1).unwrap();
        let (spec, wa) = bound_states(&p, &PhaseGrid::default(), 0).unwrap();
        let s = WellReport::new(&p, &spec, &wa, None).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["bound_count"], 3);
        assert!(s.starts_with("{\n  \"schema_version\""));
    }

    #[test]
    fn potential_csv_has_every_point() {
        let p = TransmonParams::from_ratio(20.0, 0.1).unwrap();
        let g = PhaseGrid::new(-1.0, 1.0, 11).unwrap();
        let mut buf = Vec::new();
        write_potential_csv(&mut buf, &p, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data_lines = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_lines, 12);
    }
}
