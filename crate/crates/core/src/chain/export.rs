use std::io::Write;

use serde::Serialize;

use super::config::{ChainConfig, NoiseConfig};
use super::map::{asymmetry_regions, Cell, FidelityMap, RowSummary};
use crate::error::{Error, Result};
use crate::schema::{csv_err, to_json, write_csv_preamble};
use crate::transmon::EtaInterval;

fn meta(map: &FidelityMap, config: &ChainConfig, noise: Option<&NoiseConfig>) -> Vec<(&'static str, String)> {
    let mut m = vec![
        ("n_qubits", config.n_qubits.to_string()),
        ("coupling_g", config.coupling_g.to_string()),
        ("noise_applied", map.noise_applied.to_string()),
        ("n_trajectories", map.n_trajectories.to_string()),
    ];
    if let Some(n) = noise {
        m.push(("seed", n.seed.to_string()));
    }
    m
}

/// Long format, one row per cell: `eta, t_ns, forward, reverse,
/// difference, forward_se, reverse_se, difference_se`.
pub fn write_map_csv<W: Write>(mut w: W, map: &FidelityMap, config: &ChainConfig, noise: Option<&NoiseConfig>) -> Result<()> {
    write_csv_preamble(&mut w, "fidelity_map", &meta(map, config, noise))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "eta",
        "t_ns",
        "forward",
        "reverse",
        "difference",
        "forward_se",
        "reverse_se",
        "difference_se",
    ])
    .map_err(csv_err)?;
    for (i, eta) in map.eta_axis.iter().enumerate() {
        for (j, t) in map.time_axis.iter().enumerate() {
            out.serialize((
                eta,
                t,
                map.forward[i][j],
                map.reverse[i][j],
                map.difference[i][j],
                map.forward_se[i][j],
                map.reverse_se[i][j],
                map.difference_se[i][j],
            ))
            .map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// One row per η with the time-aggregated figures.
pub fn write_row_summary_csv<W: Write>(mut w: W, map: &FidelityMap, config: &ChainConfig, noise: Option<&NoiseConfig>) -> Result<()> {
    write_csv_preamble(&mut w, "fidelity_rows", &meta(map, config, noise))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "eta",
        "max_difference",
        "t_at_max_difference",
        "forward_at_max",
        "reverse_at_max",
        "max_forward",
        "min_reverse",
    ])
    .map_err(csv_err)?;
    for r in map.row_summaries() {
        out.serialize((
            r.eta,
            r.max_difference,
            r.t_at_max_difference,
            r.forward_at_max,
            r.reverse_at_max,
            r.max_forward,
            r.min_reverse,
        ))
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize)]
struct MapDocument<'a> {
    config: &'a ChainConfig,
    noise: Option<&'a NoiseConfig>,
    peak_difference: Cell,
    asymmetry_threshold: f64,
    asymmetry_regions: Vec<EtaInterval>,
    rows: Vec<RowSummary>,
    map: &'a FidelityMap,
}

/// JSON with the configuration echoed, the time-aggregated rows, the
/// regions above `threshold` and the full matrices.
pub fn map_json(map: &FidelityMap, config: &ChainConfig, noise: Option<&NoiseConfig>, threshold: f64) -> Result<String> {
    to_json(
        "fidelity_map",
        &MapDocument {
            config,
            noise,
            peak_difference: map.peak_difference(),
            asymmetry_threshold: threshold,
            asymmetry_regions: asymmetry_regions(map, threshold),
            rows: map.row_summaries(),
            map,
        },
    )
}
