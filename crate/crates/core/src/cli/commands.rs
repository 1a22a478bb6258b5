use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{CprArgs, FidelityMapArgs, IvArgs, Range, SynthIvArgs, WellsArgs, RESOLVED_CONFIG_FILE};
use crate::chain::{self, ChainConfig, ChainRunConfig, NoiseConfig};
use crate::cpr::{self, DiodeCpr};
use crate::error::{Error, Result};
use crate::ivlab::{self, synth::SynthConfig, ExtractConfig, FitOptions};
use crate::schema::{csv_err, to_json, write_csv_preamble, write_file};
use crate::transmon::{self, PhaseGrid, TransmonParams};

#[derive(Serialize)]
struct Resolved<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    settings: &'a T,
}

fn write_resolved<T: Serialize>(out: &Path, command: &str, settings: &T) -> Result<()> {
    let doc = to_json(
        "resolved_config",
        &Resolved {
            command,
            version: env!("CARGO_PKG_VERSION"),
            settings,
        },
    )?;
    write_file(&out.join(RESOLVED_CONFIG_FILE), doc.as_bytes())
}

fn write_with<F: FnOnce(&mut Vec<u8>) -> Result<()>>(path: &Path, f: F) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_file(path, &buf)
}

#[derive(Serialize)]
struct CprSettings {
    eta: f64,
    points: usize,
    phi_min: f64,
    phi_max: f64,
}

#[derive(Serialize)]
struct CprSummary {
    eta: f64,
    anomalous_phase: f64,
    phase_of_max: f64,
    ic_plus: f64,
    ic_minus: f64,
    numeric_ic_plus: f64,
    numeric_ic_minus: f64,
    efficiency: f64,
    efficiency_percent: f64,
}

/// `cpr_table.csv` (phi, current, potential) and `cpr_summary.json`.
pub fn cmd_cpr(args: &CprArgs, out: &Path) -> Result<String> {
    let c = DiodeCpr::new(args.eta)?;
    if args.points < 2 {
        return Err(Error::InvalidInput("--points must be at least 2".into()));
    }
    let (lo, hi) = (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
    write_resolved(
        out,
        "cpr",
        &CprSettings {
            eta: args.eta,
            points: args.points,
            phi_min: lo,
            phi_max: hi,
        },
    )?;
    write_with(&out.join("cpr_table.csv"), |w| {
        write_csv_preamble(w, "cpr_table", &[("eta", args.eta.to_string())])?;
        let mut t = csv::Writer::from_writer(w);
        t.write_record(["phi", "current", "potential"]).map_err(csv_err)?;
        for k in 0..args.points {
            let phi = lo + (hi - lo) * k as f64 / (args.points - 1) as f64;
            t.serialize((phi, cpr::cpr_current(&c, phi), cpr::cpr_potential(&c, phi)))
                .map_err(csv_err)?;
        }
        t.flush().map_err(|e| Error::Parse(e.to_string()))
    })?;
    let ic = c.critical_currents();
    let num = cpr::numeric_critical_currents(&c)?;
    let eff = cpr::efficiency(&ic)?;
    let summary = CprSummary {
        eta: args.eta,
        anomalous_phase: c.anomalous_phase(),
        phase_of_max: c.phase_of_max(),
        ic_plus: ic.ic_plus,
        ic_minus: ic.ic_minus,
        numeric_ic_plus: num.ic_plus,
        numeric_ic_minus: num.ic_minus,
        efficiency: eff,
        efficiency_percent: cpr::to_percent(eff),
    };
    write_file(&out.join("cpr_summary.json"), to_json("cpr_summary", &summary)?.as_bytes())?;
    Ok(format!(
        "ic_plus={:.6} ic_minus={:.6} efficiency={:.6}\n",
        ic.ic_plus, ic.ic_minus, eff
    ))
}

fn wells_grid(args: &WellsArgs) -> Result<PhaseGrid> {
    if args.wide {
        return Ok(PhaseGrid::widened());
    }
    let d = PhaseGrid::default();
    PhaseGrid::new(
        args.phi_min.unwrap_or(d.phi_min),
        args.phi_max.unwrap_or(d.phi_max),
        args.grid_points.unwrap_or(d.n_points),
    )
}

#[derive(Serialize)]
struct WellsSettings<'a> {
    e_j_over_e_c: f64,
    e_c: f64,
    n_g: f64,
    eta: Option<f64>,
    sweep: Option<&'a Range>,
    grid: PhaseGrid,
    min_states: usize,
}

#[derive(Serialize)]
struct WindowReport<'a> {
    e_j_over_e_c: f64,
    grid: PhaseGrid,
    sweep: &'a Range,
    two_level_windows: &'a [transmon::EtaInterval],
    counts: &'a [transmon::SweepPoint],
}

/// Single η: `potential.csv`, `spectrum.csv`, `wells.json`. Sweep:
/// `wells_sweep.csv` and `two_level_windows.json`.
pub fn cmd_wells(args: &WellsArgs, out: &Path) -> Result<String> {
    let grid = wells_grid(args)?;
    if !(args.ej_ec.is_finite() && args.ej_ec >= 0.0) {
        return Err(Error::Domain(format!("--ej-ec must be >= 0, got {}", args.ej_ec)));
    }
    write_resolved(
        out,
        "wells",
        &WellsSettings {
            e_j_over_e_c: args.ej_ec,
            e_c: args.ec,
            n_g: args.ng,
            eta: args.eta,
            sweep: args.sweep.as_ref(),
            grid,
            min_states: args.states,
        },
    )?;
    if let Some(range) = &args.sweep {
        let etas = range.values()?;
        let sweep = transmon::sweep_two_level_window(args.ej_ec, &etas, &grid)?;
        write_with(&out.join("wells_sweep.csv"), |w| {
            write_csv_preamble(w, "bound_count_sweep", &[("e_j_over_e_c", args.ej_ec.to_string())])?;
            let mut t = csv::Writer::from_writer(w);
            t.write_record(["eta", "bound_count"]).map_err(csv_err)?;
            for p in &sweep.points {
                t.serialize((p.eta, p.bound_count)).map_err(csv_err)?;
            }
            t.flush().map_err(|e| Error::Parse(e.to_string()))
        })?;
        let report = WindowReport {
            e_j_over_e_c: args.ej_ec,
            grid,
            sweep: range,
            two_level_windows: &sweep.windows,
            counts: &sweep.points,
        };
        write_file(&out.join("two_level_windows.json"), to_json("two_level_windows", &report)?.as_bytes())?;
        let mut s = String::new();
        for w in &sweep.windows {
            writeln!(s, "two_level_window=[{}, {}]", w.lo, w.hi).expect("string write");
        }
        if sweep.windows.is_empty() {
            s.push_str("two_level_window=none\n");
        }
        return Ok(s);
    }

    let eta = args.eta.expect("clap requires --eta without --sweep");
    let params = TransmonParams::new(args.ej_ec * args.ec, args.ec, args.ng, eta)?;
    let (spectrum, analysis) = transmon::bound_states(&params, &grid, args.states)?;
    let freqs = transmon::qubit_frequencies(&analysis.level_energies()).ok();
    write_with(&out.join("potential.csv"), |w| transmon::write_potential_csv(w, &params, &grid))?;
    write_with(&out.join("spectrum.csv"), |w| {
        transmon::write_spectrum_csv(w, &params, &spectrum, &analysis)
    })?;
    let report = transmon::WellReport::new(&params, &spectrum, &analysis, freqs);
    write_file(&out.join("wells.json"), report.to_json()?.as_bytes())?;
    let mut s = format!(
        "bound_count={}\nwell=[{:.6}, {:.6}] barrier_energy={:.6}\n",
        analysis.bound_count(),
        analysis.well_left,
        analysis.well_right,
        analysis.barrier_energy
    );
    if let Some(f) = freqs {
        writeln!(s, "omega_01={:.6} anharmonicity={:.6}", f.omega_01, f.anharmonicity).expect("string write");
    }
    Ok(s)
}

#[derive(Serialize)]
struct MapSettings<'a> {
    chain: &'a ChainConfig,
    noise: Option<&'a NoiseConfig>,
    eta_grid: Option<&'a Range>,
    t_grid: Option<&'a Range>,
    threshold: f64,
}

/// `fidelity_map.csv`, `fidelity_rows.csv` and `fidelity_summary.json`.
pub fn cmd_fidelity_map(args: &FidelityMapArgs, out: &Path) -> Result<String> {
    let run = match &args.config {
        Some(p) => ChainRunConfig::from_json_file(p)?,
        None => ChainRunConfig::default(),
    };
    let mut noise = if args.noise || run.noise.is_some() {
        Some(run.noise.clone().unwrap_or_default())
    } else {
        None
    };
    match &mut noise {
        Some(n) => {
            if let Some(s) = args.seed {
                n.seed = s;
            }
            if let Some(t) = args.trajectories {
                n.n_trajectories = t;
            }
            n.validate()?;
        }
        None if args.seed.is_some() || args.trajectories.is_some() => {
            log::warn!("--seed/--trajectories have no effect without noise");
        }
        None => {}
    }
    run.chain.validate()?;
    let etas = match &args.eta_grid {
        Some(r) => r.values()?,
        None => chain::default_eta_grid(),
    };
    let times = match &args.t_grid {
        Some(r) => r.values()?,
        None => chain::default_time_grid(),
    };
    write_resolved(
        out,
        "fidelity-map",
        &MapSettings {
            chain: &run.chain,
            noise: noise.as_ref(),
            eta_grid: args.eta_grid.as_ref(),
            t_grid: args.t_grid.as_ref(),
            threshold: args.threshold,
        },
    )?;
    let map = chain::fidelity_map(&run.chain, &etas, &times, noise.as_ref())?;
    write_with(&out.join("fidelity_map.csv"), |w| {
        chain::write_map_csv(w, &map, &run.chain, noise.as_ref())
    })?;
    write_with(&out.join("fidelity_rows.csv"), |w| {
        chain::write_row_summary_csv(w, &map, &run.chain, noise.as_ref())
    })?;
    let doc = chain::map_json(&map, &run.chain, noise.as_ref(), args.threshold)?;
    write_file(&out.join("fidelity_summary.json"), doc.as_bytes())?;
    let peak = map.peak_difference();
    let fwd = map.peak_forward();
    let mut s = format!(
        "peak_difference={:.6} at eta={} t_ns={}\npeak_forward={:.6} at eta={} t_ns={}\n",
        peak.value, peak.eta, peak.t_ns, fwd.value, fwd.eta, fwd.t_ns
    );
    for r in chain::asymmetry_regions(&map, args.threshold) {
        writeln!(s, "asymmetry_region=[{}, {}]", r.lo, r.hi).expect("string write");
    }
    Ok(s)
}

#[derive(Serialize)]
struct IvSettings<'a> {
    manifest: &'a Path,
    extraction: &'a ExtractConfig,
    fit: &'a FitOptions,
}

/// `efficiency_series.csv`, `fit.json` and `fit_residuals.csv`.
pub fn cmd_iv(args: &IvArgs, out: &Path) -> Result<String> {
    let extraction = ExtractConfig {
        threshold_factor: args.threshold,
        confirm_points: args.confirm,
        n_resamples: args.resamples,
        window_halfwidth: args.window,
        seed: args.seed,
    };
    extraction.validate()?;
    let options = FitOptions {
        with_offset: args.offset,
        max_iterations: args.max_iterations,
        ..FitOptions::default()
    };
    write_resolved(
        out,
        "iv",
        &IvSettings {
            manifest: &args.manifest,
            extraction: &extraction,
            fit: &options,
        },
    )?;
    let loaded = ivlab::load_manifest(&args.manifest)?;
    if loaded.traces.is_empty() {
        return Err(Error::InsufficientData("no readable traces in the manifest".into()));
    }
    let series = ivlab::efficiency_series(&loaded.traces, &extraction)?;
    write_with(&out.join("efficiency_series.csv"), |w| ivlab::write_series_csv(w, &series.points))?;
    if series.points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable field points, the fit needs at least 4",
            series.points.len()
        )));
    }
    let fit = ivlab::fit_sinusoid(&series.points, &options)?;
    write_file(
        &out.join("fit.json"),
        ivlab::fit_json(&fit, &extraction, &options, &series.skipped, &loaded.failures)?.as_bytes(),
    )?;
    write_with(&out.join("fit_residuals.csv"), |w| ivlab::write_residuals_csv(w, &fit))?;
    let mut s = format!(
        "points={} skipped_fields={} unreadable_files={}\na={:.6} b={:.6} c={:.6} r_squared={:.6} converged={} degenerate={}\n",
        series.points.len(),
        series.skipped.len(),
        loaded.failures.len(),
        fit.a,
        fit.b,
        fit.c,
        fit.r_squared,
        fit.converged,
        fit.degenerate
    );
    if let Some(d) = fit.d {
        writeln!(s, "d={d:.6}").expect("string write");
    }
    Ok(s)
}

/// Synthetic corpus plus `manifest.json` in the output directory.
pub fn cmd_synth_iv(args: &SynthIvArgs, out: &Path) -> Result<String> {
    let cfg = SynthConfig {
        amplitude: args.amplitude,
        frequency: args.frequency,
        phase: args.phase,
        voltage_noise: args.voltage_noise,
        ic_jitter: args.ic_jitter,
        seed: args.seed,
        ..SynthConfig::default()
    };
    if !(cfg.amplitude.abs() < 1.0 && cfg.voltage_noise >= 0.0 && cfg.ic_jitter >= 0.0) {
        return Err(Error::Domain("synthetic corpus needs |amplitude| < 1 and non-negative noise".into()));
    }
    write_resolved(out, "synth-iv", &cfg)?;
    let manifest = ivlab::synth::write_corpus(out, &cfg)?;
    Ok(format!("manifest={}\n", manifest.display()))
}
