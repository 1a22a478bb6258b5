use nalgebra::{ComplexField, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{build_grid_hamiltonian, solve_below, solve_spectrum, Spectrum};
use super::params::{PhaseGrid, TransmonParams};
use crate::cpr::{cpr_potential, golden_section};
use crate::error::{Error, Result};

/// Minimum probability inside the central well for a bound level.
pub const BOUND_WEIGHT_THRESHOLD: f64 = 0.9;

/// Central well of `E_J F(φ)`: the local minimum nearest φ = 0 and the
/// two maxima around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WellGeometry {
    pub well_left: f64,
    pub well_min_phi: f64,
    pub well_right: f64,
    /// `E_J F` at the lower of the two maxima, on the spectrum's energy scale.
    pub barrier_energy: f64,
    pub min_energy: f64,
}

/// One level localized in the central well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundLevel {
    pub energy: f64,
    pub well_weight: f64,
    /// Eigenstate contributing most to this level.
    pub dominant_index: usize,
    pub dominant_overlap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WellAnalysis {
    pub well_left: f64,
    pub well_right: f64,
    pub well_min_phi: f64,
    pub barrier_energy: f64,
    pub min_energy: f64,
    /// Ascending, one per bound level.
    pub bound_state_indices: Vec<usize>,
    pub bound_levels: Vec<BoundLevel>,
    /// Probability inside the well for each spectrum entry.
    pub state_weights: Vec<f64>,
}

impl WellAnalysis {
    pub fn bound_count(&self) -> usize {
        self.bound_levels.len()
    }

    pub fn level_energies(&self) -> Vec<f64> {
        self.bound_levels.iter().map(|l| l.energy).collect()
    }

    pub fn is_bound(&self, index: usize) -> bool {
        self.bound_state_indices.binary_search(&index).is_ok()
    }
}

/// Locates the central well on the grid and refines the extrema.
pub fn locate_central_well(params: &TransmonParams, grid: &PhaseGrid) -> Result<WellGeometry> {
    params.validate()?;
    grid.validate()?;
    let cpr = params.cpr();
    let e_j = params.e_j;
    let v = |phi: f64| e_j * cpr_potential(&cpr, phi);
    let values: Vec<f64> = (0..grid.n_points).map(|i| v(grid.point(i))).collect();
    let n = values.len();

    let no_well = |why: &str| {
        Error::Domain(format!(
            "no central well for eta={} on [{:.4}, {:.4}]: {why}",
            params.eta, grid.phi_min, grid.phi_max
        ))
    };

    let imin = (1..n - 1)
        .filter(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
        .min_by(|&a, &b| grid.point(a).abs().total_cmp(&grid.point(b).abs()))
        .ok_or_else(|| no_well("potential has no interior local minimum"))?;

    let mut il = imin;
    while il > 0 && values[il - 1] > values[il] {
        il -= 1;
    }
    let mut ir = imin;
    while ir + 1 < n && values[ir + 1] >= values[ir] {
        ir += 1;
    }
    if il == 0 || ir == n - 1 {
        return Err(no_well("a flanking maximum lies outside the grid"));
    }

    let h = grid.spacing();
    let tol = 1e-12 * (1.0 + grid.phi_max.abs().max(grid.phi_min.abs()));
    let p = |i: usize| grid.point(i);
    let well_min_phi = golden_section(v, p(imin) - h, p(imin) + h, tol);
    let well_left = golden_section(|x| -v(x), p(il) - h, p(il) + h, tol);
    let well_right = golden_section(|x| -v(x), p(ir) - h, p(ir) + h, tol);
    Ok(WellGeometry {
        well_left,
        well_min_phi,
        well_right,
        barrier_energy: v(well_left).min(v(well_right)),
        min_energy: v(well_min_phi),
    })
}

/// Classifies the bound levels of the central well.
///
/// Eigenstates below the barrier can hybridize with states of the same
/// energy living outside the well, which smears a single localized level
/// over several eigenstates. The classification therefore works on the
/// sub-barrier subspace as a whole: the well-projector
/// `M_ij = ⟨ψ_i|P_well|ψ_j⟩` is diagonalized and its eigenvectors with
/// weight ≥ 0.9 span the localized subspace. The Hamiltonian restricted to
/// that subspace gives the level energies, and each level is tagged with
/// the eigenstate it overlaps most. Without hybridization this reduces to
/// the plain per-eigenstate rule.
pub fn analyze_wells(params: &TransmonParams, grid: &PhaseGrid, spectrum: &Spectrum) -> Result<WellAnalysis> {
    if spectrum.grid != *grid {
        return Err(Error::InvalidInput("spectrum was computed on a different grid".into()));
    }
    let geo = locate_central_well(params, grid)?;
    if spectrum.complete_below < geo.barrier_energy {
        return Err(Error::InsufficientData(format!(
            "spectrum is complete only below {:.6}, but the barrier is at {:.6}; request more eigenstates",
            spectrum.complete_below, geo.barrier_energy
        )));
    }

    let (a, b) = (geo.well_left, geo.well_right);
    let state_weights: Vec<f64> = (0..spectrum.len()).map(|k| spectrum.weight_in(k, a, b)).collect();
    let sub: Vec<usize> = (0..spectrum.len())
        .filter(|&k| spectrum.energies[k] < geo.barrier_energy)
        .collect();

    let bound_levels = if sub.is_empty() {
        Vec::new()
    } else {
        localized_levels(spectrum, &sub, a, b)?
    };
    let mut bound_state_indices: Vec<usize> = bound_levels.iter().map(|l| l.dominant_index).collect();
    bound_state_indices.sort_unstable();

    Ok(WellAnalysis {
        well_left: geo.well_left,
        well_right: geo.well_right,
        well_min_phi: geo.well_min_phi,
        barrier_energy: geo.barrier_energy,
        min_energy: geo.min_energy,
        bound_state_indices,
        bound_levels,
        state_weights,
    })
}

fn localized_levels(spectrum: &Spectrum, sub: &[usize], a: f64, b: f64) -> Result<Vec<BoundLevel>> {
    let grid = spectrum.grid;
    let h = grid.spacing();
    let inside: Vec<usize> = (0..grid.n_points)
        .filter(|&i| {
            let x = grid.point(i);
            x >= a && x <= b
        })
        .collect();
    let amp = DMatrix::from_fn(inside.len(), sub.len(), |r, c| spectrum.wavefunctions[sub[c]][inside[r]]);
    let overlap = amp.transpose() * &amp * h;
    let energies: Vec<f64> = sub.iter().map(|&k| spectrum.energies[k]).collect();
    ritz_levels(&overlap, &energies, sub)
}

/// Shared by the grid and oscillator-basis paths: given the well
/// projector in a basis of eigenstates with energies `energies` and
/// external labels `labels`, returns the localized levels.
pub(crate) fn ritz_levels<T>(overlap: &DMatrix<T>, energies: &[f64], labels: &[usize]) -> Result<Vec<BoundLevel>>
where
    T: ComplexField<RealField = f64>,
{
    let m = energies.len();
    let eig = overlap.clone().symmetric_eigen();
    let keep: Vec<usize> = (0..m)
        .filter(|&i| eig.eigenvalues[i] >= BOUND_WEIGHT_THRESHOLD)
        .collect();
    if keep.is_empty() {
        return Ok(Vec::new());
    }
    let q = DMatrix::from_fn(m, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])].clone());
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(m, energies.iter().map(|&e| T::from_real(e))));
    let hs = q.adjoint() * diag * &q;
    let hs = (&hs + hs.adjoint()) * T::from_real(0.5);
    let ritz = hs.symmetric_eigen();
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&x, &y| ritz.eigenvalues[x].total_cmp(&ritz.eigenvalues[y]));

    let mut taken = vec![false; m];
    let mut levels = Vec::with_capacity(keep.len());
    for &j in &order {
        let c = &q * ritz.eigenvectors.column(j);
        let weight = (c.adjoint() * overlap * &c)[(0, 0)].clone().real();
        if !weight.is_finite() {
            return Err(Error::Numerical("non-finite bound-level vector".into()));
        }
        let (dom, ov) = (0..m)
            .filter(|&i| !taken[i])
            .map(|i| (i, c[i].clone().modulus_squared()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("fewer levels than states");
        taken[dom] = true;
        levels.push(BoundLevel {
            energy: ritz.eigenvalues[j],
            well_weight: weight,
            dominant_index: labels[dom],
            dominant_overlap: ov,
        });
    }
    Ok(levels)
}

/// Solves the grid problem with every eigenstate below the barrier (and
/// at least `min_states` states) and classifies the bound levels.
pub fn bound_states(params: &TransmonParams, grid: &PhaseGrid, min_states: usize) -> Result<(Spectrum, WellAnalysis)> {
    let geo = locate_central_well(params, grid)?;
    let ham = build_grid_hamiltonian(params, grid)?;
    let mut spectrum = solve_below(&ham, geo.barrier_energy)?;
    if spectrum.len() < min_states {
        spectrum = solve_spectrum(&ham, min_states.min(ham.matrix.dim()))?;
        spectrum.complete_below = spectrum.complete_below.max(geo.barrier_energy);
    }
    let analysis = analyze_wells(params, grid, &spectrum)?;
    Ok((spectrum, analysis))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eta: f64,
    pub bound_count: usize,
}

/// Closed η interval `[lo, hi]` of grid values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl EtaInterval {
    pub fn contains(&self, eta: f64) -> bool {
        self.lo <= eta && eta <= self.hi
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoLevelSweep {
    pub e_j_over_e_c: f64,
    pub points: Vec<SweepPoint>,
    /// Maximal runs with exactly two bound levels.
    pub windows: Vec<EtaInterval>,
}

impl TwoLevelSweep {
    /// Maximal runs of grid points with the given count.
    pub fn windows_with_count(&self, count: usize) -> Vec<EtaInterval> {
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for (i, p) in self.points.iter().enumerate() {
            match (p.bound_count == count, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push(EtaInterval {
                        lo: self.points[s].eta,
                        hi: self.points[i - 1].eta,
                    });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(EtaInterval {
                lo: self.points[s].eta,
                hi: self.points.last().expect("non-empty").eta,
            });
        }
        out
    }
}

/// Bound-level count for each η (E_C = 1) and the two-level windows.
/// Points are evaluated in parallel; the result does not depend on the
/// worker count.
pub fn sweep_two_level_window(e_j_over_e_c: f64, eta_grid: &[f64], grid: &PhaseGrid) -> Result<TwoLevelSweep> {
    if eta_grid.is_empty() {
        return Err(Error::InvalidInput("empty eta grid".into()));
    }
    if eta_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidInput("eta grid must lie in (0, 1)".into()));
    }
    if eta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("eta grid must be strictly ascending".into()));
    }
    let points = eta_grid
        .par_iter()
        .map(|&eta| {
            let params = TransmonParams::from_ratio(e_j_over_e_c, eta)?;
            let (_, analysis) = bound_states(&params, grid, 0).map_err(|e| e.context(format!("eta={eta}")))?;
            Ok(SweepPoint {
                eta,
                bound_count: analysis.bound_count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = TwoLevelSweep {
        e_j_over_e_c,
        points,
        windows: Vec::new(),
    };
    sweep.windows = sweep.windows_with_count(2);
    Ok(sweep)
}

/// `start, start + step, …` up to `stop` inclusive, rounded to 12
/// decimals so that grid values compare equal to typed literals.
pub fn eta_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidInput(format!("bad eta range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}
