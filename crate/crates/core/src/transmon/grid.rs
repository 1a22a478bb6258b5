use serde::Serialize;

use super::params::{PhaseGrid, TransmonParams};
use crate::cpr::cpr_potential;
use crate::eigen::{self, SymTridiagonal};
use crate::error::{Error, Result};

/// Finite-difference Hamiltonian on the interior points of a phase grid.
///
/// Row `i` of `matrix` belongs to grid point `i + 1`; the wall points
/// carry the Dirichlet condition ψ = 0 and are not unknowns.
#[derive(Debug, Clone)]
pub struct GridHamiltonian {
    pub grid: PhaseGrid,
    pub matrix: SymTridiagonal,
}

/// Hamiltonian `−4E_C ∂²/∂φ² + V(φ)` with the three-point stencil.
///
/// Any potential can be plugged in, which is how oscillator and box
/// reference problems are checked.
pub fn grid_hamiltonian<V: Fn(f64) -> f64>(
    grid: &PhaseGrid,
    e_c: f64,
    potential: V,
) -> Result<GridHamiltonian> {
    grid.validate()?;
    if !(e_c.is_finite() && e_c > 0.0) {
        return Err(Error::Domain(format!("e_c must be positive, got {e_c}")));
    }
    let h = grid.spacing();
    let kinetic = 4.0 * e_c / (h * h);
    let n = grid.n_points - 2;
    let mut diag = Vec::with_capacity(n);
    for i in 1..=n {
        let v = potential(grid.point(i));
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "potential is not finite at phi = {}",
                grid.point(i)
            )));
        }
        diag.push(2.0 * kinetic + v);
    }
    let off = vec![-kinetic; n.saturating_sub(1)];
    let matrix = SymTridiagonal::new(diag, off)?;
    Ok(GridHamiltonian { grid: *grid, matrix })
}

/// Transmon-diode Hamiltonian `4E_C n̂² + E_J F(φ)` on the grid. The gate
/// charge is gauged away on an open grid, so `params.n_g` is not used.
pub fn build_grid_hamiltonian(params: &TransmonParams, grid: &PhaseGrid) -> Result<GridHamiltonian> {
    params.validate()?;
    let cpr = params.cpr();
    let e_j = params.e_j;
    grid_hamiltonian(grid, params.e_c, |phi| e_j * cpr_potential(&cpr, phi))
}

/// Lowest eigenpairs on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    /// One array per energy over all `grid.n_points` points, zero at the
    /// walls, normalized so that `Σ ψ² h = 1`.
    pub wavefunctions: Vec<Vec<f64>>,
    pub grid: PhaseGrid,
    /// Every eigenvalue below this energy is present in `energies`.
    pub complete_below: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Trapezoid-rule probability of state `k` on `[a, b]`.
    pub fn weight_in(&self, k: usize, a: f64, b: f64) -> f64 {
        let h = self.grid.spacing();
        let psi = &self.wavefunctions[k];
        let mut w = 0.0;
        for i in 0..psi.len() {
            let phi = self.grid.point(i);
            if phi >= a && phi <= b {
                w += psi[i] * psi[i];
            }
        }
        w * h
    }

    pub fn expectation_phi(&self, k: usize) -> f64 {
        let h = self.grid.spacing();
        self.wavefunctions[k]
            .iter()
            .enumerate()
            .map(|(i, p)| p * p * self.grid.point(i))
            .sum::<f64>()
            * h
    }
}

/// The `k` lowest eigenpairs.
pub fn solve_spectrum(hamiltonian: &GridHamiltonian, k: usize) -> Result<Spectrum> {
    let pairs = eigen::lowest(&hamiltonian.matrix, k)?;
    let complete_below = if k == hamiltonian.matrix.dim() {
        f64::INFINITY
    } else {
        // Everything between the k-th value and the next one is covered too,
        // but the k-th value itself is the safe statement.
        *pairs.values.last().expect("k >= 1")
    };
    Ok(to_spectrum(hamiltonian, pairs, complete_below))
}

/// Every eigenpair with energy below `ceiling`.
pub fn solve_below(hamiltonian: &GridHamiltonian, ceiling: f64) -> Result<Spectrum> {
    let pairs = eigen::below(&hamiltonian.matrix, ceiling)?;
    Ok(to_spectrum(hamiltonian, pairs, ceiling))
}

fn to_spectrum(hamiltonian: &GridHamiltonian, pairs: eigen::Eigenpairs, complete_below: f64) -> Spectrum {
    let grid = hamiltonian.grid;
    let scale = 1.0 / grid.spacing().sqrt();
    let wavefunctions = pairs
        .vectors
        .into_iter()
        .map(|v| {
            let mut psi = Vec::with_capacity(grid.n_points);
            psi.push(0.0);
            psi.extend(v.into_iter().map(|x| x * scale));
            psi.push(0.0);
            psi
        })
        .collect();
    Spectrum {
        energies: pairs.values,
        wavefunctions,
        grid,
        complete_below,
    }
}

/// Richardson-extrapolated lowest `k` energies from `grid` and its
/// refinement. The stencil error is O(h²), so `(4E_fine − E_coarse)/3`
/// removes the leading term.
pub fn extrapolated_energies(params: &TransmonParams, grid: &PhaseGrid, k: usize) -> Result<Vec<f64>> {
    let coarse = solve_spectrum(&build_grid_hamiltonian(params, grid)?, k)?;
    let fine = solve_spectrum(&build_grid_hamiltonian(params, &grid.refined())?, k)?;
    Ok(coarse
        .energies
        .iter()
        .zip(&fine.energies)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}
