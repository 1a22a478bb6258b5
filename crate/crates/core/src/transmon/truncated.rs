use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::params::TransmonParams;
use super::wells::{ritz_levels, BoundLevel};
use crate::error::{Error, Result};

/// Smallest accepted oscillator basis.
pub const MIN_FOCK: usize = 10;

/// Basis used when nothing else is requested. The quartic expansion is
/// unbounded below, so its truncated spectrum does not converge with the
/// basis size; 12 states keep the low levels inside the expansion's
/// region of validity.
pub const DEFAULT_FOCK: usize = 12;

/// Coefficients `[c₂, c₃, c₄]` of `c₂φ² + c₃φ³ + c₄φ⁴`, the expansion of
/// `F(φ)` about φ = 0 with constants dropped.
pub fn taylor_coefficients(eta: f64) -> [f64; 3] {
    let s = (1.0 - eta * eta).sqrt();
    [0.5 * s, eta / 6.0, -s / 24.0]
}

fn check_basis(params: &TransmonParams, n_fock: usize) -> Result<()> {
    params.validate()?;
    if params.e_j <= 0.0 {
        return Err(Error::Domain("the oscillator basis needs e_j > 0".into()));
    }
    if n_fock < MIN_FOCK {
        return Err(Error::InvalidInput(format!(
            "n_fock must be at least {MIN_FOCK}, got {n_fock}"
        )));
    }
    Ok(())
}

fn lowering(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `φ̂ = (2E_C/E_J)^{1/4}(a† + a)` in the number basis.
pub fn phase_operator(params: &TransmonParams, n_fock: usize) -> DMatrix<f64> {
    let a = lowering(n_fock);
    (a.transpose() + a) * (2.0 * params.e_c / params.e_j).powf(0.25)
}

/// `n̂ = (i/2)(E_J/2E_C)^{1/4}(a† − a)` in the number basis.
pub fn charge_operator(params: &TransmonParams, n_fock: usize) -> DMatrix<Complex64> {
    let a = lowering(n_fock);
    let scale = 0.5 * (params.e_j / (2.0 * params.e_c)).powf(0.25);
    to_complex(&(a.transpose() - a)) * Complex64::new(0.0, scale)
}

/// `4E_C(n̂ − n_g)² + E_J[c₂φ̂² + c₃φ̂³ + c₄φ̂⁴]` with the operators
/// truncated to `n_fock` states before the products are formed.
pub fn build_truncated_hamiltonian(params: &TransmonParams, n_fock: usize) -> Result<DMatrix<Complex64>> {
    check_basis(params, n_fock)?;
    let [c2, c3, c4] = taylor_coefficients(params.eta);
    let phi = phase_operator(params, n_fock);
    let p2 = &phi * &phi;
    let p3 = &p2 * &phi;
    let p4 = &p3 * &phi;
    let potential = (p2 * c2 + p3 * c3 + p4 * c4) * params.e_j;

    let shifted = charge_operator(params, n_fock)
        - DMatrix::<Complex64>::identity(n_fock, n_fock) * Complex64::new(params.n_g, 0.0);
    let kinetic = &shifted * &shifted * Complex64::new(4.0 * params.e_c, 0.0);
    let h = kinetic + to_complex(&potential);
    // Remove round-off asymmetry.
    Ok((&h + h.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Largest `|H − H†|` entry.
pub fn hermiticity_error(h: &DMatrix<Complex64>) -> f64 {
    (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Raw eigenvalues of the truncated Hamiltonian, lowest `k`.
pub fn truncated_spectrum(params: &TransmonParams, n_fock: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > n_fock {
        return Err(Error::InvalidInput(format!(
            "cannot extract {k} eigenvalues from an oscillator basis of {n_fock} states"
        )));
    }
    let h = build_truncated_hamiltonian(params, n_fock)?;
    let mut e: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e.truncate(k);
    Ok(e)
}

/// Well of the quartic potential `c₂φ² + c₃φ³ + c₄φ⁴`: its two maxima and
/// the lower of the two barrier heights times `E_J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarticWell {
    pub well_left: f64,
    pub well_right: f64,
    pub barrier_energy: f64,
}

pub fn quartic_well(params: &TransmonParams) -> QuarticWell {
    let [c2, c3, c4] = taylor_coefficients(params.eta);
    // V'(φ) = φ(2c₂ + 3c₃φ + 4c₄φ²); c₄ < 0 so the roots straddle 0.
    let (qa, qb, qc) = (4.0 * c4, 3.0 * c3, 2.0 * c2);
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let r1 = (-qb + disc) / (2.0 * qa);
    let r2 = (-qb - disc) / (2.0 * qa);
    let (l, r) = (r1.min(r2), r1.max(r2));
    let v = |x: f64| c2 * x * x + c3 * x.powi(3) + c4 * x.powi(4);
    QuarticWell {
        well_left: l,
        well_right: r,
        barrier_energy: params.e_j * v(l).min(v(r)),
    }
}

/// Localized levels of the truncated Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedLevels {
    pub n_fock: usize,
    pub well: QuarticWell,
    pub levels: Vec<BoundLevel>,
}

impl TruncatedLevels {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// Levels of the truncated Hamiltonian that live inside the quartic well.
///
/// The quartic expansion is unbounded below, so the truncated spectrum
/// also contains states sitting beyond the barriers. The eigenstates of
/// `φ̂` give a discrete phase grid in the same basis; the sub-barrier
/// eigenstates are projected onto the grid points inside the well and
/// classified exactly like the phase-grid solver does.
pub fn truncated_levels(params: &TransmonParams, n_fock: usize) -> Result<TruncatedLevels> {
    let h = build_truncated_hamiltonian(params, n_fock)?;
    let well = quartic_well(params);

    let phi = phase_operator(params, n_fock).symmetric_eigen();
    let inside: Vec<usize> = (0..n_fock)
        .filter(|&k| phi.eigenvalues[k] >= well.well_left && phi.eigenvalues[k] <= well.well_right)
        .collect();

    let eig = h.symmetric_eigen();
    let mut sub: Vec<usize> = (0..n_fock)
        .filter(|&k| eig.eigenvalues[k] < well.barrier_energy)
        .collect();
    sub.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    if sub.is_empty() || inside.is_empty() {
        return Ok(TruncatedLevels {
            n_fock,
            well,
            levels: Vec::new(),
        });
    }

    let grid_rows = DMatrix::from_fn(inside.len(), n_fock, |r, c| Complex64::new(phi.eigenvectors[(c, inside[r])], 0.0));
    let states = DMatrix::from_fn(n_fock, sub.len(), |r, c| eig.eigenvectors[(r, sub[c])]);
    let amp = grid_rows * states;
    let overlap = amp.adjoint() * &amp;
    let energies: Vec<f64> = sub.iter().map(|&k| eig.eigenvalues[k]).collect();
    let labels: Vec<usize> = (0..sub.len()).collect();
    let levels = ritz_levels(&overlap, &energies, &labels)?;
    Ok(TruncatedLevels { n_fock, well, levels })
}
