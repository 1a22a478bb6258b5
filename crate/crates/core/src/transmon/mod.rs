//! Transmon shunted by a diode junction, `H = 4E_C(n̂ − n_g)² + E_J F(φ̂)`.
//!
//! Two solvers are provided. The phase-grid solver discretizes the full
//! potential between hard walls and is the reference for bound-state
//! counting. The oscillator-basis solver expands `F` to fourth order about
//! φ = 0 and represents `φ̂`, `n̂` with ladder operators.

mod export;
mod frequencies;
mod grid;
mod params;
mod truncated;
mod wells;

pub use export::{write_potential_csv, write_spectrum_csv, WellReport};
pub use frequencies::{qubit_frequencies, QubitFrequencies};
pub use grid::{
    build_grid_hamiltonian, extrapolated_energies, grid_hamiltonian, solve_below, solve_spectrum, GridHamiltonian,
    Spectrum,
};
pub use params::{PhaseGrid, TransmonParams, TRANSMON_REGIME_RATIO};
pub use truncated::{
    build_truncated_hamiltonian, charge_operator, hermiticity_error, phase_operator, quartic_well, taylor_coefficients,
    truncated_levels, truncated_spectrum, QuarticWell, TruncatedLevels, DEFAULT_FOCK, MIN_FOCK,
};
pub use wells::{
    analyze_wells, bound_states, eta_range, locate_central_well, sweep_two_level_window, BoundLevel, EtaInterval,
    SweepPoint, TwoLevelSweep, WellAnalysis, WellGeometry, BOUND_WEIGHT_THRESHOLD,
};
