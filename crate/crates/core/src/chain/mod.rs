//! Excitation transfer through a chain of qubits joined by diode junctions.
//!
//! The model lives in the single-excitation sector: site `k` is "qubit `k`
//! excited, all others in the ground state", plus the common ground state
//! reached by decay. Hopping is directional, `g(1+η)` forward and `g(1−η)`
//! backward, which is Hermitian exchange at η = 0 and a perfect diode at
//! η → 1. Because the generator is not Hermitian for η ≠ 0, the state is
//! renormalized at readout. Time is in ns and rates in rad/ns.
//!
//! Noise is quasi-static: each trajectory draws its on-site shifts
//! (E_J and charge jitter) and hopping phases once, evolves with uniform
//! decay, and adds uniform readout noise clamped to [0, 1].

mod config;
mod export;
mod generator;
mod integrate;
mod map;

pub use config::{ChainConfig, ChainRunConfig, NoiseConfig, DEFAULT_COUPLING};
pub use export::{map_json, write_map_csv, write_row_summary_csv};
pub use generator::{basis_state, build_chain_generator, evolve, evolve_raw, state_fidelity, ChainGenerator, Evolution};
pub use integrate::{StepStats, Tolerances};
pub use map::{
    asymmetry_regions, default_eta_grid, default_time_grid, fidelity_map, transfer_fidelity, Cell, Direction,
    FidelityMap, RowSummary,
};
