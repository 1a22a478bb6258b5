//! Numerical toolkit for nonreciprocal superconducting quantum diodes.
//!
//! * [`cpr`]: the skewed current-phase relation, its tilted-washboard
//!   potential, critical currents and the diode efficiency.
//! * [`transmon`]: phase-grid and oscillator-basis Hamiltonians of a
//!   transmon shunted by a diode junction, central-well bound states,
//!   qubit frequency and anharmonicity.
//! * [`chain`]: forward/reverse excitation transfer through a chain of
//!   qubits coupled by directional (diode) junctions, with a quasi-static
//!   noise model.
//! * [`ivlab`]: reduction of measured I-V sweeps to critical currents,
//!   bootstrap error bars, efficiencies and sinusoidal field fits.
//! * [`cli`]: the `qdiode` command-line front end.

pub mod chain;
pub mod cli;
pub mod cpr;
pub mod error;
pub mod eigen;
pub mod ivlab;
pub mod schema;
pub mod transmon;

pub use error::{Error, Result};
