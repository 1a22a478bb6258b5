use serde::Serialize;

use crate::error::{Error, Result};

/// Transition frequencies in the energy unit of the input (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitFrequencies {
    pub omega_01: f64,
    pub omega_12: f64,
    pub anharmonicity: f64,
}

/// From the three lowest levels, ascending.
pub fn qubit_frequencies(levels: &[f64]) -> Result<QubitFrequencies> {
    if levels.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "qubit frequencies need 3 levels, got {}",
            levels.len()
        )));
    }
    let omega_01 = levels[1] - levels[0];
    let omega_12 = levels[2] - levels[1];
    Ok(QubitFrequencies {
        omega_01,
        omega_12,
        anharmonicity: omega_12 - omega_01,
    })
}
