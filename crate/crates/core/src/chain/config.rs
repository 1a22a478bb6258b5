use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cpr::check_eta;
use crate::error::{Error, Result};

/// Default exchange coupling, 0.05·2π rad/ns. The two-site swap time
/// π/(2g) is then 5 ns.
pub const DEFAULT_COUPLING: f64 = 0.05 * TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_qubits: usize,
    /// rad/ns.
    pub coupling_g: f64,
    pub eta: f64,
    /// Per-qubit frequency offsets in rad/ns; `None` means identical qubits.
    pub qubit_frequencies: Option<Vec<f64>>,
    /// Sets how strongly E_J jitter moves the qubit frequency.
    pub e_j_over_e_c: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_qubits: 3,
            coupling_g: DEFAULT_COUPLING,
            eta: 0.0,
            qubit_frequencies: None,
            e_j_over_e_c: 20.0,
        }
    }
}

impl ChainConfig {
    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::InvalidInput(format!("n_qubits must be >= 2, got {}", self.n_qubits)));
        }
        if !(self.coupling_g.is_finite() && self.coupling_g > 0.0) {
            return Err(Error::Domain(format!("coupling_g must be positive, got {}", self.coupling_g)));
        }
        check_eta(self.eta)?;
        if !(self.e_j_over_e_c.is_finite() && self.e_j_over_e_c > 0.0) {
            return Err(Error::Domain(format!("e_j_over_e_c must be positive, got {}", self.e_j_over_e_c)));
        }
        if let Some(f) = &self.qubit_frequencies {
            if f.len() != self.n_qubits {
                return Err(Error::InvalidInput(format!(
                    "{} qubit frequencies given for {} qubits",
                    f.len(),
                    self.n_qubits
                )));
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite qubit frequency".into()));
            }
        }
        Ok(())
    }

    /// Frequency shift per unit of E_J jitter (in E_C), in units of E_C:
    /// `dω₀₁/dE_J = √(2E_C/E_J)`.
    pub fn ej_sensitivity(&self) -> f64 {
        (2.0 / self.e_j_over_e_c).sqrt()
    }
}

/// Quasi-static noise. Amplitudes are half-widths of uniform draws; the
/// E_J, charge and dissipation figures are expressed relative to the
/// coupling `g`, the phase jitter in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub ej_fluctuation: f64,
    pub charge_noise: f64,
    pub phase_noise: f64,
    pub dissipation_rate: f64,
    pub measurement_uncertainty: f64,
    pub n_trajectories: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            ej_fluctuation: 0.5,
            charge_noise: 0.03,
            phase_noise: 0.02,
            dissipation_rate: 0.01,
            measurement_uncertainty: 0.002,
            n_trajectories: 100,
            seed: 1234,
        }
    }
}

impl NoiseConfig {
    /// Every amplitude zero, one trajectory.
    pub fn silent() -> Self {
        Self {
            ej_fluctuation: 0.0,
            charge_noise: 0.0,
            phase_noise: 0.0,
            dissipation_rate: 0.0,
            measurement_uncertainty: 0.0,
            n_trajectories: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let amps = [
            ("ej_fluctuation", self.ej_fluctuation),
            ("charge_noise", self.charge_noise),
            ("phase_noise", self.phase_noise),
            ("dissipation_rate", self.dissipation_rate),
            ("measurement_uncertainty", self.measurement_uncertainty),
        ];
        for (name, v) in amps {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidInput("n_trajectories must be >= 1".into()));
        }
        Ok(())
    }
}

/// Chain and optional noise settings as read from a JSON file:
/// `{"chain": {...}, "noise": {...}}`, both sections optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainRunConfig {
    pub chain: ChainConfig,
    pub noise: Option<NoiseConfig>,
}

impl ChainRunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Parse(format!("chain config: {e}")))?;
        cfg.chain.validate()?;
        if let Some(n) = &cfg.noise {
            n.validate()?;
        }
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }
}
