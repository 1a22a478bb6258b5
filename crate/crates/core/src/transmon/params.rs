use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cpr::{check_eta, DiodeCpr};
use crate::error::{Error, Result};

/// Below this E_J/E_C the circuit leaves the transmon regime.
pub const TRANSMON_REGIME_RATIO: f64 = 10.0;

/// Circuit parameters. Energies are in units of E_C unless `e_c` is
/// set to something other than 1, in which case they share its unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    pub e_j: f64,
    pub e_c: f64,
    pub n_g: f64,
    pub eta: f64,
}

impl TransmonParams {
    /// `e_j = 0` is accepted and gives the free particle in a box.
    pub fn new(e_j: f64, e_c: f64, n_g: f64, eta: f64) -> Result<Self> {
        let p = Self { e_j, e_c, n_g, eta };
        p.validate()?;
        if e_j > 0.0 && e_j / e_c < TRANSMON_REGIME_RATIO {
            log::warn!(
                "E_J/E_C = {:.3} is below {TRANSMON_REGIME_RATIO}; outside the transmon regime",
                e_j / e_c
            );
        }
        Ok(p)
    }

    /// `E_C = 1`, `n_g = 0`.
    pub fn from_ratio(e_j_over_e_c: f64, eta: f64) -> Result<Self> {
        Self::new(e_j_over_e_c, 1.0, 0.0, eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_j.is_finite() && self.e_c.is_finite() && self.n_g.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite circuit parameter (e_j={}, e_c={}, n_g={})",
                self.e_j, self.e_c, self.n_g
            )));
        }
        if self.e_j < 0.0 {
            return Err(Error::Domain(format!("e_j must be non-negative, got {}", self.e_j)));
        }
        if self.e_c <= 0.0 {
            return Err(Error::Domain(format!("e_c must be positive, got {}", self.e_c)));
        }
        check_eta(self.eta)
    }

    pub fn ratio(&self) -> f64 {
        self.e_j / self.e_c
    }

    pub fn cpr(&self) -> DiodeCpr {
        DiodeCpr::new(self.eta).expect("eta validated at construction")
    }
}

/// Uniform phase grid including both wall points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub phi_min: f64,
    pub phi_max: f64,
    pub n_points: usize,
}

impl Default for PhaseGrid {
    /// [−2π, 2π] with 2001 points.
    fn default() -> Self {
        Self {
            phi_min: -2.0 * PI,
            phi_max: 2.0 * PI,
            n_points: 2001,
        }
    }
}

impl PhaseGrid {
    pub fn new(phi_min: f64, phi_max: f64, n_points: usize) -> Result<Self> {
        let g = Self {
            phi_min,
            phi_max,
            n_points,
        };
        g.validate()?;
        Ok(g)
    }

    /// [−3π, 3π] at the default spacing (3001 points).
    pub fn widened() -> Self {
        Self {
            phi_min: -3.0 * PI,
            phi_max: 3.0 * PI,
            n_points: 3001,
        }
    }

    /// Same bounds, spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_min.is_finite() && self.phi_max.is_finite()) {
            return Err(Error::InvalidInput("non-finite grid bounds".into()));
        }
        if !(self.phi_min < 0.0 && 0.0 < self.phi_max) {
            return Err(Error::InvalidInput(format!(
                "grid must satisfy phi_min < 0 < phi_max, got [{}, {}]",
                self.phi_min, self.phi_max
            )));
        }
        if self.n_points < 3 || self.n_points.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "grid needs an odd number of points >= 3, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.phi_max - self.phi_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.phi_max
        } else {
            self.phi_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.phi_max - self.phi_min
    }
}
