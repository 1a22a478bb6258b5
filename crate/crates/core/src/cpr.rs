//! Skewed current-phase relation of a diode Josephson junction.
//!
//! The junction current is `I(φ) = I_J f(φ)` with
//! `f(φ) = sin(φ − arcsin η) + η`, and the matching (tilted washboard)
//! potential is `F(φ) = −cos(φ − arcsin η) + ηφ`, so that `F' = f`.
//! The current vanishes at `φ = 0` for every η, the maximum is
//! `I_J (1 + η)` and the minimum `−I_J (1 − η)`, which makes η the
//! diode efficiency of the junction.
//!
//! Efficiencies are fractions in (−1, 1) everywhere in this crate.
//! [`to_percent`] and [`from_percent`] exist for I/O boundaries.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of samples in the coarse scan preceding golden-section refinement.
pub const COARSE_SCAN_POINTS: usize = 1024;

/// A current-phase relation `I(φ)` together with its potential `F(φ)`
/// (`dF/dφ = I/I_J`). Implementors must be 2π-periodic in the current;
/// the potential may carry a linear tilt.
pub trait CurrentPhaseRelation {
    fn current(&self, phi: f64) -> f64;
    fn potential(&self, phi: f64) -> f64;
}

/// The minimally skew-symmetric diode CPR parameterized by its efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeCpr {
    eta: f64,
    i_j: f64,
}

impl DiodeCpr {
    /// Unit junction scale `I_J = 1`.
    pub fn new(eta: f64) -> Result<Self> {
        Self::with_scale(eta, 1.0)
    }

    pub fn with_scale(eta: f64, i_j: f64) -> Result<Self> {
        check_eta(eta)?;
        if !(i_j.is_finite() && i_j > 0.0) {
            return Err(Error::Domain(format!(
                "junction current scale must be positive and finite, got {i_j}"
            )));
        }
        Ok(Self { eta, i_j })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn i_j(&self) -> f64 {
        self.i_j
    }

    /// Anomalous phase `φ₀ = arcsin η`, in (−π/2, π/2).
    pub fn anomalous_phase(&self) -> f64 {
        self.eta.asin()
    }

    /// Analytic extrema `(I_J(1+η), −I_J(1−η))`.
    pub fn critical_currents(&self) -> CriticalCurrentPair {
        CriticalCurrentPair {
            ic_plus: self.i_j * (1.0 + self.eta),
            ic_minus: -self.i_j * (1.0 - self.eta),
        }
    }

    /// Phase of the current maximum, `arcsin η + π/2`.
    pub fn phase_of_max(&self) -> f64 {
        self.anomalous_phase() + PI / 2.0
    }
}

impl CurrentPhaseRelation for DiodeCpr {
    fn current(&self, phi: f64) -> f64 {
        self.i_j * ((phi - self.anomalous_phase()).sin() + self.eta)
    }

    fn potential(&self, phi: f64) -> f64 {
        -(phi - self.anomalous_phase()).cos() + self.eta * phi
    }
}

/// Forward and reverse critical currents; `ic_minus` is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurrentPair {
    pub ic_plus: f64,
    pub ic_minus: f64,
}

impl CriticalCurrentPair {
    pub fn new(ic_plus: f64, ic_minus: f64) -> Result<Self> {
        if !(ic_plus > 0.0 && ic_minus < 0.0) {
            return Err(Error::Domain(format!(
                "expected ic_plus > 0 > ic_minus, got ({ic_plus}, {ic_minus})"
            )));
        }
        Ok(Self { ic_plus, ic_minus })
    }

    /// The pair seen with the bias direction relabeled.
    pub fn reversed(&self) -> Self {
        Self {
            ic_plus: -self.ic_minus,
            ic_minus: -self.ic_plus,
        }
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "diode efficiency must satisfy |eta| < 1, got {eta}"
        )));
    }
    Ok(())
}

/// `I_J [sin(φ − arcsin η) + η]`.
pub fn cpr_current(cpr: &DiodeCpr, phi: f64) -> f64 {
    cpr.current(phi)
}

/// `−cos(φ − arcsin η) + ηφ`.
pub fn cpr_potential(cpr: &DiodeCpr, phi: f64) -> f64 {
    cpr.potential(phi)
}

/// Analytic critical currents of the diode CPR.
pub fn critical_currents(cpr: &DiodeCpr) -> CriticalCurrentPair {
    cpr.critical_currents()
}

/// Critical currents of an arbitrary CPR by a 1024-point scan of one
/// period followed by golden-section refinement of both extrema.
pub fn numeric_critical_currents<C: CurrentPhaseRelation + ?Sized>(cpr: &C) -> Result<CriticalCurrentPair> {
    let step = TAU / COARSE_SCAN_POINTS as f64;
    let samples: Vec<f64> = (0..COARSE_SCAN_POINTS)
        .map(|i| cpr.current(i as f64 * step))
        .collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("CPR returned a non-finite current".into()));
    }

    let (imax, _) = samples
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let (imin, _) = samples
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });

    // Periodicity lets the bracket straddle φ = 0.
    let bracket = |i: usize| ((i as f64 - 1.0) * step, (i as f64 + 1.0) * step);
    let (a, b) = bracket(imax);
    let phi_max = golden_section(|p| -cpr.current(p), a, b, 1e-12);
    let (a, b) = bracket(imin);
    let phi_min = golden_section(|p| cpr.current(p), a, b, 1e-12);

    CriticalCurrentPair::new(cpr.current(phi_max), cpr.current(phi_min))
}

/// Minimizes a unimodal function on `[a, b]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Diode efficiency `(|I⁺| − |I⁻|)/(|I⁺| + |I⁻|)` as a fraction.
pub fn efficiency(ic: &CriticalCurrentPair) -> Result<f64> {
    efficiency_from(ic.ic_plus, ic.ic_minus)
}

/// Same as [`efficiency`] for a raw pair of currents of either sign.
pub fn efficiency_from(ic_plus: f64, ic_minus: f64) -> Result<f64> {
    let (p, m) = (ic_plus.abs(), ic_minus.abs());
    let sum = p + m;
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::Domain(
            "efficiency undefined: both critical currents are zero".into(),
        ));
    }
    Ok((p - m) / sum)
}

pub fn to_percent(fraction: f64) -> f64 {
    fraction * 100.0
}

pub fn from_percent(percent: f64) -> f64 {
    percent / 100.0
}
