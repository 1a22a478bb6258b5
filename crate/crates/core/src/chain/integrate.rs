//! Adaptive Dormand–Prince 5(4) for autonomous linear-ish ODE systems.

use serde::Serialize;

use crate::error::{Error, Result};

/// Error-control settings. The defaults are tighter than needed for
/// fidelities alone so that reciprocal (η = 0) evolution keeps its norm
/// to 1e-9 over the whole 10 ns window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub last_step: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(y)` and records `y` at each requested time.
///
/// `times` must be ascending and start at or after `t0`; the solver lands
/// exactly on every requested time.
pub struct Integrator<F: Fn(&[f64], &mut [f64])> {
    rhs: F,
    tol: Tolerances,
    pub stats: StepStats,
    /// Step-size suggestion carried between calls.
    h: Option<f64>,
}

impl<F: Fn(&[f64], &mut [f64])> Integrator<F> {
    pub fn new(rhs: F, tol: Tolerances) -> Self {
        Self {
            rhs,
            tol,
            stats: StepStats::default(),
            h: None,
        }
    }

    pub fn integrate_to(&mut self, y: &mut [f64], t0: f64, t1: f64) -> Result<()> {
        if t1 < t0 {
            return Err(Error::InvalidInput(format!("cannot integrate backwards from {t0} to {t1}")));
        }
        if t1 == t0 {
            return Ok(());
        }
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut t = t0;
        (self.rhs)(y, &mut k[0]);
        self.stats.evaluations += 1;
        let mut h = self.h.unwrap_or_else(|| initial_step(y, &k[0], &self.tol)).min(t1 - t0);
        let steps_at_entry = self.stats.accepted + self.stats.rejected;

        while t < t1 {
            if self.stats.accepted + self.stats.rejected - steps_at_entry > self.tol.max_steps {
                return Err(self.failure(t, h, "step budget exhausted"));
            }
            let clamped = t + h >= t1;
            let h_try = if clamped { t1 - t } else { h };

            stage(&mut tmp, y, h_try, &[(A21, &k[0])]);
            (self.rhs)(&tmp, &mut k[1]);
            stage(&mut tmp, y, h_try, &[(A31, &k[0]), (A32, &k[1])]);
            (self.rhs)(&tmp, &mut k[2]);
            stage(&mut tmp, y, h_try, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
            (self.rhs)(&tmp, &mut k[3]);
            stage(&mut tmp, y, h_try, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])]);
            (self.rhs)(&tmp, &mut k[4]);
            stage(
                &mut tmp,
                y,
                h_try,
                &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])],
            );
            (self.rhs)(&tmp, &mut k[5]);
            stage(
                &mut ynew,
                y,
                h_try,
                &[(B1, &k[0]), (B3, &k[2]), (B4, &k[3]), (B5, &k[4]), (B6, &k[5])],
            );
            (self.rhs)(&ynew, &mut k[6]);
            self.stats.evaluations += 6;

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = h_try
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(ynew[i].abs());
                err_sq += (e / sc).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(self.failure(t, h_try, "non-finite error estimate"));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };

            if err <= 1.0 {
                t = if clamped { t1 } else { t + h_try };
                y.copy_from_slice(&ynew);
                k.swap(0, 6);
                self.stats.accepted += 1;
                self.stats.last_step = h_try;
                // A step shortened to hit t1 says little about the scale.
                if !clamped || factor < 1.0 {
                    h = h_try * factor;
                }
            } else {
                self.stats.rejected += 1;
                h = h_try * factor.min(1.0);
            }
            if h < 1e-14 * t1.abs().max(1.0) {
                return Err(self.failure(t, h, "step size underflow"));
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn failure(&self, t: f64, h: f64, why: &str) -> Error {
        Error::Numerical(format!(
            "integration failed at t={t:.6e} ({why}): step {h:.3e}, accepted {}, rejected {}, evaluations {}",
            self.stats.accepted, self.stats.rejected, self.stats.evaluations
        ))
    }
}

fn stage(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &Vec<f64>)]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (a, k) in terms {
            s += a * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

fn initial_step(y: &[f64], dy: &[f64], tol: &Tolerances) -> f64 {
    let n = y.len() as f64;
    let (mut d0, mut d1) = (0.0, 0.0);
    for (a, b) in y.iter().zip(dy) {
        let sc = tol.atol + tol.rtol * a.abs();
        d0 += (a / sc).powi(2);
        d1 += (b / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
}
