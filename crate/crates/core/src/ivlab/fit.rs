use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::series::EfficiencyPoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOptions {
    /// Starting (a, b, c); otherwise b comes from the periodogram peak.
    pub initial_guess: Option<[f64; 3]>,
    /// Fit η = a sin(bB + c) + d instead of the offset-free model.
    pub with_offset: bool,
    pub max_iterations: usize,
    /// Use (JᵀWJ)⁻¹ as is instead of scaling it by the reduced χ².
    pub absolute_sigma: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            initial_guess: None,
            with_offset: false,
            max_iterations: 500,
            absolute_sigma: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResidual {
    pub b_field: f64,
    pub eta: f64,
    pub sigma_eta: f64,
    pub model: f64,
    pub residual: f64,
    pub weight: f64,
}

/// Weighted fit of η(B) = a sin(bB + c) [+ d], with a ≥ 0, b ≥ 0 and
/// c in (−π, π].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyFit {
    pub a: f64,
    /// rad/Oe.
    pub b: f64,
    pub c: f64,
    pub d: Option<f64>,
    /// Weighted coefficient of determination.
    pub r_squared: f64,
    /// Row-major over (a, b, c[, d]); `None` when degenerate.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub std_errors: Option<Vec<f64>>,
    pub n_points: usize,
    pub converged: bool,
    /// a ≈ 0 or a rank-deficient Jacobian: b and c are not identified.
    pub degenerate: bool,
    pub iterations: usize,
    pub weighted_sse: f64,
    pub reduced_chi2: f64,
    #[serde(skip)]
    pub residuals: Vec<FitResidual>,
}

impl EfficiencyFit {
    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![self.a, self.b, self.c];
        p.extend(self.d);
        p
    }

    pub fn eval(&self, b_field: f64) -> f64 {
        model(&self.params(), b_field)
    }
}

fn model(p: &[f64], b: f64) -> f64 {
    p[0] * (p[1] * b + p[2]).sin() + p.get(3).copied().unwrap_or(0.0)
}

struct Problem {
    x: Vec<f64>,
    y: Vec<f64>,
    sw: Vec<f64>,
}

impl Problem {
    fn sse(&self, p: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.sw)
            .map(|((x, y), s)| (s * (y - model(p, *x))).powi(2))
            .sum()
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(&self.y).zip(&self.sw).map(|((x, y), s)| s * (y - model(p, *x))),
        )
    }

    /// Weighted model Jacobian √w ∂m/∂p.
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        for (i, (x, s)) in self.x.iter().zip(&self.sw).enumerate() {
            let arg = p[1] * x + p[2];
            let (sn, cs) = arg.sin_cos();
            j[(i, 0)] = s * sn;
            j[(i, 1)] = s * p[0] * x * cs;
            j[(i, 2)] = s * p[0] * cs;
            if p.len() == 4 {
                j[(i, 3)] = *s;
            }
        }
        j
    }

    /// Best (a, c[, d]) for a fixed b by linear least squares.
    fn linear_start(&self, b: f64, with_offset: bool) -> Vec<f64> {
        let cols = if with_offset { 3 } else { 2 };
        let mut m = DMatrix::zeros(self.x.len(), cols);
        let mut rhs = DVector::zeros(self.x.len());
        for (i, ((x, y), s)) in self.x.iter().zip(&self.y).zip(&self.sw).enumerate() {
            let (sn, cs) = (b * x).sin_cos();
            m[(i, 0)] = s * sn;
            m[(i, 1)] = s * cs;
            if with_offset {
                m[(i, 2)] = *s;
            }
            rhs[i] = s * y;
        }
        let coef = m
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .unwrap_or_else(|_| DVector::zeros(cols));
        let (sa, ca) = (coef[0], coef[1]);
        let mut p = vec![sa.hypot(ca), b, ca.atan2(sa)];
        if with_offset {
            p.push(coef[2]);
        }
        p
    }

    /// Frequencies of the largest local maxima of the weighted DFT power.
    fn periodogram_peaks(&self, count: usize) -> Vec<f64> {
        let mut xs = self.x.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let span = xs[xs.len() - 1] - xs[0];
        let min_gap = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if !(span > 0.0) {
            return vec![1.0];
        }
        let w: Vec<f64> = self.sw.iter().map(|s| s * s).collect();
        let wsum: f64 = w.iter().sum();
        let mean = w.iter().zip(&self.y).map(|(w, y)| w * y).sum::<f64>() / wsum;
        let (lo, hi) = (PI / span, PI / min_gap);
        let n = 4096;
        let omegas: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let power: Vec<f64> = omegas
            .iter()
            .map(|om| {
                let (mut re, mut im) = (0.0, 0.0);
                for ((x, y), wi) in self.x.iter().zip(&self.y).zip(&w) {
                    let (s, c) = (om * x).sin_cos();
                    re += wi * (y - mean) * c;
                    im += wi * (y - mean) * s;
                }
                re * re + im * im
            })
            .collect();
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&k| {
                let left = k == 0 || power[k] > power[k - 1];
                let right = k == n - 1 || power[k] >= power[k + 1];
                left && right && power[k] > 0.0
            })
            .collect();
        peaks.sort_by(|&a, &b| power[b].total_cmp(&power[a]));
        peaks.truncate(count);
        if peaks.is_empty() {
            return vec![omegas[n / 2]];
        }
        peaks.into_iter().map(|k| omegas[k]).collect()
    }
}

struct LmOutcome {
    p: Vec<f64>,
    sse: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(prob: &Problem, start: Vec<f64>, max_iterations: usize) -> LmOutcome {
    let mut p = start;
    let mut sse = prob.sse(&p);
    let mut lambda = 1e-3;
    let np = p.len();
    for it in 1..=max_iterations {
        let j = prob.jacobian(&p);
        let r = prob.residuals(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * r;
        let dmax = (0..np).map(|k| jtj[(k, k)]).fold(0.0f64, f64::max).max(1e-300);
        loop {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * dmax);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return LmOutcome { p, sse, iterations: it, converged: true };
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_sse = prob.sse(&trial);
            if trial_sse.is_finite() && trial_sse < sse {
                let small_step = step.iter().zip(&p).all(|(d, v)| d.abs() <= 1e-12 * (v.abs() + 1e-12));
                let small_gain = sse - trial_sse <= 1e-15 * sse;
                p = trial;
                sse = trial_sse;
                lambda = (lambda / 10.0).max(1e-15);
                if small_step || small_gain || sse == 0.0 {
                    return LmOutcome { p, sse, iterations: it, converged: true };
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No descent direction left at working precision.
                return LmOutcome { p, sse, iterations: it, converged: true };
            }
        }
    }
    LmOutcome {
        p,
        sse,
        iterations: max_iterations,
        converged: false,
    }
}

/// Same curve with a ≥ 0, b ≥ 0 and c in (−π, π].
fn canonical(mut p: Vec<f64>) -> Vec<f64> {
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[2] += PI;
    }
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = PI - p[2];
    }
    p[2] = PI - (PI - p[2]).rem_euclid(2.0 * PI);
    p
}

/// Weighted Levenberg–Marquardt fit of η(B).
///
/// Weights are 1/σ²; points with σ = 0 take the median positive weight
/// (all weights 1 if every σ is zero). Without a guess the fit is started
/// from the three strongest periodogram peaks and the best result kept.
pub fn fit_sinusoid(points: &[EfficiencyPoint], opts: &FitOptions) -> Result<EfficiencyFit> {
    let np = if opts.with_offset { 4 } else { 3 };
    if points.len() < 4 || points.len() < np {
        return Err(Error::InsufficientData(format!(
            "sinusoid fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    for p in points {
        if !(p.b_field.is_finite() && p.eta.is_finite() && p.sigma_eta.is_finite() && p.sigma_eta >= 0.0) {
            return Err(Error::InvalidInput(format!("unusable efficiency point {p:?}")));
        }
    }
    if opts.max_iterations == 0 {
        return Err(Error::InvalidInput("max_iterations must be positive".into()));
    }
    let mut positive: Vec<f64> = points
        .iter()
        .filter(|p| p.sigma_eta > 0.0)
        .map(|p| 1.0 / (p.sigma_eta * p.sigma_eta))
        .collect();
    let fill = if positive.is_empty() {
        1.0
    } else {
        positive.sort_by(f64::total_cmp);
        let n = positive.len();
        if n % 2 == 1 {
            positive[n / 2]
        } else {
            0.5 * (positive[n / 2 - 1] + positive[n / 2])
        }
    };
    let weights: Vec<f64> = points
        .iter()
        .map(|p| {
            if p.sigma_eta > 0.0 {
                1.0 / (p.sigma_eta * p.sigma_eta)
            } else {
                fill
            }
        })
        .collect();
    let prob = Problem {
        x: points.iter().map(|p| p.b_field).collect(),
        y: points.iter().map(|p| p.eta).collect(),
        sw: weights.iter().map(|w| w.sqrt()).collect(),
    };

    let starts: Vec<Vec<f64>> = match opts.initial_guess {
        Some(g) => {
            let mut s = g.to_vec();
            if opts.with_offset {
                s.push(0.0);
            }
            vec![s]
        }
        None => prob
            .periodogram_peaks(3)
            .into_iter()
            .map(|b| prob.linear_start(b, opts.with_offset))
            .collect(),
    };
    let mut best: Option<LmOutcome> = None;
    for s in starts {
        let out = levenberg_marquardt(&prob, s, opts.max_iterations);
        if best.as_ref().is_none_or(|b| out.sse < b.sse) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        log::warn!("sinusoid fit did not converge in {} iterations", opts.max_iterations);
    }
    let p = canonical(best.p);

    let n = points.len();
    let sse = prob.sse(&p);
    let wsum: f64 = weights.iter().sum();
    let ybar = weights.iter().zip(&prob.y).map(|(w, y)| w * y).sum::<f64>() / wsum;
    let ss_tot: f64 = weights.iter().zip(&prob.y).map(|(w, y)| w * (y - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - sse / ss_tot } else { 0.0 };
    let dof = n - np;
    let reduced_chi2 = if dof > 0 { sse / dof as f64 } else { f64::NAN };

    let j = prob.jacobian(&p);
    let jtj = j.transpose() * &j;
    let scale: Vec<f64> = (0..np).map(|k| jtj[(k, k)].sqrt()).collect();
    let rank_deficient = scale.iter().any(|s| !(*s > 0.0)) || {
        let c = DMatrix::from_fn(np, np, |r, k| jtj[(r, k)] / (scale[r] * scale[k]));
        let ev = c.symmetric_eigenvalues();
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        lo <= 1e-12 * hi
    };
    let max_eta = prob.y.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let degenerate = rank_deficient || max_eta == 0.0 || p[0] <= 1e-8 * max_eta;

    let covariance = if degenerate || dof == 0 {
        None
    } else {
        jtj.clone().try_inverse().map(|inv| {
            let s = if opts.absolute_sigma { 1.0 } else { reduced_chi2 };
            let cov = inv * s;
            (0..np)
                .map(|r| (0..np).map(|k| 0.5 * (cov[(r, k)] + cov[(k, r)])).collect())
                .collect::<Vec<Vec<f64>>>()
        })
    };
    let std_errors = covariance
        .as_ref()
        .map(|c| (0..np).map(|k| c[k][k].max(0.0).sqrt()).collect());
    let residuals = points
        .iter()
        .zip(&weights)
        .map(|(pt, w)| {
            let m = model(&p, pt.b_field);
            FitResidual {
                b_field: pt.b_field,
                eta: pt.eta,
                sigma_eta: pt.sigma_eta,
                model: m,
                residual: pt.eta - m,
                weight: *w,
            }
        })
        .collect();
    Ok(EfficiencyFit {
        a: p[0],
        b: p[1],
        c: p[2],
        d: p.get(3).copied(),
        r_squared,
        covariance,
        std_errors,
        n_points: n,
        converged: best.converged,
        degenerate,
        iterations: best.iterations,
        weighted_sse: sse,
        reduced_chi2,
        residuals,
    })
}
