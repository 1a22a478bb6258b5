use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::trace::{IVTrace, SweepDir};
use crate::error::{Error, Result};

/// Settings for critical-current detection and its bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtractConfig {
    /// Threshold = factor × median low-bias |dV/dI|.
    pub threshold_factor: f64,
    /// Consecutive above-threshold points needed to accept a transition.
    pub confirm_points: usize,
    pub n_resamples: usize,
    /// Points on each side of the detected index used by the bootstrap.
    pub window_halfwidth: usize,
    pub seed: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            threshold_factor: 5.0,
            confirm_points: 3,
            n_resamples: 100,
            window_halfwidth: 5,
            seed: 1234,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_factor.is_finite() && self.threshold_factor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "threshold factor must be positive, got {}",
                self.threshold_factor
            )));
        }
        if self.confirm_points == 0 {
            return Err(Error::InvalidInput("confirm_points must be at least 1".into()));
        }
        if self.window_halfwidth == 0 {
            return Err(Error::InvalidInput("bootstrap window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    fn stream(self) -> u64 {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
        }
    }
}

/// How one branch's critical current was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchDetection {
    /// Row of the trace holding the critical current.
    pub index: usize,
    pub threshold: f64,
    pub median_gradient: f64,
    /// Threshold never crossed; the max-gradient point was used.
    pub fallback: bool,
    pub branch_points: usize,
    pub window_points: usize,
    /// Fewer than three distinct points in the bootstrap window.
    pub degenerate_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCurrentEstimate {
    /// A, positive.
    pub ic_plus: f64,
    /// A, negative.
    pub ic_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub plus: BranchDetection,
    pub minus: BranchDetection,
}

impl CriticalCurrentEstimate {
    pub fn efficiency(&self) -> Result<f64> {
        crate::cpr::efficiency_from(self.ic_plus, self.ic_minus)
    }
}

/// Rows of one branch, ordered from zero bias toward larger |I|.
struct Branch {
    rows: Vec<usize>,
    x: Vec<f64>,
    /// Voltage times the branch sign, rising through a transition.
    v: Vec<f64>,
}

fn branch(trace: &IVTrace, polarity: Polarity) -> Result<Branch> {
    let rows: Vec<usize> = match &trace.sweep_dir {
        Some(dirs) => {
            let (want, keep): (SweepDir, fn(f64) -> bool) = match polarity {
                Polarity::Positive => (SweepDir::Up, |i| i >= 0.0),
                Polarity::Negative => (SweepDir::Down, |i| i <= 0.0),
            };
            let rows: Vec<usize> = (0..trace.len())
                .filter(|&r| dirs[r] == want && keep(trace.current[r]))
                .collect();
            let increasing = polarity == Polarity::Positive;
            let ok = rows.windows(2).all(|w| {
                let (a, b) = (trace.current[w[0]], trace.current[w[1]]);
                if increasing {
                    b > a
                } else {
                    b < a
                }
            });
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "non-monotonic sweep on the {polarity:?} branch"
                )));
            }
            rows
        }
        None => {
            let i = &trace.current;
            let up = i.windows(2).all(|w| w[1] > w[0]);
            let down = i.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                return Err(Error::InvalidInput(
                    "non-monotonic sweep: hysteretic loops need a sweep_dir column".into(),
                ));
            }
            let mut rows: Vec<usize> = (0..i.len())
                .filter(|&r| match polarity {
                    Polarity::Positive => i[r] >= 0.0,
                    Polarity::Negative => i[r] <= 0.0,
                })
                .collect();
            rows.sort_by(|&a, &b| i[a].abs().total_cmp(&i[b].abs()));
            rows
        }
    };
    if rows.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{polarity:?} branch has {} points, need at least 4",
            rows.len()
        )));
    }
    let x = rows.iter().map(|&r| trace.current[r].abs()).collect();
    let sign = if polarity == Polarity::Positive { 1.0 } else { -1.0 };
    let v = rows.iter().map(|&r| sign * trace.voltage[r]).collect();
    Ok(Branch { rows, x, v })
}

/// dV/dI along the branch by central differences, one-sided at the ends.
/// Positive where |V| grows with |I|.
fn slope(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (v[b] - v[a]) / (x[b] - x[a])
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Index of the first run of `confirm` above-threshold gradients, or the
/// max-gradient point (`true` in the second slot) when there is none.
/// Only central-difference points count toward `confirm`: the one-sided end
/// values are twice as noisy, but may still start a confirmed run. With
/// `open_end` a run still going at the last point also counts, for windows
/// cut out of an already confirmed branch.
fn detect(grad: &[f64], threshold: f64, confirm: usize, open_end: bool) -> (usize, bool) {
    let n = grad.len();
    let interior = |k: usize| n < 3 || (k > 0 && k + 1 < n);
    let confirm = confirm.min(if n < 3 { n } else { n - 2 });
    let (mut start, mut run) = (0, 0);
    for (k, g) in grad.iter().enumerate() {
        if *g > threshold {
            if run == 0 && (k == 0 || grad[k - 1] <= threshold) {
                start = k;
            }
            if interior(k) {
                run += 1;
            }
            if run == confirm || (open_end && k + 1 == n) {
                return (start, false);
            }
        } else {
            run = 0;
        }
    }
    let kmax = grad
        .iter()
        .enumerate()
        .fold(0, |best, (k, g)| if *g > grad[best] { k } else { best });
    (kmax, true)
}

/// Low-bias region: the quarter of the branch nearest zero current.
fn low_bias_len(n: usize) -> usize {
    (n / 4).max(3).min(n)
}

/// Median |dV/dI| over the low-bias region.
fn low_bias_median(grad: &[f64]) -> f64 {
    median(&mut grad[..low_bias_len(grad.len())].iter().map(|g| g.abs()).collect::<Vec<_>>())
}

struct BranchResult {
    ic: f64,
    sigma: f64,
    detection: BranchDetection,
}

fn analyze_branch(trace: &IVTrace, polarity: Polarity, cfg: &ExtractConfig, stream: u64) -> Result<BranchResult> {
    let br = branch(trace, polarity)?;
    let grad = slope(&br.x, &br.v);
    let vmax = br.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vspan = br.v.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - br.v.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if vspan <= f64::EPSILON * vmax || grad.iter().all(|g| *g == 0.0) {
        return Err(Error::InsufficientData(format!("no transition detected on the {polarity:?} branch")));
    }
    let median_gradient = low_bias_median(&grad);
    let threshold = cfg.threshold_factor * median_gradient;
    let (k, fallback) = detect(&grad, threshold, cfg.confirm_points, false);
    if fallback {
        log::warn!(
            "B = {} Oe, {polarity:?} branch: threshold {threshold:.3e} never crossed, using max |dV/dI|",
            trace.b_field
        );
    }
    let boot = bootstrap_branch(&br, k, threshold, cfg, stream);
    let sign = if polarity == Polarity::Positive { 1.0 } else { -1.0 };
    Ok(BranchResult {
        ic: sign * br.x[k],
        sigma: boot.std,
        detection: BranchDetection {
            index: br.rows[k],
            threshold,
            median_gradient,
            fallback,
            branch_points: br.rows.len(),
            window_points: boot.window_points,
            degenerate_window: boot.degenerate,
        },
    })
}

struct Bootstrap {
    std: f64,
    window_points: usize,
    degenerate: bool,
}

fn bootstrap_branch(br: &Branch, k: usize, threshold: f64, cfg: &ExtractConfig, stream: u64) -> Bootstrap {
    let lo = k.saturating_sub(cfg.window_halfwidth);
    let hi = (k + cfg.window_halfwidth + 1).min(br.x.len());
    let (wx, wv) = (&br.x[lo..hi], &br.v[lo..hi]);
    let m = wx.len();
    let mut distinct = wx.to_vec();
    distinct.dedup();
    if distinct.len() < 3 {
        log::warn!("bootstrap window has {} distinct points; reporting zero spread", distinct.len());
        return Bootstrap {
            std: 0.0,
            window_points: m,
            degenerate: true,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut picks = Vec::with_capacity(m);
    let mut estimates = Vec::with_capacity(cfg.n_resamples);
    for _ in 0..cfg.n_resamples {
        picks.clear();
        picks.extend((0..m).map(|_| rng.random_range(0..m)));
        picks.sort_unstable();
        picks.dedup();
        let ic = if picks.len() < 2 {
            wx[picks[0]]
        } else {
            let sx: Vec<f64> = picks.iter().map(|&p| wx[p]).collect();
            let sv: Vec<f64> = picks.iter().map(|&p| wv[p]).collect();
            let (j, _) = detect(&slope(&sx, &sv), threshold, cfg.confirm_points, true);
            sx[j]
        };
        estimates.push(ic);
    }
    Bootstrap {
        std: sample_std(&estimates),
        window_points: m,
        degenerate: false,
    }
}

fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Critical currents of both branches with bootstrap uncertainties.
pub fn extract_critical_currents(trace: &IVTrace, cfg: &ExtractConfig) -> Result<CriticalCurrentEstimate> {
    extract_with_stream(trace, cfg, 0)
}

/// As [`extract_critical_currents`], with the bootstrap drawing from
/// streams `2·trace_stream` and `2·trace_stream + 1` so traces in a batch
/// get independent resamples.
pub(crate) fn extract_with_stream(
    trace: &IVTrace,
    cfg: &ExtractConfig,
    trace_stream: u64,
) -> Result<CriticalCurrentEstimate> {
    trace.validate()?;
    cfg.validate()?;
    let plus = analyze_branch(trace, Polarity::Positive, cfg, 2 * trace_stream + Polarity::Positive.stream())?;
    let minus = analyze_branch(trace, Polarity::Negative, cfg, 2 * trace_stream + Polarity::Negative.stream())?;
    Ok(CriticalCurrentEstimate {
        ic_plus: plus.ic,
        ic_minus: minus.ic,
        sigma_plus: plus.sigma,
        sigma_minus: minus.sigma,
        plus: plus.detection,
        minus: minus.detection,
    })
}

/// Bootstrap spread (A) of the critical current at trace row
/// `critical_index`, re-detecting with the full-branch threshold.
pub fn bootstrap_uncertainty(trace: &IVTrace, critical_index: usize, cfg: &ExtractConfig) -> Result<f64> {
    trace.validate()?;
    cfg.validate()?;
    if critical_index >= trace.len() {
        return Err(Error::InvalidInput(format!(
            "critical index {critical_index} outside trace of {} points",
            trace.len()
        )));
    }
    let i = trace.current[critical_index];
    let polarity = match &trace.sweep_dir {
        Some(d) if d[critical_index] == SweepDir::Down => Polarity::Negative,
        Some(_) => Polarity::Positive,
        None if i < 0.0 => Polarity::Negative,
        None => Polarity::Positive,
    };
    let br = branch(trace, polarity)?;
    let k = br.rows.iter().position(|&r| r == critical_index).ok_or_else(|| {
        Error::InvalidInput(format!("row {critical_index} is not on the {polarity:?} branch"))
    })?;
    let grad = slope(&br.x, &br.v);
    let threshold = cfg.threshold_factor * low_bias_median(&grad);
    Ok(bootstrap_branch(&br, k, threshold, cfg, polarity.stream()).std)
}
