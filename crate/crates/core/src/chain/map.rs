use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ChainConfig, NoiseConfig};
use super::generator::{basis_state, evolve_through, hopping_matrix, readout, ChainGenerator};
use crate::error::{Error, Result};
use crate::transmon::EtaInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Excitation starts on the first qubit, target is the last.
    Forward,
    Reverse,
}

impl Direction {
    fn sites(self, n: usize) -> (usize, usize) {
        match self {
            Direction::Forward => (0, n - 1),
            Direction::Reverse => (n - 1, 0),
        }
    }
}

/// One quasi-static realization of the noise.
#[derive(Debug, Clone, PartialEq)]
struct NoiseDraw {
    onsite: Vec<f64>,
    phases: Vec<f64>,
}

fn symmetric_unit(rng: &mut ChaCha8Rng) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}

fn draw_noise(config: &ChainConfig, noise: &NoiseConfig, rng: &mut ChaCha8Rng) -> NoiseDraw {
    let n = config.n_qubits;
    let g = config.coupling_g;
    let base = config.qubit_frequencies.clone().unwrap_or_else(|| vec![0.0; n]);
    let ej_shift = noise.ej_fluctuation * config.ej_sensitivity();
    let onsite = (0..n)
        .map(|k| {
            let u = symmetric_unit(rng);
            let v = symmetric_unit(rng);
            base[k] + g * (ej_shift * u + noise.charge_noise * v)
        })
        .collect();
    let phases = (0..n - 1).map(|_| noise.phase_noise * symmetric_unit(rng)).collect();
    NoiseDraw { onsite, phases }
}

/// PRNG for trajectory `traj` of η-row `row`.
fn trajectory_rng(seed: u64, row: usize, traj: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((row as u64) << 32) | traj as u64);
    rng
}

fn noisy_generator(config: &ChainConfig, draw: &NoiseDraw, noise: &NoiseConfig) -> ChainGenerator {
    ChainGenerator {
        hamiltonian: hopping_matrix(config.n_qubits, config.coupling_g, config.eta, &draw.onsite, &draw.phases),
        decay_rate: noise.dissipation_rate * config.coupling_g,
    }
}

fn fidelity_series(generator: &ChainGenerator, n: usize, direction: Direction, times: &[f64]) -> Result<Vec<f64>> {
    let (start, target) = direction.sites(n);
    let mut out = vec![0.0; times.len()];
    evolve_through(&basis_state(n, start), generator, times, |i, state, ground| {
        out[i] = readout(state, ground, target);
    })?;
    Ok(out)
}

/// Forward and reverse fidelities over `times` for one η row, with the
/// trajectory means and standard errors.
struct RowResult {
    forward: Vec<f64>,
    reverse: Vec<f64>,
    difference: Vec<f64>,
    forward_se: Vec<f64>,
    reverse_se: Vec<f64>,
    difference_se: Vec<f64>,
}

fn compute_row(config: &ChainConfig, times: &[f64], noise: Option<&NoiseConfig>, row: usize) -> Result<RowResult> {
    let n = config.n_qubits;
    let nt = times.len();
    let Some(noise) = noise else {
        let gen = super::generator::build_chain_generator(config)?;
        let forward = fidelity_series(&gen, n, Direction::Forward, times)?;
        let reverse = fidelity_series(&gen, n, Direction::Reverse, times)?;
        let difference = forward.iter().zip(&reverse).map(|(f, r)| f - r).collect();
        return Ok(RowResult {
            forward,
            reverse,
            difference,
            forward_se: vec![0.0; nt],
            reverse_se: vec![0.0; nt],
            difference_se: vec![0.0; nt],
        });
    };

    let m = noise.n_trajectories;
    let mut fw = vec![vec![0.0; nt]; m];
    let mut rv = vec![vec![0.0; nt]; m];
    for traj in 0..m {
        let mut rng = trajectory_rng(noise.seed, row, traj);
        let draw = draw_noise(config, noise, &mut rng);
        let gen = noisy_generator(config, &draw, noise);
        let mut f = fidelity_series(&gen, n, Direction::Forward, times)?;
        let mut r = fidelity_series(&gen, n, Direction::Reverse, times)?;
        let w = noise.measurement_uncertainty;
        for j in 0..nt {
            let (df, dr) = (w * symmetric_unit(&mut rng), w * symmetric_unit(&mut rng));
            if w > 0.0 {
                f[j] = (f[j] + df).clamp(0.0, 1.0);
                r[j] = (r[j] + dr).clamp(0.0, 1.0);
            }
        }
        fw[traj] = f;
        rv[traj] = r;
    }
    let stats = |get: &dyn Fn(usize, usize) -> f64| -> (Vec<f64>, Vec<f64>) {
        (0..nt)
            .map(|j| {
                let mean = (0..m).map(|k| get(k, j)).sum::<f64>() / m as f64;
                let se = if m > 1 {
                    let var = (0..m).map(|k| (get(k, j) - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
                    (var / m as f64).sqrt()
                } else {
                    0.0
                };
                (mean, se)
            })
            .unzip()
    };
    let (forward, forward_se) = stats(&|k, j| fw[k][j]);
    let (reverse, reverse_se) = stats(&|k, j| rv[k][j]);
    let (difference, difference_se) = stats(&|k, j| fw[k][j] - rv[k][j]);
    Ok(RowResult {
        forward,
        reverse,
        difference,
        forward_se,
        reverse_se,
        difference_se,
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput("times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("time grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Fidelity of moving the excitation across the chain in `direction`
/// after `t` ns. With noise this is the trajectory average.
pub fn transfer_fidelity(config: &ChainConfig, direction: Direction, t: f64, noise: Option<&NoiseConfig>) -> Result<f64> {
    config.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    check_times(&[t])?;
    let row = compute_row(config, &[t], noise, 0)?;
    Ok(match direction {
        Direction::Forward => row.forward[0],
        Direction::Reverse => row.reverse[0],
    })
}

/// Forward/reverse fidelities over an (η, t) grid. Matrices are indexed
/// `[eta_index][time_index]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityMap {
    pub eta_axis: Vec<f64>,
    pub time_axis: Vec<f64>,
    pub forward: Vec<Vec<f64>>,
    pub reverse: Vec<Vec<f64>>,
    pub difference: Vec<Vec<f64>>,
    pub noise_applied: bool,
    pub n_trajectories: usize,
    /// Trajectory standard errors; zero without noise.
    pub forward_se: Vec<Vec<f64>>,
    pub reverse_se: Vec<Vec<f64>>,
    pub difference_se: Vec<Vec<f64>>,
}

/// Location and value of an extremum in a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub eta_index: usize,
    pub time_index: usize,
    pub eta: f64,
    pub t_ns: f64,
    pub value: f64,
}

/// Time-aggregated view of one η row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowSummary {
    pub eta: f64,
    pub max_difference: f64,
    pub t_at_max_difference: f64,
    pub forward_at_max: f64,
    pub reverse_at_max: f64,
    pub max_forward: f64,
    pub min_reverse: f64,
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
        .0
}

impl FidelityMap {
    fn cell(&self, i: usize, j: usize, value: f64) -> Cell {
        Cell {
            eta_index: i,
            time_index: j,
            eta: self.eta_axis[i],
            t_ns: self.time_axis[j],
            value,
        }
    }

    /// Largest forward − reverse over the whole map.
    pub fn peak_difference(&self) -> Cell {
        let mut best = self.cell(0, 0, f64::NEG_INFINITY);
        for (i, row) in self.difference.iter().enumerate() {
            let j = argmax(row);
            if row[j] > best.value {
                best = self.cell(i, j, row[j]);
            }
        }
        best
    }

    pub fn peak_forward(&self) -> Cell {
        let mut best = self.cell(0, 0, f64::NEG_INFINITY);
        for (i, row) in self.forward.iter().enumerate() {
            let j = argmax(row);
            if row[j] > best.value {
                best = self.cell(i, j, row[j]);
            }
        }
        best
    }

    pub fn row_summaries(&self) -> Vec<RowSummary> {
        (0..self.eta_axis.len())
            .map(|i| {
                let j = argmax(&self.difference[i]);
                RowSummary {
                    eta: self.eta_axis[i],
                    max_difference: self.difference[i][j],
                    t_at_max_difference: self.time_axis[j],
                    forward_at_max: self.forward[i][j],
                    reverse_at_max: self.reverse[i][j],
                    max_forward: self.forward[i].iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    min_reverse: self.reverse[i].iter().copied().fold(f64::INFINITY, f64::min),
                }
            })
            .collect()
    }

    /// Mean over all cells of the forward fidelity.
    pub fn mean_forward(&self) -> f64 {
        let n = (self.eta_axis.len() * self.time_axis.len()) as f64;
        self.forward.iter().flatten().sum::<f64>() / n
    }

    pub fn mean_forward_se(&self) -> f64 {
        let n = (self.eta_axis.len() * self.time_axis.len()) as f64;
        self.forward_se.iter().flatten().sum::<f64>() / n
    }
}

/// Fills a [`FidelityMap`]. Rows run in parallel; every trajectory seeds
/// its own stream from `(seed, row, trajectory)`, so the map is
/// bit-identical for a fixed seed whatever the thread count.
pub fn fidelity_map(config: &ChainConfig, eta_grid: &[f64], t_grid: &[f64], noise: Option<&NoiseConfig>) -> Result<FidelityMap> {
    if eta_grid.is_empty() {
        return Err(Error::InvalidInput("empty eta grid".into()));
    }
    if eta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("eta grid must be strictly ascending".into()));
    }
    check_times(t_grid)?;
    for &eta in eta_grid {
        config.with_eta(eta).validate()?;
    }
    if let Some(n) = noise {
        n.validate()?;
    }
    let rows = eta_grid
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| compute_row(&config.with_eta(eta), t_grid, noise, i).map_err(|e| e.context(format!("eta={eta}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut map = FidelityMap {
        eta_axis: eta_grid.to_vec(),
        time_axis: t_grid.to_vec(),
        forward: Vec::new(),
        reverse: Vec::new(),
        difference: Vec::new(),
        noise_applied: noise.is_some(),
        n_trajectories: noise.map_or(1, |n| n.n_trajectories),
        forward_se: Vec::new(),
        reverse_se: Vec::new(),
        difference_se: Vec::new(),
    };
    for r in rows {
        map.forward.push(r.forward);
        map.reverse.push(r.reverse);
        map.difference.push(r.difference);
        map.forward_se.push(r.forward_se);
        map.reverse_se.push(r.reverse_se);
        map.difference_se.push(r.difference_se);
    }
    Ok(map)
}

/// Maximal η intervals whose best-over-time difference reaches `threshold`.
pub fn asymmetry_regions(map: &FidelityMap, threshold: f64) -> Vec<EtaInterval> {
    let best: Vec<f64> = map
        .difference
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &b) in best.iter().enumerate() {
        match (b >= threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(EtaInterval {
                    lo: map.eta_axis[s],
                    hi: map.eta_axis[i - 1],
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(EtaInterval {
            lo: map.eta_axis[s],
            hi: *map.eta_axis.last().expect("non-empty"),
        });
    }
    out
}

/// 0, 0.01, …, 0.9.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=90).map(|i| i as f64 / 100.0).collect()
}

/// 1, 1.1, …, 10 ns.
pub fn default_time_grid() -> Vec<f64> {
    (10..=100).map(|i| i as f64 / 10.0).collect()
}
