use nalgebra::DMatrix;
use num_complex::Complex64;

use super::config::ChainConfig;
use super::integrate::{Integrator, StepStats, Tolerances};
use crate::error::{Error, Result};

/// Single-excitation generator of the chain.
///
/// Site `i` holds the excitation in qubit `i`. Hopping `i → i+1` has
/// amplitude `g(1+η)` and `i+1 → i` amplitude `g(1−η)`, so the matrix is
/// Hermitian only at η = 0. Uniform decay of every qubit at rate
/// `decay_rate` sends population to the shared ground state, which is
/// tracked alongside the excitation amplitudes.
#[derive(Debug, Clone)]
pub struct ChainGenerator {
    pub hamiltonian: DMatrix<Complex64>,
    pub decay_rate: f64,
}

impl ChainGenerator {
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Amplitude for hopping from site `i` to `i + 1`.
    pub fn forward_amplitude(&self, i: usize) -> Complex64 {
        self.hamiltonian[(i + 1, i)]
    }

    /// Amplitude for hopping from site `i + 1` to `i`.
    pub fn backward_amplitude(&self, i: usize) -> Complex64 {
        self.hamiltonian[(i, i + 1)]
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.hamiltonian - self.hamiltonian.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn with_decay(mut self, rate: f64) -> Self {
        self.decay_rate = rate;
        self
    }
}

/// Directional hopping matrix with optional on-site shifts and hopping
/// phases (`e^{iθ}` forward, `e^{−iθ}` backward). No validation, so the
/// η → 1 limit can be inspected.
pub(crate) fn hopping_matrix(n: usize, g: f64, eta: f64, onsite: &[f64], phases: &[f64]) -> DMatrix<Complex64> {
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        h[(i, i)] = Complex64::new(onsite.get(i).copied().unwrap_or(0.0), 0.0);
    }
    for i in 0..n - 1 {
        let theta = phases.get(i).copied().unwrap_or(0.0);
        let rot = Complex64::from_polar(1.0, theta);
        h[(i + 1, i)] = rot * g * (1.0 + eta);
        h[(i, i + 1)] = rot.conj() * g * (1.0 - eta);
    }
    h
}

/// Noiseless, dissipation-free generator of `config`.
pub fn build_chain_generator(config: &ChainConfig) -> Result<ChainGenerator> {
    config.validate()?;
    let onsite = config.qubit_frequencies.clone().unwrap_or_default();
    Ok(ChainGenerator {
        hamiltonian: hopping_matrix(config.n_qubits, config.coupling_g, config.eta, &onsite, &[]),
        decay_rate: 0.0,
    })
}

/// Unnormalized state after evolution.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: Vec<Complex64>,
    /// Population that decayed into the ground state.
    pub ground_population: f64,
    pub stats: StepStats,
}

impl Evolution {
    pub fn normalized_state(&self) -> Vec<Complex64> {
        normalize(&self.state)
    }

    /// Probability of finding the excitation on `site`, after
    /// renormalizing excitation and ground populations together.
    pub fn readout(&self, site: usize) -> f64 {
        readout(&self.state, self.ground_population, site)
    }
}

pub(crate) fn readout(state: &[Complex64], ground: f64, site: usize) -> f64 {
    let total: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>() + ground;
    state[site].norm_sqr() / total
}

fn normalize(state: &[Complex64]) -> Vec<Complex64> {
    let n = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    state.iter().map(|z| z / n).collect()
}

pub fn basis_state(n: usize, site: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[site] = Complex64::new(1.0, 0.0);
    v
}

/// `|⟨ψ|φ⟩|²` of two normalized states.
pub fn state_fidelity(psi: &[Complex64], phi: &[Complex64]) -> Result<f64> {
    if psi.len() != phi.len() {
        return Err(Error::InvalidInput(format!(
            "state dimensions differ: {} vs {}",
            psi.len(),
            phi.len()
        )));
    }
    for v in [psi, phi] {
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state is not normalized (norm² = {n})")));
        }
    }
    let overlap: Complex64 = psi.iter().zip(phi).map(|(a, b)| a.conj() * b).sum();
    Ok(overlap.norm_sqr().min(1.0))
}

/// Renormalized state after time `t` (ns).
pub fn evolve(initial: &[Complex64], generator: &ChainGenerator, t: f64) -> Result<Vec<Complex64>> {
    Ok(evolve_raw(initial, generator, t)?.normalized_state())
}

pub fn evolve_raw(initial: &[Complex64], generator: &ChainGenerator, t: f64) -> Result<Evolution> {
    let mut out = None;
    let stats = evolve_through(initial, generator, &[t], |_, state, ground| {
        out = Some((state.to_vec(), ground));
    })?;
    let (state, ground_population) = out.expect("one time requested");
    Ok(Evolution {
        state,
        ground_population,
        stats,
    })
}

/// Evolves from t = 0 through ascending `times`, calling `visit` with the
/// time index, unnormalized state and ground population at each.
pub(crate) fn evolve_through<V>(initial: &[Complex64], generator: &ChainGenerator, times: &[f64], mut visit: V) -> Result<StepStats>
where
    V: FnMut(usize, &[Complex64], f64),
{
    let n = generator.dim();
    if initial.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {}, generator {}",
            initial.len(),
            n
        )));
    }
    let norm: f64 = initial.iter().map(|z| z.norm_sqr()).sum();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidInput("initial state must be non-zero and finite".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput("evolution times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("evolution times must be ascending".into()));
    }

    let h = &generator.hamiltonian;
    let gamma = generator.decay_rate;
    // y = [Re ψ₀, Im ψ₀, …, G];  ψ' = −i(H − iγ/2)ψ,  G' = γ‖ψ‖².
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let mut pop = 0.0;
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                acc += h[(r, c)] * Complex64::new(y[2 * c], y[2 * c + 1]);
            }
            let psi = Complex64::new(y[2 * r], y[2 * r + 1]);
            let d = Complex64::new(0.0, -1.0) * acc - psi * (0.5 * gamma);
            dy[2 * r] = d.re;
            dy[2 * r + 1] = d.im;
            pop += psi.norm_sqr();
        }
        dy[2 * n] = gamma * pop;
    };

    let mut y: Vec<f64> = initial.iter().flat_map(|z| [z.re, z.im]).collect();
    y.push(0.0);
    let mut ig = Integrator::new(rhs, Tolerances::default());
    let mut t = 0.0;
    let mut state = vec![Complex64::new(0.0, 0.0); n];
    for (idx, &t1) in times.iter().enumerate() {
        ig.integrate_to(&mut y, t, t1)?;
        t = t1;
        for (k, s) in state.iter_mut().enumerate() {
            *s = Complex64::new(y[2 * k], y[2 * k + 1]);
        }
        visit(idx, &state, y[2 * n]);
    }
    Ok(ig.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fidelity_examples() {
        let e0 = basis_state(2, 0);
        let e1 = basis_state(2, 1);
        let plus = vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)];
        assert_abs_diff_eq!(state_fidelity(&plus, &plus).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(state_fidelity(&e0, &e1).unwrap(), 0.0);
        assert_abs_diff_eq!(state_fidelity(&plus, &e0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(state_fidelity(&e0, &basis_state(3, 0)).is_err());
        assert!(state_fidelity(&[c(2.0), c(0.0)], &e0).is_err());
    }

    #[test]
    fn generator_amplitudes() {
        let cfg = ChainConfig {
            coupling_g: 1.0,
            eta: 0.276,
            ..ChainConfig::default()
        };
        let g = build_chain_generator(&cfg).unwrap();
        let ratio = g.forward_amplitude(0).re / g.backward_amplitude(0).re;
        assert_abs_diff_eq!(ratio, 1.276 / 0.724, epsilon = 1e-12);
        assert_abs_diff_eq!(ratio, 1.7624, epsilon = 1e-4);
        let sym = build_chain_generator(&cfg.with_eta(0.0)).unwrap();
        assert!(sym.hermiticity_error() < 1e-12);
        let diode = hopping_matrix(3, 1.0, 1.0, &[], &[]);
        assert_eq!(diode[(0, 1)].norm(), 0.0);
        assert_eq!(diode[(1, 0)].re, 2.0);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = build_chain_generator(&ChainConfig::default().with_eta(0.3)).unwrap();
        let psi = basis_state(3, 0);
        assert_eq!(evolve(&psi, &g, 0.0).unwrap(), psi);
    }

    #[test]
    fn two_site_swap() {
        let cfg = ChainConfig {
            n_qubits: 2,
            ..ChainConfig::default()
        };
        let g = build_chain_generator(&cfg).unwrap();
        let t = PI / (2.0 * cfg.coupling_g);
        let out = evolve(&basis_state(2, 0), &g, t).unwrap();
        assert_abs_diff_eq!(state_fidelity(&out, &basis_state(2, 1)).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn unitary_at_zero_eta() {
        let g = build_chain_generator(&ChainConfig::default()).unwrap();
        let ev = evolve_raw(&basis_state(3, 0), &g, 7.3).unwrap();
        let norm: f64 = ev.state.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
        assert_eq!(ev.ground_population, 0.0);
    }

    #[test]
    fn renormalized_output_has_unit_norm() {
        let g = build_chain_generator(&ChainConfig::default().with_eta(0.8)).unwrap();
        let input = vec![c(3.0), Complex64::new(0.0, -2.0), c(0.5)];
        for t in [0.0, 1.0, 9.0] {
            let out = evolve(&input, &g, t).unwrap();
            let n: f64 = out.iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn decay_conserves_total_population_when_hermitian() {
        let g = build_chain_generator(&ChainConfig::default()).unwrap().with_decay(0.2);
        let ev = evolve_raw(&basis_state(3, 0), &g, 5.0).unwrap();
        let norm: f64 = ev.state.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, (-0.2f64 * 5.0).exp(), epsilon = 1e-8);
        assert_abs_diff_eq!(norm + ev.ground_population, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn bad_inputs() {
        let g = build_chain_generator(&ChainConfig::default()).unwrap();
        assert!(evolve(&basis_state(2, 0), &g, 1.0).is_err());
        assert!(evolve(&[c(0.0); 3], &g, 1.0).is_err());
        assert!(evolve(&basis_state(3, 0), &g, -1.0).is_err());
    }
}
