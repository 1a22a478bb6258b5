//! Synthetic I-V corpora with a known η(B) for end-to-end checks.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::trace::{trace_filename, write_trace_csv, IVTrace, Manifest, ManifestEntry, Orientation, TraceMeta};
use crate::error::{Error, Result};
use crate::schema::write_file;

/// Resistively shunted step model: V = 0 between the critical currents,
/// ohmic beyond, plus Gaussian voltage noise and critical-current jitter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    /// Mean critical current, A.
    pub i0: f64,
    /// Normal-state resistance, Ω.
    pub r_normal: f64,
    pub n_points: usize,
    /// Sweep spans ±i_max, A.
    pub i_max: f64,
    /// Standard deviation of the voltage noise, V.
    pub voltage_noise: f64,
    /// Relative standard deviation of each critical current.
    pub ic_jitter: f64,
    /// η(B) = amplitude · sin(frequency · B + phase).
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub b_step: f64,
    pub orientation: Orientation,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            i0: 1e-3,
            r_normal: 10.0,
            n_points: 1601,
            i_max: 2e-3,
            voltage_noise: 2e-7,
            ic_jitter: 0.005,
            amplitude: 0.25,
            frequency: 0.03,
            phase: 0.2,
            b_min: -200.0,
            b_max: 200.0,
            b_step: 10.0,
            orientation: Orientation::OutOfPlane,
            seed: 1234,
        }
    }
}

impl SynthConfig {
    pub fn eta_at(&self, b: f64) -> f64 {
        self.amplitude * (self.frequency * b + self.phase).sin()
    }

    pub fn fields(&self) -> Vec<f64> {
        let n = ((self.b_max - self.b_min) / self.b_step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.b_min + k as f64 * self.b_step).collect()
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// One monotone up-sweep from −i_max to +i_max.
    pub fn trace(&self, b: f64, eta: f64, orientation: Orientation, rng: &mut ChaCha8Rng) -> IVTrace {
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let ic_plus = self.i0 * (1.0 + eta) * (1.0 + self.ic_jitter * unit.sample(rng));
        let ic_minus = -self.i0 * (1.0 - eta) * (1.0 + self.ic_jitter * unit.sample(rng));
        let step = 2.0 * self.i_max / (self.n_points - 1) as f64;
        let current: Vec<f64> = (0..self.n_points).map(|k| -self.i_max + k as f64 * step).collect();
        let voltage = current
            .iter()
            .map(|&i| {
                let v = if i > ic_plus {
                    self.r_normal * (i - ic_plus)
                } else if i < ic_minus {
                    self.r_normal * (i - ic_minus)
                } else {
                    0.0
                };
                v + self.voltage_noise * unit.sample(rng)
            })
            .collect();
        IVTrace {
            current,
            voltage,
            sweep_dir: None,
            b_field: b,
            orientation,
            thickness_nm: None,
        }
    }
}

/// One trace per field; field `k` draws from RNG stream `k`.
pub fn synth_corpus(cfg: &SynthConfig) -> Vec<IVTrace> {
    cfg.fields()
        .into_iter()
        .enumerate()
        .map(|(k, b)| cfg.trace(b, cfg.eta_at(b), cfg.orientation, &mut cfg.rng(k as u64)))
        .collect()
}

/// Writes the corpus as CSV files named by convention plus a
/// `manifest.json`, returning the manifest path.
pub fn write_corpus(dir: &Path, cfg: &SynthConfig) -> Result<PathBuf> {
    if cfg.n_points < 2 || !(cfg.b_step > 0.0) || cfg.b_max < cfg.b_min {
        return Err(Error::InvalidInput("synthetic corpus needs n_points ≥ 2 and an ascending field grid".into()));
    }
    let mut manifest = Manifest::default();
    for t in synth_corpus(cfg) {
        let name = trace_filename(t.b_field, t.orientation);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t)?;
        write_file(&dir.join(&name), &buf)?;
        manifest.traces.push(ManifestEntry {
            file: name.into(),
            meta: TraceMeta::default(),
        });
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    write_file(&path, format!("{json}\n").as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivlab::trace::load_manifest;

    #[test]
    fn default_field_grid() {
        let f = SynthConfig::default().fields();
        assert_eq!(f.len(), 41);
        assert_eq!((f[0], f[40]), (-200.0, 200.0));
    }

    #[test]
    fn corpus_roundtrips_through_manifest() {
        let cfg = SynthConfig {
            b_min: -20.0,
            b_max: 20.0,
            ..SynthConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(dir.path(), &cfg).unwrap();
        let loaded = load_manifest(&path).unwrap();
        let direct = synth_corpus(&cfg);
        assert_eq!(loaded.traces.len(), 5);
        for (a, b) in loaded.traces.iter().zip(&direct) {
            assert_eq!(a.b_field, b.b_field);
            assert_eq!(a.current, b.current);
            assert_eq!(a.voltage, b.voltage);
        }
    }
}
