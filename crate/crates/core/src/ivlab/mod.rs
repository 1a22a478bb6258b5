//! I-V analysis: critical currents from voltage-gradient detection,
//! bootstrap error bars, η(B) series and the sinusoidal field fit.

mod export;
mod extract;
mod fit;
mod series;
pub mod synth;
mod trace;

pub use export::{fit_json, write_residuals_csv, write_series_csv};
pub use extract::{
    bootstrap_uncertainty, extract_critical_currents, BranchDetection, CriticalCurrentEstimate, ExtractConfig, Polarity,
};
pub use fit::{fit_sinusoid, EfficiencyFit, FitOptions, FitResidual};
pub use series::{efficiency_series, efficiency_with_sigma, EfficiencyPoint, EfficiencySeries, SkippedField};
pub use trace::{
    load_manifest, load_trace, parse_trace_filename, read_trace_csv, trace_filename, write_trace_csv, IVTrace,
    LoadFailure, LoadedManifest, Manifest, ManifestEntry, Orientation, SweepDir, TraceMeta, MIN_TRACE_POINTS,
};
