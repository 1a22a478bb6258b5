use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::csv_err;

pub const MIN_TRACE_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    InPlaneParallel,
    InPlanePerpendicular,
    InPlaneArbitrary,
    OutOfPlane,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::InPlaneParallel => "in-plane-parallel",
            Orientation::InPlanePerpendicular => "in-plane-perpendicular",
            Orientation::InPlaneArbitrary => "in-plane-arbitrary",
            Orientation::OutOfPlane => "out-of-plane",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-plane-parallel" => Ok(Orientation::InPlaneParallel),
            "in-plane-perpendicular" => Ok(Orientation::InPlanePerpendicular),
            "in-plane-arbitrary" => Ok(Orientation::InPlaneArbitrary),
            "out-of-plane" => Ok(Orientation::OutOfPlane),
            other => Err(Error::Parse(format!("unknown orientation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDir {
    Up,
    Down,
}

impl FromStr for SweepDir {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" | "+" | "1" | "+1" => Ok(SweepDir::Up),
            "down" | "-" | "-1" => Ok(SweepDir::Down),
            other => Err(Error::Parse(format!("unknown sweep_dir '{other}'"))),
        }
    }
}

/// One current-voltage sweep at a fixed field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IVTrace {
    /// A.
    pub current: Vec<f64>,
    /// V.
    pub voltage: Vec<f64>,
    pub sweep_dir: Option<Vec<SweepDir>>,
    /// Oe.
    pub b_field: f64,
    pub orientation: Orientation,
    pub thickness_nm: Option<f64>,
}

impl IVTrace {
    pub fn new(current: Vec<f64>, voltage: Vec<f64>, b_field: f64, orientation: Orientation) -> Result<Self> {
        let t = Self {
            current,
            voltage,
            sweep_dir: None,
            b_field,
            orientation,
            thickness_nm: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.current.len() != self.voltage.len() {
            return Err(Error::InvalidInput(format!(
                "current and voltage lengths differ ({} vs {})",
                self.current.len(),
                self.voltage.len()
            )));
        }
        if let Some(d) = &self.sweep_dir {
            if d.len() != self.current.len() {
                return Err(Error::InvalidInput("sweep_dir length differs from current".into()));
            }
        }
        if self.current.len() < MIN_TRACE_POINTS {
            return Err(Error::InsufficientData(format!(
                "trace has {} points, need at least {MIN_TRACE_POINTS}",
                self.current.len()
            )));
        }
        if self.current.iter().chain(&self.voltage).any(|x| !x.is_finite()) || !self.b_field.is_finite() {
            return Err(Error::InvalidInput("non-finite value in trace".into()));
        }
        if !(self.current.iter().any(|&i| i > 0.0) && self.current.iter().any(|&i| i < 0.0)) {
            return Err(Error::InsufficientData("trace must contain both current polarities".into()));
        }
        Ok(())
    }

    /// The same measurement with the bias direction relabeled: arrays
    /// reversed, current and voltage negated, sweep directions swapped.
    pub fn relabeled(&self) -> Self {
        let rev = |v: &[f64]| v.iter().rev().map(|x| -x).collect::<Vec<_>>();
        Self {
            current: rev(&self.current),
            voltage: rev(&self.voltage),
            sweep_dir: self.sweep_dir.as_ref().map(|d| {
                d.iter()
                    .rev()
                    .map(|s| match s {
                        SweepDir::Up => SweepDir::Down,
                        SweepDir::Down => SweepDir::Up,
                    })
                    .collect()
            }),
            ..self.clone()
        }
    }
}

/// Metadata that may come from a manifest entry, a sidecar JSON or the
/// file name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub b_field_oe: Option<f64>,
    pub orientation: Option<Orientation>,
    pub thickness_nm: Option<f64>,
}

impl TraceMeta {
    /// Fields of `self` win; gaps are filled from `other`.
    fn or(self, other: TraceMeta) -> TraceMeta {
        TraceMeta {
            b_field_oe: self.b_field_oe.or(other.b_field_oe),
            orientation: self.orientation.or(other.orientation),
            thickness_nm: self.thickness_nm.or(other.thickness_nm),
        }
    }
}

/// Parses `B<signed-oersted>_<orientation>.csv`, e.g. `B-100_out-of-plane.csv`.
pub fn parse_trace_filename(path: &Path) -> Option<TraceMeta> {
    let stem = path.file_stem()?.to_str()?;
    let rest = stem.strip_prefix('B')?;
    let (field, orient) = rest.split_once('_')?;
    Some(TraceMeta {
        b_field_oe: Some(field.parse().ok()?),
        orientation: Some(orient.parse().ok()?),
        thickness_nm: None,
    })
}

/// File name following the convention of [`parse_trace_filename`].
pub fn trace_filename(b_field: f64, orientation: Orientation) -> String {
    format!("B{b_field}_{orientation}.csv")
}

#[derive(Debug, Deserialize)]
struct Row {
    current_a: f64,
    voltage_v: f64,
    sweep_dir: Option<String>,
}

/// Reads `current_A,voltage_V[,sweep_dir]` (header required, `#` lines
/// ignored).
pub fn read_trace_csv<R: std::io::Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<SweepDir>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|h| h.to_ascii_lowercase()).collect();
    if headers.first().map(String::as_str) != Some("current_a") || headers.get(1).map(String::as_str) != Some("voltage_v") {
        return Err(Error::Parse(format!(
            "expected header 'current_A,voltage_V[,sweep_dir]', got '{}'",
            headers.join(",")
        )));
    }
    rdr.set_headers(csv::StringRecord::from(headers));
    let mut current = Vec::new();
    let mut voltage = Vec::new();
    let mut dirs = Vec::new();
    let mut has_dir = None;
    for (line, rec) in rdr.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        current.push(row.current_a);
        voltage.push(row.voltage_v);
        let d = row.sweep_dir.filter(|s| !s.trim().is_empty());
        match (has_dir, &d) {
            (None, _) => has_dir = Some(d.is_some()),
            (Some(h), _) if h != d.is_some() => {
                return Err(Error::Parse(format!("row {}: sweep_dir present on some rows only", line + 1)))
            }
            _ => {}
        }
        if let Some(s) = d {
            dirs.push(s.parse()?);
        }
    }
    Ok((current, voltage, if has_dir == Some(true) { Some(dirs) } else { None }))
}

/// Loads one trace. Metadata precedence: `meta` (e.g. from a manifest),
/// then the sidecar `<file>.json`, then the file name.
pub fn load_trace(path: &Path, meta: TraceMeta) -> Result<IVTrace> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (current, voltage, sweep_dir) = read_trace_csv(file).map_err(|e| e.context(path.display()))?;
    let sidecar_path = path.with_extension("json");
    let sidecar = if sidecar_path.exists() {
        let s = std::fs::read_to_string(&sidecar_path).map_err(|e| Error::io(&sidecar_path, e))?;
        serde_json::from_str::<TraceMeta>(&s).map_err(|e| Error::Parse(format!("{}: {e}", sidecar_path.display())))?
    } else {
        TraceMeta::default()
    };
    let merged = meta.or(sidecar).or(parse_trace_filename(path).unwrap_or_default());
    let b_field = merged
        .b_field_oe
        .ok_or_else(|| Error::InvalidInput(format!("{}: no field value in manifest, sidecar or file name", path.display())))?;
    let orientation = merged.orientation.unwrap_or(Orientation::OutOfPlane);
    let trace = IVTrace {
        current,
        voltage,
        sweep_dir,
        b_field,
        orientation,
        thickness_nm: merged.thickness_nm,
    };
    trace.validate().map_err(|e| e.context(path.display()))?;
    Ok(trace)
}

/// Writes a trace as `current_A,voltage_V[,sweep_dir]` with a schema preamble.
pub fn write_trace_csv<W: std::io::Write>(mut w: W, trace: &IVTrace) -> Result<()> {
    crate::schema::write_csv_preamble(
        &mut w,
        "iv_trace",
        &[
            ("b_field_oe", trace.b_field.to_string()),
            ("orientation", trace.orientation.to_string()),
        ],
    )?;
    let mut out = csv::Writer::from_writer(w);
    match &trace.sweep_dir {
        None => {
            out.write_record(["current_A", "voltage_V"]).map_err(csv_err)?;
            for (i, v) in trace.current.iter().zip(&trace.voltage) {
                out.serialize((i, v)).map_err(csv_err)?;
            }
        }
        Some(d) => {
            out.write_record(["current_A", "voltage_V", "sweep_dir"]).map_err(csv_err)?;
            for ((i, v), s) in trace.current.iter().zip(&trace.voltage).zip(d) {
                let s = if *s == SweepDir::Up { "up" } else { "down" };
                out.serialize((i, v, s)).map_err(csv_err)?;
            }
        }
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Relative paths resolve against the manifest's directory.
    pub file: PathBuf,
    #[serde(flatten)]
    pub meta: TraceMeta,
}

/// Batch manifest: `{"traces": [{"file": "...", "b_field_oe": ..., ...}]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub traces: Vec<ManifestEntry>,
}

/// A file that could not be loaded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadFailure {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub traces: Vec<IVTrace>,
    pub failures: Vec<LoadFailure>,
}

/// Loads every trace listed in a manifest; unreadable files are logged
/// and reported instead of aborting the batch.
pub fn load_manifest(path: &Path) -> Result<LoadedManifest> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&s).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for entry in manifest.traces {
        let file = if entry.file.is_absolute() {
            entry.file.clone()
        } else {
            base.join(&entry.file)
        };
        match load_trace(&file, entry.meta.clone()) {
            Ok(t) => traces.push(t),
            Err(e) => {
                log::warn!("skipping {}: {e}", file.display());
                failures.push(LoadFailure {
                    file: entry.file.display().to_string(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(LoadedManifest { traces, failures })
}
