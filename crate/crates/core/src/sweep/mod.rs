//! Parallel `(omega, E)` sweeps with checkpointing and CSV export.
//!
//! Cells are laid out row-major with `E` as the row index and `omega` as the
//! column index. Every cell is computed independently, so results do not depend
//! on the number of workers or on scheduling.

pub mod checkpoint;
pub mod contour;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::burst::{count_spikes, l2_norm, simulate, sweep_estimate, BurstError, Protocol, DEFAULT_F_BURST};
use crate::geometry::{classify_region, Region};
use crate::integrator::{FailureKind, IntegratorConfig};
use crate::model::{Forcing, ModelParams};

pub use checkpoint::{CheckpointLog, CHECKPOINT_MAGIC};
pub use contour::{detect_cusps, extract_boundaries, l2_levelsets, Cusp, Polyline};

pub const DEFAULT_CHECKPOINT_EVERY: usize = 256;
pub const CSV_HEADER: &str = "omega,E,status,spike_count,l2,est_count,region";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("checkpoint {path} belongs to a different spec (found {found}, expected {expected})")]
    CheckpointMismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },
    #[error("corrupt checkpoint {path} at line {line}: {reason}")]
    CorruptCheckpoint {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("sweep halted after {completed} cells")]
    Halted { completed: usize },
    #[error("grid is incomplete: {0}")]
    IncompleteGrid(String),
    #[error("malformed grid CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SpikeCount,
    L2,
    EstCount,
    Region,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::SpikeCount, Metric::L2, Metric::EstCount, Metric::Region];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::SpikeCount => "spike_count",
            Metric::L2 => "l2",
            Metric::EstCount => "est_count",
            Metric::Region => "region",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Grid axis `lo, lo + step, ...` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    /// Axis with `n` evenly spaced points from `lo` to `hi`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Self {
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 1.0 };
        Self { lo, hi, step }
    }

    fn validate(&self, name: &str) -> Result<(), SweepError> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite();
        if !ok || self.step <= 0.0 || self.hi < self.lo {
            return Err(SweepError::InvalidSpec(format!(
                "{name} range must satisfy lo <= hi and step > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub omega_range: AxisRange,
    pub e_range: AxisRange,
    pub metrics: Vec<Metric>,
    pub workers: usize,
    pub checkpoint_every: usize,
    pub f_burst: f64,
}

impl SweepSpec {
    pub fn new(omega_range: AxisRange, e_range: AxisRange) -> Self {
        Self {
            omega_range,
            e_range,
            metrics: Metric::ALL.to_vec(),
            workers: 1,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            f_burst: DEFAULT_F_BURST,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.omega_range.validate("omega")?;
        self.e_range.validate("E")?;
        if self.omega_range.lo <= 0.0 {
            return Err(SweepError::InvalidSpec("omega must be positive".into()));
        }
        if self.e_range.lo < 0.0 {
            return Err(SweepError::InvalidSpec("E must be non-negative".into()));
        }
        if self.workers == 0 {
            return Err(SweepError::InvalidSpec("workers must be positive".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(SweepError::InvalidSpec("checkpoint_every must be positive".into()));
        }
        if self.metrics.is_empty() {
            return Err(SweepError::InvalidSpec("at least one metric is required".into()));
        }
        if !(self.f_burst > 0.0 && self.f_burst.is_finite()) {
            return Err(SweepError::InvalidSpec("f_burst must be positive".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.omega_range.len() * self.e_range.len()
    }

    pub fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    /// Hash of everything that determines cell values (not the worker count).
    pub fn hash(&self, params: &ModelParams, config: &IntegratorConfig) -> String {
        let mut metrics = self.metrics.clone();
        metrics.sort_by_key(|m| m.as_str());
        metrics.dedup();
        let canonical = serde_json::json!({
            "format": 1,
            "omega_range": self.omega_range,
            "e_range": self.e_range,
            "metrics": metrics,
            "f_burst": self.f_burst,
            "params": params,
            "config": config,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Ok => f.write_str("ok"),
            CellStatus::Failed(reason) => write!(f, "failed:{reason}"),
        }
    }
}

impl FromStr for CellStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ok" {
            Ok(CellStatus::Ok)
        } else if let Some(r) = s.strip_prefix("failed:") {
            Ok(CellStatus::Failed(r.to_string()))
        } else {
            Err(format!("bad status {s:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub omega: f64,
    #[serde(rename = "E")]
    pub amplitude: f64,
    pub status: CellStatus,
    pub spike_count: Option<u32>,
    pub l2: Option<f64>,
    pub est_count: Option<u32>,
    pub region: Option<Region>,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{:.16e},{:.16e},{},{},{},{},{}",
            self.omega,
            self.amplitude,
            self.status,
            opt(self.spike_count.map(|v| v.to_string())),
            opt(self.l2.map(|v| format!("{v:.16e}"))),
            opt(self.est_count.map(|v| v.to_string())),
            opt(self.region.map(|r| r.to_string())),
        )
    }
}

fn failure_tag(err: &BurstError) -> String {
    match err {
        BurstError::Integration(kind) => match kind {
            FailureKind::StepSizeUnderflow { .. } => "step_size_underflow",
            FailureKind::MaxStepsExceeded { .. } => "max_steps_exceeded",
            FailureKind::NonFiniteState { .. } => "non_finite_state",
            FailureKind::InvalidSpan { .. } => "invalid_span",
            FailureKind::InvalidConfig => "invalid_config",
        },
        BurstError::Params(_) => "invalid_parameters",
        _ => "analysis_error",
    }
    .to_string()
}

/// Computes one cell with the standard protocol.
pub fn evaluate_cell(
    params: &ModelParams,
    forcing: &Forcing,
    config: &IntegratorConfig,
    metrics: &[Metric],
    f_burst: f64,
) -> CellRecord {
    let wants = |m| metrics.contains(&m);
    let mut cell = CellRecord {
        omega: forcing.omega,
        amplitude: forcing.amplitude,
        status: CellStatus::Ok,
        spike_count: None,
        l2: None,
        est_count: None,
        region: wants(Metric::Region).then(|| classify_region(params, forcing)),
    };
    if !(wants(Metric::SpikeCount) || wants(Metric::L2) || wants(Metric::EstCount)) {
        return cell;
    }
    let protocol = Protocol::default();
    match simulate(params, forcing, config, protocol) {
        Ok(tr) => {
            if wants(Metric::SpikeCount) {
                cell.spike_count = Some(count_spikes(&tr, protocol.measure_periods));
            }
            if wants(Metric::L2) {
                cell.l2 = Some(l2_norm(&tr, forcing.period()));
            }
            if wants(Metric::EstCount) {
                cell.est_count = sweep_estimate(&tr, params, forcing, f_burst);
            }
        }
        Err(e) => cell.status = CellStatus::Failed(failure_tag(&e)),
    }
    cell
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub spec_hash: String,
    pub version: String,
    /// Seconds since the Unix epoch at assembly time.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub omegas: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Row-major: `cells[i * omegas.len() + j]` has `E = amplitudes[i]`, `omega = omegas[j]`.
    pub cells: Vec<CellRecord>,
    pub meta: SweepMeta,
}

impl SweepGrid {
    pub fn cell(&self, i_e: usize, j_omega: usize) -> &CellRecord {
        &self.cells[i_e * self.omegas.len() + j_omega]
    }

    /// Metric values row-major, `NaN` for failed cells.
    pub fn metric_values(&self, metric: Metric) -> Result<Vec<f64>, SweepError> {
        self.cells
            .iter()
            .map(|c| {
                if !c.is_ok() {
                    return Ok(f64::NAN);
                }
                let v = match metric {
                    Metric::SpikeCount => c.spike_count.map(f64::from),
                    Metric::L2 => c.l2,
                    Metric::EstCount => c.est_count.map(f64::from),
                    Metric::Region => None,
                };
                v.ok_or_else(|| {
                    SweepError::IncompleteGrid(format!(
                        "cell omega={} E={} has no {metric}",
                        c.omega, c.amplitude
                    ))
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.cells.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for c in &self.cells {
            s.push_str(&c.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, SweepError> {
        let bad = |line: usize, reason: String| SweepError::MalformedCsv { line, reason };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(bad(1, "missing header".into())),
        }
        let mut cells = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(n + 1, format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(n + 1, e.to_string()));
            let opt_f = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            let opt_u = |s: &str| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<u32>().map(Some).map_err(|e| bad(n + 1, e.to_string()))
                }
            };
            cells.push(CellRecord {
                omega: num(f[0])?,
                amplitude: num(f[1])?,
                status: f[2].parse().map_err(|e| bad(n + 1, e))?,
                spike_count: opt_u(f[3])?,
                l2: opt_f(f[4])?,
                est_count: opt_u(f[5])?,
                region: if f[6].is_empty() {
                    None
                } else {
                    Some(f[6].parse().map_err(|e| bad(n + 1, e))?)
                },
            });
        }
        if cells.is_empty() {
            return Err(bad(2, "no cells".into()));
        }
        let first_e = cells[0].amplitude;
        let n_omega = cells.iter().take_while(|c| c.amplitude == first_e).count();
        if cells.len() % n_omega != 0 {
            return Err(bad(0, "cell count is not a multiple of the row length".into()));
        }
        let omegas: Vec<f64> = cells[..n_omega].iter().map(|c| c.omega).collect();
        let amplitudes: Vec<f64> = cells.iter().step_by(n_omega).map(|c| c.amplitude).collect();
        Ok(Self {
            omegas,
            amplitudes,
            cells,
            meta: SweepMeta {
                spec_hash: String::new(),
                version: TOOLKIT_VERSION.to_string(),
                timestamp: 0,
            },
        })
    }

    /// Writes the CSV atomically and the metadata sidecar `<path>.meta.json`.
    pub fn write_files(&self, csv_path: &Path) -> Result<(), SweepError> {
        write_atomic(csv_path, self.to_csv().as_bytes())?;
        let meta_path = sidecar_path(csv_path);
        let meta = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        write_atomic(&meta_path, meta.as_bytes())
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv_path.with_file_name(name)
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checkpoint: Option<PathBuf>,
    /// Stop with [`SweepError::Halted`] once this many new cells are done.
    pub halt_after: Option<usize>,
}

pub fn run_sweep(
    spec: &SweepSpec,
    params: &ModelParams,
    config: &IntegratorConfig,
    options: &RunOptions,
) -> Result<SweepGrid, SweepError> {
    spec.validate()?;
    params
        .validate()
        .map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
    config
        .validate()
        .map_err(|e| SweepError::InvalidSpec(e.to_string()))?;

    let omegas = spec.omega_range.values();
    let amplitudes = spec.e_range.values();
    let total = omegas.len() * amplitudes.len();
    let hash = spec.hash(params, config);

    let mut log = match &options.checkpoint {
        Some(path) => Some(CheckpointLog::open(path, &hash, total)?),
        None => None,
    };
    let mut done: Vec<Option<CellRecord>> = vec![None; total];
    if let Some(log) = &log {
        for (idx, rec) in log.records() {
            let (i, j) = (idx / omegas.len(), idx % omegas.len());
            done[*idx] = Some(CellRecord {
                omega: omegas[j],
                amplitude: amplitudes[i],
                ..rec.clone()
            });
        }
    }
    let pending: Vec<usize> = (0..total).filter(|&k| done[k].is_none()).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
    let mut completed = 0usize;
    for chunk in pending.chunks(spec.checkpoint_every) {
        let results: Vec<CellRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&k| {
                    let forcing = Forcing {
                        amplitude: amplitudes[k / omegas.len()],
                        omega: omegas[k % omegas.len()],
                    };
                    evaluate_cell(params, &forcing, config, &spec.metrics, spec.f_burst)
                })
                .collect()
        });
        if let Some(log) = log.as_mut() {
            log.append(chunk.iter().copied().zip(results.iter()))?;
        }
        for (&k, rec) in chunk.iter().zip(results) {
            done[k] = Some(rec);
        }
        completed += chunk.len();
        if options.halt_after.is_some_and(|h| completed >= h) && done.iter().any(Option::is_none) {
            return Err(SweepError::Halted { completed });
        }
    }
    if let Some(log) = log.as_mut() {
        log.compact()?;
    }
    let cells: Vec<CellRecord> = done.into_iter().map(|c| c.expect("all cells computed")).collect();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepGrid {
        omegas,
        amplitudes,
        cells,
        meta: SweepMeta {
            spec_hash: hash,
            version: TOOLKIT_VERSION.to_string(),
            timestamp,
        },
    })
}
