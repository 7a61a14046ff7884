//! Raw vibration records, fixed-length windowing and experiment-group assembly.
//!
//! Records are plain numeric files (`csv` with one value per line, or raw
//! little-endian `f64`). Metadata such as bearing condition and fault size
//! comes from a JSON manifest rather than the file name. MATLAB `.mat`
//! recordings must be converted beforehand.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Window length of one sub-sample.
pub const WINDOW: usize = 300;
/// Normal records are cut to this many points before windowing (800 windows).
pub const NORMAL_RECORD_LEN: usize = 240_000;
/// Fault records are cut to this many points before windowing (400 windows).
pub const FAULT_RECORD_LEN: usize = 120_000;
/// Fault diameters (mm) of the seeded defects: 0.007, 0.014 and 0.021 inch.
pub const FAULT_DIAMETERS_MM: [f64; 3] = [0.1778, 0.3556, 0.5334];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Normal,
    InnerRace,
    Ball,
    OuterRace,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Normal => "normal",
            Condition::InnerRace => "inner_race",
            Condition::Ball => "ball",
            Condition::OuterRace => "outer_race",
        }
    }

    pub fn label(self) -> Label {
        match self {
            Condition::Normal => Label::Normal,
            _ => Label::Fault,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Condition::Normal),
            "inner_race" => Ok(Condition::InnerRace),
            "ball" => Ok(Condition::Ball),
            "outer_race" => Ok(Condition::OuterRace),
            other => Err(Error::Format(format!("unknown condition {other:?}"))),
        }
    }
}

/// Ground truth of a sub-sample. `Unknown` marks unlabeled production data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Fault,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Fault => "fault",
            Label::Unknown => "unknown",
        }
    }

    pub fn is_fault(self) -> bool {
        self == Label::Fault
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "0" => Ok(Label::Normal),
            "fault" | "1" => Ok(Label::Fault),
            "unknown" | "" => Ok(Label::Unknown),
            other => Err(Error::Format(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalFormat {
    Csv,
    F64le,
}

impl FromStr for SignalFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SignalFormat::Csv),
            "f64le" => Ok(SignalFormat::F64le),
            other => Err(Error::Format(format!("unknown signal format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub rate_hz: f64,
    pub condition: Condition,
    pub fault_diameter_mm: f64,
    pub source_id: String,
    #[serde(default)]
    pub rpm: Option<f64>,
    #[serde(default)]
    pub load_hp: Option<f64>,
}

impl SignalMeta {
    pub fn new(condition: Condition, fault_diameter_mm: f64, source_id: impl Into<String>) -> Self {
        SignalMeta {
            rate_hz: 12_000.0,
            condition,
            fault_diameter_mm,
            source_id: source_id.into(),
            rpm: None,
            load_hp: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rate_hz.is_nan() || self.rate_hz <= 0.0 {
            return Err(Error::param(format!(
                "{}: sample rate must be positive, got {}",
                self.source_id, self.rate_hz
            )));
        }
        let known = self.fault_diameter_mm == 0.0
            || FAULT_DIAMETERS_MM
                .iter()
                .any(|d| (d - self.fault_diameter_mm).abs() < 1e-9);
        if !known {
            return Err(Error::param(format!(
                "{}: fault diameter {} mm is not one of 0, 0.1778, 0.3556, 0.5334",
                self.source_id, self.fault_diameter_mm
            )));
        }
        if (self.condition == Condition::Normal) != (self.fault_diameter_mm == 0.0) {
            return Err(Error::param(format!(
                "{}: condition {} is inconsistent with fault diameter {} mm",
                self.source_id, self.condition, self.fault_diameter_mm
            )));
        }
        Ok(())
    }
}

/// A raw vibration record.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    meta: SignalMeta,
}

impl Signal {
    pub fn new(samples: Vec<f64>, meta: SignalMeta) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal {
                path: PathBuf::from(&meta.source_id),
            });
        }
        meta.validate()?;
        Ok(Signal { samples, meta })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn meta(&self) -> &SignalMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Keeps at most `len` leading points.
    pub fn truncated(mut self, len: usize) -> Self {
        self.samples.truncate(len.max(1));
        self
    }
}

/// One fixed-length window of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSample {
    pub points: Vec<f64>,
    pub label: Label,
    pub condition: Condition,
    pub fault_diameter_mm: f64,
    pub source_id: String,
    pub window_index: usize,
}

/// Reads the raw sample values of a record.
pub fn read_samples(path: &Path, format: SignalFormat) -> Result<Vec<f64>> {
    let samples = match format {
        SignalFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv_samples(&text, path)?
        }
        SignalFormat::F64le => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Format(format!(
                    "{}: length {} is not a multiple of 8 bytes",
                    path.display(),
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect()
        }
    };
    if samples.is_empty() {
        return Err(Error::EmptySignal {
            path: path.to_path_buf(),
        });
    }
    Ok(samples)
}

fn parse_csv_samples(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        // a record may carry extra columns; the first one is the sample
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            // a non-numeric first line is a header
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    value: field.to_string(),
                })
            }
        }
    }
    Ok(out)
}

pub fn load_signal(path: &Path, format: SignalFormat, meta: SignalMeta) -> Result<Signal> {
    let samples = read_samples(path, format)?;
    Signal::new(samples, meta)
}

/// Splits a signal into consecutive non-overlapping windows, dropping the
/// trailing remainder.
pub fn segment(signal: &Signal, window: usize) -> Result<Vec<SubSample>> {
    if window == 0 {
        return Err(Error::param("window must be positive"));
    }
    if signal.len() < window {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            window,
        });
    }
    let meta = signal.meta();
    Ok(signal
        .samples()
        .chunks_exact(window)
        .enumerate()
        .map(|(window_index, points)| SubSample {
            points: points.to_vec(),
            label: meta.condition.label(),
            condition: meta.condition,
            fault_diameter_mm: meta.fault_diameter_mm,
            source_id: meta.source_id.clone(),
            window_index,
        })
        .collect())
}

/// Composition of one experiment group: all normal windows plus a random
/// draw of fault windows for each of three fault severities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub group_id: u8,
    pub fault_condition: Condition,
    #[serde(default = "default_normal_count")]
    pub normal_count: usize,
    #[serde(default = "default_fault_count")]
    pub fault_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_normal_count() -> usize {
    800
}

fn default_fault_count() -> usize {
    20
}

impl GroupSpec {
    /// Groups 1, 2 and 3 hold inner-race, ball and outer-race faults.
    pub fn standard(group_id: u8, seed: u64) -> Result<Self> {
        let fault_condition = match group_id {
            1 => Condition::InnerRace,
            2 => Condition::Ball,
            3 => Condition::OuterRace,
            other => return Err(Error::param(format!("group id must be 1..=3, got {other}"))),
        };
        Ok(GroupSpec {
            group_id,
            fault_condition,
            normal_count: default_normal_count(),
            fault_count: default_fault_count(),
            seed,
        })
    }

    pub fn total(&self) -> usize {
        self.normal_count + 3 * self.fault_count
    }
}

/// A labeled collection of sub-samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SubSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

/// Builds a labeled group: normal windows first, then the sampled fault
/// windows by ascending fault diameter, each in sampled order.
pub fn assemble_group(spec: &GroupSpec, normal: &Signal, faults: &[Signal; 3]) -> Result<Dataset> {
    if normal.meta().condition != Condition::Normal {
        return Err(Error::param(format!(
            "{}: expected a normal record, got {}",
            normal.meta().source_id,
            normal.meta().condition
        )));
    }
    for f in faults {
        if f.meta().condition != spec.fault_condition {
            return Err(Error::param(format!(
                "{}: group {} expects {} faults, got {}",
                f.meta().source_id,
                spec.group_id,
                spec.fault_condition,
                f.meta().condition
            )));
        }
    }

    let normal = normal.clone().truncated(NORMAL_RECORD_LEN);
    let normal_windows = segment_counted(&normal, spec.normal_count)?;
    let mut samples: Vec<SubSample> = normal_windows.into_iter().take(spec.normal_count).collect();

    let mut ordered: Vec<&Signal> = faults.iter().collect();
    ordered.sort_by(|a, b| a.meta().fault_diameter_mm.total_cmp(&b.meta().fault_diameter_mm));
    for (severity, fault) in ordered.into_iter().enumerate() {
        let fault = fault.clone().truncated(FAULT_RECORD_LEN);
        let mut windows = segment_counted(&fault, spec.fault_count)?;
        let mut rng = rng::substream(spec.seed, severity as u64);
        let picks = index::sample(&mut rng, windows.len(), spec.fault_count);
        let mut slots: Vec<Option<SubSample>> = windows.drain(..).map(Some).collect();
        samples.extend(
            picks
                .into_iter()
                .map(|i| slots[i].take().expect("index sampled once")),
        );
    }
    Ok(Dataset { samples })
}

fn segment_counted(signal: &Signal, required: usize) -> Result<Vec<SubSample>> {
    let available = signal.len() / WINDOW;
    if available < required || available == 0 {
        return Err(Error::InsufficientWindows {
            source_id: signal.meta().source_id.clone(),
            available,
            required,
        });
    }
    segment(signal, WINDOW)
}

/// One entry of the record manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub format: SignalFormat,
    pub condition: Condition,
    pub fault_diameter_mm: f64,
    #[serde(default)]
    pub rpm: Option<f64>,
    #[serde(default)]
    pub load_hp: Option<f64>,
    pub rate_hz: f64,
}

impl ManifestEntry {
    pub fn source_id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.display().to_string())
    }

    /// Loads the record; relative paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<Signal> {
        let path = if self.path.is_absolute() {
            self.path.clone()
        } else {
            base_dir.join(&self.path)
        };
        let meta = SignalMeta {
            rate_hz: self.rate_hz,
            condition: self.condition,
            fault_diameter_mm: self.fault_diameter_mm,
            source_id: self.source_id(),
            rpm: self.rpm,
            load_hp: self.load_hp,
        };
        load_signal(&path, self.format, meta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Manifest { entries, base_dir })
    }

    /// Loads the normal record and the three fault records a group needs.
    pub fn load_group(&self, spec: &GroupSpec) -> Result<(Signal, [Signal; 3])> {
        let normal = self
            .entries
            .iter()
            .find(|e| e.condition == Condition::Normal)
            .ok_or_else(|| Error::param("manifest has no normal record"))?;
        let mut faults: Vec<&ManifestEntry> = self
            .entries
            .iter()
            .filter(|e| e.condition == spec.fault_condition)
            .collect();
        faults.sort_by(|a, b| a.fault_diameter_mm.total_cmp(&b.fault_diameter_mm));
        faults.dedup_by(|a, b| (a.fault_diameter_mm - b.fault_diameter_mm).abs() < 1e-9);
        if faults.len() != 3 {
            return Err(Error::param(format!(
                "manifest must list three {} records of distinct diameter, found {}",
                spec.fault_condition,
                faults.len()
            )));
        }
        let normal = normal.load(&self.base_dir)?;
        let loaded = [
            faults[0].load(&self.base_dir)?,
            faults[1].load(&self.base_dir)?,
            faults[2].load(&self.base_dir)?,
        ];
        Ok((normal, loaded))
    }
}
