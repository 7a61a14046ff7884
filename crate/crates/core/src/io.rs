//! On-disk formats shared by the command-line stages.
//!
//! Every writer renders into memory first and then replaces the destination
//! atomically (temporary file in the same directory, then rename). Floats use
//! Rust's shortest round-trip representation, so a value read back is
//! bit-identical to the one written.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineParams, BaselineScores};
use crate::error::{Error, Result};
use crate::eval::{Pca, SweepResult};
use crate::features::{feature_names, FeatureMatrix, FeatureParams, RowFlags, Scaling, N_FEATURES};
use crate::gnn::{ranking, DetectionReport, GnnModel, Layer, TrainConfig};
use crate::graph::{AdjacencyMatrix, Metric};
use crate::ingest::{Condition, Dataset, Label, SubSample};

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("{what}: cannot parse {s:?} as a number")))
}

fn parse_index(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("{what}: cannot parse {s:?} as an index")))
}

/// Replaces `path` with `bytes` via a temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner()
        .map_err(|e| Error::Format(format!("csv buffer: {e}")))
}

fn read_csv(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| {
        Error::Format(format!("{}: missing column {name:?}", path.display()))
    })
}

// ---- dataset ---------------------------------------------------------------

pub fn dataset_csv(ds: &Dataset) -> Result<Vec<u8>> {
    let width = ds.samples.first().map_or(0, |s| s.points.len());
    let mut header: Vec<String> = ["window_index", "source_id", "condition", "fault_diameter_mm", "label"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..width).map(|i| format!("p{i}")));
    csv_bytes(
        &header,
        ds.samples.iter().map(|s| {
            let mut row = vec![
                s.window_index.to_string(),
                s.source_id.clone(),
                s.condition.to_string(),
                num(s.fault_diameter_mm),
                s.label.to_string(),
            ];
            row.extend(s.points.iter().map(|&v| num(v)));
            row
        }),
    )
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    write_atomic(path, &dataset_csv(ds)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (header, rows) = read_csv(path)?;
    let wi = column(&header, "window_index", path)?;
    let si = column(&header, "source_id", path)?;
    let ci = column(&header, "condition", path)?;
    let di = column(&header, "fault_diameter_mm", path)?;
    let li = column(&header, "label", path)?;
    let point_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('p') && h[1..].parse::<usize>().is_ok())
        .map(|(i, _)| i)
        .collect();
    if point_cols.is_empty() {
        return Err(Error::Format(format!("{}: no p0.. columns", path.display())));
    }
    let what = path.display().to_string();
    let samples = rows
        .iter()
        .map(|r| {
            Ok(SubSample {
                window_index: parse_index(&r[wi], &what)?,
                source_id: r[si].to_string(),
                condition: r[ci].parse::<Condition>()?,
                fault_diameter_mm: parse_num(&r[di], &what)?,
                label: r[li].parse::<Label>()?,
                points: point_cols
                    .iter()
                    .map(|&c| parse_num(&r[c], &what))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { samples })
}

// ---- features --------------------------------------------------------------

/// JSON sidecar describing how `features.csv` was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub columns: Vec<String>,
    #[serde(flatten)]
    pub scaling: Scaling,
    /// Rows where a zero-variance or zero-energy convention was applied.
    pub degenerate_rows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_flags: Vec<(usize, RowFlags)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FeatureParams>,
}

impl FeatureSidecar {
    pub fn describe(fm: &FeatureMatrix, params: Option<&FeatureParams>) -> Self {
        let flagged: Vec<(usize, RowFlags)> = fm
            .flags
            .iter()
            .enumerate()
            .filter(|(_, f)| f.any())
            .map(|(i, f)| (i, *f))
            .collect();
        FeatureSidecar {
            columns: column_names(fm.ncols()),
            scaling: fm.scaling.clone(),
            degenerate_rows: flagged.iter().map(|(i, _)| *i).collect(),
            row_flags: flagged,
            params: params.cloned(),
        }
    }
}

fn column_names(ncols: usize) -> Vec<String> {
    if ncols == N_FEATURES {
        feature_names()
    } else {
        (1..=ncols).map(|i| format!("F{i}")).collect()
    }
}

pub fn features_csv(fm: &FeatureMatrix) -> Result<Vec<u8>> {
    let mut header = vec!["label".to_string()];
    header.extend(column_names(fm.ncols()));
    csv_bytes(
        &header,
        fm.values.outer_iter().zip(&fm.labels).map(|(row, label)| {
            let mut out = vec![label.to_string()];
            out.extend(row.iter().map(|&v| num(v)));
            out
        }),
    )
}

/// Writes `features.csv`-style output plus its JSON sidecar.
pub fn write_features(csv_path: &Path, sidecar_path: &Path, fm: &FeatureMatrix, params: Option<&FeatureParams>) -> Result<()> {
    let csv = features_csv(fm)?;
    let sidecar = to_json_bytes(&FeatureSidecar::describe(fm, params))?;
    write_atomic(csv_path, &csv)?;
    write_atomic(sidecar_path, &sidecar)
}

/// Reads a feature CSV. The scaling description comes from the sidecar when
/// given; otherwise the matrix is treated as raw.
pub fn read_features(csv_path: &Path, sidecar_path: Option<&Path>) -> Result<FeatureMatrix> {
    let (header, rows) = read_csv(csv_path)?;
    let li = column(&header, "label", csv_path)?;
    let value_cols: Vec<usize> = (0..header.len()).filter(|&i| i != li).collect();
    if value_cols.is_empty() || rows.is_empty() {
        return Err(Error::Format(format!("{}: no feature values", csv_path.display())));
    }
    let what = csv_path.display().to_string();
    let mut values = Array2::zeros((rows.len(), value_cols.len()));
    let mut labels = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        labels.push(r[li].parse::<Label>()?);
        for (j, &c) in value_cols.iter().enumerate() {
            values[[i, j]] = parse_num(&r[c], &what)?;
        }
    }
    let mut fm = FeatureMatrix::new(values, labels)?;
    if let Some(p) = sidecar_path {
        let sidecar: FeatureSidecar = read_json(p)?;
        fm.scaling = sidecar.scaling;
        for (i, f) in sidecar.row_flags {
            if let Some(slot) = fm.flags.get_mut(i) {
                *slot = f;
            }
        }
    }
    Ok(fm)
}

/// Reads only the `label` column of any CSV that has one.
pub fn read_labels(path: &Path) -> Result<Vec<Label>> {
    let (header, rows) = read_csv(path)?;
    let li = column(&header, "label", path)?;
    rows.iter().map(|r| r[li].parse::<Label>()).collect()
}

// ---- graph -----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphHeader {
    pub m: usize,
    pub k: usize,
    pub metric: Metric,
}

pub fn adjacency_csv(a: &AdjacencyMatrix) -> Result<Vec<u8>> {
    let header = ["row", "col", "weight"].map(String::from);
    let rows = a
        .weights
        .indexed_iter()
        .filter(|(_, w)| **w != 0.0)
        .map(|((r, c), w)| vec![r.to_string(), c.to_string(), num(*w)]);
    csv_bytes(&header, rows)
}

pub fn write_adjacency(csv_path: &Path, header_path: &Path, a: &AdjacencyMatrix) -> Result<()> {
    let csv = adjacency_csv(a)?;
    let header = to_json_bytes(&GraphHeader {
        m: a.len(),
        k: a.k,
        metric: a.metric,
    })?;
    write_atomic(csv_path, &csv)?;
    write_atomic(header_path, &header)
}

pub fn read_adjacency(csv_path: &Path, header_path: &Path) -> Result<AdjacencyMatrix> {
    let header: GraphHeader = read_json(header_path)?;
    let (cols, rows) = read_csv(csv_path)?;
    let (ri, ci, wi) = (
        column(&cols, "row", csv_path)?,
        column(&cols, "col", csv_path)?,
        column(&cols, "weight", csv_path)?,
    );
    let what = csv_path.display().to_string();
    let mut weights = Array2::zeros((header.m, header.m));
    for r in &rows {
        let (i, j) = (parse_index(&r[ri], &what)?, parse_index(&r[ci], &what)?);
        if i >= header.m || j >= header.m {
            return Err(Error::Format(format!("{what}: entry ({i}, {j}) outside {0}x{0}", header.m)));
        }
        weights[[i, j]] = parse_num(&r[wi], &what)?;
    }
    Ok(AdjacencyMatrix {
        weights,
        k: header.k,
        metric: header.metric,
    })
}

// ---- model -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayerRecord {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Model checkpoint: `{d, h, W0, b0, W1, b1, extra_hidden, seed, config}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub d: usize,
    pub h: usize,
    #[serde(rename = "W0")]
    pub w0: Vec<Vec<f64>>,
    pub b0: Vec<f64>,
    #[serde(rename = "W1")]
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    #[serde(default)]
    pub extra_hidden: Vec<HiddenLayerRecord>,
    pub seed: u64,
    pub config: TrainConfig,
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn matrix_of(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat)
        .map_err(|e| Error::shape(format!("ragged weight matrix: {e}")))
}

impl Checkpoint {
    pub fn new(model: &GnnModel, config: &TrainConfig) -> Self {
        Checkpoint {
            d: model.features(),
            h: model.hidden(),
            w0: rows_of(&model.input.weights),
            b0: model.input.bias.to_vec(),
            w1: rows_of(&model.output.weights),
            b1: model.output.bias.to_vec(),
            extra_hidden: model
                .extra_hidden
                .iter()
                .map(|l| HiddenLayerRecord {
                    weights: rows_of(&l.weights),
                    b: l.bias.to_vec(),
                })
                .collect(),
            seed: config.seed,
            config: *config,
        }
    }

    pub fn model(&self) -> Result<GnnModel> {
        let layer = |w: &[Vec<f64>], b: &[f64]| -> Result<Layer> {
            Ok(Layer {
                weights: matrix_of(w)?,
                bias: b.to_vec().into(),
            })
        };
        let model = GnnModel {
            input: layer(&self.w0, &self.b0)?,
            extra_hidden: self
                .extra_hidden
                .iter()
                .map(|l| layer(&l.weights, &l.b))
                .collect::<Result<_>>()?,
            output: layer(&self.w1, &self.b1)?,
        };
        model.validate()?;
        if model.features() != self.d || model.hidden() != self.h {
            return Err(Error::shape("checkpoint d/h disagree with its weights"));
        }
        Ok(model)
    }
}

// ---- scores ----------------------------------------------------------------

/// Score report of a baseline detector, in the detection-report layout plus
/// the algorithm name and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub algo: crate::baselines::Algo,
    pub params: BaselineParams,
    pub ff: Vec<f64>,
    pub ranking: Vec<usize>,
    pub flagged: Vec<usize>,
    pub n: usize,
    pub loss_history: Vec<f64>,
}

impl BaselineReport {
    pub fn new(scores: BaselineScores, n: usize) -> Result<Self> {
        if n > scores.scores.len() {
            return Err(Error::param(format!("cannot flag {n} of {} objects", scores.scores.len())));
        }
        let ranking = ranking(&scores.scores);
        Ok(BaselineReport {
            algo: scores.algo,
            params: scores.params,
            flagged: ranking[..n].to_vec(),
            ranking,
            ff: scores.scores,
            n,
            loss_history: Vec::new(),
        })
    }
}

/// The fields `eval` needs from either report kind.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScoredReport {
    pub ff: Vec<f64>,
    pub flagged: Vec<usize>,
    pub n: usize,
}

impl From<&DetectionReport> for ScoredReport {
    fn from(r: &DetectionReport) -> Self {
        ScoredReport {
            ff: r.ff.clone(),
            flagged: r.flagged.clone(),
            n: r.n,
        }
    }
}

pub fn scores_csv(ff: &[f64], flagged: &[usize]) -> Result<Vec<u8>> {
    let mut marked = vec![false; ff.len()];
    for &i in flagged {
        if let Some(m) = marked.get_mut(i) {
            *m = true;
        }
    }
    let header = ["index", "ff", "flagged"].map(String::from);
    csv_bytes(
        &header,
        ff.iter()
            .zip(marked)
            .enumerate()
            .map(|(i, (v, m))| vec![i.to_string(), num(*v), u8::from(m).to_string()]),
    )
}

// ---- sweep and pca ---------------------------------------------------------

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let header: Vec<String> = [
        "cell", "k", "metric", "hidden", "extra_hidden_layers", "eta", "iters", "seed", "auc", "acc",
        "dr", "far", "tp", "tn", "fp", "fn", "wall_time", "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows = result.cells.iter().enumerate().map(|(i, c)| {
        let p = &c.params;
        let mut row = vec![
            i.to_string(),
            p.k.to_string(),
            p.metric.to_string(),
            p.hidden.to_string(),
            p.extra_hidden_layers.to_string(),
            num(p.eta),
            p.iters.to_string(),
            p.seed.to_string(),
        ];
        match &c.report {
            Some(r) => row.extend([
                num(r.auc),
                num(r.acc),
                num(r.dr),
                num(r.far),
                r.counts.tp.to_string(),
                r.counts.tn.to_string(),
                r.counts.fp.to_string(),
                r.counts.fn_.to_string(),
                r.wall_time.map(num).unwrap_or_default(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 9)),
        }
        row.push(c.error.clone().unwrap_or_default());
        row
    });
    csv_bytes(&header, rows)
}

pub fn pca_csv(pca: &Pca, labels: &[Label], flagged: &[usize]) -> Result<Vec<u8>> {
    if pca.coords.ncols() < 2 {
        return Err(Error::shape("PCA export needs two components"));
    }
    let mut marked = vec![false; pca.coords.nrows()];
    for &i in flagged {
        if let Some(m) = marked.get_mut(i) {
            *m = true;
        }
    }
    let header = ["index", "x", "y", "label", "flagged"].map(String::from);
    csv_bytes(
        &header,
        pca.coords.outer_iter().enumerate().map(|(i, row)| {
            vec![
                i.to_string(),
                num(row[0]),
                num(row[1]),
                labels.get(i).copied().unwrap_or(Label::Unknown).to_string(),
                u8::from(marked[i]).to_string(),
            ]
        }),
    )
}
