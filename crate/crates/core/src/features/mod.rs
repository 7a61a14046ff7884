//! The 23-column condition-index matrix: nine time-domain indexes, eight
//! wavelet-packet band energies and six EEMD IMF energies per window.

pub mod eemd;
pub mod emd;
pub mod time_domain;
pub mod wpd;

use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Label};

pub use eemd::{eemd_energy, EemdParams};
pub use emd::{emd, EmdParams, EmdResult};
pub use time_domain::{time_domain_indexes, TimeIndexes};
pub use wpd::{wpd_energy, LeafOrder, WpdParams};

pub const N_TIME: usize = 9;
pub const N_WPD: usize = 8;
pub const N_EEMD: usize = 6;
pub const N_FEATURES: usize = N_TIME + N_WPD + N_EEMD;

/// Column labels in output order.
pub fn feature_names() -> Vec<String> {
    time_domain::NAMES
        .iter()
        .map(|s| s.to_string())
        .chain((1..=N_WPD).map(|i| format!("WPD{i}")))
        .chain((1..=N_EEMD).map(|i| format!("EEMD{i}")))
        .collect()
}

/// Which conventions were applied while extracting a row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFlags {
    pub zero_variance: bool,
    pub zero_wpd_energy: bool,
    pub zero_eemd_energy: bool,
}

impl RowFlags {
    pub fn any(&self) -> bool {
        self.zero_variance || self.zero_wpd_energy || self.zero_eemd_energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
    pub flags: RowFlags,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKind {
    Raw,
    #[default]
    Minmax,
    Zscore,
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ScalingKind::Raw),
            "minmax" => Ok(ScalingKind::Minmax),
            "zscore" => Ok(ScalingKind::Zscore),
            other => Err(Error::param(format!("unknown scaling {other:?}"))),
        }
    }
}

/// Column transform applied to a feature matrix, with its fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scaling", rename_all = "lowercase")]
pub enum Scaling {
    Raw,
    Minmax { min: Vec<f64>, max: Vec<f64> },
    Zscore { mean: Vec<f64>, std: Vec<f64> },
}

impl Scaling {
    pub fn kind(&self) -> ScalingKind {
        match self {
            Scaling::Raw => ScalingKind::Raw,
            Scaling::Minmax { .. } => ScalingKind::Minmax,
            Scaling::Zscore { .. } => ScalingKind::Zscore,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    #[serde(default)]
    pub wpd: WpdParams,
    #[serde(default)]
    pub eemd: EemdParams,
    #[serde(default)]
    pub scaling: ScalingKind,
}

/// An m-row matrix of object features with ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub labels: Vec<Label>,
    pub scaling: Scaling,
    pub flags: Vec<RowFlags>,
}

impl FeatureMatrix {
    /// Wraps an unscaled matrix; rows carry no extraction flags.
    pub fn new(values: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if values.nrows() != labels.len() {
            return Err(Error::shape(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        let flags = vec![RowFlags::default(); values.nrows()];
        Ok(FeatureMatrix {
            values,
            labels,
            scaling: Scaling::Raw,
            flags,
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn fault_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_fault()).collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.iter().all(|l| *l != Label::Unknown)
    }

    /// Applies a column transform to a raw matrix. Constant columns map to 0.
    pub fn scaled(mut self, kind: ScalingKind) -> Result<Self> {
        if self.scaling != Scaling::Raw {
            return Err(Error::param("matrix is already scaled"));
        }
        self.scaling = scale_columns(&mut self.values, kind);
        Ok(self)
    }
}

fn scale_columns(values: &mut Array2<f64>, kind: ScalingKind) -> Scaling {
    match kind {
        ScalingKind::Raw => Scaling::Raw,
        ScalingKind::Minmax => {
            let mut mins = Vec::with_capacity(values.ncols());
            let mut maxs = Vec::with_capacity(values.ncols());
            for mut col in values.axis_iter_mut(Axis(1)) {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = hi - lo;
                col.mapv_inplace(|v| if span > 0.0 { (v - lo) / span } else { 0.0 });
                mins.push(lo);
                maxs.push(hi);
            }
            Scaling::Minmax {
                min: mins,
                max: maxs,
            }
        }
        ScalingKind::Zscore => {
            let m = values.nrows() as f64;
            let mut means = Vec::with_capacity(values.ncols());
            let mut stds = Vec::with_capacity(values.ncols());
            for mut col in values.axis_iter_mut(Axis(1)) {
                let mean = col.iter().sum::<f64>() / m;
                let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
                col.mapv_inplace(|v| if std > 0.0 { (v - mean) / std } else { 0.0 });
                means.push(mean);
                stds.push(std);
            }
            Scaling::Zscore {
                mean: means,
                std: stds,
            }
        }
    }
}

/// All 23 indexes of one window, unscaled.
pub fn extract_features(points: &[f64], params: &FeatureParams) -> FeatureVector {
    let time = time_domain_indexes(points);
    let (wpd, wpd_zero) = wpd_energy(points, &params.wpd);
    let (eemd, eemd_zero) = eemd_energy(points, &params.eemd);
    assert_eq!(wpd.len(), N_WPD, "packet depth must yield 8 bands");
    assert_eq!(eemd.len(), N_EEMD, "EEMD must yield 6 energies");

    let mut values = [0.0; N_FEATURES];
    values[..N_TIME].copy_from_slice(&time.to_array());
    values[N_TIME..N_TIME + N_WPD].copy_from_slice(&wpd);
    values[N_TIME + N_WPD..].copy_from_slice(&eemd);
    FeatureVector {
        values,
        flags: RowFlags {
            zero_variance: time.degenerate,
            zero_wpd_energy: wpd_zero,
            zero_eemd_energy: eemd_zero,
        },
    }
}

fn validate(params: &FeatureParams) -> Result<()> {
    if params.wpd.level != 3 {
        return Err(Error::param("wavelet packet level must be 3 (8 bands)"));
    }
    if params.eemd.n_imfs != N_EEMD {
        return Err(Error::param("EEMD must keep 6 IMFs"));
    }
    if params.eemd.ensemble == 0 {
        return Err(Error::param("EEMD ensemble size must be at least 1"));
    }
    if params.eemd.noise_ratio.is_nan() || params.eemd.noise_ratio < 0.0 {
        return Err(Error::param("EEMD noise ratio must be non-negative"));
    }
    Ok(())
}

/// Extracts every window (in parallel, order preserved) and applies the
/// requested column scaling.
pub fn build_feature_matrix(dataset: &Dataset, params: &FeatureParams) -> Result<FeatureMatrix> {
    if dataset.is_empty() {
        return Err(Error::param("dataset is empty"));
    }
    validate(params)?;
    let padded = params.wpd.padded_len;
    if let Some(s) = dataset.samples.iter().find(|s| s.points.len() > padded || s.points.len() < 8) {
        return Err(Error::param(format!(
            "window of {} points does not fit the {padded}-point packet transform",
            s.points.len()
        )));
    }

    let rows: Vec<FeatureVector> = dataset
        .samples
        .par_iter()
        .map(|s| extract_features(&s.points, params))
        .collect();

    let mut values = Array2::zeros((rows.len(), N_FEATURES));
    for (mut dst, row) in values.axis_iter_mut(Axis(0)).zip(&rows) {
        dst.assign(&ndarray::ArrayView1::from(&row.values));
    }
    let matrix = FeatureMatrix {
        values,
        labels: dataset.labels(),
        scaling: Scaling::Raw,
        flags: rows.iter().map(|r| r.flags).collect(),
    };
    matrix.scaled(params.scaling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Condition, SubSample};

    fn params() -> FeatureParams {
        FeatureParams {
            eemd: EemdParams {
                ensemble: 2,
                ..EemdParams::default()
            },
            ..FeatureParams::default()
        }
    }

    fn dataset(rows: usize) -> Dataset {
        Dataset {
            samples: (0..rows)
                .map(|r| SubSample {
                    points: (0..300)
                        .map(|i| ((i * (r + 3)) as f64 * 0.07).sin() * (1.0 + r as f64 * 0.1))
                        .collect(),
                    label: if r % 4 == 0 { Label::Fault } else { Label::Normal },
                    condition: Condition::Normal,
                    fault_diameter_mm: 0.0,
                    source_id: "t".into(),
                    window_index: r,
                })
                .collect(),
        }
    }

    #[test]
    fn names_cover_all_columns() {
        let names = feature_names();
        assert_eq!(names.len(), 23);
        assert_eq!(names[0], "I1");
        assert_eq!(names[9], "WPD1");
        assert_eq!(names[22], "EEMD6");
    }

    #[test]
    fn raw_rows_are_concatenated_indexes() {
        let ds = dataset(3);
        let p = FeatureParams {
            scaling: ScalingKind::Raw,
            ..params()
        };
        let fm = build_feature_matrix(&ds, &p).unwrap();
        assert_eq!(fm.values.dim(), (3, 23));
        let x = &ds.samples[1].points;
        let t = time_domain_indexes(x).to_array();
        let (w, _) = wpd_energy(x, &p.wpd);
        let (e, _) = eemd_energy(x, &p.eemd);
        let expected: Vec<f64> = t.iter().chain(&w).chain(&e).copied().collect();
        assert_eq!(fm.values.row(1).to_vec(), expected);
        assert_eq!(fm.labels[0], Label::Fault);
    }

    #[test]
    fn minmax_spans_unit_interval() {
        let fm = build_feature_matrix(&dataset(6), &params()).unwrap();
        for col in fm.values.axis_iter(Axis(1)) {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(lo, 0.0);
            assert!(hi == 1.0 || hi == 0.0);
        }
    }

    #[test]
    fn constant_columns_scale_to_zero() {
        let values = ndarray::array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]];
        let fm = FeatureMatrix::new(values, vec![Label::Normal; 3]).unwrap();
        let mm = fm.clone().scaled(ScalingKind::Minmax).unwrap();
        assert_eq!(mm.values.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(mm.values.column(1).to_vec(), vec![0.0; 3]);
        let z = fm.scaled(ScalingKind::Zscore).unwrap();
        assert_eq!(z.values.column(1).to_vec(), vec![0.0; 3]);
        assert!(z.values.column(0).sum().abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(build_feature_matrix(&Dataset::default(), &params()).is_err());
    }
}
