use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, EvalReport};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gnn::{detect, TrainConfig};
use crate::graph::{build_adjacency, propagation_matrix, Metric, PropagationMatrix};
use crate::rng;

/// Parameter values to cross. Cells are enumerated with `k` outermost, then
/// `metric`, `hidden`, `extra_hidden_layers`, `eta` and `iters` innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub k: Vec<usize>,
    pub eta: Vec<f64>,
    pub iters: Vec<usize>,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_metric")]
    pub metric: Vec<Metric>,
    #[serde(default = "default_extra")]
    pub extra_hidden_layers: Vec<usize>,
}

fn default_hidden() -> Vec<usize> {
    vec![TrainConfig::default().hidden]
}

fn default_metric() -> Vec<Metric> {
    vec![Metric::InvEuclidean]
}

fn default_extra() -> Vec<usize> {
    vec![0]
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            k: (2..=10).collect(),
            eta: vec![1e-4, 5e-4, 1e-3, 2e-3],
            iters: vec![10, 25, 50, 100],
            hidden: default_hidden(),
            metric: default_metric(),
            extra_hidden_layers: default_extra(),
        }
    }
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.k.len()
            * self.eta.len()
            * self.iters.len()
            * self.hidden.len()
            * self.metric.len()
            * self.extra_hidden_layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self, policy: SeedPolicy, seed: u64) -> Vec<SweepPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &k in &self.k {
            for &metric in &self.metric {
                for &hidden in &self.hidden {
                    for &extra_hidden_layers in &self.extra_hidden_layers {
                        for &eta in &self.eta {
                            for &iters in &self.iters {
                                let cell_seed = match policy {
                                    SeedPolicy::Fixed => seed,
                                    SeedPolicy::PerCell => rng::derive_seed(seed, out.len() as u64),
                                };
                                out.push(SweepPoint {
                                    k,
                                    metric,
                                    hidden,
                                    extra_hidden_layers,
                                    eta,
                                    iters,
                                    seed: cell_seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// How each cell's initialisation seed relates to the master seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Every cell uses the master seed.
    Fixed,
    /// Cell `i` uses a seed derived from `(master, i)`.
    #[default]
    PerCell,
}

impl FromStr for SeedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(SeedPolicy::Fixed),
            "per_cell" => Ok(SeedPolicy::PerCell),
            other => Err(Error::param(format!("unknown seed policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub metric: Metric,
    pub hidden: usize,
    pub extra_hidden_layers: usize,
    pub eta: f64,
    pub iters: usize,
    pub seed: u64,
}

impl SweepPoint {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            eta: self.eta,
            iters: self.iters,
            hidden: self.hidden,
            seed: self.seed,
            extra_hidden_layers: self.extra_hidden_layers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub params: SweepPoint,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    /// Index of the highest-AUC cell; the earliest wins ties.
    pub best: Option<usize>,
}

impl SweepResult {
    pub fn best_cell(&self) -> Option<&SweepCell> {
        self.best.map(|i| &self.cells[i])
    }

    fn series_by(&self, key: impl Fn(&SweepPoint) -> usize) -> Vec<(usize, f64)> {
        let mut by: BTreeMap<usize, f64> = BTreeMap::new();
        for cell in &self.cells {
            if let Some(r) = &cell.report {
                let e = by.entry(key(&cell.params)).or_insert(f64::NEG_INFINITY);
                *e = e.max(r.auc);
            }
        }
        by.into_iter().collect()
    }

    /// Best AUC for each neighbour count.
    pub fn auc_by_k(&self) -> Vec<(usize, f64)> {
        self.series_by(|p| p.k)
    }

    /// Best AUC for each network depth (extra hidden layers).
    pub fn auc_by_depth(&self) -> Vec<(usize, f64)> {
        self.series_by(|p| p.extra_hidden_layers)
    }
}

fn run_cell(
    features: &FeatureMatrix,
    faults: &[bool],
    graph: &std::result::Result<PropagationMatrix, String>,
    point: &SweepPoint,
    n: usize,
) -> SweepCell {
    let outcome = graph.as_ref().map_err(Clone::clone).and_then(|p| {
        let start = Instant::now();
        let (_, report) =
            detect(features.values.view(), p, &point.train_config(), n).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        let mut eval = evaluate(&report.ff, &report.flagged, faults).map_err(|e| e.to_string())?;
        eval.wall_time = Some(elapsed);
        Ok(eval)
    });
    match outcome {
        Ok(report) => SweepCell {
            params: *point,
            report: Some(report),
            error: None,
        },
        Err(error) => SweepCell {
            params: *point,
            report: None,
            error: Some(error),
        },
    }
}

/// Runs the graph detector for every grid cell on a labeled feature matrix.
/// `n` defaults to the number of true faults. Cell failures are recorded and
/// do not stop the sweep.
pub fn parameter_sweep(
    features: &FeatureMatrix,
    grid: &SweepGrid,
    policy: SeedPolicy,
    seed: u64,
    n: Option<usize>,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    if !features.is_labeled() {
        return Err(Error::param("sweep needs ground-truth labels"));
    }
    let faults = features.fault_mask();
    let n = n.unwrap_or_else(|| faults.iter().filter(|&&f| f).count());

    let mut graph_keys: Vec<(usize, Metric)> = grid
        .k
        .iter()
        .flat_map(|&k| grid.metric.iter().map(move |&m| (k, m)))
        .collect();
    graph_keys.sort_by_key(|(k, m)| (*k, m.as_str()));
    graph_keys.dedup();
    let graphs: BTreeMap<(usize, &str), std::result::Result<PropagationMatrix, String>> = graph_keys
        .par_iter()
        .map(|&(k, metric)| {
            let p = build_adjacency(features.values.view(), k, metric)
                .map(|a| propagation_matrix(&a))
                .map_err(|e| e.to_string());
            ((k, metric.as_str()), p)
        })
        .collect();

    let cells: Vec<SweepCell> = grid
        .points(policy, seed)
        .par_iter()
        .map(|point| {
            let graph = &graphs[&(point.k, point.metric.as_str())];
            run_cell(features, &faults, graph, point, n)
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, cell) in cells.iter().enumerate() {
        if let Some(r) = &cell.report {
            let better = match best {
                None => true,
                Some(b) => r.auc > cells[b].report.as_ref().expect("best has report").auc,
            };
            if better {
                best = Some(i);
            }
        }
    }
    Ok(SweepResult { cells, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_144_cells() {
        let g = SweepGrid::default();
        assert_eq!(g.len(), 144);
        assert_eq!(g.points(SeedPolicy::PerCell, 1).len(), 144);
    }

    #[test]
    fn seed_policies() {
        let g = SweepGrid {
            k: vec![2, 3],
            eta: vec![0.001],
            iters: vec![10],
            ..SweepGrid::default()
        };
        let fixed = g.points(SeedPolicy::Fixed, 7);
        assert!(fixed.iter().all(|p| p.seed == 7));
        let per = g.points(SeedPolicy::PerCell, 7);
        assert_ne!(per[0].seed, per[1].seed);
        assert_eq!(per, g.points(SeedPolicy::PerCell, 7));
    }
}
