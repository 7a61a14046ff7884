use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area under the ROC curve from rank sums.
///
/// Scores are ranked ascending with average ranks for ties; with `S` the rank
/// sum of the faults, `AUC = (S - n_o (n_o + 1) / 2) / (n_o n_n)`. This equals
/// the probability that a random fault outscores a random normal object,
/// counting ties as one half.
pub fn auc(scores: &[f64], faults: &[bool]) -> Result<f64> {
    if scores.len() != faults.len() {
        return Err(Error::shape(format!(
            "{} scores but {} labels",
            scores.len(),
            faults.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::param("scores contain NaN"));
    }
    let n_o = faults.iter().filter(|&&f| f).count();
    let n_n = faults.len() - n_o;
    if n_o == 0 || n_n == 0 {
        return Err(Error::SingleClass {
            faults: n_o,
            normals: n_n,
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based: start+1 ..= end) share their mean
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        let tied_faults = order[start..end].iter().filter(|&&i| faults[i]).count();
        rank_sum += mean_rank * tied_faults as f64;
        start = end;
    }
    let n_o_f = n_o as f64;
    Ok((rank_sum - n_o_f * (n_o_f + 1.0) / 2.0) / (n_o_f * n_n as f64))
}

/// Counts of flagged objects against ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn acc(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn dr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn far(&self) -> f64 {
        ratio(self.fp, self.tn + self.fp)
    }

    pub fn acc_percent(&self) -> f64 {
        ratio(100 * (self.tp + self.tn), self.total())
    }

    pub fn dr_percent(&self) -> f64 {
        ratio(100 * self.tp, self.tp + self.fn_)
    }

    pub fn far_percent(&self) -> f64 {
        ratio(100 * self.fp, self.tn + self.fp)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_metrics(flagged: &[usize], faults: &[bool]) -> Result<Confusion> {
    let mut marked = vec![false; faults.len()];
    for &i in flagged {
        if i >= faults.len() {
            return Err(Error::param(format!(
                "flagged index {i} outside 0..{}",
                faults.len()
            )));
        }
        marked[i] = true;
    }
    let mut c = Confusion::default();
    for (&m, &f) in marked.iter().zip(faults) {
        match (m, f) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub acc: f64,
    pub dr: f64,
    pub far: f64,
    #[serde(flatten)]
    pub counts: Confusion,
    pub n_o: usize,
    pub n_n: usize,
    /// Seconds spent training and scoring, when measured.
    pub wall_time: Option<f64>,
}

pub fn evaluate(scores: &[f64], flagged: &[usize], faults: &[bool]) -> Result<EvalReport> {
    let auc = auc(scores, faults)?;
    let counts = classification_metrics(flagged, faults)?;
    let n_o = faults.iter().filter(|&&f| f).count();
    Ok(EvalReport {
        auc,
        acc: counts.acc(),
        dr: counts.dr(),
        far: counts.far(),
        counts,
        n_o,
        n_n: faults.len() - n_o,
        wall_time: None,
    })
}
