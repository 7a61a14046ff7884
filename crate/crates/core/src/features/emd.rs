//! Empirical mode decomposition by envelope-mean sifting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdParams {
    pub max_imfs: usize,
    /// Sifting stops once `sum (h_prev - h)^2 / sum h_prev^2` falls below this.
    pub sd_threshold: f64,
    pub max_sifts: usize,
}

impl Default for EmdParams {
    fn default() -> Self {
        EmdParams {
            max_imfs: 6,
            sd_threshold: 0.2,
            max_sifts: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmdResult {
    pub imfs: Vec<Vec<f64>>,
    pub residue: Vec<f64>,
}

impl EmdResult {
    /// Sum of all IMFs and the residue.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residue.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }
}

/// Interior local maxima and minima. A flat run counts once, at its midpoint.
pub fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = x.len();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    if n < 3 {
        return (maxima, minima);
    }
    let mut i = 1;
    while i < n - 1 {
        if x[i] == x[i - 1] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let (prev, here, next) = (x[i - 1], x[i], x[j + 1]);
        if here > prev && here > next {
            maxima.push((i + j) / 2);
        } else if here < prev && here < next {
            minima.push((i + j) / 2);
        }
        i = j + 1;
    }
    (maxima, minima)
}

/// Natural cubic spline through `(knots, values)`, evaluated at `0..len`.
/// Knots must be strictly increasing. Two knots give a straight line.
pub fn natural_spline(knots: &[f64], values: &[f64], len: usize) -> Vec<f64> {
    let m = knots.len();
    assert!(m >= 2 && values.len() == m, "spline needs at least two knots");
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();

    // second derivatives, zero at both ends
    let mut second = vec![0.0; m];
    if m > 2 {
        let k = m - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            rhs[i] = 6.0
                * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
        }
        // Thomas algorithm; off-diagonals are h[1..m-2]
        for i in 1..k {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        second[k] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            second[i + 1] = (rhs[i] - h[i + 1] * second[i + 2]) / diag[i];
        }
    }

    let mut out = Vec::with_capacity(len);
    let mut seg = 0;
    for t in 0..len {
        let t = t as f64;
        while seg + 2 < m && t > knots[seg + 1] {
            seg += 1;
        }
        let (t0, t1) = (knots[seg], knots[seg + 1]);
        let hs = t1 - t0;
        let a = (t1 - t) / hs;
        let b = (t - t0) / hs;
        let v = a * values[seg]
            + b * values[seg + 1]
            + ((a * a * a - a) * second[seg] + (b * b * b - b) * second[seg + 1]) * hs * hs / 6.0;
        out.push(v);
    }
    out
}

/// Envelope through the extrema at `idx`, with up to two extrema mirrored
/// about each end of the signal.
fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = x.len();
    let last = (n - 1) as f64;
    let mirrored = idx.len().min(2);
    let mut knots = Vec::with_capacity(idx.len() + 2 * mirrored);
    let mut values = Vec::with_capacity(knots.capacity());
    for &p in idx[..mirrored].iter().rev() {
        knots.push(-(p as f64));
        values.push(x[p]);
    }
    for &p in idx {
        knots.push(p as f64);
        values.push(x[p]);
    }
    for &p in idx[idx.len() - mirrored..].iter().rev() {
        knots.push(2.0 * last - p as f64);
        values.push(x[p]);
    }
    natural_spline(&knots, &values, n)
}

/// One sifting pass. `None` when the signal lacks the extrema to build both
/// envelopes.
fn sift_once(h: &[f64]) -> Option<Vec<f64>> {
    let (maxima, minima) = extrema(h);
    if maxima.is_empty() || minima.is_empty() {
        return None;
    }
    let upper = envelope(h, &maxima);
    let lower = envelope(h, &minima);
    Some(
        h.iter()
            .zip(upper.iter().zip(&lower))
            .map(|(v, (u, l))| v - 0.5 * (u + l))
            .collect(),
    )
}

fn has_oscillation(x: &[f64]) -> bool {
    let (maxima, minima) = extrema(x);
    maxima.len() + minima.len() >= 2 && !maxima.is_empty() && !minima.is_empty()
}

/// Decomposes `x` into at most `params.max_imfs` IMFs and a residue.
pub fn emd(x: &[f64], params: &EmdParams) -> EmdResult {
    let mut residue = x.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < params.max_imfs && has_oscillation(&residue) {
        let mut h = residue.clone();
        for _ in 0..params.max_sifts {
            let Some(next) = sift_once(&h) else { break };
            let num: f64 = h.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum();
            let den: f64 = h.iter().map(|a| a * a).sum();
            h = next;
            if den == 0.0 || num / den < params.sd_threshold {
                break;
            }
        }
        for (r, v) in residue.iter_mut().zip(&h) {
            *r -= v;
        }
        imfs.push(h);
    }
    EmdResult { imfs, residue }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn extrema_with_plateaus() {
        let x = [0.0, 1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 0.0, 0.0];
        let (maxima, minima) = extrema(&x);
        assert_eq!(maxima, vec![2]);
        assert_eq!(minima, vec![5]);
    }

    #[test]
    fn edge_plateau_is_not_an_extremum() {
        let (maxima, minima) = extrema(&[1.0, 1.0, 0.0, 1.0]);
        assert!(maxima.is_empty());
        assert_eq!(minima, vec![2]);
    }

    #[test]
    fn spline_interpolates_and_is_exact_on_lines() {
        let knots = [-2.0, 0.0, 3.0, 7.0, 10.0];
        let values: Vec<f64> = knots.iter().map(|t| 0.5 * t - 1.0).collect();
        let s = natural_spline(&knots, &values, 11);
        for (t, v) in s.iter().enumerate() {
            assert!((v - (0.5 * t as f64 - 1.0)).abs() < 1e-12);
        }
        let values = [1.0, -2.0, 4.0, 0.5, 3.0];
        let s = natural_spline(&knots, &values, 11);
        assert!((s[0] - (-2.0)).abs() < 1e-12);
        assert!((s[3] - 4.0).abs() < 1e-12);
        assert!((s[7] - 0.5).abs() < 1e-12);
        assert!((s[10] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spline_matches_hand_solved_system() {
        // knots 0,2,4,6 with values 0,1,0,1: the interior system
        // 8 M1 + 2 M2 = -6, 2 M1 + 8 M2 = 6 gives M1 = -1, M2 = 1
        let s = natural_spline(&[0.0, 2.0, 4.0, 6.0], &[0.0, 1.0, 0.0, 1.0], 7);
        let expected = [0.0, 0.75, 1.0, 0.5, 0.0, 0.25, 1.0];
        for (v, e) in s.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn monotone_input_has_no_imfs() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64).powf(1.3)).collect();
        let r = emd(&x, &EmdParams::default());
        assert!(r.imfs.is_empty());
        assert_eq!(r.residue, x);
    }

    #[test]
    fn reconstruction_is_complete() {
        let x: Vec<f64> = (0..300)
            .map(|i| {
                let t = i as f64 / 300.0;
                (2.0 * PI * 31.0 * t).sin() + 0.7 * (2.0 * PI * 5.0 * t).cos() + t * t
            })
            .collect();
        let r = emd(&x, &EmdParams::default());
        assert!(!r.imfs.is_empty());
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in x.iter().zip(r.reconstruct()) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn first_imf_tracks_fast_tone() {
        let t: Vec<f64> = (0..300).map(|i| i as f64 / 300.0).collect();
        let fast: Vec<f64> = t.iter().map(|t| (2.0 * PI * 40.0 * t).sin()).collect();
        let x: Vec<f64> = fast.iter().zip(&t).map(|(s, t)| s + 0.5 * t).collect();
        let r = emd(&x, &EmdParams::default());
        let corr = correlation(&r.imfs[0], &fast);
        assert!(corr > 0.9, "correlation {corr}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }
}
