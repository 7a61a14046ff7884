//! Wavelet-packet band energies.
//!
//! A full binary packet tree is built with periodized orthogonal filters, so
//! the transform is orthonormal for any even length and the leaf energies add
//! up to the energy of the (padded) input.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daubechies 20 (40-tap) scaling filter, normalized so that its taps sum to
/// sqrt(2). Values are the `rec_lo` coefficients of PyWavelets' `db20`
/// (Daubechies, *Ten Lectures on Wavelets*, 1992, table 6.1 extended).
pub const DB20: [f64; 40] = [
    0.0007799536136668463,
    0.010549394624950399,
    0.06342378045908152,
    0.21994211355139703,
    0.4726961853109017,
    0.6104932389385939,
    0.36150229873933104,
    -0.13921208801148388,
    -0.32678680043403496,
    -0.016727088309077008,
    0.22829105081991632,
    0.0398502464577712,
    -0.15545875070726795,
    -0.024716827338613585,
    0.10229171917444256,
    0.005632246857307436,
    -0.06172289962468046,
    0.005874681811811827,
    0.03229429953076958,
    -0.00878932492390156,
    -0.01381052613715192,
    0.006721627302259457,
    0.004420542387045791,
    -0.0035814942596096226,
    -0.0008315621728225569,
    0.0013925596193231364,
    -5.349759843997695e-05,
    -0.00038510474869921763,
    0.00010153288973670291,
    6.77428082837773e-05,
    -3.710586183394713e-05,
    -4.376143862183997e-06,
    7.2412482876736205e-06,
    -1.0119940100188862e-06,
    -6.847079597000557e-07,
    2.6339242262700013e-07,
    2.0143220235505126e-10,
    -1.814843248299696e-08,
    4.056127055551833e-09,
    -2.9988364896193194e-10,
];

/// Order in which the leaves are reported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafOrder {
    /// Tree order: node `i` splits into `2i` (low-pass) and `2i + 1`.
    #[default]
    Natural,
    /// Ascending frequency (Gray-code permutation of the natural order).
    Frequency,
}

impl FromStr for LeafOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(LeafOrder::Natural),
            "frequency" => Ok(LeafOrder::Frequency),
            other => Err(Error::param(format!("unknown leaf order {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WpdParams {
    pub level: u32,
    /// Length the window is periodically extended to before decomposition.
    pub padded_len: usize,
    pub order: LeafOrder,
}

impl Default for WpdParams {
    fn default() -> Self {
        WpdParams {
            level: 3,
            padded_len: 304,
            order: LeafOrder::Natural,
        }
    }
}

/// Quadrature-mirror high-pass filter for `lo`.
fn high_pass(lo: &[f64]) -> Vec<f64> {
    let n = lo.len();
    (0..n)
        .map(|k| {
            let v = lo[n - 1 - k];
            if k % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// One periodized analysis step: returns (approximation, detail), each half
/// the input length.
pub fn analysis_step(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    debug_assert!(n.is_multiple_of(2));
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let mut sa = 0.0;
        let mut sd = 0.0;
        for (t, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * k + t) % n];
            sa += l * v;
            sd += h * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

/// Periodic extension to `len` points (wrap-around).
pub fn periodic_pad(x: &[f64], len: usize) -> Vec<f64> {
    (0..len.max(x.len())).map(|i| x[i % x.len()]).collect()
}

/// Leaf coefficient sequences of the full packet tree, in natural order.
pub fn packet_leaves(x: &[f64], level: u32) -> Vec<Vec<f64>> {
    let lo = DB20;
    let hi = high_pass(&lo);
    let mut nodes = vec![x.to_vec()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            let (a, d) = analysis_step(node, &lo, &hi);
            next.push(a);
            next.push(d);
        }
        nodes = next;
    }
    nodes
}

/// Unnormalized leaf energies of the padded window.
pub fn raw_band_energies(points: &[f64], params: &WpdParams) -> Vec<f64> {
    let block = 1usize << params.level;
    assert!(
        params.padded_len >= points.len() && params.padded_len.is_multiple_of(block),
        "padded length {} must cover the window and be divisible by {block}",
        params.padded_len
    );
    let padded = periodic_pad(points, params.padded_len);
    let natural: Vec<f64> = packet_leaves(&padded, params.level)
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    match params.order {
        LeafOrder::Natural => natural,
        LeafOrder::Frequency => (0..natural.len()).map(|i| natural[i ^ (i >> 1)]).collect(),
    }
}

/// Relative band energies (sum 1). Returns `(energies, degenerate)`; an
/// all-zero window yields a uniform vector and `degenerate = true`.
pub fn wpd_energy(points: &[f64], params: &WpdParams) -> (Vec<f64>, bool) {
    let raw = raw_band_energies(points, params);
    normalize(raw)
}

pub(crate) fn normalize(raw: Vec<f64>) -> (Vec<f64>, bool) {
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        (raw.iter().map(|e| e / total).collect(), false)
    } else {
        let n = raw.len();
        (vec![1.0 / n as f64; n], true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn db20_is_orthonormal() {
        let sum: f64 = DB20.iter().sum();
        assert_relative_eq!(sum, std::f64::consts::SQRT_2, max_relative = 1e-12);
        for shift in (0..40).step_by(2) {
            let dot: f64 = (0..40 - shift).map(|i| DB20[i] * DB20[i + shift]).sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() < 1e-12, "shift {shift}: {dot}");
        }
    }

    #[test]
    fn high_pass_annihilates_constants() {
        let hi = high_pass(&DB20);
        assert!(hi.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn energies_are_a_distribution() {
        let x: Vec<f64> = (0..300).map(|i| ((i * i) as f64 * 0.013).sin()).collect();
        let (e, degenerate) = wpd_energy(&x, &WpdParams::default());
        assert_eq!(e.len(), 8);
        assert!(!degenerate);
        assert!(e.iter().all(|&v| v >= 0.0));
        assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_goes_to_first_leaf() {
        let (e, _) = wpd_energy(&[2.5; 300], &WpdParams::default());
        assert!(e[0] > 0.99, "{e:?}");
    }

    #[test]
    fn frequency_order_is_a_permutation() {
        let x: Vec<f64> = (0..300).map(|i| (i as f64 * 2.9).sin()).collect();
        let nat = raw_band_energies(&x, &WpdParams::default());
        let freq = raw_band_energies(
            &x,
            &WpdParams {
                order: LeafOrder::Frequency,
                ..WpdParams::default()
            },
        );
        // Gray code of 0..8 is 0,1,3,2,6,7,5,4
        let gray = [0, 1, 3, 2, 6, 7, 5, 4];
        for (i, g) in gray.iter().enumerate() {
            assert_eq!(freq[i], nat[*g]);
        }
        // the near-Nyquist tone ends up in the last frequency band
        let top = freq
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(top, 7);
    }

    #[test]
    fn zero_window_is_flagged() {
        let (e, degenerate) = wpd_energy(&[0.0; 300], &WpdParams::default());
        assert!(degenerate);
        assert_eq!(e, vec![0.125; 8]);
    }
}
