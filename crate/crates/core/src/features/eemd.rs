//! Ensemble EMD relative energies.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::emd::{emd, EmdParams};
use super::wpd::normalize;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EemdParams {
    pub n_imfs: usize,
    /// Number of noise-perturbed copies averaged.
    pub ensemble: usize,
    /// Noise standard deviation as a fraction of the window's standard deviation.
    pub noise_ratio: f64,
    pub seed: u64,
    #[serde(default = "default_sd")]
    pub sd_threshold: f64,
    #[serde(default = "default_sifts")]
    pub max_sifts: usize,
}

fn default_sd() -> f64 {
    EmdParams::default().sd_threshold
}

fn default_sifts() -> usize {
    EmdParams::default().max_sifts
}

impl Default for EemdParams {
    fn default() -> Self {
        EemdParams {
            n_imfs: 6,
            ensemble: 100,
            noise_ratio: 0.2,
            seed: 0,
            sd_threshold: default_sd(),
            max_sifts: default_sifts(),
        }
    }
}

impl EemdParams {
    fn emd_params(&self) -> EmdParams {
        EmdParams {
            max_imfs: self.n_imfs,
            sd_threshold: self.sd_threshold,
            max_sifts: self.max_sifts,
        }
    }
}

/// Ensemble-averaged IMFs. Member `m` draws its noise from substream `m` of
/// `params.seed`, and members are summed in index order.
pub fn eemd(points: &[f64], params: &EemdParams) -> Vec<Vec<f64>> {
    assert!(params.ensemble >= 1, "ensemble size must be at least 1");
    assert!(params.noise_ratio >= 0.0, "noise ratio must be non-negative");
    let n = points.len();
    let mean = points.iter().sum::<f64>() / n as f64;
    let std = (points.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let amplitude = params.noise_ratio * std;
    let emd_params = params.emd_params();

    let mut sums = vec![vec![0.0; n]; params.n_imfs];
    let mut noisy = vec![0.0; n];
    for member in 0..params.ensemble {
        let mut rng = rng::substream(params.seed, member as u64);
        for (dst, &v) in noisy.iter_mut().zip(points) {
            let w: f64 = StandardNormal.sample(&mut rng);
            *dst = v + amplitude * w;
        }
        let result = emd(&noisy, &emd_params);
        for (sum, imf) in sums.iter_mut().zip(&result.imfs) {
            for (s, v) in sum.iter_mut().zip(imf) {
                *s += v;
            }
        }
    }
    let scale = 1.0 / params.ensemble as f64;
    for sum in &mut sums {
        for s in sum.iter_mut() {
            *s *= scale;
        }
    }
    sums
}

/// Relative IMF energies (sum 1). Returns `(energies, degenerate)`; windows
/// without any oscillation yield a uniform vector and `degenerate = true`.
pub fn eemd_energy(points: &[f64], params: &EemdParams) -> (Vec<f64>, bool) {
    let imfs = eemd(points, params);
    let raw = imfs.iter().map(|imf| imf.iter().map(|v| v * v).sum()).collect();
    normalize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(seed: u64) -> EemdParams {
        EemdParams {
            ensemble: 8,
            seed,
            ..EemdParams::default()
        }
    }

    fn two_tone() -> Vec<f64> {
        (0..300)
            .map(|i| {
                let t = i as f64 / 300.0;
                (2.0 * PI * 45.0 * t).sin() + 0.2 * (2.0 * PI * 3.0 * t).sin()
            })
            .collect()
    }

    #[test]
    fn energies_form_a_distribution() {
        let (e, degenerate) = eemd_energy(&two_tone(), &small(1));
        assert_eq!(e.len(), 6);
        assert!(!degenerate);
        assert!(e.iter().all(|&v| v >= 0.0));
        assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let a = eemd_energy(&two_tone(), &small(5));
        let b = eemd_energy(&two_tone(), &small(5));
        assert_eq!(a, b);
        let c = eemd_energy(&two_tone(), &small(6));
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn fast_tone_dominates_first_imf() {
        let (e, _) = eemd_energy(&two_tone(), &small(2));
        let argmax = e
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 0, "{e:?}");
    }

    #[test]
    fn zero_window_is_uniform() {
        let (e, degenerate) = eemd_energy(&[0.0; 300], &small(0));
        assert!(degenerate);
        assert_eq!(e, vec![1.0 / 6.0; 6]);
    }

    #[test]
    fn power_of_two_scaling_is_exact() {
        let x = two_tone();
        let scaled: Vec<f64> = x.iter().map(|v| 4.0 * v).collect();
        assert_eq!(eemd_energy(&x, &small(3)), eemd_energy(&scaled, &small(3)));
    }
}
