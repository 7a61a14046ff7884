mod common;

use faultgraph::eval::{auc, classification_metrics, pca_project};
use ndarray::Array2;
use proptest::prelude::*;

fn pairwise_auc(scores: &[f64], faults: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &fi) in faults.iter().enumerate() {
        if !fi {
            continue;
        }
        for (j, &fj) in faults.iter().enumerate() {
            if fj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn labelled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..60).prop_flat_map(|m| {
        (
            // a small value range forces plenty of ties
            prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 4.0), m),
            prop::collection::vec(any::<bool>(), m),
        )
    })
    .prop_filter("both classes present", |(_, f)| f.iter().any(|&b| b) && f.iter().any(|&b| !b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_auc_equals_pairwise_count((scores, faults) in labelled_scores()) {
        prop_assert_eq!(auc(&scores, &faults).unwrap(), pairwise_auc(&scores, &faults));
    }

    #[test]
    fn auc_ignores_monotone_transforms((scores, faults) in labelled_scores(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let transformed: Vec<f64> = scores.iter().map(|s| (a * s + b).exp()).collect();
        prop_assert_eq!(auc(&transformed, &faults).unwrap(), auc(&scores, &faults).unwrap());
    }

    #[test]
    fn negated_scores_complement(m in 2usize..60, seed in any::<u64>()) {
        let x = common::uniform_matrix(m, 2, seed);
        let scores: Vec<f64> = x.column(0).to_vec();
        let mut faults: Vec<bool> = x.column(1).iter().map(|&v| v > 0.5).collect();
        faults[0] = true;
        faults[1] = false;
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let total = auc(&scores, &faults).unwrap() + auc(&neg, &faults).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_identities(faults in prop::collection::vec(any::<bool>(), 1..80), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..80)) {
        let m = faults.len();
        let mut flagged: Vec<usize> = picks.iter().map(|p| p.index(m)).collect();
        flagged.sort_unstable();
        flagged.dedup();
        let c = classification_metrics(&flagged, &faults).unwrap();
        let n_o = faults.iter().filter(|&&f| f).count();
        prop_assert_eq!(c.tp + c.fn_, n_o);
        prop_assert_eq!(c.tn + c.fp, m - n_o);
        prop_assert_eq!(c.tp + c.fp, flagged.len());
        if flagged.len() == n_o {
            prop_assert_eq!(c.fp, c.fn_);
        }
    }

    #[test]
    fn pca_centres_and_orders(m in 3usize..40, d in 2usize..8, seed in any::<u64>()) {
        let x = common::uniform_matrix(m, d, seed);
        let pca = pca_project(x.view(), 2).unwrap();
        for col in pca.coords.columns() {
            prop_assert!(col.mean().unwrap().abs() < 1e-9);
        }
        prop_assert!(pca.variances[0] >= pca.variances[1]);
        for c in pca.components.columns() {
            let pivot = c.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            prop_assert!(pivot > 0.0);
        }
    }

    #[test]
    fn pca_preserves_planar_distances(m in 3usize..30, seed in any::<u64>()) {
        // points on a random 2-D affine plane inside 23-D space
        let basis = common::uniform_matrix(2, 23, seed);
        let offset = common::uniform_matrix(1, 23, seed ^ 1);
        let coeffs = common::uniform_matrix(m, 2, seed ^ 2) * 4.0 - 2.0;
        let x: Array2<f64> = coeffs.dot(&basis) + offset.row(0);
        let pca = pca_project(x.view(), 2).unwrap();
        for i in 0..m {
            for j in 0..m {
                let orig = (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt();
                let proj = (&pca.coords.row(i) - &pca.coords.row(j)).mapv(|v| v * v).sum().sqrt();
                prop_assert!((orig - proj).abs() < 1e-8, "{} vs {}", orig, proj);
            }
        }
    }
}

#[test]
fn group_two_metric_consistency() {
    // 860 objects, 60 faults, 60 flags of which 54 are true faults
    let faults: Vec<bool> = (0..860).map(|i| i >= 800).collect();
    let flagged: Vec<usize> = (806..860).chain(0..6).collect();
    let c = classification_metrics(&flagged, &faults).unwrap();
    assert_eq!((c.tp, c.fp, c.fn_, c.tn), (54, 6, 6, 794));
    assert!((c.acc_percent() - 98.60).abs() <= 0.05);
    assert_eq!(c.dr_percent(), 90.0);
    assert_eq!(c.far_percent(), 0.75);
}

#[test]
fn four_score_example() {
    assert_eq!(auc(&[0.9, 0.8, 0.7, 0.6], &[false, true, false, true]).unwrap(), 0.25);
    assert_eq!(auc(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap(), 0.75);
}
