use eagle_core::metrics::{average_precision, evaluate, roc_auc};
use eagle_core::Mat;
use proptest::prelude::*;

fn brute_ap(scores: &[f64], labels: &[f64]) -> f64 {
    let pos = labels.iter().filter(|&&y| y > 0.5).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut ap, mut prev) = (0.0, 0.0);
    for t in thresholds {
        let mut tp = 0.0;
        let mut sel = 0.0;
        for (s, y) in scores.iter().zip(labels) {
            if *s >= t {
                sel += 1.0;
                if *y > 0.5 {
                    tp += 1.0;
                }
            }
        }
        let recall = tp / pos;
        ap += (recall - prev) * (tp / sel);
        prev = recall;
    }
    ap
}

fn brute_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (si, yi) in scores.iter().zip(labels) {
        for (sj, yj) in scores.iter().zip(labels) {
            if *yi > 0.5 && *yj <= 0.5 {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Scores on a coarse grid so that ties occur.
fn instance(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((0u32..40, any::<bool>()), 2..=max_len)
        .prop_filter("needs both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| {
            v.into_iter()
                .map(|(s, y)| (s as f64 / 40.0, if y { 1.0 } else { 0.0 }))
                .unzip()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ap_matches_brute_force((s, y) in instance(500)) {
        prop_assert!((average_precision(&s, &y).unwrap() - brute_ap(&s, &y)).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_brute_force((s, y) in instance(500)) {
        prop_assert!((roc_auc(&s, &y).unwrap() - brute_auc(&s, &y)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_transforms((s, y) in instance(200)) {
        let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() * 2.0 - 7.0).collect();
        prop_assert_eq!(roc_auc(&s, &y).unwrap(), roc_auc(&t, &y).unwrap());
    }

    #[test]
    fn metrics_lie_in_unit_interval((s, y) in instance(100)) {
        let ap = average_precision(&s, &y).unwrap();
        let auc = roc_auc(&s, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap) && (0.0..=1.0).contains(&auc));
    }

    #[test]
    fn macro_average_is_mean_of_kept_classes(raw in prop::collection::vec((0u32..10, 0u32..10, any::<bool>(), any::<bool>()), 4..60)) {
        let n = raw.len();
        let scores = Mat::from_fn(n, 2, |i, c| if c == 0 { raw[i].0 as f64 } else { raw[i].1 as f64 });
        let labels = Mat::from_fn(n, 2, |i, c| if (c == 0 && raw[i].2) || (c == 1 && raw[i].3) { 1.0 } else { 0.0 });
        let rows: Vec<usize> = (0..n).collect();
        match evaluate(&scores, &labels, &rows) {
            Ok(r) => {
                let kept: Vec<f64> = r.per_class_auc.iter().flatten().copied().collect();
                prop_assert_eq!(kept.len() + r.skipped_classes.len(), 2);
                prop_assert!((r.auc - kept.iter().sum::<f64>() / kept.len() as f64).abs() < 1e-15);
            }
            Err(e) => prop_assert_eq!(e, eagle_core::Error::DegenerateLabels),
        }
    }
}

#[test]
fn perfect_and_tied_rankings() {
    let y = [1.0, 1.0, 0.0, 0.0, 0.0];
    let s = [0.9, 0.8, 0.3, 0.2, 0.1];
    assert_eq!(average_precision(&s, &y).unwrap(), 1.0);
    assert_eq!(roc_auc(&s, &y).unwrap(), 1.0);
    assert_eq!(roc_auc(&[0.4; 5], &y).unwrap(), 0.5);
}
