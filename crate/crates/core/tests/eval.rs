use cewit::eval::{
    apr, batch_apr_std, batch_std, confusion, improvement_factor, roc_and_auc, sample_std, stratified_batches,
    trapezoid_auc, write_points_table, write_summary_table, ConfusionMatrix, EvalError, RocPoint, WitnessSummary,
};
use cewit::reference::{self, ReferenceRow};
use cewit::witnesses::{Label, Witness};

fn row_rates(r: &ReferenceRow) -> (f64, f64) {
    let cm = r.confusion_matrix();
    (cm.tpr().unwrap(), cm.fpr().unwrap())
}

/// Plain trapezoid through sorted points, written out independently.
fn oracle_auc(mut pts: Vec<(f64, f64)>) -> f64 {
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    for i in 1..pts.len() {
        area += (pts[i].0 - pts[i - 1].0) * 0.5 * (pts[i].1 + pts[i - 1].1);
    }
    area
}

#[test]
fn reference_confusion_matrices_reproduce_printed_rates() {
    for w in Witness::ALL {
        for (i, r) in reference::rows(w).iter().enumerate() {
            let (tpr, fpr) = row_rates(r);
            // printed rates are rounded to the precision of their error bars
            assert!((100.0 * tpr - r.tpr).abs() <= 0.6, "{w} row {}: tpr {}", i + 1, 100.0 * tpr);
            let known_slip = w == Witness::Collectibility && i == 2;
            if known_slip {
                // printed 4.7, the matrix gives 4.37
                assert!((100.0 * fpr - 4.37).abs() < 0.01);
            } else {
                assert!((100.0 * fpr - r.fpr).abs() <= 0.35, "{w} row {}: fpr {}", i + 1, 100.0 * fpr);
            }
            let cm = r.confusion_matrix();
            assert_eq!(cm.negatives(), 499_995);
            let typo = w == Witness::Entropic && i == 9;
            assert_eq!(cm.positives(), if typo { 499_305 } else { 500_005 });
        }
    }
}

#[test]
fn conservative_rows() {
    let c = reference::conservative_row(Witness::Collectibility);
    let (tpr, fpr) = row_rates(&c);
    assert!((tpr - 0.219).abs() < 5e-4);
    assert!((fpr - 0.0007).abs() < 5e-5);
    let apr = reference::summary(Witness::Collectibility).apr / 100.0;
    assert!((improvement_factor(tpr, apr).unwrap() - 1.31).abs() < 0.005);
}

#[test]
fn improvement_factors_follow_from_tpr_and_apr() {
    for w in Witness::ALL {
        let apr = reference::summary(w).apr;
        for r in reference::rows(w) {
            let f = improvement_factor(r.tpr, apr).unwrap();
            assert!((f - r.improvement_factor).abs() < 0.02 * r.improvement_factor, "{w}: {f} vs {}", r.improvement_factor);
        }
    }
}

#[test]
fn trapezoid_through_reference_points_is_close_to_reported_auc() {
    for w in Witness::ALL {
        let pairs: Vec<(f64, f64)> = reference::rows(w)
            .iter()
            .map(|r| {
                let (t, f) = row_rates(r);
                (f, t)
            })
            .collect();
        let auc = trapezoid_auc(&pairs);
        assert!((auc - oracle_auc(pairs.clone())).abs() < 1e-15);
        let reported = reference::summary(w).auc;
        assert!((auc - reported).abs() < 0.005, "{w}: {auc} vs {reported}");
        // the reported value sits between the trapezoid and the upper staircase
        let mut stair = pairs.clone();
        stair.extend([(0.0, 0.0), (1.0, 1.0)]);
        stair.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let lower: f64 = stair.windows(2).map(|p| (p[1].0 - p[0].0) * p[0].1).sum();
        let upper: f64 = stair.windows(2).map(|p| (p[1].0 - p[0].0) * p[1].1).sum();
        assert!(lower < auc && auc < upper);
        assert!(auc <= reported && reported < upper);
    }
}

#[test]
fn roc_curve_sorting_and_anchors() {
    let pts = vec![
        RocPoint { w_e: Some(2.0), ..RocPoint::bare(0.3, 0.9) },
        RocPoint { w_e: Some(0.5), ..RocPoint::bare(0.01, 0.4) },
        RocPoint { w_e: Some(1.0), ..RocPoint::bare(0.1, 0.7) },
    ];
    let c = roc_and_auc(&pts, Some(Witness::Chsh)).unwrap();
    assert_eq!(c.points.len(), 5);
    assert_eq!((c.points[0].fpr, c.points[0].tpr), (0.0, 0.0));
    assert_eq!((c.points[4].fpr, c.points[4].tpr), (1.0, 1.0));
    let expected = oracle_auc(vec![(0.3, 0.9), (0.01, 0.4), (0.1, 0.7)]);
    assert!((c.auc - expected).abs() < 1e-15);
    let ops: Vec<f64> = c.operating_points().iter().map(|p| p.w_e.unwrap()).collect();
    assert_eq!(ops, vec![2.0, 1.0, 0.5]);
    assert!(matches!(roc_and_auc(&[], None), Err(EvalError::NoPoints)));
}

#[test]
fn confusion_counts() {
    use Label::*;
    let pred = [Entangled, Entangled, Separable, Separable, Entangled];
    let truth = [Entangled, Separable, Entangled, Separable, Entangled];
    let cm = confusion(&pred, &truth).unwrap();
    assert_eq!(cm, ConfusionMatrix { tp: 2, fn_: 1, fp: 1, tn: 1 });
    assert!((cm.tpr().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((cm.fpr().unwrap() - 0.5).abs() < 1e-15);
    assert!(confusion(&pred[..2], &truth).is_err());
    assert!(ConfusionMatrix::default().tpr().is_err());
}

#[test]
fn analytical_rate_uses_the_sign_convention_of_each_witness() {
    use Label::*;
    let labels = [Entangled, Entangled, Separable, Entangled];
    assert_eq!(apr(Witness::Collectibility, &[-0.1, 0.2, 0.3, -0.05], &labels).unwrap(), 2.0 / 3.0);
    assert_eq!(apr(Witness::Chsh, &[-0.1, 0.2, -0.3, -0.05], &labels).unwrap(), 1.0 / 3.0);
    assert!(matches!(improvement_factor(0.5, 0.0), Err(EvalError::ZeroApr)));
}

#[test]
fn batches_are_stratified_partitions() {
    let labels: Vec<Label> = (0..1003).map(|i| if i % 3 == 0 { Label::Entangled } else { Label::Separable }).collect();
    let batches = stratified_batches(&labels, 50, 1).unwrap();
    assert_eq!(batches.len(), 50);
    let mut all: Vec<usize> = batches.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..1003).collect::<Vec<_>>());
    for b in &batches {
        let e = b.iter().filter(|&&i| labels[i] == Label::Entangled).count();
        assert!((6..=7).contains(&e));
    }
    assert_eq!(stratified_batches(&labels, 50, 1).unwrap(), batches);
}

#[test]
fn batch_spread_is_zero_for_a_perfect_classifier() {
    let labels: Vec<Label> = (0..500).map(|i| if i % 2 == 0 { Label::Entangled } else { Label::Separable }).collect();
    let batches = stratified_batches(&labels, 50, 2).unwrap();
    let s = batch_std(&labels, &labels, &labels, &batches).unwrap();
    assert_eq!((s.std_tpr, s.std_fpr, s.std_if), (0.0, 0.0, 0.0));
    assert_eq!(batch_apr_std(&labels, &labels, &batches).unwrap(), 0.0);
}

#[test]
fn sample_standard_deviation() {
    assert_eq!(sample_std(&[3.0; 7]), 0.0);
    assert_eq!(sample_std(&[1.0]), 0.0);
    assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

#[test]
fn tables_have_one_row_per_point() {
    let pts: Vec<RocPoint> = (0..12)
        .map(|i| RocPoint {
            w_e: Some(10f64.powf(0.75 - 1.9 * i as f64 / 11.0)),
            confusion: Some(ConfusionMatrix { tp: 10 - i.min(10), fn_: i.min(10), fp: 1, tn: 9 }),
            ..RocPoint::bare(0.1, 1.0 - i as f64 / 12.0)
        })
        .collect();
    let s = WitnessSummary {
        witness: Witness::Entropic,
        auc: 0.9,
        std_auc: 0.01,
        apr: 0.5,
        std_apr: 0.02,
        analytical_fp: 0,
        curve: roc_and_auc(&pts, Some(Witness::Entropic)).unwrap(),
    };
    let mut out = Vec::new();
    write_points_table(std::slice::from_ref(&s), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.lines().nth(1).unwrap().starts_with("entropic\t5.623413"));
    let mut out = Vec::new();
    write_summary_table(&[s], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
}
