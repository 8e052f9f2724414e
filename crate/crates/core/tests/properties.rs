use mts_anomaly::autocorr::row_autocorr;
use mts_anomaly::detector::aggregate_max;
use mts_anomaly::evaluation::{best_threshold, knn_discord_scores, metrics};
use mts_anomaly::io::{parse_csv, write_series};
use mts_anomaly::pso::project_to_simplex;
use mts_anomaly::series::{
    slide_windows, zscore_normalize, MultiSeries, SubsequenceSet, WindowSpec,
};
use proptest::prelude::*;

fn columns(max_vars: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_vars, len)
        .prop_flat_map(|(n, p)| prop::collection::vec(prop::collection::vec(-1e3..1e3f64, p), n))
}

fn permuted(set: &SubsequenceSet, order: &[usize]) -> SubsequenceSet {
    let starts = order.iter().map(|&k| set.starts()[k]).collect();
    let blocks = order.iter().map(|&k| set.blocks()[k].clone()).collect();
    SubsequenceSet::from_blocks(set.spec(), set.space(), starts, blocks).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(cols in columns(4, 2..40)) {
        let series = MultiSeries::unnamed_columns(&cols).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_series(&series, &path).unwrap();
        let back = parse_csv(&path).unwrap();
        prop_assert_eq!(back.names(), series.names());
        prop_assert_eq!(back.columns(), series.columns());
    }

    #[test]
    fn window_count_and_starts(p in 2usize..200, q in 1usize..50, r in 1usize..20) {
        prop_assume!(q <= p);
        let series = MultiSeries::unnamed_columns(&[(0..p).map(|t| t as f64).collect()]).unwrap();
        let set = slide_windows(&series, WindowSpec::new(q, r)).unwrap();
        prop_assert_eq!(set.len(), (p - q) / r + 1);
        for (k, (start, block)) in set.iter().enumerate() {
            prop_assert_eq!(start, k * r);
            prop_assert!(start + q <= p);
            prop_assert_eq!(block.row(0)[0], start as f64);
        }
    }

    #[test]
    fn zscore_columns_have_zero_mean(cols in columns(3, 2..60)) {
        let z = zscore_normalize(&MultiSeries::unnamed_columns(&cols).unwrap());
        for col in z.columns() {
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn metrics_follow_confusion_counts(
        pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80)
    ) {
        let (pred, truth): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let r = metrics(&pred, &truth).unwrap();
        let count = |p: bool, t: bool| {
            pred.iter().zip(&truth).filter(|&(&a, &b)| a == p && b == t).count() as f64
        };
        let (tp, fp, tn, fn_) = (count(true, true), count(true, false), count(false, false), count(false, true));
        prop_assert_eq!(r.accuracy, Some((tp + tn) / pred.len() as f64));
        let precision = (tp + fp > 0.0).then(|| tp / (tp + fp));
        let recall = (tp + fn_ > 0.0).then(|| tp / (tp + fn_));
        prop_assert_eq!(r.precision, precision);
        prop_assert_eq!(r.recall, recall);
        prop_assert_eq!(r.sensitivity, recall);
        prop_assert_eq!(r.specificity, (tn + fp > 0.0).then(|| tn / (tn + fp)));
        for v in [r.accuracy, r.precision, r.recall, r.specificity, r.f_measure].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn best_threshold_beats_every_observed_cut(
        pairs in prop::collection::vec((0u8..20, any::<bool>()), 1..60)
    ) {
        let scores: Vec<f64> = pairs.iter().map(|&(s, _)| s as f64).collect();
        let truth: Vec<bool> = pairs.iter().map(|&(_, t)| t).collect();
        let (_, best) = best_threshold(&scores, &truth).unwrap();
        for cut in (-1..=20).map(|c| c as f64 + 0.5) {
            let pred: Vec<bool> = scores.iter().map(|&s| s > cut).collect();
            let acc = metrics(&pred, &truth).unwrap().accuracy.unwrap();
            prop_assert!(best.accuracy.unwrap() >= acc);
        }
    }

    #[test]
    fn knn_scores_ignore_window_order(
        cols in columns(2, 12..40),
        q in 2usize..5,
        seed in any::<u64>(),
    ) {
        let series = MultiSeries::unnamed_columns(&cols).unwrap();
        let set = slide_windows(&series, WindowSpec::new(q, 1)).unwrap();
        let scores = knn_discord_scores(&set, q).unwrap();
        // deterministic shuffle from the seed
        let mut order: Vec<usize> = (0..set.len()).collect();
        let mut state = seed | 1;
        for i in (1..order.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            order.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let shuffled = knn_discord_scores(&permuted(&set, &order), q).unwrap();
        for (k, &j) in order.iter().enumerate() {
            prop_assert_eq!(shuffled[k], scores[j]);
        }
    }

    #[test]
    fn autocorr_is_affine_invariant_and_bounded(
        row in prop::collection::vec(-100.0..100.0f64, 3..30),
        a in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64],
        b in -100.0..100.0f64,
    ) {
        let Some(base) = row_autocorr(&row) else { return Ok(()); };
        let moved: Vec<f64> = row.iter().map(|x| a * x + b).collect();
        let Some(other) = row_autocorr(&moved) else { return Ok(()); };
        for (x, y) in base.iter().zip(&other) {
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(x));
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn projection_lands_on_simplex(raw in prop::collection::vec(-5.0..5.0f64, 1..8)) {
        let w = project_to_simplex(&raw);
        let s = w.as_slice();
        prop_assert_eq!(s.len(), raw.len());
        prop_assert!(s.iter().all(|&x| x >= 0.0));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        if raw.iter().any(|&x| x > 1e-6) {
            for (x, r) in s.iter().zip(&raw) {
                prop_assert_eq!(*x == 0.0, *r <= 0.0);
            }
        }
    }

    #[test]
    fn per_point_is_max_over_covering_windows(
        p in 1usize..60,
        q in 1usize..12,
        r in 1usize..6,
        values in prop::collection::vec(0.0..10.0f64, 60),
    ) {
        prop_assume!(q <= p);
        let starts: Vec<usize> = (0..).map(|k| k * r).take_while(|s| s + q <= p).collect();
        let scores = &values[..starts.len()];
        let points = aggregate_max(p, &starts, q, scores);
        prop_assert_eq!(points.len(), p);
        for (t, &v) in points.iter().enumerate() {
            let expected = starts
                .iter()
                .zip(scores)
                .filter(|(&s, _)| s <= t && t < s + q)
                .map(|(_, &x)| x)
                .fold(0.0, f64::max);
            prop_assert_eq!(v, expected);
        }
    }
}
