// SPDX-License-Identifier: MIT OR Apache-2.0

use patterncp::calibration::{BootstrapMethod, CalibrationConfig, JointMode};
use patterncp::data::{generate_piecewise, SegmentSpec, TimeSeries};
use patterncp::detector::{detect, scan_with_thresholds, DetectConfig, Flag, StreamDetector};
use patterncp::experiments::{run_localization, LocalizationConfig};
use patterncp::lrt::lrt_series;
use patterncp::models::ModelSpec;
use patterncp::patterns::{tp_statistic, Normalization, Pattern, PatternKind, PatternSpec};
use patterncp::rng::derive_seed_path;
use patterncp::theory::tp_variance_bound;

fn shift_series(p: usize, pre: usize, post: usize, delta: f64, seed: u64) -> TimeSeries {
    generate_piecewise(
        &[SegmentSpec::gaussian_mean(pre, vec![0.0; p]), SegmentSpec::gaussian_mean(post, vec![delta; p])],
        seed,
    )
    .unwrap()
    .series
}

fn homogeneous(p: usize, n: usize, seed: u64) -> TimeSeries {
    generate_piecewise(&[SegmentSpec::gaussian_mean(n, vec![0.0; p])], seed).unwrap().series
}

fn sorted(mut flags: Vec<Flag>) -> Vec<Flag> {
    flags.sort_by(|a, b| a.tau.cmp(&b.tau).then(a.h.cmp(&b.h)));
    flags
}

#[test]
fn stream_flags_equal_batch_flags() {
    let series = shift_series(5, 250, 250, 0.25, 11);
    let model = ModelSpec::gaussian_mean();
    let pattern = PatternSpec::new(PatternKind::Triangle);
    let reference = homogeneous(5, 200, 12);
    let cfg = CalibrationConfig::new(0.1, 60, BootstrapMethod::Weighted, 13);
    for thresholds in [None, Some(vec![(20, 0.5), (40, 0.5)])] {
        let mut stream = match &thresholds {
            None => {
                StreamDetector::calibrated(model, &reference, &[20, 40], &pattern, &cfg, JointMode::PerScale).unwrap()
            }
            Some(t) => StreamDetector::new(model, 5, &pattern, t).unwrap(),
        };
        for row in series.rows() {
            stream.push(row).unwrap();
        }
        let (_, batch) = scan_with_thresholds(&model, &series, &stream.thresholds(), &pattern).unwrap();
        assert!(!batch.is_empty());
        assert_eq!(sorted(stream.flags().to_vec()), batch);
        for h in [20, 40] {
            assert_eq!(stream.lrt(h).unwrap(), &lrt_series(&model, &series, h).unwrap());
        }
    }
}

#[test]
fn short_stream_only_accumulates() {
    let mut stream =
        StreamDetector::new(ModelSpec::gaussian_mean(), 1, &PatternSpec::new(PatternKind::Triangle), &[(10, 0.0)])
            .unwrap();
    for i in 0..39 {
        assert!(stream.push(&[i as f64]).unwrap().is_empty());
    }
    assert_eq!(stream.len(), 39);
    assert!(stream.flags().is_empty());
}

#[test]
fn abrupt_shift_is_flagged_within_two_windows() {
    let (p, h, pre, post) = (5, 20, 100, 100);
    let model = ModelSpec::gaussian_mean();
    let pattern = PatternSpec::new(PatternKind::Triangle);
    let reference = homogeneous(p, 200, 1);
    let cfg = CalibrationConfig::new(0.1, 200, BootstrapMethod::Weighted, 2);
    let threshold = StreamDetector::calibrated(model, &reference, &[h], &pattern, &cfg, JointMode::PerScale)
        .unwrap()
        .thresholds()[0]
        .1;
    let mut quick = 0;
    for run in 0..100u64 {
        let series = shift_series(p, pre, post, 1.0, derive_seed_path(3, &[run]));
        let mut stream = StreamDetector::new(model, p, &pattern, &[(h, threshold)]).unwrap();
        let mut latency = None;
        for (i, row) in series.rows().enumerate() {
            let fresh = stream.push(row).unwrap();
            if i >= pre && !fresh.is_empty() {
                latency = Some(i + 1 - pre);
                break;
            }
        }
        if latency.is_some_and(|l| l <= 2 * h) {
            quick += 1;
        }
    }
    assert!(quick >= 90, "{quick}/100 runs flagged within 2h");
}

#[test]
fn detect_localizes_a_mean_shift() {
    let series = shift_series(5, 250, 250, 1.0, 21);
    let cfg = DetectConfig::new(
        ModelSpec::gaussian_mean(),
        vec![30, 60],
        PatternSpec::new(PatternKind::Triangle),
        CalibrationConfig::new(0.1, 100, BootstrapMethod::Weighted, 22),
    );
    let report = detect(&series, &cfg).unwrap();
    assert_eq!(report.change_points.len(), 1, "{:?}", report.change_points);
    assert!(report.change_points[0].abs_diff(250) <= 10);
}

#[test]
fn power_grows_with_the_shift() {
    let cfg = LocalizationConfig { runs: 200, replicates: 100, seed: 31, ..LocalizationConfig::default() };
    let result = run_localization(&cfg).unwrap();
    for kind in [PatternKind::Triangle, PatternKind::Indicator] {
        let rows: Vec<_> = result.rows.iter().filter(|r| r.pattern == kind).collect();
        for pair in rows.windows(2) {
            let (a, b) = (pair[0].power, pair[1].power);
            let se = ((a * (1.0 - a) + b * (1.0 - b)) / cfg.runs as f64).sqrt();
            assert!(b >= a - 2.0 * se, "{kind:?}: power {a} at {} then {b} at {}", pair[0].shift, pair[1].shift);
        }
    }
}

#[test]
fn null_tp_variance_is_within_bound() {
    let (p, h, runs) = (3, 10, 400);
    let model = ModelSpec::gaussian_mean();
    let pattern = Pattern::new(PatternKind::Triangle, h, 0).unwrap().normalized(Normalization::Raw);
    let values: Vec<f64> = (0..runs)
        .map(|r| {
            let s = homogeneous(p, 4 * h, derive_seed_path(5, &[r]));
            let l = lrt_series(&model, &s, h).unwrap();
            tp_statistic(&l, &pattern, 2 * h).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / runs as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let bound = tp_variance_bound(p, h, 0.0).unwrap();
    assert!(var > 0.0 && var <= bound, "variance {var} bound {bound}");
}
