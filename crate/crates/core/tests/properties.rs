// SPDX-License-Identifier: MIT OR Apache-2.0

use patterncp::data::TimeSeries;
use patterncp::detector::{merge_flags, Flag};
use patterncp::lrt::{lrt_at, lrt_series};
use patterncp::metrics::{nmi, Partition};
use patterncp::models::{Family, ModelSpec};
use patterncp::oracles::naive_lrt;
use patterncp::patterns::{tp_series, Normalization, Pattern, PatternKind};
use proptest::prelude::*;

fn gaussian_series(max_n: usize) -> impl Strategy<Value = (Vec<f64>, usize)> {
    (1usize..4).prop_flat_map(move |p| {
        (prop::collection::vec(-5.0f64..5.0, (8 * p)..=(max_n * p)), Just(p)).prop_map(move |(mut v, p)| {
            v.truncate(v.len() / p * p);
            (v, p)
        })
    })
}

fn counts(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..12, 8..=max_n).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn boundaries(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::btree_set(1..n, 0..6).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lrt_is_nonnegative_and_finite((v, p) in gaussian_series(40), h in 1usize..4) {
        let s = TimeSeries::from_flat(v, p).unwrap();
        prop_assume!(s.len() >= 2 * h);
        let l = lrt_series(&ModelSpec::gaussian_mean(), &s, h).unwrap();
        prop_assert!(l.values.iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn gaussian_lrt_ignores_translation((v, p) in gaussian_series(30), h in 1usize..4, c in -50.0f64..50.0) {
        let s = TimeSeries::from_flat(v, p).unwrap();
        prop_assume!(s.len() >= 2 * h);
        let moved = s.shifted(&vec![c; p]);
        let m = ModelSpec::gaussian_mean();
        let (a, b) = (lrt_series(&m, &s, h).unwrap(), lrt_series(&m, &moved, h).unwrap());
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-7 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn prefix_scan_matches_naive_loops((v, p) in gaussian_series(30), h in 1usize..5) {
        let s = TimeSeries::from_flat(v, p).unwrap();
        prop_assume!(s.len() >= 2 * h);
        let m = ModelSpec::gaussian_mean();
        let l = lrt_series(&m, &s, h).unwrap();
        for t in h..=s.len() - h {
            let naive = naive_lrt(&m, &s, t, h).unwrap();
            prop_assert!((l.statistic_at(t).unwrap() - naive).abs() <= 1e-8 * (1.0 + naive));
        }
    }

    #[test]
    fn poisson_lrt_matches_naive_loops(v in counts(30), h in 1usize..5) {
        let s = TimeSeries::from_flat(v, 1).unwrap();
        prop_assume!(s.len() >= 2 * h);
        let m = ModelSpec::new(Family::Poisson);
        for t in h..=s.len() - h {
            let fast = lrt_at(&m, &s, t, h).unwrap();
            let naive = naive_lrt(&m, &s, t, h).unwrap();
            prop_assert!((fast - naive).abs() <= 1e-8 * (1.0 + naive));
        }
    }

    #[test]
    fn closed_forms_agree_with_newton(v in counts(24), scale in 0.2f64..3.0) {
        let s = TimeSeries::from_flat(v.iter().map(|x| x * scale).collect(), 1).unwrap();
        for family in [Family::GaussianMean, Family::Poisson] {
            let closed = ModelSpec::new(family).mle(&s.full_window(), None).unwrap();
            let newton = ModelSpec::new(family).with_forced_newton().mle(&s.full_window(), None).unwrap();
            prop_assert!(newton.converged);
            for (a, b) in closed.theta.iter().zip(&newton.theta) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn score_vanishes_at_the_mle(v in prop::collection::vec(-3.0f64..3.0, 6..40), w in prop::collection::vec(0.1f64..2.0, 40)) {
        let s = TimeSeries::from_flat(v, 1).unwrap();
        let weights = &w[..s.len()];
        for family in [Family::GaussianMean, Family::GaussianMeanVar] {
            let m = ModelSpec::new(family);
            let fit = m.mle(&s.full_window(), Some(weights)).unwrap();
            prop_assume!(fit.converged && fit.theta.last().copied().unwrap_or(1.0) > 1e-6);
            let score = m.score(&s.full_window(), Some(weights), &fit.theta).unwrap();
            let v = if family == Family::GaussianMeanVar { fit.theta[1] } else { 1.0 };
            let bound = 1e-9 * s.len() as f64 * 10.0 * (1.0 + 1.0 / (v * v));
            prop_assert!(score.iter().all(|g| g.abs() <= bound), "score {:?}", score);
        }
    }

    #[test]
    fn tp_is_linear_in_the_lrt((v, p) in gaussian_series(40), h in 1usize..4, c in 0.0f64..10.0) {
        let s = TimeSeries::from_flat(v, p).unwrap();
        prop_assume!(s.len() >= 4 * h);
        let l = lrt_series(&ModelSpec::gaussian_mean(), &s, h).unwrap();
        for kind in [PatternKind::Triangle, PatternKind::Horn, PatternKind::Indicator] {
            let pat = Pattern::new(kind, h, 0).unwrap().normalized(Normalization::L1);
            let (_, base) = tp_series(&l, &pat).unwrap();
            let (_, scaled) = tp_series(&l.scaled(c), &pat).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                prop_assert!((c * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn nmi_is_symmetric_and_bounded(n in 2usize..200, a in boundaries(200), b in boundaries(200)) {
        let x = Partition::new(n, a.into_iter().filter(|&k| k < n).collect()).unwrap();
        let y = Partition::new(n, b.into_iter().filter(|&k| k < n).collect()).unwrap();
        let (xy, yx) = (nmi(&x, &y).unwrap(), nmi(&y, &x).unwrap());
        prop_assert!((xy - yx).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&xy));
        prop_assert!((nmi(&x, &x).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn merged_change_points_are_separated(
        taus in prop::collection::btree_set(0usize..500, 0..40),
        tps in prop::collection::vec(0.0f64..10.0, 40),
        sep in 1usize..60,
    ) {
        let flags: Vec<Flag> = taus
            .iter()
            .zip(&tps)
            .map(|(&tau, &tp)| Flag { tau, h: 10, tp, critical_value: 0.0 })
            .collect();
        let cps = merge_flags(&flags, sep);
        prop_assert!(cps.windows(2).all(|w| w[1] - w[0] >= sep));
        prop_assert!(cps.iter().all(|c| taus.contains(c)));
        prop_assert_eq!(cps.is_empty(), flags.is_empty());
    }
}
