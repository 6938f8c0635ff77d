// SPDX-License-Identifier: MIT OR Apache-2.0

use patterncp::data::{generate_piecewise, SegmentFamily, SegmentSpec, TimeSeries};
use patterncp::lrt::{draw_bootstrap_weights, WeightedBootstrap};
use patterncp::models::{Family, ModelSpec};
use patterncp::oracles::{grid_sup_shifted, GridSpec};
use patterncp::rng::rng_from_seed;

fn positive_weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    draw_bootstrap_weights(n, &mut rng).into_iter().map(|w| w.abs() + 0.05).collect()
}

fn check_against_grid(model: &ModelSpec, series: &TimeSeries, shift: &[f64], seed: u64, tol: f64) {
    let h = series.len() / 2;
    let (left, right) = (series.window(0, h), series.window(h, 2 * h));
    let w = positive_weights(2 * h, seed);
    let fit = model.mle_shifted_pair(&left, &right, shift, Some(&w[..h]), Some(&w[h..])).unwrap();
    assert!(fit.converged);
    let (grid, _) =
        grid_sup_shifted(model, &left, &right, shift, (Some(&w[..h]), Some(&w[h..])), GridSpec::default()).unwrap();
    // the grid can only undershoot the true supremum
    assert!(fit.value >= grid - 1e-9, "{:?}: solver {} below grid {}", model.family, fit.value, grid);
    assert!(fit.value - grid <= tol, "{:?}: solver {} grid {}", model.family, fit.value, grid);
}

#[test]
fn shifted_gaussian_fit_matches_grid() {
    for seed in 0..5 {
        let g = generate_piecewise(
            &[SegmentSpec::gaussian_mean(30, vec![0.0]), SegmentSpec::gaussian_mean(30, vec![1.0])],
            seed,
        )
        .unwrap();
        check_against_grid(&ModelSpec::gaussian_mean(), &g.series, &[0.7], seed, 1e-4);
    }
}

#[test]
fn shifted_poisson_fit_matches_grid() {
    for seed in 0..5 {
        let g = generate_piecewise(
            &[
                SegmentSpec::new(30, SegmentFamily::Poisson, vec![3.0]),
                SegmentSpec::new(30, SegmentFamily::Poisson, vec![5.0]),
            ],
            seed,
        )
        .unwrap();
        check_against_grid(&ModelSpec::new(Family::Poisson), &g.series, &[1.5], seed, 1e-4);
    }
}

#[test]
fn shifted_meanvar_fit_matches_grid() {
    for seed in 0..3 {
        let g = generate_piecewise(
            &[
                SegmentSpec::new(30, SegmentFamily::GaussianMeanVar, vec![0.0, 1.0]),
                SegmentSpec::new(30, SegmentFamily::GaussianMeanVar, vec![0.5, 2.0]),
            ],
            seed,
        )
        .unwrap();
        check_against_grid(&ModelSpec::new(Family::GaussianMeanVar), &g.series, &[0.4, 0.8], seed, 1e-3);
    }
}

#[test]
fn gaussian_bootstrap_closed_form_matches_newton_path() {
    let g = generate_piecewise(
        &[SegmentSpec::gaussian_mean(60, vec![0.0, 0.0]), SegmentSpec::gaussian_mean(60, vec![1.0, -0.5])],
        3,
    )
    .unwrap();
    let fast = ModelSpec::gaussian_mean();
    let slow = ModelSpec::gaussian_mean().with_forced_newton();
    for seed in 0..3 {
        let w = positive_weights(g.series.len(), 100 + seed);
        let a = WeightedBootstrap::new(&fast, &g.series, 15).unwrap().replicate_with_weights(&w).unwrap();
        let b = WeightedBootstrap::new(&slow, &g.series, 15).unwrap().replicate_with_weights(&w).unwrap();
        assert_eq!((a.failures, b.failures), (0, 0));
        for (x, y) in a.series.values.iter().zip(&b.series.values) {
            assert!((x - y).abs() <= 1e-6 * (1.0 + x), "{x} vs {y}");
        }
    }
}

#[test]
fn identity_weights_give_zero_bootstrap_statistic() {
    let g = generate_piecewise(
        &[
            SegmentSpec::new(50, SegmentFamily::Poisson, vec![2.0]),
            SegmentSpec::new(50, SegmentFamily::Poisson, vec![6.0]),
        ],
        9,
    )
    .unwrap();
    for family in [Family::GaussianMean, Family::Poisson] {
        let m = ModelSpec::new(family);
        let rep = WeightedBootstrap::new(&m, &g.series, 10).unwrap().replicate_with_weights(&vec![1.0; 100]).unwrap();
        assert!(rep.series.values.iter().all(|v| v * v / 2.0 < 1e-9));
    }
}
