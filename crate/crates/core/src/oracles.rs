// SPDX-License-Identifier: MIT OR Apache-2.0

//! Brute-force reference computations for tests. Nothing here is used by the
//! detection code paths.

use crate::data::{TimeSeries, Window};
use crate::error::{Error, Result};
use crate::models::{Family, ModelSpec};

fn ln_factorial(y: f64) -> f64 {
    let k = y.round() as u64;
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn gaussian_window(rows: &[&[f64]]) -> f64 {
    let p = rows[0].len();
    let n = rows.len() as f64;
    let mut ll = 0.0;
    for j in 0..p {
        let mut m = 0.0;
        for r in rows {
            m += r[j];
        }
        m /= n;
        for r in rows {
            ll -= 0.5 * (r[j] - m) * (r[j] - m);
        }
    }
    ll
}

fn poisson_window(rows: &[&[f64]]) -> f64 {
    let p = rows[0].len();
    let n = rows.len() as f64;
    let mut ll = 0.0;
    for j in 0..p {
        let rate = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        for r in rows {
            let y = r[j];
            if y > 0.0 {
                ll += y * rate.ln();
            }
            ll -= rate + ln_factorial(y);
        }
    }
    ll
}

/// Maximizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / 2.0
}

fn meanvar_window(rows: &[&[f64]], floor: f64) -> f64 {
    let n = rows.len() as f64;
    let m = rows.iter().map(|r| r[0]).sum::<f64>() / n;
    let ss: f64 = rows.iter().map(|r| (r[0] - m) * (r[0] - m)).sum();
    let profile = |v: f64| -0.5 * n * v.ln() - ss / (2.0 * v);
    let hi = (4.0 * ss / n).max(1.0);
    let v = golden_section(profile, floor, hi, 1e-12 * hi).max(floor);
    profile(v)
}

fn glm_window(model: &ModelSpec, window: &Window<'_>) -> Result<f64> {
    let Family::Glm(link) = model.family else { unreachable!() };
    if window.covariate_dim() != Some(1) {
        return Err(Error::invalid("glm oracle handles scalar factors only"));
    }
    let ll = |theta: f64| {
        (0..window.len())
            .map(|i| {
                let eta = window.covariate(i).unwrap()[0] * theta;
                window.row(i)[0] * eta - link.g(eta)
            })
            .sum::<f64>()
    };
    let theta = golden_section(ll, -30.0, 30.0, 1e-12);
    Ok(ll(theta))
}

fn window_loglik(model: &ModelSpec, series: &TimeSeries, start: usize, end: usize) -> Result<f64> {
    let rows: Vec<&[f64]> = (start..end).map(|i| series.row(i)).collect();
    match model.family {
        Family::GaussianMean => Ok(gaussian_window(&rows)),
        Family::Poisson => Ok(poisson_window(&rows)),
        Family::GaussianMeanVar => Ok(meanvar_window(&rows, model.variance_floor)),
        Family::Glm(_) => glm_window(model, &series.window(start, end)),
    }
}

/// `T_h(t)` from direct loops over each window, clamped at 0.
pub fn naive_lrt(model: &ModelSpec, series: &TimeSeries, t: usize, h: usize) -> Result<f64> {
    if h == 0 || t < h || t + h > series.len() {
        return Err(Error::OutOfRange { position: t, low: h, high: series.len().saturating_sub(h) });
    }
    let l = window_loglik(model, series, t - h, t)?;
    let r = window_loglik(model, series, t, t + h)?;
    let both = window_loglik(model, series, t - h, t + h)?;
    Ok((l + r - both).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Points per parameter axis.
    pub points: usize,
    /// Half-width of each axis in standard errors.
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 2001, half_width: 5.0 }
    }
}

/// Grid maximum of `sum_L w_i l_i(theta) + sum_R w_i l_i(theta + shift)` and its argmax.
pub fn grid_sup_shifted(
    model: &ModelSpec,
    left: &Window<'_>,
    right: &Window<'_>,
    shift: &[f64],
    weights: (Option<&[f64]>, Option<&[f64]>),
    grid: GridSpec,
) -> Result<(f64, Vec<f64>)> {
    let d = model.param_dim(left.dim(), left.covariate_dim())?;
    if d > 2 || matches!(model.family, Family::Glm(_)) {
        return Err(Error::invalid("grid oracle handles 1- and 2-dimensional non-glm parameters only"));
    }
    if grid.points < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    // weighted pooled moments of left and shift-corrected right observations
    let n = (left.len() + right.len()) as f64;
    let mut w: Vec<f64> = (0..left.len())
        .map(|i| weights.0.map_or(1.0, |w| w[i]))
        .chain((0..right.len()).map(|i| weights.1.map_or(1.0, |w| w[i])))
        .collect();
    if w.iter().sum::<f64>() <= 0.0 {
        w = vec![1.0; w.len()];
    }
    let total: f64 = w.iter().sum();
    let pooled_of =
        |j: usize| -> Vec<f64> { left.rows().map(|r| r[j]).chain(right.rows().map(|r| r[j] - shift[j])).collect() };
    let centre_of = |j: usize| -> f64 { pooled_of(j).iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / total };
    let (centre, se): (Vec<f64>, Vec<f64>) = match model.family {
        Family::GaussianMean => (0..d).map(|j| (centre_of(j), (1.0 / n).sqrt())).unzip(),
        Family::Poisson => (0..d)
            .map(|j| {
                let c = centre_of(j).max(1e-3);
                (c, (c / n).sqrt())
            })
            .unzip(),
        Family::GaussianMeanVar => {
            let pooled = pooled_of(0);
            let m = centre_of(0);
            let v = (pooled.iter().zip(&w).map(|(y, w)| w * (y - m) * (y - m)).sum::<f64>() / total).max(1e-6);
            let v_centre = v + shift[1].min(0.0).abs();
            (vec![m, v_centre], vec![(v / n).sqrt().max(1e-3), v_centre * (2.0 / n).sqrt() + shift[1].abs()])
        }
        Family::Glm(_) => unreachable!(),
    };
    let objective = |theta: &[f64]| -> Option<f64> {
        let shifted: Vec<f64> = theta.iter().zip(shift).map(|(a, b)| a + b).collect();
        let l = model.weighted_loglik(left, weights.0, theta).ok()?;
        let r = model.weighted_loglik(right, weights.1, &shifted).ok()?;
        Some(l + r)
    };
    let axis = |j: usize, k: usize| {
        centre[j] - grid.half_width * se[j] + 2.0 * grid.half_width * se[j] * k as f64 / (grid.points - 1) as f64
    };
    let mut best = (f64::NEG_INFINITY, vec![f64::NAN; d]);
    let mut theta = vec![0.0; d];
    let inner = if d == 2 { grid.points } else { 1 };
    for a in 0..grid.points {
        theta[0] = axis(0, a);
        for b in 0..inner {
            if d == 2 {
                theta[1] = axis(1, b);
            }
            if let Some(v) = objective(&theta) {
                if v > best.0 {
                    best = (v, theta.clone());
                }
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Domain("no feasible grid point".into()));
    }
    Ok(best)
}
