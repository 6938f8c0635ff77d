// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sliding-window likelihood-ratio statistic and its bootstrap counterparts.
//!
//! Position `t` (0-based) splits the window into `Y[t-h..t)` on the left and
//! `Y[t..t+h)` on the right, so valid positions are `h..=n-h`.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::{write_file, TimeSeries};
use crate::error::{Error, Result};
use crate::models::{Family, ModelSpec};
use crate::rng::{rng_from_seed, Rng};

/// Values `sqrt(2 T_h(t))` for `t = h..=n-h`.
#[derive(Clone, Debug, PartialEq)]
pub struct LrtSeries {
    pub h: usize,
    pub values: Vec<f64>,
}

impl LrtSeries {
    pub fn first_position(&self) -> usize {
        self.h
    }

    /// Last position with a value. Panics on an empty series.
    pub fn last_position(&self) -> usize {
        self.h + self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.h).and_then(|k| self.values.get(k)).copied()
    }

    /// `T_h(t)` recovered from the stored root.
    pub fn statistic_at(&self, t: usize) -> Option<f64> {
        self.value_at(t).map(|v| 0.5 * v * v)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { h: self.h, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.h + k, v));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv().as_bytes())
    }
}

/// Bootstrap replicate of the LRT series with solver-failure bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapLrt {
    pub series: LrtSeries,
    /// Positions where a weighted fit did not converge or was degenerate.
    pub failures: usize,
}

fn check_scale(n: usize, h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::invalid("window half-width h must be at least 1"));
    }
    if n < 2 * h {
        return Err(Error::SeriesTooShort { n, required: 2 * h });
    }
    Ok(())
}

fn check_position(n: usize, t: usize, h: usize) -> Result<()> {
    check_scale(n, h)?;
    if t < h || t > n - h {
        return Err(Error::OutOfRange { position: t, low: h, high: n - h });
    }
    Ok(())
}

/// Running sums `S_k = Y_0 + .. + Y_{k-1}` for the Gaussian-mean fast path.
#[derive(Clone, Debug)]
pub(crate) struct PrefixSums {
    dim: usize,
    sums: Vec<f64>,
}

impl PrefixSums {
    pub(crate) fn new(dim: usize) -> Self {
        Self { dim, sums: vec![0.0; dim] }
    }

    pub(crate) fn from_series(series: &TimeSeries) -> Self {
        let mut p = Self::new(series.dim());
        p.sums.reserve(series.values().len());
        for row in series.rows() {
            p.push(row);
        }
        p
    }

    pub(crate) fn push(&mut self, row: &[f64]) {
        let base = self.sums.len() - self.dim;
        for (c, y) in row.iter().enumerate() {
            let next = self.sums[base + c] + y;
            self.sums.push(next);
        }
    }

    fn at(&self, k: usize) -> &[f64] {
        &self.sums[k * self.dim..(k + 1) * self.dim]
    }

    /// `T_h(t) = h/4 |mean_r - mean_l|^2` for unit-variance Gaussian means.
    pub(crate) fn lrt(&self, t: usize, h: usize) -> f64 {
        let (a, b, c) = (self.at(t - h), self.at(t), self.at(t + h));
        let mut acc = 0.0;
        for k in 0..self.dim {
            let d = c[k] - 2.0 * b[k] + a[k];
            acc += d * d;
        }
        acc / (4.0 * h as f64)
    }
}

/// Statistic without clamping, for diagnostics.
pub fn lrt_at_unclamped(model: &ModelSpec, series: &TimeSeries, t: usize, h: usize) -> Result<f64> {
    check_position(series.len(), t, h)?;
    generic_lrt(model, series, t, h)
}

fn generic_lrt(model: &ModelSpec, series: &TimeSeries, t: usize, h: usize) -> Result<f64> {
    let (left, right, both) = (series.window(t - h, t), series.window(t, t + h), series.window(t - h, t + h));
    let fl = model.mle(&left, None)?;
    let fr = model.mle(&right, None)?;
    let f = model.mle(&both, None)?;
    Ok(fl.loglik + fr.loglik - f.loglik)
}

/// `T_h(t) = L(theta_l, Y_l) + L(theta_r, Y_r) - L(theta, Y_l u Y_r)`, clamped at 0.
pub fn lrt_at(model: &ModelSpec, series: &TimeSeries, t: usize, h: usize) -> Result<f64> {
    Ok(lrt_at_unclamped(model, series, t, h)?.max(0.0))
}

/// `sqrt(2 T_h(t))` through the per-window MLEs, as in the generic batch path.
pub(crate) fn position_root(model: &ModelSpec, series: &TimeSeries, t: usize, h: usize) -> Result<f64> {
    generic_lrt(model, series, t, h).map(root)
}

#[inline]
fn root(t: f64) -> f64 {
    (2.0 * t.max(0.0)).sqrt()
}

fn uses_prefix(model: &ModelSpec) -> bool {
    model.family == Family::GaussianMean && !model.force_newton
}

/// `sqrt(2 T_h(t))` at every valid position.
pub fn lrt_series(model: &ModelSpec, series: &TimeSeries, h: usize) -> Result<LrtSeries> {
    let n = series.len();
    check_scale(n, h)?;
    model.param_dim(series.dim(), series.covariate_dim())?;
    let values = if uses_prefix(model) {
        let prefix = PrefixSums::from_series(series);
        (h..=n - h).map(|t| root(prefix.lrt(t, h))).collect()
    } else {
        (h..=n - h).into_par_iter().map(|t| generic_lrt(model, series, t, h).map(root)).collect::<Result<Vec<_>>>()?
    };
    Ok(LrtSeries { h, values })
}

/// I.i.d. `N(1, 1)` multipliers, one per observation.
pub fn draw_bootstrap_weights(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            1.0 + z
        })
        .collect()
}

/// I.i.d. uniform indices into `0..n`.
pub fn draw_resample_indices(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Weighted bootstrap prepared for one `(model, series, h)`.
///
/// The shift `theta_r(t) - theta_l(t)` comes from the unweighted fits and is
/// computed once; every replicate then draws a single weight vector spanning
/// the whole series.
pub struct WeightedBootstrap<'a> {
    model: &'a ModelSpec,
    series: &'a TimeSeries,
    h: usize,
    kind: WeightedKind,
}

enum WeightedKind {
    GaussianMean { prefix: PrefixSums },
    Generic { shifts: Vec<Vec<f64>> },
}

impl<'a> WeightedBootstrap<'a> {
    pub fn new(model: &'a ModelSpec, series: &'a TimeSeries, h: usize) -> Result<Self> {
        let n = series.len();
        check_scale(n, h)?;
        model.param_dim(series.dim(), series.covariate_dim())?;
        let kind = if uses_prefix(model) {
            WeightedKind::GaussianMean { prefix: PrefixSums::from_series(series) }
        } else {
            let shifts = (h..=n - h)
                .into_par_iter()
                .map(|t| {
                    let l = model.mle(&series.window(t - h, t), None)?;
                    let r = model.mle(&series.window(t, t + h), None)?;
                    Ok(r.theta.iter().zip(&l.theta).map(|(a, b)| a - b).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            WeightedKind::Generic { shifts }
        };
        Ok(Self { model, series, h, kind })
    }

    pub fn replicate(&self, seed: u64) -> Result<BootstrapLrt> {
        let mut rng = rng_from_seed(seed);
        let weights = draw_bootstrap_weights(self.series.len(), &mut rng);
        self.replicate_with_weights(&weights)
    }

    /// Replicate under caller-supplied weights (identity weights give `T = 0`).
    pub fn replicate_with_weights(&self, weights: &[f64]) -> Result<BootstrapLrt> {
        let (n, h) = (self.series.len(), self.h);
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} observations", weights.len())));
        }
        let mut failures = 0;
        let values = match &self.kind {
            WeightedKind::GaussianMean { prefix } => {
                let dim = self.series.dim();
                let mut wsum = Vec::with_capacity(n + 1);
                let mut wy = PrefixSums::new(dim);
                wsum.push(0.0);
                let mut scratch = vec![0.0; dim];
                for (i, row) in self.series.rows().enumerate() {
                    wsum.push(wsum[i] + weights[i]);
                    for (s, y) in scratch.iter_mut().zip(row) {
                        *s = weights[i] * y;
                    }
                    wy.push(&scratch);
                }
                let mut values = Vec::with_capacity(n - 2 * h + 1);
                for t in h..=n - h {
                    let wl = wsum[t] - wsum[t - h];
                    let wr = wsum[t + h] - wsum[t];
                    if wl == 0.0 || wr == 0.0 || wl + wr == 0.0 {
                        failures += 1;
                        values.push(0.0);
                        continue;
                    }
                    let (a0, a1, a2) = (wy.at(t - h), wy.at(t), wy.at(t + h));
                    let (p0, p1, p2) = (prefix.at(t - h), prefix.at(t), prefix.at(t + h));
                    let hf = h as f64;
                    let mut acc = 0.0;
                    for c in 0..dim {
                        let left = (a1[c] - a0[c]) / wl;
                        let right = (a2[c] - a1[c]) / wr;
                        let shift = (p2[c] - p1[c]) / hf - (p1[c] - p0[c]) / hf;
                        let d = left - right + shift;
                        acc += d * d;
                    }
                    values.push(root(0.5 * wl * wr / (wl + wr) * acc));
                }
                values
            }
            WeightedKind::Generic { shifts } => {
                let per: Vec<(f64, bool)> = (h..=n - h)
                    .into_par_iter()
                    .map(|t| self.generic_position(t, weights, &shifts[t - h]))
                    .collect::<Result<Vec<_>>>()?;
                failures = per.iter().filter(|(_, ok)| !ok).count();
                per.into_iter().map(|(v, _)| root(v)).collect()
            }
        };
        Ok(BootstrapLrt { series: LrtSeries { h, values }, failures })
    }

    /// Unclamped `T_h^b(t)` via weighted fits and the coupled supremum; a
    /// failed or nonconcave fit yields `(0, false)`.
    fn generic_position(&self, t: usize, weights: &[f64], shift: &[f64]) -> Result<(f64, bool)> {
        let h = self.h;
        let (left, right) = (self.series.window(t - h, t), self.series.window(t, t + h));
        let (wl, wr) = (&weights[t - h..t], &weights[t..t + h]);
        let fits = (|| {
            let fl = self.model.mle(&left, Some(wl))?;
            let fr = self.model.mle(&right, Some(wr))?;
            let sup = self.model.mle_shifted_pair(&left, &right, shift, Some(wl), Some(wr))?;
            Ok::<_, Error>((fl.loglik + fr.loglik - sup.value, fl.converged && fr.converged && sup.converged))
        })();
        match fits {
            Ok((v, true)) => Ok((v, true)),
            Ok((_, false)) => Ok((0.0, false)),
            Err(Error::DegenerateWindow(_)) | Err(Error::Domain(_)) => Ok((0.0, false)),
            Err(e) => Err(e),
        }
    }
}

/// One weighted-bootstrap replicate of the LRT series.
pub fn weighted_bootstrap_lrt_series(
    model: &ModelSpec,
    series: &TimeSeries,
    h: usize,
    seed: u64,
) -> Result<BootstrapLrt> {
    WeightedBootstrap::new(model, series, h)?.replicate(seed)
}

/// Plain LRT series of the resampled data `Y_{k(0)}, .., Y_{k(n-1)}`.
pub fn empirical_bootstrap_lrt_series_with_indices(
    model: &ModelSpec,
    series: &TimeSeries,
    h: usize,
    indices: &[usize],
) -> Result<BootstrapLrt> {
    if indices.len() != series.len() || indices.iter().any(|&k| k >= series.len()) {
        return Err(Error::invalid("resample indices must be n values in 0..n"));
    }
    let resampled = series.resample(indices);
    Ok(BootstrapLrt { series: lrt_series(model, &resampled, h)?, failures: 0 })
}

/// One empirical-bootstrap replicate of the LRT series.
pub fn empirical_bootstrap_lrt_series(
    model: &ModelSpec,
    series: &TimeSeries,
    h: usize,
    seed: u64,
) -> Result<BootstrapLrt> {
    check_scale(series.len(), h)?;
    let mut rng = rng_from_seed(seed);
    let indices = draw_resample_indices(series.len(), &mut rng);
    empirical_bootstrap_lrt_series_with_indices(model, series, h, &indices)
}
