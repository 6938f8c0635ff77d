// SPDX-License-Identifier: MIT OR Apache-2.0

//! Likelihood families and (weighted, shift-coupled) maximum-likelihood fits.
//!
//! Every family evaluates `l_i(theta)` up to an additive constant that does
//! not depend on `theta`; the dropped constant is documented on each
//! [`Family`] variant. Likelihood-ratio differences never see it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::Window;
use crate::error::{Error, Result};
use crate::newton::{self, Evaluation, NewtonOptions};

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

/// Cumulant function `g` of a canonical GLM, `L(theta) = sum y_i psi_i'theta - g(psi_i'theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmLink {
    /// `g(u) = u^2 / 2`, Gaussian regression with unit variance.
    Identity,
    /// `g(u) = e^u`, Poisson regression.
    Log,
    /// `g(u) = log(1 + e^u)`, logistic regression.
    Logit,
}

impl GlmLink {
    pub fn g(self, u: f64) -> f64 {
        match self {
            GlmLink::Identity => 0.5 * u * u,
            GlmLink::Log => u.exp(),
            GlmLink::Logit => {
                if u > 0.0 {
                    u + (-u).exp().ln_1p()
                } else {
                    u.exp().ln_1p()
                }
            }
        }
    }

    pub fn g1(self, u: f64) -> f64 {
        match self {
            GlmLink::Identity => u,
            GlmLink::Log => u.exp(),
            GlmLink::Logit => 1.0 / (1.0 + (-u).exp()),
        }
    }

    pub fn g2(self, u: f64) -> f64 {
        match self {
            GlmLink::Identity => 1.0,
            GlmLink::Log => u.exp(),
            GlmLink::Logit => {
                let s = self.g1(u);
                s * (1.0 - s)
            }
        }
    }

    pub fn g3(self, u: f64) -> f64 {
        match self {
            GlmLink::Identity => 0.0,
            GlmLink::Log => u.exp(),
            GlmLink::Logit => {
                let s = self.g1(u);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family", content = "link")]
pub enum Family {
    /// Identity covariance, `theta` is the mean. Drops `-(p/2) log(2 pi)`.
    GaussianMean,
    /// Scalar observations, `theta = (mean, variance)`. Drops `-(1/2) log(2 pi)`.
    GaussianMeanVar,
    /// Independent Poisson coordinates, `theta` is the rate vector. Full log-pmf.
    Poisson,
    /// Canonical GLM with scalar response and factors `psi_i`.
    /// Drops the base-measure term (e.g. `-log y!` for the log link).
    Glm(GlmLink),
}

/// Immutable description of a likelihood family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default = "default_floor")]
    pub variance_floor: f64,
    /// Route closed-form families through the Newton solver as well.
    #[serde(default)]
    pub force_newton: bool,
    #[serde(skip)]
    pub newton: NewtonOptions,
}

fn default_floor() -> f64 {
    DEFAULT_VARIANCE_FLOOR
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        Self { family, variance_floor: DEFAULT_VARIANCE_FLOOR, force_newton: false, newton: NewtonOptions::default() }
    }

    pub fn gaussian_mean() -> Self {
        Self::new(Family::GaussianMean)
    }

    pub fn with_variance_floor(mut self, floor: f64) -> Self {
        self.variance_floor = floor;
        self
    }

    pub fn with_forced_newton(mut self) -> Self {
        self.force_newton = true;
        self
    }
}

/// Result of a (weighted) maximum-likelihood fit.
#[derive(Clone, Debug, PartialEq)]
pub struct MleResult {
    pub theta: Vec<f64>,
    /// `sum_i w_i l_i(theta)` at the returned parameter.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizer of `theta -> L(theta, left) + L(theta + shift, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedMle {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_weights(window: &Window<'_>, weights: Option<&[f64]>) -> Result<()> {
    if window.is_empty() {
        return Err(Error::DegenerateWindow("empty window".into()));
    }
    if let Some(w) = weights {
        if w.len() != window.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a window of {} observations",
                w.len(),
                window.len()
            )));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::DegenerateWindow("all weights are zero".into()));
        }
    }
    Ok(())
}

#[inline]
fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

impl ModelSpec {
    /// Parameter dimension for observations of dimension `obs_dim` with
    /// optional factors of dimension `cov_dim`.
    pub fn param_dim(&self, obs_dim: usize, cov_dim: Option<usize>) -> Result<usize> {
        match self.family {
            Family::GaussianMean | Family::Poisson => Ok(obs_dim),
            Family::GaussianMeanVar if obs_dim == 1 => Ok(2),
            Family::GaussianMeanVar => {
                Err(Error::DimensionMismatch("gaussian-meanvar takes scalar observations".into()))
            }
            Family::Glm(_) => match (obs_dim, cov_dim) {
                (1, Some(q)) => Ok(q),
                (1, None) => Err(Error::invalid("glm family requires covariates")),
                _ => Err(Error::DimensionMismatch("glm takes scalar responses".into())),
            },
        }
    }

    fn check_theta(&self, window: &Window<'_>, theta: &[f64]) -> Result<()> {
        let d = self.param_dim(window.dim(), window.covariate_dim())?;
        if theta.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "parameter has dimension {}, family expects {d}",
                theta.len()
            )));
        }
        Ok(())
    }

    /// `l_i(theta)` for one observation; `psi` is the factor row (GLM only).
    pub fn loglik_term(&self, y: &[f64], psi: Option<&[f64]>, theta: &[f64]) -> Result<f64> {
        match self.family {
            Family::GaussianMean => {
                if y.len() != theta.len() {
                    return Err(Error::DimensionMismatch("observation/parameter dimension".into()));
                }
                Ok(-0.5 * y.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            }
            Family::GaussianMeanVar => {
                if y.len() != 1 || theta.len() != 2 {
                    return Err(Error::DimensionMismatch("gaussian-meanvar expects y in R, theta in R^2".into()));
                }
                if theta[1] <= 0.0 {
                    return Err(Error::Domain(format!("variance {} is not positive", theta[1])));
                }
                let r = y[0] - theta[0];
                Ok(-0.5 * theta[1].ln() - r * r / (2.0 * theta[1]))
            }
            Family::Poisson => {
                if y.len() != theta.len() {
                    return Err(Error::DimensionMismatch("observation/parameter dimension".into()));
                }
                let mut acc = 0.0;
                for (&yc, &rate) in y.iter().zip(theta) {
                    if rate <= 0.0 {
                        return Err(Error::Domain(format!("rate {rate} is not positive")));
                    }
                    if yc < 0.0 {
                        return Err(Error::Domain(format!("negative count {yc}")));
                    }
                    acc += poisson_term(yc, rate);
                }
                Ok(acc)
            }
            Family::Glm(link) => {
                let psi = psi.ok_or_else(|| Error::invalid("glm term requires a factor row"))?;
                if y.len() != 1 || psi.len() != theta.len() {
                    return Err(Error::DimensionMismatch("glm factor/parameter dimension".into()));
                }
                let eta = dot(psi, theta);
                Ok(y[0] * eta - link.g(eta))
            }
        }
    }

    /// `sum_i w_i l_i(theta)` over a window.
    pub fn weighted_loglik(&self, window: &Window<'_>, weights: Option<&[f64]>, theta: &[f64]) -> Result<f64> {
        check_weights(window, weights)?;
        self.check_theta(window, theta)?;
        let mut acc = 0.0;
        for i in 0..window.len() {
            acc += weight(weights, i) * self.loglik_term(window.row(i), window.covariate(i), theta)?;
        }
        Ok(acc)
    }

    /// Gradient of `sum_i w_i l_i` at `theta`.
    pub fn score(&self, window: &Window<'_>, weights: Option<&[f64]>, theta: &[f64]) -> Result<Vec<f64>> {
        check_weights(window, weights)?;
        self.check_theta(window, theta)?;
        let th = DVector::from_column_slice(theta);
        let e = self
            .evaluate(&[(window, weights, None)], &th)
            .ok_or_else(|| Error::Domain("parameter outside family domain".into()))?;
        Ok(e.grad.as_slice().to_vec())
    }

    /// Weighted maximum-likelihood estimate over `window`.
    ///
    /// Gaussian and Poisson families use closed forms. The variance and rate
    /// are constrained to `>= variance_floor`, so a degenerate window returns
    /// the floor as a converged boundary solution. A weighted objective that
    /// is not concave (negative total weight, negative weighted spread) yields
    /// the stationary point, projected onto the floor, with `converged = false`.
    pub fn mle(&self, window: &Window<'_>, weights: Option<&[f64]>) -> Result<MleResult> {
        check_weights(window, weights)?;
        let d = self.param_dim(window.dim(), window.covariate_dim())?;
        if let Family::Glm(_) = self.family {
            return self.newton_mle(window, weights, DVector::zeros(d));
        }
        let (total, sums) = weighted_sums(window, weights);
        if total == 0.0 {
            return Err(Error::DegenerateWindow("total weight is zero".into()));
        }
        if self.force_newton {
            let start = match self.family {
                Family::GaussianMean => DVector::zeros(d),
                Family::Poisson => DVector::from_element(d, 1.0),
                _ => DVector::from_vec(vec![0.0, 1.0]),
            };
            return self.newton_mle(window, weights, start);
        }
        let floor = self.variance_floor;
        let (theta, converged) = match self.family {
            Family::GaussianMean => (sums.iter().map(|s| s / total).collect::<Vec<_>>(), true),
            Family::GaussianMeanVar => {
                let m = sums[0] / total;
                let mut spread = 0.0;
                for i in 0..window.len() {
                    let r = window.row(i)[0] - m;
                    spread += weight(weights, i) * r * r;
                }
                let v = spread / total;
                (vec![m, v.max(floor)], total > 0.0 && v >= 0.0)
            }
            Family::Poisson => {
                let ok = total > 0.0 && sums.iter().all(|&s| s >= 0.0);
                (sums.iter().map(|s| (s / total).max(floor)).collect(), ok)
            }
            Family::Glm(_) => unreachable!(),
        };
        let loglik = self.weighted_loglik(window, weights, &theta)?;
        Ok(MleResult { theta, loglik, iterations: 0, converged })
    }

    fn newton_mle(&self, window: &Window<'_>, weights: Option<&[f64]>, start: DVector<f64>) -> Result<MleResult> {
        let parts = [(window, weights, None)];
        let out = newton::maximize(|th| self.evaluate(&parts, th), start, &self.newton)
            .ok_or_else(|| Error::Domain("starting point outside family domain".into()))?;
        Ok(MleResult {
            theta: out.x.as_slice().to_vec(),
            loglik: out.value,
            iterations: out.iterations,
            converged: out.converged,
        })
    }

    /// Maximizes `sum_L w_i l_i(theta) + sum_R w_i l_i(theta + shift)`.
    pub fn mle_shifted_pair(
        &self,
        left: &Window<'_>,
        right: &Window<'_>,
        shift: &[f64],
        weights_left: Option<&[f64]>,
        weights_right: Option<&[f64]>,
    ) -> Result<ShiftedMle> {
        check_weights(left, weights_left)?;
        check_weights(right, weights_right)?;
        let d = self.param_dim(left.dim(), left.covariate_dim())?;
        if self.param_dim(right.dim(), right.covariate_dim())? != d {
            return Err(Error::DimensionMismatch("left and right windows differ in shape".into()));
        }
        if shift.len() != d {
            return Err(Error::DimensionMismatch(format!("shift has dimension {}, parameter has {d}", shift.len())));
        }
        if self.family == Family::GaussianMean && !self.force_newton {
            let (wl, sl) = weighted_sums(left, weights_left);
            let (wr, sr) = weighted_sums(right, weights_right);
            let total = wl + wr;
            if total == 0.0 {
                return Err(Error::DegenerateWindow("total weight is zero".into()));
            }
            let theta: Vec<f64> = (0..d).map(|c| (sl[c] + sr[c] - wr * shift[c]) / total).collect();
            let moved: Vec<f64> = theta.iter().zip(shift).map(|(a, b)| a + b).collect();
            let value = self.weighted_loglik(left, weights_left, &theta)?
                + self.weighted_loglik(right, weights_right, &moved)?;
            return Ok(ShiftedMle { theta, value, iterations: 0, converged: true });
        }
        let shift_v = DVector::from_column_slice(shift);
        let start = self.shifted_start(left, right, shift);
        let parts = [(left, weights_left, None), (right, weights_right, Some(&shift_v))];
        let out = newton::maximize(|th| self.evaluate(&parts, th), start, &self.newton)
            .ok_or_else(|| Error::Domain("no feasible starting point for shifted fit".into()))?;
        Ok(ShiftedMle {
            theta: out.x.as_slice().to_vec(),
            value: out.value,
            iterations: out.iterations,
            converged: out.converged,
        })
    }

    /// Feasible start for the coupled fit: pooled moments of the left window
    /// and the shift-corrected right window, pushed inside the domain.
    fn shifted_start(&self, left: &Window<'_>, right: &Window<'_>, shift: &[f64]) -> DVector<f64> {
        let d = shift.len();
        let n = (left.len() + right.len()) as f64;
        match self.family {
            Family::GaussianMean | Family::Poisson => {
                let mut th = vec![0.0; d];
                for r in left.rows() {
                    for c in 0..d {
                        th[c] += r[c] / n;
                    }
                }
                for r in right.rows() {
                    for c in 0..d {
                        th[c] += (r[c] - shift[c]) / n;
                    }
                }
                if self.family == Family::Poisson {
                    for c in 0..d {
                        let lower = (-shift[c]).max(0.0);
                        let margin = 1e-3 * (1.0 + lower.abs() + th[c].abs());
                        th[c] = th[c].max(lower + margin);
                    }
                }
                DVector::from_vec(th)
            }
            Family::GaussianMeanVar => {
                let m =
                    (left.rows().map(|r| r[0]).sum::<f64>() + right.rows().map(|r| r[0] - shift[0]).sum::<f64>()) / n;
                let ss = left.rows().map(|r| (r[0] - m).powi(2)).sum::<f64>()
                    + right.rows().map(|r| (r[0] - shift[0] - m).powi(2)).sum::<f64>();
                let lower = (-shift[1]).max(0.0);
                let v = (ss / n).max(lower + 1e-3 * (1.0 + lower + ss / n)).max(self.variance_floor);
                DVector::from_vec(vec![m, v])
            }
            Family::Glm(_) => DVector::zeros(d),
        }
    }

    /// Value, gradient and Hessian of a sum of weighted window likelihoods,
    /// each evaluated at `theta + shift`. `None` outside the domain.
    fn evaluate(&self, parts: &[Part<'_, '_>], theta: &DVector<f64>) -> Option<Evaluation> {
        let d = theta.len();
        let mut value = 0.0;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for (window, weights, shift) in parts {
            let th = match shift {
                Some(s) => theta + *s,
                None => theta.clone(),
            };
            for i in 0..window.len() {
                let w = weight(*weights, i);
                if w == 0.0 {
                    continue;
                }
                self.accumulate_term(window.row(i), window.covariate(i), &th, w, &mut value, &mut grad, &mut hess)?;
            }
        }
        value.is_finite().then_some(Evaluation { value, grad, hess })
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate_term(
        &self,
        y: &[f64],
        psi: Option<&[f64]>,
        th: &DVector<f64>,
        w: f64,
        value: &mut f64,
        grad: &mut DVector<f64>,
        hess: &mut DMatrix<f64>,
    ) -> Option<()> {
        match self.family {
            Family::GaussianMean => {
                for c in 0..th.len() {
                    let r = y[c] - th[c];
                    *value -= 0.5 * w * r * r;
                    grad[c] += w * r;
                    hess[(c, c)] -= w;
                }
            }
            Family::GaussianMeanVar => {
                let (m, v) = (th[0], th[1]);
                if v <= 0.0 {
                    return None;
                }
                let r = y[0] - m;
                *value += w * (-0.5 * v.ln() - r * r / (2.0 * v));
                grad[0] += w * r / v;
                grad[1] += w * (-0.5 / v + r * r / (2.0 * v * v));
                hess[(0, 0)] -= w / v;
                hess[(0, 1)] -= w * r / (v * v);
                hess[(1, 0)] -= w * r / (v * v);
                hess[(1, 1)] += w * (0.5 / (v * v) - r * r / (v * v * v));
            }
            Family::Poisson => {
                for c in 0..th.len() {
                    let rate = th[c];
                    if rate <= 0.0 {
                        return None;
                    }
                    *value += w * poisson_term(y[c], rate);
                    grad[c] += w * (y[c] / rate - 1.0);
                    hess[(c, c)] -= w * y[c] / (rate * rate);
                }
            }
            Family::Glm(link) => {
                let psi = psi?;
                let eta = psi.iter().zip(th.iter()).map(|(a, b)| a * b).sum::<f64>();
                *value += w * (y[0] * eta - link.g(eta));
                let r = y[0] - link.g1(eta);
                let curv = link.g2(eta);
                for a in 0..psi.len() {
                    grad[a] += w * r * psi[a];
                    for b in 0..psi.len() {
                        hess[(a, b)] -= w * curv * psi[a] * psi[b];
                    }
                }
            }
        }
        Some(())
    }

    /// Fisher matrix `D^2(theta) = sum_i g''(psi_i'theta) psi_i psi_i'` of a GLM window.
    pub fn glm_fisher(&self, window: &Window<'_>, theta: &[f64]) -> Result<DMatrix<f64>> {
        let Family::Glm(link) = self.family else {
            return Err(Error::invalid("fisher matrix is defined for the glm family"));
        };
        let q = theta.len();
        let mut out = DMatrix::zeros(q, q);
        for i in 0..window.len() {
            let psi = window.covariate(i).ok_or_else(|| Error::invalid("glm family requires covariates"))?;
            if psi.len() != q {
                return Err(Error::DimensionMismatch("factor/parameter dimension".into()));
            }
            let curv = link.g2(dot(psi, theta));
            for a in 0..q {
                for b in 0..q {
                    out[(a, b)] += curv * psi[a] * psi[b];
                }
            }
        }
        Ok(out)
    }

    /// Pair `(2 (L(theta_hat) - L(theta*)), |xi|^2)` with `xi = D^{-1} grad L(theta*)`
    /// and `D^2 = D^2(theta*)`, for comparing a GLM fit with its quadratic expansion.
    pub fn glm_wilks(&self, window: &Window<'_>, theta_star: &[f64]) -> Result<(f64, f64)> {
        let fisher = self.glm_fisher(window, theta_star)?;
        let score = DVector::from_vec(self.score(window, None, theta_star)?);
        let chol = fisher.cholesky().ok_or_else(|| Error::Domain("fisher matrix is not positive definite".into()))?;
        let xi_sq = score.dot(&chol.solve(&score));
        let fit = self.mle(window, None)?;
        let at_star = self.weighted_loglik(window, None, theta_star)?;
        Ok((2.0 * (fit.loglik - at_star), xi_sq))
    }
}

#[inline]
fn poisson_term(y: f64, rate: f64) -> f64 {
    let lin = if y == 0.0 { 0.0 } else { y * rate.ln() };
    lin - rate - ln_gamma(y + 1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(sum w_i, sum w_i y_i)` over a window.
/// Window, weights and the offset added to `theta` for that window.
type Part<'w, 'a> = (&'w Window<'a>, Option<&'w [f64]>, Option<&'w DVector<f64>>);

fn weighted_sums(window: &Window<'_>, weights: Option<&[f64]>) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut sums = vec![0.0; window.dim()];
    for (i, row) in window.rows().enumerate() {
        let w = weight(weights, i);
        total += w;
        for (s, y) in sums.iter_mut().zip(row) {
            *s += w * y;
        }
    }
    (total, sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TimeSeries;

    fn series(rows: &[&[f64]]) -> TimeSeries {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        TimeSeries::new(&rows).unwrap()
    }

    #[test]
    fn gaussian_mean_terms() {
        let m = ModelSpec::gaussian_mean();
        assert_eq!(m.loglik_term(&[0.0; 5], None, &[0.0; 5]).unwrap(), 0.0);
        assert_eq!(m.loglik_term(&[1.0, 0.0], None, &[0.0, 0.0]).unwrap(), -0.5);
    }

    #[test]
    fn poisson_term_by_hand() {
        let m = ModelSpec::new(Family::Poisson);
        let v = m.loglik_term(&[2.0], None, &[1.0]).unwrap();
        assert!((v - (-1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(matches!(m.loglik_term(&[2.0], None, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn meanvar_domain_error() {
        let m = ModelSpec::new(Family::GaussianMeanVar);
        assert!(matches!(m.loglik_term(&[0.0], None, &[0.0, -1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn glm_term_needs_factor() {
        let m = ModelSpec::new(Family::Glm(GlmLink::Log));
        assert!(m.loglik_term(&[1.0], None, &[0.0]).is_err());
        let v = m.loglik_term(&[2.0], Some(&[1.0]), &[0.5]).unwrap();
        assert!((v - (1.0 - 0.5f64.exp())).abs() < 1e-15);
    }

    #[test]
    fn mle_closed_forms() {
        let m = ModelSpec::gaussian_mean();
        let s = series(&[&[0.0], &[0.0], &[0.0]]);
        assert_eq!(m.mle(&s.full_window(), None).unwrap().theta, vec![0.0]);
        let s = series(&[&[0.0], &[1.0]]);
        let r = m.mle(&s.full_window(), Some(&[1.0, 3.0])).unwrap();
        assert!((r.theta[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn meanvar_degenerate_variance_is_floored() {
        let m = ModelSpec::new(Family::GaussianMeanVar);
        let s = series(&[&[1.0], &[1.0], &[1.0]]);
        let r = m.mle(&s.full_window(), None).unwrap();
        assert_eq!(r.theta, vec![1.0, 1e-12]);
        assert!(r.converged);
    }

    #[test]
    fn zero_weights_are_degenerate() {
        let m = ModelSpec::gaussian_mean();
        let s = series(&[&[0.0], &[1.0]]);
        assert!(matches!(m.mle(&s.full_window(), Some(&[0.0, 0.0])), Err(Error::DegenerateWindow(_))));
        assert!(matches!(
            m.mle_shifted_pair(&s.window(0, 1), &s.window(1, 2), &[0.0], Some(&[0.0]), Some(&[0.0])),
            Err(Error::DegenerateWindow(_))
        ));
    }

    #[test]
    fn negative_total_weight_is_not_converged() {
        let m = ModelSpec::new(Family::Poisson);
        let s = series(&[&[1.0], &[2.0]]);
        let r = m.mle(&s.full_window(), Some(&[-1.0, -0.5])).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn shifted_pair_reductions() {
        let m = ModelSpec::gaussian_mean();
        let s = series(&[&[0.0], &[0.0], &[1.0], &[1.0]]);
        let (l, r) = (s.window(0, 2), s.window(2, 4));
        let out = m.mle_shifted_pair(&l, &r, &[1.0], None, None).unwrap();
        assert_eq!(out.theta, vec![0.0]);
        assert_eq!(out.value, 0.0);
        let zero = m.mle_shifted_pair(&l, &r, &[0.0], None, None).unwrap();
        let full = m.mle(&s.full_window(), None).unwrap();
        assert!((zero.theta[0] - full.theta[0]).abs() < 1e-15);
        assert!((zero.value - full.loglik).abs() < 1e-12);
    }

    #[test]
    fn shifted_pair_newton_families_match_concatenation_at_zero_shift() {
        for (family, rows) in [
            (Family::Poisson, vec![vec![1.0], vec![3.0], vec![2.0], vec![4.0], vec![0.0]]),
            (Family::GaussianMeanVar, vec![vec![0.3], vec![-1.2], vec![2.0], vec![0.7], vec![0.1]]),
        ] {
            let m = ModelSpec::new(family);
            let s = TimeSeries::new(&rows).unwrap();
            let d = m.param_dim(1, None).unwrap();
            let out = m.mle_shifted_pair(&s.window(0, 2), &s.window(2, 5), &vec![0.0; d], None, None).unwrap();
            let full = m.mle(&s.full_window(), None).unwrap();
            assert!(out.converged);
            for (a, b) in out.theta.iter().zip(&full.theta) {
                assert!((a - b).abs() < 1e-8, "{family:?}: {a} vs {b}");
            }
            assert!((out.value - full.loglik).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_dimension_checked() {
        let m = ModelSpec::gaussian_mean();
        let s = series(&[&[0.0], &[1.0]]);
        assert!(m.mle_shifted_pair(&s.window(0, 1), &s.window(1, 2), &[0.0, 1.0], None, None).is_err());
    }

    #[test]
    fn fisher_examples() {
        let m = ModelSpec::new(Family::Glm(GlmLink::Identity));
        let s = TimeSeries::new(&[vec![0.5], vec![1.0]])
            .unwrap()
            .with_covariates(&[vec![1.0, 0.0], vec![1.0, 0.0]])
            .unwrap();
        let d2 = m.glm_fisher(&s.window(0, 1), &[0.3, -0.2]).unwrap();
        assert_eq!(d2, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(m.glm_fisher(&s.window(0, 0), &[0.3, -0.2]).unwrap(), DMatrix::zeros(2, 2));

        let m = ModelSpec::new(Family::Glm(GlmLink::Log));
        let s = TimeSeries::new(&[vec![0.0], vec![1.0], vec![2.0]])
            .unwrap()
            .with_covariates(&[vec![1.0], vec![1.0], vec![1.0]])
            .unwrap();
        let d2 = m.glm_fisher(&s.full_window(), &[0.0]).unwrap();
        assert_eq!(d2[(0, 0)], 3.0);
    }

    #[test]
    fn glm_newton_fit_and_links() {
        // Poisson regression on an intercept reproduces log of the mean.
        let m = ModelSpec::new(Family::Glm(GlmLink::Log));
        let ys = [1.0, 4.0, 2.0, 0.0, 3.0];
        let s = TimeSeries::new(&ys.iter().map(|&y| vec![y]).collect::<Vec<_>>())
            .unwrap()
            .with_covariates(&vec![vec![1.0]; 5])
            .unwrap();
        let r = m.mle(&s.full_window(), None).unwrap();
        assert!(r.converged);
        assert!((r.theta[0] - 2f64.ln()).abs() < 1e-9);

        for link in [GlmLink::Identity, GlmLink::Log, GlmLink::Logit] {
            for &u in &[-2.0, -0.3, 0.0, 0.8, 3.0] {
                let h = 1e-5;
                let d1 = (link.g(u + h) - link.g(u - h)) / (2.0 * h);
                let d2 = (link.g1(u + h) - link.g1(u - h)) / (2.0 * h);
                let d3 = (link.g2(u + h) - link.g2(u - h)) / (2.0 * h);
                assert!((d1 - link.g1(u)).abs() < 1e-7);
                assert!((d2 - link.g2(u)).abs() < 1e-7);
                assert!((d3 - link.g3(u)).abs() < 1e-7);
                assert!(link.g2(u) > 0.0);
            }
        }
    }
}
