// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form calculators: norm quantiles of sub-Gaussian vectors and
//! quadratic forms, the minimal detectable shift and the TP variance bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!("exponent x must be finite and nonnegative, got {x}")));
    }
    Ok(())
}

fn check_ph(p: usize, h: usize) -> Result<()> {
    if p == 0 || h == 0 {
        return Err(Error::invalid("p and h must be at least 1"));
    }
    Ok(())
}

/// `z(p, x) = sqrt(p + 2 sqrt(p x) + 2x)`.
pub fn subgaussian_norm_quantile(p: usize, x: f64) -> Result<f64> {
    check_ph(p, 1)?;
    check_x(x)?;
    let p = p as f64;
    Ok((p + 2.0 * p.sqrt() * x.sqrt() + 2.0 * x).sqrt())
}

/// `z(p, x)` with the linear tail `g + 2 (x - x_c) / g` beyond `x_c = g^2 / 4`.
pub fn subgaussian_norm_quantile_with_tail(p: usize, x: f64, g: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::invalid("g must be positive"));
    }
    let xc = g * g / 4.0;
    if x <= xc {
        subgaussian_norm_quantile(p, x)
    } else {
        Ok(g + 2.0 * (x - xc) / g)
    }
}

/// Spectrum summary of a positive semidefinite matrix `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub trace: f64,
    /// `tr(B^2)`.
    pub trace_sq: f64,
    pub lambda_max: f64,
}

impl Spectrum {
    pub fn new(trace: f64, trace_sq: f64, lambda_max: f64) -> Result<Self> {
        let s = Self { trace, trace_sq, lambda_max };
        s.validate()?;
        Ok(s)
    }

    pub fn identity(p: usize) -> Self {
        let p = p as f64;
        Self { trace: p, trace_sq: p, lambda_max: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let Self { trace, trace_sq, lambda_max } = *self;
        if !(lambda_max > 0.0 && trace >= lambda_max && trace_sq >= 0.0) || !trace.is_finite() || !trace_sq.is_finite()
        {
            return Err(Error::invalid(format!(
                "invalid spectrum: need trace >= lambda > 0, got trace {trace}, lambda {lambda_max}"
            )));
        }
        if trace_sq > lambda_max * trace * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "inconsistent spectrum: tr(B^2) = {trace_sq} exceeds lambda * tr(B) = {}",
                lambda_max * trace
            )));
        }
        Ok(())
    }
}

/// `z(B, x) = sqrt(tr B + 2 v sqrt(x) + 2 lambda x)` with `v^2 = tr(B^2)`.
pub fn quad_form_quantile(spec: &Spectrum, x: f64) -> Result<f64> {
    spec.validate()?;
    check_x(x)?;
    let v = spec.trace_sq.sqrt();
    Ok((spec.trace + 2.0 * v * x.sqrt() + 2.0 * spec.lambda_max * x).sqrt())
}

/// Upper bound `sqrt(tr B) + sqrt(2 lambda x)` on [`quad_form_quantile`].
pub fn quad_form_quantile_simple(spec: &Spectrum, x: f64) -> Result<f64> {
    spec.validate()?;
    check_x(x)?;
    Ok(spec.trace.sqrt() + (2.0 * spec.lambda_max * x).sqrt())
}

/// [`quad_form_quantile`] with its linear tail beyond `x_c = g^2 / 4`.
pub fn quad_form_quantile_with_tail(spec: &Spectrum, x: f64, g: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::invalid("g must be positive"));
    }
    let xc = g * g / 4.0;
    if x <= xc {
        return quad_form_quantile(spec, x);
    }
    let (p, v, lambda) = (spec.trace, spec.trace_sq.sqrt(), spec.lambda_max);
    let zc = (p + v * g + lambda * g * g / 2.0).sqrt();
    let gc = (p / lambda + g * v / lambda + g * g / 2.0).sqrt() / (1.0 + v / (lambda * g));
    Ok(zc + 2.0 * lambda * (x - xc) / gc)
}

/// Sufficient jump size `5 p^{1/4} (x + log 2h)^{1/4} e^{x/2} + 21 spread`.
pub fn min_detectable_shift(p: usize, h: usize, x: f64, spread: f64) -> Result<f64> {
    check_ph(p, h)?;
    check_x(x)?;
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::invalid("spread must be finite and nonnegative"));
    }
    let l = x + (2.0 * h as f64).ln();
    Ok(5.0 * (p as f64).powf(0.25) * l.powf(0.25) * (x / 2.0).exp() + 21.0 * spread)
}

/// Bound `(2/3) h^2 sqrt(p) (x + log 2h)^{1/2}` on the variance of the raw
/// triangle-pattern statistic.
pub fn tp_variance_bound(p: usize, h: usize, x: f64) -> Result<f64> {
    check_ph(p, h)?;
    check_x(x)?;
    let hf = h as f64;
    Ok(2.0 / 3.0 * hf * hf * (p as f64).sqrt() * (x + (2.0 * hf).ln()).sqrt())
}

/// Threshold bound `sqrt(2/3) h p^{1/4} (x + log 2h)^{1/4} e^{x/2}`.
pub fn tp_threshold_bound(p: usize, h: usize, x: f64) -> Result<f64> {
    check_ph(p, h)?;
    check_x(x)?;
    let hf = h as f64;
    Ok((2.0f64 / 3.0).sqrt() * hf * (p as f64).powf(0.25) * (x + (2.0 * hf).ln()).powf(0.25) * (x / 2.0).exp())
}

/// All calculators at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub p: usize,
    pub h: usize,
    pub x: f64,
    pub spread: f64,
    pub z_norm: f64,
    pub min_detectable_shift: f64,
    pub tp_variance_bound: f64,
    pub tp_threshold_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_quad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_quad_simple: Option<f64>,
}

pub fn theory_report(p: usize, h: usize, x: f64, spread: f64, spectrum: Option<Spectrum>) -> Result<TheoryReport> {
    let (z_quad, z_quad_simple) = match &spectrum {
        Some(s) => (Some(quad_form_quantile(s, x)?), Some(quad_form_quantile_simple(s, x)?)),
        None => (None, None),
    };
    Ok(TheoryReport {
        p,
        h,
        x,
        spread,
        z_norm: subgaussian_norm_quantile(p, x)?,
        min_detectable_shift: min_detectable_shift(p, h, x, spread)?,
        tp_variance_bound: tp_variance_bound(p, h, x)?,
        tp_threshold_bound: tp_threshold_bound(p, h, x)?,
        spectrum,
        z_quad,
        z_quad_simple,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn norm_quantile_examples() {
        assert_eq!(subgaussian_norm_quantile(4, 0.0).unwrap(), 2.0);
        assert!(close(subgaussian_norm_quantile(1, 2.0).unwrap(), 2.7979, 1e-4));
        assert!(subgaussian_norm_quantile(0, 1.0).is_err());
        assert!(subgaussian_norm_quantile(1, -1.0).is_err());
    }

    #[test]
    fn tail_branch_switches_at_critical_exponent() {
        let g = 4.0;
        let below = subgaussian_norm_quantile_with_tail(1, 4.0, g).unwrap();
        assert_eq!(below, subgaussian_norm_quantile(1, 4.0).unwrap());
        let above = subgaussian_norm_quantile_with_tail(1, 4.0 + 1e-9, g).unwrap();
        assert!(close(above, g, 1e-8));
        let s = Spectrum::identity(3);
        assert!(quad_form_quantile_with_tail(&s, 5.0, 4.0).unwrap() > quad_form_quantile(&s, 3.9).unwrap());
    }

    #[test]
    fn quad_form_examples() {
        let s = Spectrum::new(10.0, 4.0, 1.0).unwrap();
        assert!(close(quad_form_quantile(&s, 1.0).unwrap(), 4.0, 1e-15));
        for p in 1..12 {
            for x in [0.0, 0.5, 1.0, 2.0, 7.5] {
                assert_eq!(
                    quad_form_quantile(&Spectrum::identity(p), x).unwrap(),
                    subgaussian_norm_quantile(p, x).unwrap()
                );
                let simple = quad_form_quantile_simple(&Spectrum::identity(p), x).unwrap();
                assert!(simple + 1e-12 >= quad_form_quantile(&Spectrum::identity(p), x).unwrap());
            }
        }
        assert!(Spectrum::new(10.0, 11.0, 1.0).is_err());
        assert!(Spectrum::new(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn min_shift_examples() {
        assert!(close(min_detectable_shift(1, 1, 0.0, 0.0).unwrap(), 4.563, 1e-3));
        assert!(close(min_detectable_shift(1, 5, 1.0, 0.0).unwrap(), 11.11, 5e-3));
        let a = min_detectable_shift(3, 7, 0.4, 0.25).unwrap();
        let b = min_detectable_shift(3, 7, 0.4, 1.25).unwrap();
        assert!(close(b - a, 21.0, 1e-12));
    }

    #[test]
    fn tp_variance_examples() {
        assert!(close(tp_variance_bound(1, 1, 0.0).unwrap(), 2.0 / 3.0 * 2f64.ln().sqrt(), 1e-15));
        assert!(close(tp_variance_bound(1, 1, 0.0).unwrap(), 0.5550, 1e-4));
        let (h, x) = (6, 0.7);
        let ratio = tp_variance_bound(2, 2 * h, x).unwrap() / tp_variance_bound(2, h, x).unwrap();
        let expected = 4.0 * ((x + (4.0 * h as f64).ln()) / (x + (2.0 * h as f64).ln())).sqrt();
        assert!(close(ratio, expected, 1e-12));
    }

    #[test]
    fn report_serializes() {
        let r = theory_report(4, 5, 1.0, 0.0, Some(Spectrum::identity(4))).unwrap();
        assert_eq!(r.z_quad, Some(r.z_norm));
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<TheoryReport>(&json).unwrap(), r);
    }
}
