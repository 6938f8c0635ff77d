// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bootstrap critical values `z_h(alpha)` for `max_tau TP_h(tau)`.
//!
//! Replicate `b` draws its weights (or resample indices) from the seed
//! `derive_seed_path(master, [b, attempt])`. The seed does not depend on the
//! scale, so the max-joint mode sees one coherent resample per replicate
//! across all scales. A replicate whose weighted fits fail is rerun with the
//! next attempt index; the replicate count never shrinks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeries;
use crate::error::{Error, Result};
use crate::lrt::{empirical_bootstrap_lrt_series, BootstrapLrt, WeightedBootstrap};
use crate::models::ModelSpec;
use crate::patterns::{max_tp, Pattern, PatternSpec};
use crate::rng::derive_seed_path;

/// Attempts per replicate before calibration gives up on it.
const MAX_ATTEMPTS: u64 = 10;
/// Share of reruns (relative to `B`) tolerated before aborting.
const MAX_RERUN_SHARE: f64 = 0.2;
/// Share of positions in one replicate allowed to fail (set to 0) before the
/// replicate is drawn again.
const MAX_POSITION_FAILURE_SHARE: f64 = 0.05;
pub const MIN_REPLICATES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapMethod {
    /// `N(1, 1)` likelihood weights with the shift-corrected supremum.
    Weighted,
    /// Resampling observations with replacement.
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub alpha: f64,
    pub replicates: usize,
    pub method: BootstrapMethod,
    pub master_seed: u64,
}

impl CalibrationConfig {
    pub fn new(alpha: f64, replicates: usize, method: BootstrapMethod, master_seed: u64) -> Self {
        Self { alpha, replicates, method, master_seed }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(format!(
                "at least {MIN_REPLICATES} bootstrap replicates required, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha out of range: {alpha} is not in (0, 1)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub h: usize,
    pub alpha: f64,
    pub method: BootstrapMethod,
    /// `max_tau TP^b_h(tau)` per replicate, in replicate order.
    pub replicate_maxima: Vec<f64>,
    pub critical_value: f64,
    /// Replicate reruns caused by solver failures.
    pub failed_replicates: usize,
    pub master_seed: u64,
}

impl CalibrationResult {
    pub fn from_maxima(
        h: usize,
        alpha: f64,
        method: BootstrapMethod,
        replicate_maxima: Vec<f64>,
        failed_replicates: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let critical_value = upper_quantile(&replicate_maxima, alpha)?;
        Ok(Self { h, alpha, method, replicate_maxima, critical_value, failed_replicates, master_seed })
    }

    /// Critical value at another level from the same replicates.
    pub fn critical_value_at(&self, alpha: f64) -> Result<f64> {
        upper_quantile(&self.replicate_maxima, alpha)
    }
}

/// Order statistic of rank `ceil((1 - alpha) B)` (1-indexed, ascending).
pub fn upper_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if values.is_empty() {
        return Err(Error::invalid("no replicate maxima"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // The small offset keeps products such as 0.9 * 100 from rounding up a rank.
    let rank = (((1.0 - alpha) * sorted.len() as f64) - 1e-9).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Empirical quantiles at levels `alpha + delta` and `alpha - delta`.
pub fn quantile_bracket(maxima: &[f64], alpha: f64, delta: f64) -> Result<(f64, f64)> {
    if !(delta >= 0.0 && alpha - delta > 0.0 && alpha + delta < 1.0) {
        return Err(Error::invalid(format!(
            "bracket levels {} and {} must lie in (0, 1)",
            alpha - delta,
            alpha + delta
        )));
    }
    Ok((upper_quantile(maxima, alpha + delta)?, upper_quantile(maxima, alpha - delta)?))
}

enum Resampler<'a> {
    Weighted(WeightedBootstrap<'a>),
    Empirical { model: &'a ModelSpec, series: &'a TimeSeries, h: usize },
}

impl Resampler<'_> {
    fn replicate(&self, seed: u64) -> Result<BootstrapLrt> {
        match self {
            Resampler::Weighted(w) => w.replicate(seed),
            Resampler::Empirical { model, series, h } => empirical_bootstrap_lrt_series(model, series, *h, seed),
        }
    }
}

/// Bootstrap maxima for several scales and patterns sharing each resample.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateMaxima {
    /// `maxima[b][s][k]`: replicate `b`, scale `s`, pattern `k`.
    pub maxima: Vec<Vec<Vec<f64>>>,
    pub reruns: usize,
}

impl ReplicateMaxima {
    /// Maxima of one `(scale, pattern)` pair across replicates.
    pub fn column(&self, scale: usize, pattern: usize) -> Vec<f64> {
        self.maxima.iter().map(|b| b[scale][pattern]).collect()
    }
}

fn check_length(series: &TimeSeries, h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::invalid("window half-width h must be at least 1"));
    }
    if series.len() < 4 * h {
        return Err(Error::SeriesTooShort { n: series.len(), required: 4 * h });
    }
    Ok(())
}

/// Runs `cfg.replicates` bootstrap replicates; each scale `scales[s].0` is
/// scored with every pattern in `scales[s].1`.
pub fn bootstrap_maxima(
    model: &ModelSpec,
    series: &TimeSeries,
    scales: &[(usize, Vec<Pattern>)],
    cfg: &CalibrationConfig,
) -> Result<ReplicateMaxima> {
    cfg.validate()?;
    let mut resamplers = Vec::with_capacity(scales.len());
    for (h, _) in scales {
        check_length(series, *h)?;
        resamplers.push(match cfg.method {
            BootstrapMethod::Weighted => Resampler::Weighted(WeightedBootstrap::new(model, series, *h)?),
            BootstrapMethod::Empirical => Resampler::Empirical { model, series, h: *h },
        });
    }
    let outcomes: Vec<(Vec<Vec<f64>>, usize)> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|b| {
            'attempts: for attempt in 0..MAX_ATTEMPTS {
                let seed = derive_seed_path(cfg.master_seed, &[b, attempt]);
                let mut row = Vec::with_capacity(scales.len());
                for (r, (_, patterns)) in resamplers.iter().zip(scales) {
                    let rep = r.replicate(seed)?;
                    if rep.failures as f64 > MAX_POSITION_FAILURE_SHARE * rep.series.len() as f64 {
                        continue 'attempts;
                    }
                    let maxima =
                        patterns.iter().map(|p| max_tp(&rep.series, p).map(|(_, v)| v)).collect::<Result<Vec<_>>>()?;
                    row.push(maxima);
                }
                return Ok((row, attempt as usize));
            }
            Err(Error::TooManyFailures { reruns: MAX_ATTEMPTS as usize, replicates: cfg.replicates })
        })
        .collect::<Result<Vec<_>>>()?;
    let reruns: usize = outcomes.iter().map(|(_, a)| a).sum();
    if reruns as f64 > MAX_RERUN_SHARE * cfg.replicates as f64 {
        return Err(Error::TooManyFailures { reruns, replicates: cfg.replicates });
    }
    Ok(ReplicateMaxima { maxima: outcomes.into_iter().map(|(m, _)| m).collect(), reruns })
}

/// Critical value for one scale and pattern.
pub fn calibrate(
    model: &ModelSpec,
    series: &TimeSeries,
    h: usize,
    pattern: &Pattern,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    let reps = bootstrap_maxima(model, series, &[(h, vec![pattern.clone()])], cfg)?;
    CalibrationResult::from_maxima(h, cfg.alpha, cfg.method, reps.column(0, 0), reps.reruns, cfg.master_seed)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointMode {
    /// Each scale at level `alpha`.
    #[default]
    PerScale,
    /// One threshold from the per-replicate maximum over scales.
    MaxJoint,
    /// Each scale at level `alpha / |H|`.
    Bonferroni,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointCalibration {
    pub mode: JointMode,
    pub alpha: f64,
    pub per_scale: Vec<CalibrationResult>,
    /// `(h, threshold applied at h)`.
    pub thresholds: Vec<(usize, f64)>,
    /// Max over scales per replicate (max-joint mode only).
    pub family_maxima: Option<Vec<f64>>,
}

impl JointCalibration {
    pub fn threshold(&self, h: usize) -> Option<f64> {
        self.thresholds.iter().find(|(s, _)| *s == h).map(|(_, z)| *z)
    }
}

/// Calibrates several scales from shared replicates.
pub fn joint_calibrate(
    model: &ModelSpec,
    series: &TimeSeries,
    scales: &[usize],
    pattern: &PatternSpec,
    cfg: &CalibrationConfig,
    mode: JointMode,
) -> Result<JointCalibration> {
    if scales.is_empty() {
        return Err(Error::invalid("at least one scale required"));
    }
    let jobs = scales.iter().map(|&h| Ok((h, vec![pattern.build(h)?]))).collect::<Result<Vec<_>>>()?;
    let reps = bootstrap_maxima(model, series, &jobs, cfg)?;
    let level = match mode {
        JointMode::Bonferroni => cfg.alpha / scales.len() as f64,
        _ => cfg.alpha,
    };
    let per_scale = scales
        .iter()
        .enumerate()
        .map(|(s, &h)| {
            CalibrationResult::from_maxima(h, level, cfg.method, reps.column(s, 0), reps.reruns, cfg.master_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let (thresholds, family_maxima) = match mode {
        JointMode::MaxJoint => {
            let fam: Vec<f64> =
                reps.maxima.iter().map(|b| b.iter().map(|s| s[0]).fold(f64::NEG_INFINITY, f64::max)).collect();
            let z = upper_quantile(&fam, cfg.alpha)?;
            (scales.iter().map(|&h| (h, z)).collect(), Some(fam))
        }
        _ => (per_scale.iter().map(|c| (c.h, c.critical_value)).collect(), None),
    };
    Ok(JointCalibration { mode, alpha: cfg.alpha, per_scale, thresholds, family_maxima })
}
