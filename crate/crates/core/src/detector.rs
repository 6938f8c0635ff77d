// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multi-scale detection: batch over a whole series and incremental over a stream.

use serde::{Deserialize, Serialize};

use crate::calibration::{joint_calibrate, CalibrationConfig, JointCalibration, JointMode};
use crate::data::TimeSeries;
use crate::error::{Error, Result};
use crate::lrt::{lrt_series, position_root, LrtSeries, PrefixSums};
use crate::models::{Family, ModelSpec};
use crate::patterns::{tp_series, tp_statistic, Pattern, PatternSpec};

/// Settings of a batch detection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub model: ModelSpec,
    pub scales: Vec<usize>,
    pub pattern: PatternSpec,
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub joint_mode: JointMode,
    /// Defaults to the largest scale.
    #[serde(default)]
    pub min_separation: Option<usize>,
}

impl DetectConfig {
    pub fn new(model: ModelSpec, scales: Vec<usize>, pattern: PatternSpec, calibration: CalibrationConfig) -> Self {
        Self { model, scales, pattern, calibration, joint_mode: JointMode::PerScale, min_separation: None }
    }

    pub fn effective_min_separation(&self) -> usize {
        self.min_separation.unwrap_or_else(|| self.scales.iter().copied().max().unwrap_or(1)).max(1)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.scales.is_empty() || self.scales.contains(&0) {
            return Err(Error::invalid("scales must be a nonempty list of positive integers"));
        }
        self.calibration.validate()?;
        let hmax = *self.scales.iter().max().unwrap();
        if n < 4 * hmax {
            return Err(Error::SeriesTooShort { n, required: 4 * hmax });
        }
        Ok(())
    }
}

/// An exceedance `TP_h(tau) > z_h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub tau: usize,
    pub h: usize,
    pub tp: f64,
    pub critical_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpSummary {
    pub first_tau: usize,
    pub len: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub h: usize,
    pub critical_value: f64,
    pub tp_summary: TpSummary,
    pub flagged: Vec<usize>,
    pub argmax_tau: usize,
    pub max_value: f64,
    #[serde(skip)]
    pub tp_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub scales: Vec<ScaleReport>,
    pub change_points: Vec<usize>,
    pub flags: Vec<Flag>,
    pub calibration_reruns: usize,
    pub config: DetectConfig,
}

impl DetectionReport {
    /// Flags as CSV rows `tau,h,tp,z_h`.
    pub fn flags_csv(&self) -> String {
        let mut out = String::from("tau,h,tp,z_h\n");
        for f in &self.flags {
            out.push_str(&format!("{},{},{},{}\n", f.tau, f.h, f.tp, f.critical_value));
        }
        out
    }
}

/// Flags and per-scale summaries under fixed thresholds `(h, z_h)`.
pub fn scan_with_thresholds(
    model: &ModelSpec,
    series: &TimeSeries,
    thresholds: &[(usize, f64)],
    pattern: &PatternSpec,
) -> Result<(Vec<ScaleReport>, Vec<Flag>)> {
    let mut reports = Vec::with_capacity(thresholds.len());
    let mut flags = Vec::new();
    for &(h, z) in thresholds {
        let lrt = lrt_series(model, series, h)?;
        let pat = pattern.build(h)?;
        let (first, values) = tp_series(&lrt, &pat)?;
        let mut argmax = (first, values[0]);
        let mut flagged = Vec::new();
        for (k, &v) in values.iter().enumerate() {
            if v > argmax.1 {
                argmax = (first + k, v);
            }
            if v > z {
                flagged.push(first + k);
                flags.push(Flag { tau: first + k, h, tp: v, critical_value: z });
            }
        }
        let summary = TpSummary {
            first_tau: first,
            len: values.len(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: argmax.1,
            mean: values.iter().sum::<f64>() / values.len() as f64,
        };
        reports.push(ScaleReport {
            h,
            critical_value: z,
            tp_summary: summary,
            flagged,
            argmax_tau: argmax.0,
            max_value: argmax.1,
            tp_values: values,
        });
    }
    flags.sort_by(|a, b| a.tau.cmp(&b.tau).then(a.h.cmp(&b.h)));
    Ok((reports, flags))
}

/// Collapses flags closer than `min_separation` into the position of the
/// largest TP value (ties to the smallest position).
pub fn merge_flags(flags: &[Flag], min_separation: usize) -> Vec<usize> {
    let mut sorted: Vec<&Flag> = flags.iter().collect();
    sorted.sort_by_key(|f| f.tau);
    let mut merged = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut best = sorted[i];
        let mut last = sorted[i].tau;
        let mut j = i + 1;
        while j < sorted.len() && sorted[j].tau - last < min_separation.max(1) {
            if sorted[j].tp > best.tp {
                best = sorted[j];
            }
            last = sorted[j].tau;
            j += 1;
        }
        merged.push(best.tau);
        i = j;
    }
    merged
}

/// Calibrates every scale, scans the TP series and merges exceedances.
pub fn detect(series: &TimeSeries, cfg: &DetectConfig) -> Result<DetectionReport> {
    cfg.validate(series.len())?;
    let joint: JointCalibration =
        joint_calibrate(&cfg.model, series, &cfg.scales, &cfg.pattern, &cfg.calibration, cfg.joint_mode)?;
    let (scales, flags) = scan_with_thresholds(&cfg.model, series, &joint.thresholds, &cfg.pattern)?;
    let change_points = merge_flags(&flags, cfg.effective_min_separation());
    let calibration_reruns = joint.per_scale.first().map_or(0, |c| c.failed_replicates);
    Ok(DetectionReport { scales, change_points, flags, calibration_reruns, config: cfg.clone() })
}

struct StreamScale {
    h: usize,
    threshold: f64,
    pattern: Pattern,
    lrt: LrtSeries,
}

/// Incremental detector with frozen thresholds.
///
/// Each new observation completes exactly one LRT position per scale
/// (`t = n - h`) and one TP position (`tau = n - 2h`); nothing earlier changes,
/// so the flags equal those of a batch scan with the same thresholds.
pub struct StreamDetector {
    model: ModelSpec,
    data: TimeSeries,
    prefix: Option<PrefixSums>,
    scales: Vec<StreamScale>,
    flags: Vec<Flag>,
}

impl StreamDetector {
    /// Detector with thresholds `(h, z_h)`. An empty threshold list leaves the
    /// detector uncalibrated until [`StreamDetector::set_thresholds`].
    pub fn new(model: ModelSpec, dim: usize, pattern: &PatternSpec, thresholds: &[(usize, f64)]) -> Result<Self> {
        model.param_dim(dim, None)?;
        let fast = model.family == Family::GaussianMean && !model.force_newton;
        let mut det = Self {
            model,
            data: TimeSeries::empty(dim),
            prefix: fast.then(|| PrefixSums::new(dim)),
            scales: Vec::new(),
            flags: Vec::new(),
        };
        det.set_thresholds(pattern, thresholds)?;
        Ok(det)
    }

    /// Freezes thresholds calibrated on a homogeneous reference window.
    pub fn calibrated(
        model: ModelSpec,
        reference: &TimeSeries,
        scales: &[usize],
        pattern: &PatternSpec,
        cfg: &CalibrationConfig,
        mode: JointMode,
    ) -> Result<Self> {
        let joint = joint_calibrate(&model, reference, scales, pattern, cfg, mode)?;
        Self::new(model, reference.dim(), pattern, &joint.thresholds)
    }

    /// Replaces the thresholds and recomputes the state from the stored data.
    pub fn set_thresholds(&mut self, pattern: &PatternSpec, thresholds: &[(usize, f64)]) -> Result<()> {
        let mut scales = Vec::with_capacity(thresholds.len());
        for &(h, z) in thresholds {
            if h == 0 {
                return Err(Error::invalid("window half-width h must be at least 1"));
            }
            scales.push(StreamScale {
                h,
                threshold: z,
                pattern: pattern.build(h)?,
                lrt: LrtSeries { h, values: Vec::new() },
            });
        }
        let dim = self.data.dim();
        let history = std::mem::replace(&mut self.data, TimeSeries::empty(dim));
        self.prefix = self.prefix.as_ref().map(|_| PrefixSums::new(dim));
        self.scales = scales;
        self.flags.clear();
        for row in history.rows() {
            self.push(row)?;
        }
        Ok(())
    }

    pub fn is_calibrated(&self) -> bool {
        !self.scales.is_empty()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Frozen `(h, z_h)` pairs.
    pub fn thresholds(&self) -> Vec<(usize, f64)> {
        self.scales.iter().map(|s| (s.h, s.threshold)).collect()
    }

    pub fn flags(&self) -> &[Flag] {
        &self.flags
    }

    pub fn lrt(&self, h: usize) -> Option<&LrtSeries> {
        self.scales.iter().find(|s| s.h == h).map(|s| &s.lrt)
    }

    /// Appends one observation and returns the flags it completes.
    pub fn push(&mut self, row: &[f64]) -> Result<Vec<Flag>> {
        if !self.is_calibrated() {
            return Err(Error::Uncalibrated);
        }
        self.data.push(row)?;
        if let Some(p) = &mut self.prefix {
            p.push(row);
        }
        let n = self.data.len();
        let mut fresh = Vec::new();
        for scale in &mut self.scales {
            let h = scale.h;
            if n < 2 * h {
                continue;
            }
            let t = n - h;
            let value = match &self.prefix {
                Some(p) => (2.0 * p.lrt(t, h)).sqrt(),
                None => position_root(&self.model, &self.data, t, h)?,
            };
            scale.lrt.values.push(value);
            if n < 4 * h {
                continue;
            }
            let tau = n - 2 * h;
            let tp = tp_statistic(&scale.lrt, &scale.pattern, tau)?;
            if tp > scale.threshold {
                fresh.push(Flag { tau, h, tp, critical_value: scale.threshold });
            }
        }
        self.flags.extend_from_slice(&fresh);
        Ok(fresh)
    }
}
