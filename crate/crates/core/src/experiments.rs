// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo harness: localization and power, bootstrap level convergence
//! and NMI sweeps. Every run draws its data and bootstrap seeds from a fixed
//! path below the master seed, so tables do not depend on scheduling.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{bootstrap_maxima, upper_quantile, BootstrapMethod, CalibrationConfig, JointMode};
use crate::data::{generate_piecewise, SegmentFamily, SegmentSpec, TimeSeries};
use crate::detector::{detect, DetectConfig};
use crate::error::{Error, Result};
use crate::lrt::lrt_series;
use crate::metrics::{convergence_slope, nmi, Partition};
use crate::models::{Family, ModelSpec};
use crate::patterns::{max_tp, tp_series, Pattern, PatternKind, PatternSpec};
use crate::rng::{derive_seed_path, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LocalizationPower,
    BootstrapConvergence,
    NmiSweep,
}

fn mean_shift_series(n: usize, p: usize, tau: usize, shift: &[f64], seed: u64) -> Result<TimeSeries> {
    let mut segments = vec![SegmentSpec::gaussian_mean(tau, vec![0.0; p])];
    if tau < n {
        segments.push(SegmentSpec::gaussian_mean(n - tau, shift.to_vec()));
    }
    Ok(generate_piecewise(&segments, seed)?.series)
}

fn csv_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationConfig {
    pub n: usize,
    pub p: usize,
    pub tau_star: usize,
    pub h: usize,
    /// Shift applied to every coordinate after `tau_star`.
    pub shifts: Vec<f64>,
    pub runs: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub method: BootstrapMethod,
    pub seed: u64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            n: 500,
            p: 5,
            tau_star: 250,
            h: 60,
            shifts: vec![0.1, 0.25, 0.5, 1.0],
            runs: 100,
            alpha: 0.1,
            replicates: 200,
            method: BootstrapMethod::Weighted,
            seed: 1,
        }
    }
}

impl LocalizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.h == 0 || self.runs == 0 || self.shifts.is_empty() {
            return Err(Error::invalid("p, h, runs and shifts must be nonempty/positive"));
        }
        if self.n < 4 * self.h {
            return Err(Error::SeriesTooShort { n: self.n, required: 4 * self.h });
        }
        if self.tau_star < 2 * self.h || self.tau_star + 2 * self.h > self.n {
            return Err(Error::invalid("tau_star must lie in the admissible range [2h, n - 2h]"));
        }
        if self.shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("shifts must be finite"));
        }
        CalibrationConfig::new(self.alpha, self.replicates, self.method, self.seed).validate()
    }
}

/// Outcome of one paired run (same data for both patterns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedRun {
    pub shift: f64,
    pub run: usize,
    pub tau_triangle: usize,
    pub tau_indicator: usize,
    pub detected_triangle: bool,
    pub detected_indicator: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub shift: f64,
    pub pattern: PatternKind,
    pub runs: usize,
    pub power: f64,
    /// Mean `|tau_hat - tau_star|` over detected runs.
    pub mean_abs_error: f64,
    /// Mean `|tau_hat - tau_star|` over all runs.
    pub mean_abs_error_all: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationResult {
    pub tau_star: usize,
    pub runs: Vec<PairedRun>,
    pub rows: Vec<LocalizationRow>,
}

impl LocalizationResult {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("shift,pattern,runs,power,mean_abs_error,mean_abs_error_all\n");
        for r in &self.rows {
            let pattern = match r.pattern {
                PatternKind::Triangle => "triangle",
                _ => "indicator",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.shift,
                pattern,
                r.runs,
                r.power,
                csv_float(r.mean_abs_error),
                r.mean_abs_error_all
            ));
        }
        out
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from("shift,run,tau_triangle,tau_indicator,detected_triangle,detected_indicator\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.shift, r.run, r.tau_triangle, r.tau_indicator, r.detected_triangle, r.detected_indicator
            ));
        }
        out
    }
}

/// `(argmax tau, detected)` where detection means some `TP > z` within `h` of `tau_star`.
fn locate(lrt: &crate::lrt::LrtSeries, pattern: &Pattern, z: f64, tau_star: usize, h: usize) -> Result<(usize, bool)> {
    let (tau_hat, _) = max_tp(lrt, pattern)?;
    let (first, values) = tp_series(lrt, pattern)?;
    let detected = values.iter().enumerate().any(|(k, &v)| v > z && (first + k).abs_diff(tau_star) <= h);
    Ok((tau_hat, detected))
}

/// Triangle versus indicator pattern on shared data and shared bootstrap replicates.
pub fn run_localization(cfg: &LocalizationConfig) -> Result<LocalizationResult> {
    cfg.validate()?;
    let model = ModelSpec::gaussian_mean();
    let triangle = PatternSpec::new(PatternKind::Triangle).build(cfg.h)?;
    let indicator = PatternSpec::new(PatternKind::Indicator).build(cfg.h)?;
    let mut runs = Vec::with_capacity(cfg.shifts.len() * cfg.runs);
    for (si, &shift) in cfg.shifts.iter().enumerate() {
        let batch = (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let series = mean_shift_series(
                    cfg.n,
                    cfg.p,
                    cfg.tau_star,
                    &vec![shift; cfg.p],
                    derive_seed_path(cfg.seed, &[0, r as u64]),
                )?;
                let cal = CalibrationConfig::new(
                    cfg.alpha,
                    cfg.replicates,
                    cfg.method,
                    derive_seed_path(cfg.seed, &[1, si as u64, r as u64]),
                );
                let reps =
                    bootstrap_maxima(&model, &series, &[(cfg.h, vec![triangle.clone(), indicator.clone()])], &cal)?;
                let z_tri = upper_quantile(&reps.column(0, 0), cfg.alpha)?;
                let z_ind = upper_quantile(&reps.column(0, 1), cfg.alpha)?;
                let lrt = lrt_series(&model, &series, cfg.h)?;
                let (tau_triangle, detected_triangle) = locate(&lrt, &triangle, z_tri, cfg.tau_star, cfg.h)?;
                let (tau_indicator, detected_indicator) = locate(&lrt, &indicator, z_ind, cfg.tau_star, cfg.h)?;
                Ok(PairedRun { shift, run: r, tau_triangle, tau_indicator, detected_triangle, detected_indicator })
            })
            .collect::<Result<Vec<_>>>()?;
        runs.extend(batch);
    }
    let mut rows = Vec::new();
    for &shift in &cfg.shifts {
        let subset: Vec<&PairedRun> = runs.iter().filter(|r| r.shift == shift).collect();
        for pattern in [PatternKind::Triangle, PatternKind::Indicator] {
            let pick = |r: &PairedRun| match pattern {
                PatternKind::Triangle => (r.tau_triangle, r.detected_triangle),
                _ => (r.tau_indicator, r.detected_indicator),
            };
            let errors: Vec<(f64, bool)> = subset
                .iter()
                .map(|r| {
                    let (tau, det) = pick(r);
                    (tau.abs_diff(cfg.tau_star) as f64, det)
                })
                .collect();
            let detected: Vec<f64> = errors.iter().filter(|e| e.1).map(|e| e.0).collect();
            rows.push(LocalizationRow {
                shift,
                pattern,
                runs: subset.len(),
                power: detected.len() as f64 / subset.len() as f64,
                mean_abs_error: if detected.is_empty() {
                    f64::NAN
                } else {
                    detected.iter().sum::<f64>() / detected.len() as f64
                },
                mean_abs_error_all: errors.iter().map(|e| e.0).sum::<f64>() / errors.len() as f64,
            });
        }
    }
    Ok(LocalizationResult { tau_star: cfg.tau_star, runs, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Bootstrap and statistic on the same homogeneous series.
    Homogeneous,
    /// Bootstrap on a series with a mean shift at `n/2`; the statistic on the
    /// same noise without the shift.
    ChangePoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub p: usize,
    pub scales: Vec<usize>,
    /// Series length as a multiple of `h`.
    pub length_factor: usize,
    pub runs: usize,
    pub replicates: usize,
    pub alpha: f64,
    /// Per-coordinate mean jump in the change-point scenario.
    pub shift: f64,
    pub scenarios: Vec<Scenario>,
    pub method: BootstrapMethod,
    pub pattern: PatternSpec,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            p: 30,
            scales: vec![10, 20, 30, 40, 50],
            length_factor: 6,
            runs: 300,
            replicates: 300,
            alpha: 0.1,
            shift: 0.3,
            scenarios: vec![Scenario::Homogeneous, Scenario::ChangePoint],
            method: BootstrapMethod::Weighted,
            pattern: PatternSpec::new(PatternKind::Triangle),
            seed: 1,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.runs == 0 || self.scales.is_empty() || self.scales.contains(&0) {
            return Err(Error::invalid("p, runs and scales must be positive"));
        }
        if self.length_factor < 4 {
            return Err(Error::invalid("length_factor must be at least 4"));
        }
        if self.scenarios.is_empty() || !self.shift.is_finite() {
            return Err(Error::invalid("at least one scenario and a finite shift required"));
        }
        CalibrationConfig::new(self.alpha, self.replicates, self.method, self.seed).validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub scenario: Scenario,
    pub h: usize,
    pub n: usize,
    pub rejections: usize,
    pub runs: usize,
    pub level: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    /// Fitted `beta` per scenario; `None` with fewer than 3 scales.
    pub betas: Vec<(Scenario, Option<f64>)>,
}

fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::Homogeneous => "homogeneous",
        Scenario::ChangePoint => "change-point",
    }
}

impl ConvergenceResult {
    pub fn csv(&self) -> String {
        let mut out = String::from("scenario,h,n,rejections,runs,level,abs_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                scenario_name(r.scenario),
                r.h,
                r.n,
                r.rejections,
                r.runs,
                r.level,
                r.abs_error
            ));
        }
        out
    }

    pub fn beta_csv(&self) -> String {
        let mut out = String::from("scenario,beta\n");
        for (s, b) in &self.betas {
            out.push_str(&format!("{},{}\n", scenario_name(*s), b.map_or(String::new(), |v| v.to_string())));
        }
        out
    }

    /// Absolute level errors of one scenario in scale order.
    pub fn errors(&self, scenario: Scenario) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| r.scenario == scenario).map(|r| (r.h, r.abs_error)).collect()
    }
}

/// Empirical level of `max TP_h > z_h` as a function of `h`.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let model = ModelSpec::gaussian_mean();
    let jump = vec![cfg.shift; cfg.p];
    let mut rows = Vec::new();
    for &scenario in &cfg.scenarios {
        for (hi, &h) in cfg.scales.iter().enumerate() {
            let n = cfg.length_factor * h;
            let pattern = cfg.pattern.build(h)?;
            let rejections = (0..cfg.runs)
                .into_par_iter()
                .map(|r| {
                    let data_seed = derive_seed_path(cfg.seed, &[2, hi as u64, r as u64]);
                    let null = mean_shift_series(n, cfg.p, n, &[], data_seed)?;
                    let boot_data = match scenario {
                        Scenario::Homogeneous => null.clone(),
                        Scenario::ChangePoint => mean_shift_series(n, cfg.p, n / 2, &jump, data_seed)?,
                    };
                    let cal = CalibrationConfig::new(
                        cfg.alpha,
                        cfg.replicates,
                        cfg.method,
                        derive_seed_path(cfg.seed, &[3, hi as u64, r as u64]),
                    );
                    let reps = bootstrap_maxima(&model, &boot_data, &[(h, vec![pattern.clone()])], &cal)?;
                    let z = upper_quantile(&reps.column(0, 0), cfg.alpha)?;
                    let (_, stat) = max_tp(&lrt_series(&model, &null, h)?, &pattern)?;
                    Ok(usize::from(stat > z))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum::<usize>();
            let level = rejections as f64 / cfg.runs as f64;
            rows.push(ConvergenceRow {
                scenario,
                h,
                n,
                rejections,
                runs: cfg.runs,
                level,
                abs_error: (level - cfg.alpha).abs(),
            });
        }
    }
    let betas = cfg
        .scenarios
        .iter()
        .map(|&s| {
            let pts: Vec<(usize, f64)> = rows.iter().filter(|r| r.scenario == s).map(|r| (r.h, r.abs_error)).collect();
            (s, convergence_slope(&pts, cfg.runs).ok())
        })
        .collect();
    Ok(ConvergenceResult { rows, betas })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmiData {
    /// Unit-variance Gaussian segments with means alternating `0, delta`.
    Normal,
    /// Poisson segments with rates alternating `base_rate, base_rate + delta`.
    Poisson,
}

/// Externally produced segmentation scored against a reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionPair {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub delta: Option<f64>,
    pub n: usize,
    pub reference: Vec<usize>,
    pub predicted: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmiConfig {
    pub n: usize,
    pub deltas: Vec<f64>,
    pub runs: usize,
    pub max_change_points: usize,
    /// Minimum distance between change points and from either end.
    pub min_gap: usize,
    pub data: NmiData,
    pub base_rate: f64,
    pub model: ModelSpec,
    pub scales: Vec<usize>,
    pub pattern: PatternSpec,
    pub alpha: f64,
    pub replicates: usize,
    pub method: BootstrapMethod,
    pub seed: u64,
    /// Score these partitions instead of simulating.
    pub partitions: Option<Vec<PartitionPair>>,
}

impl Default for NmiConfig {
    fn default() -> Self {
        Self {
            n: 340,
            deltas: vec![0.5, 1.0, 1.5, 2.0, 3.0],
            runs: 10,
            max_change_points: 2,
            min_gap: 60,
            data: NmiData::Normal,
            base_rate: 2.0,
            model: ModelSpec::new(Family::GaussianMeanVar),
            scales: vec![20],
            pattern: PatternSpec::new(PatternKind::Triangle),
            alpha: 0.1,
            replicates: 100,
            method: BootstrapMethod::Empirical,
            seed: 1,
            partitions: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmiRow {
    pub label: String,
    pub delta: Option<f64>,
    pub run: usize,
    pub true_change_points: Vec<usize>,
    pub detected_change_points: Vec<usize>,
    pub nmi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmiResult {
    pub rows: Vec<NmiRow>,
}

fn join(points: &[usize]) -> String {
    points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

impl NmiResult {
    pub fn csv(&self) -> String {
        let mut out = String::from("label,delta,run,true_change_points,detected_change_points,nmi\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.label,
                r.delta.map_or(String::new(), |d| d.to_string()),
                r.run,
                join(&r.true_change_points),
                join(&r.detected_change_points),
                r.nmi
            ));
        }
        out
    }

    /// Mean NMI per `(label, delta)` in first-seen order.
    pub fn summary_csv(&self) -> String {
        let mut groups: Vec<(String, Option<f64>, f64, usize)> = Vec::new();
        for r in &self.rows {
            match groups.iter_mut().find(|g| g.0 == r.label && g.1 == r.delta) {
                Some(g) => {
                    g.2 += r.nmi;
                    g.3 += 1;
                }
                None => groups.push((r.label.clone(), r.delta, r.nmi, 1)),
            }
        }
        let mut out = String::from("label,delta,runs,mean_nmi\n");
        for (label, delta, sum, count) in groups {
            out.push_str(&format!(
                "{},{},{},{}\n",
                label,
                delta.map_or(String::new(), |d| d.to_string()),
                count,
                sum / count as f64
            ));
        }
        out
    }
}

/// Sorted change points with pairwise and boundary gaps of at least `gap`.
fn draw_layout(n: usize, max_k: usize, gap: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let k = rng.random_range(0..=max_k);
    for _ in 0..1000 {
        let mut pts: Vec<usize> = (0..k).map(|_| rng.random_range(gap..=n - gap)).collect();
        pts.sort_unstable();
        if pts.windows(2).all(|w| w[1] - w[0] >= gap) {
            return pts;
        }
    }
    (1..=k).map(|j| j * n / (k + 1)).collect()
}

fn nmi_series(cfg: &NmiConfig, delta: f64, layout: &[usize], seed: u64) -> Result<TimeSeries> {
    let mut bounds = vec![0];
    bounds.extend_from_slice(layout);
    bounds.push(cfg.n);
    let segments: Vec<SegmentSpec> = bounds
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let level = if j % 2 == 1 { delta } else { 0.0 };
            match cfg.data {
                NmiData::Normal => SegmentSpec::new(w[1] - w[0], SegmentFamily::GaussianMeanVar, vec![level, 1.0]),
                NmiData::Poisson => SegmentSpec::new(w[1] - w[0], SegmentFamily::Poisson, vec![cfg.base_rate + level]),
            }
        })
        .collect();
    Ok(generate_piecewise(&segments, seed)?.series)
}

fn score_partitions(pairs: &[PartitionPair]) -> Result<NmiResult> {
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let x = Partition::from_unsorted(pair.n, pair.reference.clone())?;
            let y = Partition::from_unsorted(pair.n, pair.predicted.clone())?;
            Ok(NmiRow {
                label: pair.label.clone(),
                delta: pair.delta,
                run: i,
                true_change_points: x.boundaries().to_vec(),
                detected_change_points: y.boundaries().to_vec(),
                nmi: nmi(&x, &y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NmiResult { rows })
}

/// NMI between true and detected segmentations per shift size, or of the
/// supplied partition pairs.
pub fn run_nmi_sweep(cfg: &NmiConfig) -> Result<NmiResult> {
    if let Some(pairs) = &cfg.partitions {
        return score_partitions(pairs);
    }
    if cfg.runs == 0 || cfg.deltas.is_empty() || cfg.scales.is_empty() {
        return Err(Error::invalid("runs, deltas and scales must be nonempty"));
    }
    if cfg.min_gap == 0 || cfg.n < 2 * cfg.min_gap {
        return Err(Error::invalid("min_gap must be positive and at most n/2"));
    }
    if cfg.data == NmiData::Poisson && !(cfg.base_rate.is_finite() && cfg.base_rate > 0.0) {
        return Err(Error::invalid("base_rate must be positive"));
    }
    let label = match cfg.data {
        NmiData::Normal => "normal",
        NmiData::Poisson => "poisson",
    };
    let mut rows = Vec::new();
    for (di, &delta) in cfg.deltas.iter().enumerate() {
        let batch = (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let layout =
                    draw_layout(cfg.n, cfg.max_change_points, cfg.min_gap, derive_seed_path(cfg.seed, &[4, r as u64]));
                let series = nmi_series(cfg, delta, &layout, derive_seed_path(cfg.seed, &[5, di as u64, r as u64]))?;
                let mut det = DetectConfig::new(
                    cfg.model,
                    cfg.scales.clone(),
                    cfg.pattern,
                    CalibrationConfig::new(
                        cfg.alpha,
                        cfg.replicates,
                        cfg.method,
                        derive_seed_path(cfg.seed, &[6, di as u64, r as u64]),
                    ),
                );
                det.joint_mode = JointMode::PerScale;
                let report = detect(&series, &det)?;
                let truth = Partition::new(cfg.n, layout.clone())?;
                let found = Partition::from_unsorted(cfg.n, report.change_points.clone())?;
                Ok(NmiRow {
                    label: label.to_string(),
                    delta: Some(delta),
                    run: r,
                    true_change_points: layout,
                    detected_change_points: report.change_points,
                    nmi: nmi(&truth, &found)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(batch);
    }
    Ok(NmiResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_respect_gap() {
        for s in 0..50 {
            let pts = draw_layout(340, 2, 60, s);
            assert!(pts.len() <= 2);
            assert!(pts.iter().all(|&p| (60..=280).contains(&p)));
            assert!(pts.windows(2).all(|w| w[1] - w[0] >= 60));
        }
    }

    #[test]
    fn supplied_identical_partitions_score_one() {
        let cfg = NmiConfig {
            partitions: Some(vec![
                PartitionPair {
                    label: "a".into(),
                    delta: Some(1.0),
                    n: 100,
                    reference: vec![30, 70],
                    predicted: vec![70, 30],
                },
                PartitionPair { label: "a".into(), delta: Some(1.0), n: 50, reference: vec![], predicted: vec![] },
            ]),
            ..NmiConfig::default()
        };
        let r = run_nmi_sweep(&cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.nmi == 1.0));
        assert_eq!(r.summary_csv(), "label,delta,runs,mean_nmi\na,1,2,1\n");
    }

    #[test]
    fn small_localization_is_reproducible() {
        let cfg = LocalizationConfig {
            n: 160,
            p: 2,
            tau_star: 80,
            h: 20,
            shifts: vec![0.5, 2.0],
            runs: 6,
            replicates: 40,
            ..LocalizationConfig::default()
        };
        let a = run_localization(&cfg).unwrap();
        let b = run_localization(&cfg).unwrap();
        assert_eq!(a.summary_csv(), b.summary_csv());
        assert_eq!(a.runs_csv(), b.runs_csv());
        assert_eq!(a.rows.len(), 4);
        let strong = a.rows.iter().find(|r| r.shift == 2.0 && r.pattern == PatternKind::Triangle).unwrap();
        assert_eq!(strong.power, 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(LocalizationConfig { tau_star: 10, ..LocalizationConfig::default() }.validate().is_err());
        assert!(LocalizationConfig { alpha: 1.5, ..LocalizationConfig::default() }.validate().is_err());
        assert!(ConvergenceConfig { length_factor: 3, ..ConvergenceConfig::default() }.validate().is_err());
        assert!(LocalizationConfig::default().validate().is_ok());
    }
}
