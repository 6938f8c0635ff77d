// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use patterncp::calibration::{BootstrapMethod, CalibrationConfig, JointMode};
use patterncp::data::{read_file, SegmentSpec};
use patterncp::detector::DetectConfig;
use patterncp::experiments::{ConvergenceConfig, ExperimentKind, LocalizationConfig, NmiConfig};
use patterncp::models::ModelSpec;
use patterncp::patterns::{PatternKind, PatternSpec};
use patterncp::theory::Spectrum;
use patterncp::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_REPLICATES: usize = 200;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryInput {
    pub p: Option<usize>,
    pub h: Option<usize>,
    pub x: Option<f64>,
    pub spread: Option<f64>,
    pub spectrum: Option<Spectrum>,
}

/// Every field is optional; commands report the ones they need but lack.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariates: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<BootstrapMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_mode: Option<JointMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_separation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localization: Option<LocalizationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<NmiConfig>,
    /// Shift grid override for the localization experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<f64>>,
    /// Monte Carlo run count override for experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryInput>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::InvalidParameter("a seed is required for stochastic commands".into()))
    }

    pub fn require_input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| Error::InvalidParameter("an input file is required".into()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn calibration(&self) -> Result<CalibrationConfig> {
        let cfg = CalibrationConfig::new(
            self.alpha.unwrap_or(DEFAULT_ALPHA),
            self.replicates.unwrap_or(DEFAULT_REPLICATES),
            self.method.unwrap_or(BootstrapMethod::Weighted),
            self.require_seed()?,
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model(&self) -> ModelSpec {
        self.model.unwrap_or_else(ModelSpec::gaussian_mean)
    }

    pub fn pattern(&self) -> PatternSpec {
        self.pattern.unwrap_or_else(|| PatternSpec::new(PatternKind::Triangle))
    }

    pub fn scales(&self) -> Result<Vec<usize>> {
        match &self.scales {
            Some(s) if !s.is_empty() && !s.contains(&0) => Ok(s.clone()),
            _ => Err(Error::InvalidParameter("scales must be a nonempty list of positive integers".into())),
        }
    }

    pub fn detect_config(&self) -> Result<DetectConfig> {
        let mut cfg = DetectConfig::new(self.model(), self.scales()?, self.pattern(), self.calibration()?);
        cfg.joint_mode = self.joint_mode.unwrap_or_default();
        cfg.min_separation = self.min_separation;
        Ok(cfg)
    }

    /// Experiment section with the top-level seed, alpha, replicates, method,
    /// runs and shifts applied on top.
    pub fn localization(&self) -> Result<LocalizationConfig> {
        let mut c = self.localization.clone().unwrap_or_default();
        c.seed = self.require_seed()?;
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(b) = self.replicates {
            c.replicates = b;
        }
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(r) = self.runs {
            c.runs = r;
        }
        if let Some(s) = &self.shifts {
            c.shifts = s.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn convergence(&self) -> Result<ConvergenceConfig> {
        let mut c = self.convergence.clone().unwrap_or_default();
        c.seed = self.require_seed()?;
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(b) = self.replicates {
            c.replicates = b;
        }
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(r) = self.runs {
            c.runs = r;
        }
        if let Some(s) = &self.scales {
            c.scales = s.clone();
        }
        if let Some(p) = self.pattern {
            c.pattern = p;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn nmi(&self) -> Result<NmiConfig> {
        let mut c = self.nmi.clone().unwrap_or_default();
        if c.partitions.is_some() {
            return Ok(c);
        }
        c.seed = self.require_seed()?;
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(b) = self.replicates {
            c.replicates = b;
        }
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(r) = self.runs {
            c.runs = r;
        }
        if let Some(s) = &self.scales {
            c.scales = s.clone();
        }
        if let Some(m) = self.model {
            c.model = m;
        }
        if let Some(p) = self.pattern {
            c.pattern = p;
        }
        CalibrationConfig::new(c.alpha, c.replicates, c.method, c.seed).validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use patterncp::models::{Family, GlmLink};

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            command: Some("detect".into()),
            input: Some("x.csv".into()),
            model: Some(ModelSpec::new(Family::Glm(GlmLink::Log))),
            scales: Some(vec![10, 20]),
            alpha: Some(0.05),
            seed: Some(7),
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn model_json_shape() {
        let m: ModelSpec = serde_json::from_str(r#"{"family": "poisson"}"#).unwrap();
        assert_eq!(m, ModelSpec::new(Family::Poisson));
        let g: ModelSpec = serde_json::from_str(r#"{"family": "glm", "link": "logit"}"#).unwrap();
        assert_eq!(g.family, Family::Glm(GlmLink::Logit));
    }

    #[test]
    fn alpha_is_validated() {
        let cfg = RunConfig { alpha: Some(1.5), seed: Some(1), ..RunConfig::default() };
        let err = cfg.calibration().unwrap_err();
        assert!(err.to_string().contains("alpha out of range"));
        assert!(RunConfig::default().calibration().is_err());
    }
}
