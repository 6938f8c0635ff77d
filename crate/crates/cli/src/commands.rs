// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;

use patterncp::calibration::joint_calibrate;
use patterncp::data::{
    attach_covariates, generate_piecewise, load_series, SegmentFamily, SegmentSpec, SeriesFormat, TimeSeries,
};
use patterncp::detector::detect as run_detect;
use patterncp::experiments::{run_convergence, run_localization, run_nmi_sweep, ExperimentKind};
use patterncp::lrt::lrt_series;
use patterncp::models::ModelSpec;
use patterncp::patterns::{Normalization, Pattern, PatternKind, PatternSpec};
use patterncp::theory::{theory_report, Spectrum};
use patterncp::Error;
use serde::de::DeserializeOwned;

use crate::config::{RunConfig, TheoryInput};
use crate::CommonOpts;

/// Exit status 2 for bad input or configuration, 3 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn parse_kebab<T: DeserializeOwned>(value: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Failure::Validation(format!("unknown {what} '{value}'")))
}

fn parse_model(family: &str, link: Option<&str>) -> Result<ModelSpec, Failure> {
    let mut obj = serde_json::json!({ "family": family });
    if let Some(l) = link {
        obj["link"] = serde_json::Value::String(l.to_string());
    }
    serde_json::from_value(obj).map_err(|e| Failure::Validation(format!("invalid model '{family}': {e}")))
}

/// Config file (if any) with command-line flags on top.
fn resolve(opts: &CommonOpts, command: &str) -> Result<RunConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(command.to_string());
    if opts.input.is_some() {
        cfg.input.clone_from(&opts.input);
    }
    if opts.covariates.is_some() {
        cfg.covariates.clone_from(&opts.covariates);
    }
    if opts.output_dir.is_some() {
        cfg.output_dir.clone_from(&opts.output_dir);
    }
    if let Some(f) = &opts.family {
        let mut m = parse_model(f, opts.link.as_deref())?;
        if let Some(old) = cfg.model {
            m.variance_floor = old.variance_floor;
        }
        cfg.model = Some(m);
    } else if opts.link.is_some() {
        return Err(Failure::Validation("--link requires --family glm".into()));
    }
    if opts.scales.is_some() {
        cfg.scales.clone_from(&opts.scales);
    }
    if opts.pattern.is_some() || opts.plateau.is_some() || opts.normalization.is_some() {
        let mut p = cfg.pattern.unwrap_or_else(|| PatternSpec::new(PatternKind::Triangle));
        if let Some(k) = &opts.pattern {
            p.kind = parse_kebab(k, "pattern")?;
        }
        if let Some(w) = opts.plateau {
            p.plateau = w;
        }
        if let Some(n) = &opts.normalization {
            p.normalization = parse_kebab(n, "normalization")?;
        }
        cfg.pattern = Some(p);
    }
    if opts.alpha.is_some() {
        cfg.alpha = opts.alpha;
    }
    if opts.replicates.is_some() {
        cfg.replicates = opts.replicates;
    }
    if let Some(m) = &opts.method {
        cfg.method = Some(parse_kebab(m, "bootstrap method")?);
    }
    if opts.seed.is_some() {
        cfg.seed = opts.seed;
    }
    if let Some(j) = &opts.joint_mode {
        cfg.joint_mode = Some(parse_kebab(j, "joint mode")?);
    }
    if opts.min_separation.is_some() {
        cfg.min_separation = opts.min_separation;
    }
    if opts.runs.is_some() {
        cfg.runs = opts.runs;
    }
    if opts.shifts.is_some() {
        cfg.shifts.clone_from(&opts.shifts);
    }
    Ok(cfg)
}

fn load(cfg: &RunConfig) -> Result<TimeSeries, Failure> {
    let path = cfg.require_input()?;
    let series = load_series(path, SeriesFormat::from_path(path))?;
    Ok(match &cfg.covariates {
        Some(c) => attach_covariates(series, c, SeriesFormat::from_path(c))?,
        None => series,
    })
}

fn prepare_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> CmdResult {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

pub fn detect(opts: &CommonOpts) -> CmdResult {
    let cfg = resolve(opts, "detect")?;
    let det = cfg.detect_config()?;
    let series = load(&cfg)?;
    let report = run_detect(&series, &det)?;
    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    write_out(&dir, "report.json", &json(&report))?;
    write_out(&dir, "flags.csv", &report.flags_csv())?;
    for s in &report.scales {
        let lrt = lrt_series(&det.model, &series, s.h)?;
        write_out(&dir, &format!("lrt_h{}.csv", s.h), &lrt.to_csv())?;
        let mut tp = String::from("tau,value\n");
        for (k, v) in s.tp_values.iter().enumerate() {
            tp.push_str(&format!("{},{}\n", s.tp_summary.first_tau + k, v));
        }
        write_out(&dir, &format!("tp_h{}.csv", s.h), &tp)?;
    }
    write_out(&dir, "config.json", &cfg.to_json())?;
    println!("n = {}, scales = {:?}", series.len(), det.scales);
    for s in &report.scales {
        println!(
            "h = {:>4}  z_h = {:.4}  max TP = {:.4} at {}  flags = {}",
            s.h,
            s.critical_value,
            s.max_value,
            s.argmax_tau,
            s.flagged.len()
        );
    }
    println!("change points: {:?}", report.change_points);
    Ok(())
}

pub fn calibrate(opts: &CommonOpts) -> CmdResult {
    let cfg = resolve(opts, "calibrate")?;
    let det = cfg.detect_config()?;
    let series = load(&cfg)?;
    det.validate(series.len())?;
    let joint = joint_calibrate(&det.model, &series, &det.scales, &det.pattern, &det.calibration, det.joint_mode)?;
    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    write_out(&dir, "calibration.json", &json(&joint))?;
    let mut csv = String::from("h,z_h\n");
    for (h, z) in &joint.thresholds {
        csv.push_str(&format!("{h},{z}\n"));
        println!("h = {h:>4}  z_h = {z:.6}");
    }
    write_out(&dir, "thresholds.csv", &csv)?;
    write_out(&dir, "config.json", &cfg.to_json())?;
    Ok(())
}

fn parse_segment(text: &str, family: SegmentFamily, dim: usize) -> Result<SegmentSpec, Failure> {
    let bad = || Failure::Validation(format!("invalid segment '{text}', expected LENGTH:V1,V2,..."));
    let (len, params) = text.split_once(':').ok_or_else(bad)?;
    let length: usize = len.trim().parse().map_err(|_| bad())?;
    let mut values =
        params.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
    if family != SegmentFamily::GaussianMeanVar && values.len() == 1 && dim > 1 {
        values = vec![values[0]; dim];
    }
    Ok(SegmentSpec::new(length, family, values))
}

pub fn simulate(opts: &CommonOpts, segments: &[String], dim: usize, stem: &str) -> CmdResult {
    let mut cfg = resolve(opts, "simulate")?;
    if !segments.is_empty() {
        let family: SegmentFamily = match &opts.family {
            Some(f) => parse_kebab(f, "segment family")?,
            None => SegmentFamily::GaussianMean,
        };
        cfg.segments = Some(segments.iter().map(|s| parse_segment(s, family, dim)).collect::<Result<_, _>>()?);
        cfg.model = None;
    }
    let segs = cfg
        .segments
        .clone()
        .ok_or_else(|| Failure::Validation("no segments given (use --segment or the config file)".into()))?;
    let seed = cfg.require_seed()?;
    let generated = generate_piecewise(&segs, seed)?;
    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    generated.write(&dir, stem).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_out(&dir, "config.json", &cfg.to_json())?;
    println!(
        "wrote {} observations of dimension {} with change points {:?}",
        generated.series.len(),
        generated.series.dim(),
        generated.change_points
    );
    Ok(())
}

pub fn experiment(kind: ExperimentKind, opts: &CommonOpts) -> CmdResult {
    let mut cfg = resolve(opts, "experiment")?;
    cfg.experiment = Some(kind);
    let dir = cfg.output_dir();
    match kind {
        ExperimentKind::LocalizationPower => {
            let c = cfg.localization()?;
            let r = run_localization(&c)?;
            prepare_dir(&dir)?;
            write_out(&dir, "localization_summary.csv", &r.summary_csv())?;
            write_out(&dir, "localization_runs.csv", &r.runs_csv())?;
            print!("{}", r.summary_csv());
        }
        ExperimentKind::BootstrapConvergence => {
            let c = cfg.convergence()?;
            let r = run_convergence(&c)?;
            prepare_dir(&dir)?;
            write_out(&dir, "convergence.csv", &r.csv())?;
            write_out(&dir, "convergence_beta.csv", &r.beta_csv())?;
            print!("{}", r.csv());
            for (s, b) in &r.betas {
                match b {
                    Some(b) => println!("beta[{s:?}] = {b:.4}"),
                    None => println!("beta[{s:?}] unavailable (fewer than 3 scales)"),
                }
            }
        }
        ExperimentKind::NmiSweep => {
            let c = cfg.nmi()?;
            let r = run_nmi_sweep(&c)?;
            prepare_dir(&dir)?;
            write_out(&dir, "nmi.csv", &r.csv())?;
            write_out(&dir, "nmi_summary.csv", &r.summary_csv())?;
            print!("{}", r.summary_csv());
        }
    }
    write_out(&dir, "config.json", &cfg.to_json())?;
    Ok(())
}

pub struct TheoryFlags {
    pub p: Option<usize>,
    pub h: Option<usize>,
    pub x: Option<f64>,
    pub spread: Option<f64>,
    pub spectrum: Option<(f64, f64, f64)>,
}

pub fn theory(config: Option<&Path>, flags: TheoryFlags, output_dir: Option<&Path>) -> CmdResult {
    let mut input = match config {
        Some(p) => RunConfig::load(p)?.theory.unwrap_or_default(),
        None => TheoryInput::default(),
    };
    input.p = flags.p.or(input.p);
    input.h = flags.h.or(input.h);
    input.x = flags.x.or(input.x);
    input.spread = flags.spread.or(input.spread);
    if let Some((t, v, l)) = flags.spectrum {
        input.spectrum = Some(Spectrum { trace: t, trace_sq: v, lambda_max: l });
    }
    let p = input.p.ok_or_else(|| Failure::Validation("--p is required".into()))?;
    let report =
        theory_report(p, input.h.unwrap_or(1), input.x.unwrap_or(0.0), input.spread.unwrap_or(0.0), input.spectrum)?;
    let text = json(&report);
    print!("{text}");
    if let Some(dir) = output_dir {
        prepare_dir(dir)?;
        write_out(dir, "theory.json", &text)?;
    }
    Ok(())
}

pub fn lrt(opts: &CommonOpts) -> CmdResult {
    let cfg = resolve(opts, "lrt")?;
    let series = load(&cfg)?;
    let model = cfg.model();
    let scales = cfg.scales()?;
    match &cfg.output_dir {
        Some(dir) => {
            prepare_dir(dir)?;
            for &h in &scales {
                write_out(dir, &format!("lrt_h{h}.csv"), &lrt_series(&model, &series, h)?.to_csv())?;
            }
            write_out(dir, "config.json", &cfg.to_json())?;
        }
        None => {
            for &h in &scales {
                print!("{}", lrt_series(&model, &series, h)?.to_csv());
            }
        }
    }
    Ok(())
}

pub fn pattern(kind: &str, h: usize, plateau: usize, normalization: &str) -> CmdResult {
    let kind: PatternKind = parse_kebab(kind, "pattern")?;
    let norm: Normalization = parse_kebab(normalization, "normalization")?;
    let p = Pattern::new(kind, h, plateau)?.normalized(norm);
    print!("{}", p.to_csv());
    Ok(())
}
