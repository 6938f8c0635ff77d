// SPDX-License-Identifier: MIT OR Apache-2.0

//! Time-series container, file ingestion and synthetic generators.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Row-major matrix of factors attached to each observation (GLM mode).
#[derive(Clone, Debug, PartialEq)]
pub struct Covariates {
    values: Vec<f64>,
    dim: usize,
}

/// Ordered observations `Y_0..Y_{n-1}`, each a vector of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dim: usize,
    covariates: Option<Covariates>,
}

fn flatten_rows(rows: &[Vec<f64>], what: &str) -> Result<(Vec<f64>, usize)> {
    let dim = rows.first().map(Vec::len).unwrap_or(0);
    if dim == 0 {
        return Err(Error::DimensionMismatch(format!("{what} rows must have at least one column")));
    }
    let mut values = Vec::with_capacity(rows.len() * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch(format!("{what} row {i} has {} columns, expected {dim}", row.len())));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("{what} row {i} contains non-finite value {bad}")));
        }
        values.extend_from_slice(row);
    }
    Ok((values, dim))
}

impl TimeSeries {
    /// Builds a validated series from rows. Requires `n >= 2` and equal row length.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let (values, dim) = flatten_rows(rows, "observation")?;
        Self::from_flat(values, dim)
    }

    /// Builds a series from row-major values.
    pub fn from_flat(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot be split into rows of dimension {dim}",
                values.len()
            )));
        }
        let n = values.len() / dim;
        if n < 2 {
            return Err(Error::SeriesTooShort { n, required: 2 });
        }
        Ok(Self { values, dim, covariates: None })
    }

    /// Empty series used as a growable buffer by the streaming detector.
    pub(crate) fn empty(dim: usize) -> Self {
        Self { values: Vec::new(), dim, covariates: None }
    }

    /// Attaches GLM factors `psi_i`, one row per observation.
    pub fn with_covariates(mut self, rows: &[Vec<f64>]) -> Result<Self> {
        let (values, dim) = flatten_rows(rows, "covariate")?;
        if values.len() / dim != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariate rows for {} observations",
                values.len() / dim,
                self.len()
            )));
        }
        self.covariates = Some(Covariates { values, dim });
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn covariate_dim(&self) -> Option<usize> {
        self.covariates.as_ref().map(|c| c.dim)
    }

    pub fn covariate(&self, i: usize) -> Option<&[f64]> {
        self.covariates.as_ref().map(|c| &c.values[i * c.dim..(i + 1) * c.dim])
    }

    /// View of observations `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Window<'_> {
        assert!(start <= end && end <= self.len(), "window {start}..{end} out of bounds");
        Window {
            obs: &self.values[start * self.dim..end * self.dim],
            dim: self.dim,
            cov: self.covariates.as_ref().map(|c| (&c.values[start * c.dim..end * c.dim], c.dim)),
        }
    }

    pub fn full_window(&self) -> Window<'_> {
        self.window(0, self.len())
    }

    /// Series `Y_{k(0)}, .., Y_{k(m-1)}`; covariates follow their rows.
    pub fn resample(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &k in indices {
            values.extend_from_slice(self.row(k));
        }
        let covariates = self.covariates.as_ref().map(|c| {
            let mut cv = Vec::with_capacity(indices.len() * c.dim);
            for &k in indices {
                cv.extend_from_slice(&c.values[k * c.dim..(k + 1) * c.dim]);
            }
            Covariates { values: cv, dim: c.dim }
        });
        Self { values, dim: self.dim, covariates }
    }

    /// Returns a copy with `offset` added to every observation.
    pub fn shifted(&self, offset: &[f64]) -> Self {
        assert_eq!(offset.len(), self.dim);
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(self.dim) {
            for (v, o) in row.iter_mut().zip(offset) {
                *v += o;
            }
        }
        out
    }

    pub(crate) fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "observation has {} columns, stream expects {}",
                row.len(),
                self.dim
            )));
        }
        if self.covariates.is_some() {
            return Err(Error::invalid("streaming does not support covariates"));
        }
        self.values.extend_from_slice(row);
        Ok(())
    }

    /// Writes the observations as headerless CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.values.len() * 12);
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        write_file(path, out.as_bytes())
    }
}

/// Contiguous slice of a [`TimeSeries`].
#[derive(Clone, Copy, Debug)]
pub struct Window<'a> {
    obs: &'a [f64],
    dim: usize,
    cov: Option<(&'a [f64], usize)>,
}

impl<'a> Window<'a> {
    /// Window over raw row-major values without covariates.
    pub fn from_values(obs: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && obs.len().is_multiple_of(dim));
        Self { obs, dim, cov: None }
    }

    pub fn len(&self) -> usize {
        self.obs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.obs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.obs.chunks_exact(self.dim)
    }

    pub fn covariate(&self, i: usize) -> Option<&'a [f64]> {
        self.cov.map(|(c, q)| &c[i * q..(i + 1) * q])
    }

    pub fn covariate_dim(&self) -> Option<usize> {
        self.cov.map(|(_, q)| q)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io { path: path.display().to_string(), source };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesFormat {
    Csv,
    Json,
}

impl SeriesFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => SeriesFormat::Json,
            _ => SeriesFormat::Csv,
        }
    }
}

/// Parses rows of numbers. CSV: comma separated, optional header line.
/// JSON: array of arrays.
pub fn parse_rows(text: &str, format: SeriesFormat) -> Result<Vec<Vec<f64>>> {
    match format {
        SeriesFormat::Json => {
            serde_json::from_str::<Vec<Vec<f64>>>(text).map_err(|e| Error::Parse(format!("json series: {e}")))
        }
        SeriesFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut rows = Vec::new();
            for (line, record) in reader.records().enumerate() {
                let record = record.map_err(|e| Error::Parse(format!("csv line {}: {e}", line + 1)))?;
                if record.iter().all(str::is_empty) {
                    continue;
                }
                let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
                match parsed {
                    Ok(row) => rows.push(row),
                    // A non-numeric first line is a header.
                    Err(_) if line == 0 => continue,
                    Err(e) => {
                        return Err(Error::Parse(format!("csv line {}: {e}", line + 1)));
                    }
                }
            }
            Ok(rows)
        }
    }
}

/// Loads and validates a series file.
pub fn load_series(path: &Path, format: SeriesFormat) -> Result<TimeSeries> {
    let text = read_file(path)?;
    TimeSeries::new(&parse_rows(&text, format)?)
}

/// Loads GLM factors and attaches them to `series`.
pub fn attach_covariates(series: TimeSeries, path: &Path, format: SeriesFormat) -> Result<TimeSeries> {
    let text = read_file(path)?;
    series.with_covariates(&parse_rows(&text, format)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentFamily {
    /// Unit-variance Gaussian, params = mean vector.
    GaussianMean,
    /// Scalar Gaussian, params = `[mean, variance]`.
    GaussianMeanVar,
    /// Independent Poisson coordinates, params = rate vector.
    Poisson,
}

/// One homogeneous stretch of a synthetic series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub length: usize,
    pub family: SegmentFamily,
    pub params: Vec<f64>,
}

impl SegmentSpec {
    pub fn new(length: usize, family: SegmentFamily, params: Vec<f64>) -> Self {
        Self { length, family, params }
    }

    pub fn gaussian_mean(length: usize, mean: Vec<f64>) -> Self {
        Self::new(length, SegmentFamily::GaussianMean, mean)
    }

    pub fn dim(&self) -> usize {
        match self.family {
            SegmentFamily::GaussianMeanVar => 1,
            _ => self.params.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("segment length must be at least 1"));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("segment parameters must be finite"));
        }
        match self.family {
            SegmentFamily::GaussianMean if self.params.is_empty() => {
                Err(Error::invalid("gaussian-mean segment needs a mean vector"))
            }
            SegmentFamily::GaussianMeanVar if self.params.len() != 2 || self.params[1] <= 0.0 => {
                Err(Error::invalid("gaussian-meanvar segment needs [mean, variance > 0]"))
            }
            SegmentFamily::Poisson if self.params.is_empty() || self.params.iter().any(|&r| r <= 0.0) => {
                Err(Error::invalid("poisson segment needs positive rates"))
            }
            _ => Ok(()),
        }
    }
}

/// Synthetic series plus its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub series: TimeSeries,
    /// Cumulative segment boundaries, excluding 0 and n.
    pub change_points: Vec<usize>,
    pub seed: u64,
}

/// Contents of the metadata file written next to generated series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub n: usize,
    pub p: usize,
    pub true_change_points: Vec<usize>,
    pub seed: u64,
}

impl Generated {
    pub fn metadata(&self) -> SeriesMetadata {
        SeriesMetadata {
            n: self.series.len(),
            p: self.series.dim(),
            true_change_points: self.change_points.clone(),
            seed: self.seed,
        }
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        self.series.write_csv(&dir.join(format!("{stem}.csv")))?;
        let meta = serde_json::to_vec_pretty(&self.metadata()).expect("metadata serializes");
        write_file(&dir.join(format!("{stem}.meta.json")), &meta)
    }
}

fn sample_gaussian(rng: &mut Rng, mean: f64, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * z
}

fn sample_poisson(rng: &mut Rng, rate: f64) -> f64 {
    Poisson::new(rate).expect("validated rate").sample(rng)
}

fn finish(values: Vec<f64>, dim: usize, change_points: Vec<usize>, seed: u64) -> Result<Generated> {
    let series = TimeSeries::from_flat(values, dim)?;
    Ok(Generated { series, change_points, seed })
}

/// Concatenates samples from each segment; rows are drawn in order, coordinates
/// left to right.
pub fn generate_piecewise(segments: &[SegmentSpec], seed: u64) -> Result<Generated> {
    let first = segments.first().ok_or_else(|| Error::invalid("at least one segment required"))?;
    let dim = first.dim();
    for s in segments {
        s.validate()?;
        if s.dim() != dim {
            return Err(Error::DimensionMismatch(format!("segment dimension {} differs from {dim}", s.dim())));
        }
    }
    let mut rng = rng_from_seed(seed);
    let total: usize = segments.iter().map(|s| s.length).sum();
    let mut values = Vec::with_capacity(total * dim);
    let mut change_points = Vec::with_capacity(segments.len().saturating_sub(1));
    for (k, s) in segments.iter().enumerate() {
        if k > 0 {
            change_points.push(values.len() / dim);
        }
        for _ in 0..s.length {
            match s.family {
                SegmentFamily::GaussianMean => {
                    for &m in &s.params {
                        values.push(sample_gaussian(&mut rng, m, 1.0));
                    }
                }
                SegmentFamily::GaussianMeanVar => {
                    values.push(sample_gaussian(&mut rng, s.params[0], s.params[1].sqrt()));
                }
                SegmentFamily::Poisson => {
                    for &r in &s.params {
                        values.push(sample_poisson(&mut rng, r));
                    }
                }
            }
        }
    }
    finish(values, dim, change_points, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    AbruptMean,
    /// Mean moves linearly from the pre to the post value over `width` steps.
    SmoothMean,
    AbruptVariance,
}

/// Gaussian regime: mean vector and a common coordinate variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl Regime {
    pub fn new(mean: Vec<f64>, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// Two Gaussian regimes joined by a transition starting at index `pre_len`.
///
/// For the smooth kind the mean at offset `k` in `0..=width` from the
/// transition start is `pre + (post - pre) * k / width`.
pub fn generate_transition(
    kind: TransitionKind,
    pre: &Regime,
    post: &Regime,
    width: usize,
    lengths: (usize, usize),
    seed: u64,
) -> Result<Generated> {
    let dim = pre.mean.len();
    if dim == 0 || post.mean.len() != dim {
        return Err(Error::DimensionMismatch("pre and post means must share a nonzero dimension".into()));
    }
    if !(pre.variance > 0.0 && post.variance > 0.0) {
        return Err(Error::invalid("regime variances must be positive"));
    }
    let (pre_len, post_len) = lengths;
    match kind {
        TransitionKind::SmoothMean if width == 0 => {
            return Err(Error::invalid("smooth-mean transition requires width >= 1"));
        }
        TransitionKind::SmoothMean if width > post_len => {
            return Err(Error::invalid(format!("transition width {width} exceeds post-transition length {post_len}")));
        }
        TransitionKind::AbruptMean | TransitionKind::AbruptVariance if width != 0 => {
            return Err(Error::invalid("abrupt transitions take width 0"));
        }
        TransitionKind::AbruptVariance if pre.mean != post.mean => {
            return Err(Error::invalid("abrupt-variance transition requires equal means"));
        }
        _ => {}
    }
    let n = pre_len + post_len;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n * dim);
    for i in 0..n {
        let (sd, frac) = if i < pre_len {
            (pre.variance.sqrt(), 0.0)
        } else {
            let frac = match kind {
                TransitionKind::SmoothMean => ((i - pre_len) as f64 / width as f64).min(1.0),
                _ => 1.0,
            };
            (post.variance.sqrt(), frac)
        };
        for c in 0..dim {
            let mean = if frac == 0.0 {
                pre.mean[c]
            } else if frac == 1.0 {
                post.mean[c]
            } else {
                pre.mean[c] + (post.mean[c] - pre.mean[c]) * frac
            };
            values.push(sample_gaussian(&mut rng, mean, sd));
        }
    }
    let change_points = if pre_len > 0 && post_len > 0 { vec![pre_len] } else { Vec::new() };
    finish(values, dim, change_points, seed)
}

/// Mean of row `i` under a smooth transition; used by tests and docs.
pub fn transition_mean(pre: f64, post: f64, width: usize, offset: usize) -> f64 {
    if width == 0 {
        return post;
    }
    let frac = (offset as f64 / width as f64).min(1.0);
    if frac == 1.0 {
        post
    } else {
        pre + (post - pre) * frac
    }
}
