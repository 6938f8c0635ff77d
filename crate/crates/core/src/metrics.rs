// SPDX-License-Identifier: MIT OR Apache-2.0

//! Evaluation measures: partition entropy and NMI, localization error and
//! power, and the log-log slope of bootstrap level errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segmentation of `0..n` by sorted change points in `1..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    boundaries: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, boundaries: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("partition of an empty range"));
        }
        for w in boundaries.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid(format!("boundaries must be strictly increasing: {boundaries:?}")));
            }
        }
        if let (Some(&first), Some(&last)) = (boundaries.first(), boundaries.last()) {
            if first < 1 || last > n - 1 {
                return Err(Error::invalid(format!("boundaries must lie in [1, {}]: {boundaries:?}", n - 1)));
            }
        }
        Ok(Self { n, boundaries })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(n: usize, mut boundaries: Vec<usize>) -> Result<Self> {
        boundaries.sort_unstable();
        boundaries.dedup();
        Self::new(n, boundaries)
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn segment_lengths(&self) -> Vec<usize> {
        let mut prev = 0;
        let mut out = Vec::with_capacity(self.boundaries.len() + 1);
        for &b in self.boundaries.iter().chain(std::iter::once(&self.n)) {
            out.push(b - prev);
            prev = b;
        }
        out
    }

    /// Segment index of every time point.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        for (s, len) in self.segment_lengths().into_iter().enumerate() {
            out.extend(std::iter::repeat_n(s, len));
        }
        out
    }
}

/// `-sum_s (|s|/n) log(|s|/n)` in nats.
pub fn entropy(x: &Partition) -> f64 {
    let n = x.n as f64;
    x.segment_lengths()
        .into_iter()
        .map(|len| {
            let q = len as f64 / n;
            -q * q.ln()
        })
        .sum()
}

/// Entropy of the overlap table of two partitions. Each nonempty cell of the
/// table is a segment of the common refinement.
pub fn joint_entropy(x: &Partition, y: &Partition) -> Result<f64> {
    if x.n != y.n {
        return Err(Error::DimensionMismatch(format!("partitions of lengths {} and {}", x.n, y.n)));
    }
    let mut union: Vec<usize> = x.boundaries.iter().chain(&y.boundaries).copied().collect();
    union.sort_unstable();
    union.dedup();
    Ok(entropy(&Partition { n: x.n, boundaries: union }))
}

/// `2 (H(X) + H(Y) - H(X,Y)) / (H(X) + H(Y))`, equal to 1 when both
/// partitions are a single segment.
pub fn nmi(x: &Partition, y: &Partition) -> Result<f64> {
    let hxy = joint_entropy(x, y)?;
    let (hx, hy) = (entropy(x), entropy(y));
    let denom = hx + hy;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((2.0 * (hx + hy - hxy) / denom).clamp(0.0, 1.0))
}

/// One localization run: estimate, truth and whether a detection occurred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRun {
    pub tau_hat: usize,
    pub tau_star: usize,
    pub detected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    /// Mean `|tau_hat - tau_star|` over detected runs; NaN when none detected.
    pub mean_abs_error: f64,
    pub power: f64,
    pub runs: usize,
}

pub fn localization_stats(runs: &[LocalizationRun]) -> Result<LocalizationStats> {
    if runs.is_empty() {
        return Err(Error::invalid("no localization runs"));
    }
    let detected: Vec<_> = runs.iter().filter(|r| r.detected).collect();
    let mean_abs_error = if detected.is_empty() {
        f64::NAN
    } else {
        detected.iter().map(|r| r.tau_hat.abs_diff(r.tau_star) as f64).sum::<f64>() / detected.len() as f64
    };
    Ok(LocalizationStats { mean_abs_error, power: detected.len() as f64 / runs.len() as f64, runs: runs.len() })
}

/// `beta = -slope` of the least-squares line through `(log h, log error)`.
/// Zero errors are floored at `1 / (2 mc_runs)`.
pub fn convergence_slope(points: &[(usize, f64)], mc_runs: usize) -> Result<f64> {
    let mut hs: Vec<usize> = points.iter().map(|p| p.0).collect();
    hs.sort_unstable();
    hs.dedup();
    if hs.len() < 3 {
        return Err(Error::invalid("convergence slope needs at least 3 distinct h values"));
    }
    if mc_runs == 0 {
        return Err(Error::invalid("mc_runs must be positive"));
    }
    let floor = 1.0 / (2.0 * mc_runs as f64);
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(h, e) in points {
        if h == 0 || e < 0.0 || !e.is_finite() {
            return Err(Error::invalid(format!("invalid convergence point ({h}, {e})")));
        }
        xs.push((h as f64).ln());
        ys.push(if e == 0.0 { floor } else { e }.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(n: usize, b: &[usize]) -> Partition {
        Partition::new(n, b.to_vec()).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(10, vec![0]).is_err());
        assert!(Partition::new(10, vec![10]).is_err());
        assert!(Partition::new(10, vec![4, 4]).is_err());
        assert!(Partition::new(10, vec![5, 3]).is_err());
        assert_eq!(Partition::from_unsorted(10, vec![5, 3, 5]).unwrap().boundaries(), &[3, 5]);
        assert_eq!(part(5, &[2]).labels(), vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&part(9, &[])), 0.0);
        assert!((entropy(&part(10, &[5])) - 2f64.ln()).abs() < 1e-15);
        assert!((entropy(&part(4, &[1])) - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn nmi_examples() {
        let x = part(10, &[5]);
        assert_eq!(nmi(&x, &x).unwrap(), 1.0);
        assert_eq!(nmi(&x, &part(10, &[])).unwrap(), 0.0);
        assert_eq!(nmi(&part(7, &[]), &part(7, &[])).unwrap(), 1.0);
        let (a, b) = (part(4, &[2]), part(4, &[1]));
        assert!((joint_entropy(&a, &b).unwrap() - 1.0397).abs() < 1e-4);
        assert!((nmi(&a, &b).unwrap() - 0.3437).abs() < 1e-4);
        assert!(nmi(&a, &part(5, &[2])).is_err());
    }

    #[test]
    fn localization_examples() {
        let all = [LocalizationRun { tau_hat: 50, tau_star: 50, detected: true }; 4];
        let s = localization_stats(&all).unwrap();
        assert_eq!((s.mean_abs_error, s.power), (0.0, 1.0));
        let alt: Vec<_> = (0..6)
            .map(|i| LocalizationRun { tau_hat: if i % 2 == 0 { 45 } else { 55 }, tau_star: 50, detected: true })
            .collect();
        assert_eq!(localization_stats(&alt).unwrap().mean_abs_error, 5.0);
        let half: Vec<_> = (0..4).map(|i| LocalizationRun { tau_hat: 50, tau_star: 50, detected: i < 2 }).collect();
        assert_eq!(localization_stats(&half).unwrap().power, 0.5);
        assert!(localization_stats(&[]).is_err());
    }

    #[test]
    fn slope_examples() {
        let inv: Vec<_> = [10, 20, 30, 40, 50].iter().map(|&h| (h, 3.0 / h as f64)).collect();
        assert!((convergence_slope(&inv, 100).unwrap() - 1.0).abs() < 1e-10);
        let root: Vec<_> = [10, 20, 30].iter().map(|&h| (h, 0.2 / (h as f64).sqrt())).collect();
        assert!((convergence_slope(&root, 100).unwrap() - 0.5).abs() < 1e-10);
        assert!(convergence_slope(&inv[..2], 100).is_err());
        let zeros = [(10, 0.0), (20, 0.0), (40, 0.0)];
        assert!(convergence_slope(&zeros, 100).unwrap().abs() < 1e-12);
    }
}
