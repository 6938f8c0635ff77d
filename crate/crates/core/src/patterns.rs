// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point pattern functions and the pattern-convolution statistic
//! `TP_h(tau) = sum_t P_tau(t) sqrt(2 T_h(t))`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::write_file;
use crate::error::{Error, Result};
use crate::lrt::LrtSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    /// Abrupt mean change: `1/2 - |k|/h` on offsets `-h..=h`.
    Triangle,
    /// Smooth mean change: the triangle with a flat top of given width.
    Trapezium,
    /// Abrupt variance change: antisymmetric ramp `k / 2h`.
    Horn,
    /// No pattern, a single unit tap at offset 0.
    Indicator,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    /// Scaled so that `sum |P| = 1`.
    #[default]
    L1,
}

/// Discrete weights over offsets `-h..=h` relative to `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub kind: PatternKind,
    pub h: usize,
    pub weights: Vec<f64>,
    pub normalization: Normalization,
}

impl Pattern {
    /// Raw pattern. `plateau` is only read by the trapezium and must be `< 2h`.
    pub fn new(kind: PatternKind, h: usize, plateau: usize) -> Result<Self> {
        if h == 0 {
            return Err(Error::invalid("pattern half-width must be at least 1"));
        }
        if kind == PatternKind::Trapezium && plateau >= 2 * h {
            return Err(Error::invalid(format!("plateau width {plateau} must be below 2h = {}", 2 * h)));
        }
        let hf = h as f64;
        let weights = (-(h as i64)..=h as i64)
            .map(|k| {
                let a = k.unsigned_abs() as f64;
                match kind {
                    PatternKind::Triangle => 0.5 - a / hf,
                    PatternKind::Trapezium => {
                        let top = plateau as f64 / 2.0;
                        if a <= top {
                            0.5
                        } else {
                            0.5 - (a - top) / (hf - top)
                        }
                    }
                    PatternKind::Horn => k as f64 / (2.0 * hf),
                    PatternKind::Indicator => {
                        if k == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect();
        Ok(Self { kind, h, weights, normalization: Normalization::Raw })
    }

    pub fn normalized(mut self, normalization: Normalization) -> Self {
        if normalization == Normalization::L1 && self.normalization == Normalization::Raw {
            let mass: f64 = self.weights.iter().map(|w| w.abs()).sum();
            for w in &mut self.weights {
                *w /= mass;
            }
        }
        self.normalization = normalization;
        self
    }

    /// Weight at offset `k` in `-h..=h`.
    pub fn weight(&self, k: i64) -> f64 {
        self.weights[(k + self.h as i64) as usize]
    }

    /// Smallest and largest offsets carrying a nonzero weight.
    fn support(&self) -> (i64, i64) {
        let h = self.h as i64;
        let lo = self.weights.iter().position(|&w| w != 0.0).map_or(0, |i| i as i64 - h);
        let hi = self.weights.iter().rposition(|&w| w != 0.0).map_or(0, |i| i as i64 - h);
        (lo, hi)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i as i64 - self.h as i64, w));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv().as_bytes())
    }
}

/// Pattern recipe independent of the window scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PatternSpec {
    pub kind: PatternKind,
    #[serde(default)]
    pub plateau: usize,
    #[serde(default)]
    pub normalization: Normalization,
}

impl PatternSpec {
    pub fn new(kind: PatternKind) -> Self {
        Self { kind, plateau: 0, normalization: Normalization::L1 }
    }

    pub fn build(&self, h: usize) -> Result<Pattern> {
        Ok(Pattern::new(self.kind, h, self.plateau)?.normalized(self.normalization))
    }
}

/// Raw weighted sum `sum_k P(k) sqrt(2 T_h(tau + k))`.
pub fn tp_statistic(lrt: &LrtSeries, pattern: &Pattern, tau: usize) -> Result<f64> {
    if lrt.is_empty() {
        return Err(Error::invalid("empty LRT series"));
    }
    let (lo, hi) = pattern.support();
    let (first, last) = (lrt.first_position() as i64, lrt.last_position() as i64);
    let t = tau as i64;
    if t + lo < first || t + hi > last {
        return Err(Error::OutOfRange {
            position: tau,
            low: (first - lo).max(0) as usize,
            high: (last - hi).max(0) as usize,
        });
    }
    Ok(tp_unchecked(lrt, pattern, tau))
}

fn tp_unchecked(lrt: &LrtSeries, pattern: &Pattern, tau: usize) -> f64 {
    let h = pattern.h as i64;
    let base = tau as i64 - lrt.first_position() as i64;
    let mut acc = 0.0;
    for (i, &w) in pattern.weights.iter().enumerate() {
        if w != 0.0 {
            acc += w * lrt.values[(base + i as i64 - h) as usize];
        }
    }
    acc
}

/// Positions `tau` searched by [`max_tp`]: every position whose full
/// `2h`-window of LRT values, each with its own window, fits in the data.
pub fn admissible_range(lrt: &LrtSeries, pattern: &Pattern) -> Option<(usize, usize)> {
    if lrt.is_empty() {
        return None;
    }
    let lo = lrt.first_position() + pattern.h;
    let hi = lrt.last_position().checked_sub(pattern.h)?;
    (lo <= hi).then_some((lo, hi))
}

/// TP values over the admissible range, with the first admissible position.
pub fn tp_series(lrt: &LrtSeries, pattern: &Pattern) -> Result<(usize, Vec<f64>)> {
    let (lo, hi) = admissible_range(lrt, pattern)
        .ok_or_else(|| Error::invalid("no admissible pattern position: series too short for h"))?;
    Ok((lo, (lo..=hi).map(|tau| tp_unchecked(lrt, pattern, tau)).collect()))
}

/// `argmax_tau TP_h(tau)` over the admissible range; ties go to the smallest `tau`.
pub fn max_tp(lrt: &LrtSeries, pattern: &Pattern) -> Result<(usize, f64)> {
    let (lo, values) = tp_series(lrt, pattern)?;
    let mut best = (lo, values[0]);
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (lo + k, v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lrt(h: usize, values: Vec<f64>) -> LrtSeries {
        LrtSeries { h, values }
    }

    #[test]
    fn triangle_offsets() {
        let p = Pattern::new(PatternKind::Triangle, 2, 0).unwrap();
        assert_eq!(p.weights, vec![-0.5, 0.0, 0.5, 0.0, -0.5]);
    }

    #[test]
    fn triangle_matches_continuous_shape() {
        let h = 7;
        let p = Pattern::new(PatternKind::Triangle, h, 0).unwrap();
        for k in -(h as i64)..=h as i64 {
            let t = k as f64;
            let expected = if k <= 0 { t / h as f64 + 0.5 } else { -t / h as f64 + 0.5 };
            assert!((p.weight(k) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn indicator_and_degenerate_trapezium() {
        let p = Pattern::new(PatternKind::Indicator, 3, 0).unwrap();
        assert_eq!(p.weights.iter().sum::<f64>(), 1.0);
        assert_eq!(p.weight(0), 1.0);
        for h in 1..9 {
            assert_eq!(
                Pattern::new(PatternKind::Trapezium, h, 0).unwrap().weights,
                Pattern::new(PatternKind::Triangle, h, 0).unwrap().weights
            );
        }
    }

    #[test]
    fn trapezium_has_flat_top() {
        let p = Pattern::new(PatternKind::Trapezium, 5, 4).unwrap();
        for k in -2..=2 {
            assert_eq!(p.weight(k), 0.5);
        }
        assert_eq!(p.weight(5), -0.5);
        assert!(p.weight(3) < 0.5 && p.weight(3) > -0.5);
        assert!(Pattern::new(PatternKind::Trapezium, 5, 10).is_err());
        assert!(Pattern::new(PatternKind::Triangle, 0, 0).is_err());
    }

    #[test]
    fn horn_is_zero_sum_and_antisymmetric() {
        let p = Pattern::new(PatternKind::Horn, 6, 0).unwrap();
        assert_eq!(p.weight(-6), -0.5);
        assert_eq!(p.weight(6), 0.5);
        assert!(p.weights.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn l1_normalization() {
        for kind in [PatternKind::Triangle, PatternKind::Trapezium, PatternKind::Horn, PatternKind::Indicator] {
            let p = Pattern::new(kind, 9, 3).unwrap().normalized(Normalization::L1);
            assert!((p.weights.iter().map(|w| w.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tp_examples() {
        let tri = Pattern::new(PatternKind::Triangle, 2, 0).unwrap();
        let shape = lrt(2, vec![0.0, 0.0, -0.5, 0.0, 0.5, 0.0, -0.5, 0.0, 0.0]);
        // positions 2..=10, pattern centred at 6
        assert!((tp_statistic(&shape, &tri, 6).unwrap() - 0.75).abs() < 1e-15);
        let ind = Pattern::new(PatternKind::Indicator, 2, 0).unwrap();
        let s = lrt(2, vec![0.3, 1.7, 0.2]);
        assert_eq!(tp_statistic(&s, &ind, 3).unwrap(), 1.7);
        assert_eq!(tp_statistic(&s, &ind, 2).unwrap(), 0.3);
        assert!(matches!(tp_statistic(&s, &tri, 3), Err(Error::OutOfRange { .. })));
        let horn = Pattern::new(PatternKind::Horn, 3, 0).unwrap();
        let flat = lrt(3, vec![2.0; 20]);
        assert!(tp_statistic(&flat, &horn, 10).unwrap().abs() < 1e-15);
    }

    #[test]
    fn max_tp_tie_break_and_spike() {
        let tri = Pattern::new(PatternKind::Triangle, 3, 0).unwrap();
        let zero = lrt(3, vec![0.0; 20]);
        assert_eq!(max_tp(&zero, &tri).unwrap(), (6, 0.0));
        let ind = Pattern::new(PatternKind::Indicator, 3, 0).unwrap();
        let mut spike = vec![0.0; 20];
        spike[9] = 4.0;
        assert_eq!(max_tp(&lrt(3, spike), &ind).unwrap(), (12, 4.0));
        assert!(max_tp(&lrt(3, vec![0.0; 5]), &tri).is_err());
    }

    #[test]
    fn pattern_csv() {
        let p = Pattern::new(PatternKind::Triangle, 1, 0).unwrap();
        assert_eq!(p.to_csv(), "offset,weight\n-1,-0.5\n0,0.5\n1,-0.5\n");
    }
}
