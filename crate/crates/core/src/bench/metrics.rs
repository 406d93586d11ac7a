//! Mean optimization paths, their accumulated differences, and the
//! per-function normalization that makes differences comparable across
//! targets of different scale.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::OptimizationTrace;
use crate::error::{ProboError, Result};

/// Pointwise mean of equally long incumbent paths.
pub fn mean_path(paths: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = paths
        .first()
        .ok_or_else(|| ProboError::InvalidData("no repetitions to average".into()))?;
    if let Some(p) = paths.iter().find(|p| p.len() != first.len()) {
        return Err(ProboError::InvalidData(format!(
            "incumbent paths differ in length ({} vs {})",
            first.len(),
            p.len()
        )));
    }
    let r = paths.len() as f64;
    Ok((0..first.len()).map(|t| paths.iter().map(|p| p[t]).sum::<f64>() / r).collect())
}

/// MOP over the proposal iterations of `traces`.
pub fn mean_optimization_path(traces: &[OptimizationTrace]) -> Result<Vec<f64>> {
    let paths: Vec<Vec<f64>> = traces.iter().map(OptimizationTrace::incumbent_path).collect();
    mean_path(&paths)
}

/// Pointwise normal-approximation 95% confidence half-widths,
/// `1.96 · sd / √R` with the sample standard deviation. Zero for `R = 1`.
pub fn ci95_half_widths(paths: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mean = mean_path(paths)?;
    let r = paths.len();
    if r < 2 {
        return Ok(vec![0.0; mean.len()]);
    }
    Ok(mean
        .iter()
        .enumerate()
        .map(|(t, m)| {
            let ss: f64 = paths.iter().map(|p| (p[t] - m).powi(2)).sum();
            1.96 * (ss / (r - 1) as f64).sqrt() / (r as f64).sqrt()
        })
        .collect())
}

/// `T × S` matrix of mean optimization paths, one column per setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MopMatrix {
    pub labels: Vec<String>,
    /// Column-major: `columns[s][t]`.
    pub columns: Vec<Vec<f64>>,
    pub repetitions: usize,
}

impl MopMatrix {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<f64>>, repetitions: usize) -> Result<Self> {
        if labels.len() != columns.len() {
            return Err(ProboError::InvalidData(format!("{} labels for {} columns", labels.len(), columns.len())));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(ProboError::InvalidData("MOP columns differ in length".into()));
            }
        }
        Ok(MopMatrix { labels, columns, repetitions })
    }

    pub fn iterations(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn settings(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.columns[s][t]
    }

    /// `mop.csv`: one row per iteration, one column per setting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for t in 0..self.iterations() {
            let mut row = vec![(t + 1).to_string()];
            row.extend(self.columns.iter().map(|c| c[t].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `AD = Σ_t (max_s MOP_{t,s} − min_s MOP_{t,s})`.
pub fn accumulated_difference(mop: &MopMatrix) -> Result<f64> {
    if mop.settings() < 2 {
        return Err(ProboError::Plan(format!(
            "accumulated difference needs at least 2 settings, got {}",
            mop.settings()
        )));
    }
    Ok((0..mop.iterations())
        .map(|t| {
            let (lo, hi) = mop
                .columns
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[t]), hi.max(c[t])));
            hi - lo
        })
        .sum())
}

/// Accumulated differences of one function, one per prior axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionAds {
    pub function: String,
    pub ads: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeAdSummary {
    pub axes: Vec<String>,
    /// `(function, relative AD per axis)` for every function kept.
    pub relative: Vec<(String, Vec<f64>)>,
    /// Sum of relative ADs per axis over the kept functions.
    pub sums: Vec<f64>,
    /// Functions whose ADs are all zero and cannot be normalized.
    pub excluded: Vec<String>,
}

/// Divides each function's ADs by that function's mean AD across axes and
/// sums the results per axis.
pub fn relative_ad_summary(axes: &[String], per_function: &[FunctionAds]) -> Result<RelativeAdSummary> {
    let mut relative = Vec::new();
    let mut excluded = Vec::new();
    let mut sums = vec![0.0; axes.len()];
    for f in per_function {
        if f.ads.len() != axes.len() {
            return Err(ProboError::InvalidData(format!(
                "{} has {} ADs for {} axes",
                f.function,
                f.ads.len(),
                axes.len()
            )));
        }
        let mean = f.ads.iter().sum::<f64>() / axes.len() as f64;
        if !(mean > 0.0) || !mean.is_finite() {
            log::warn!("{}: all accumulated differences are zero; excluded from the relative summary", f.function);
            excluded.push(f.function.clone());
            continue;
        }
        let rel: Vec<f64> = f.ads.iter().map(|a| a / mean).collect();
        for (s, r) in sums.iter_mut().zip(&rel) {
            *s += r;
        }
        relative.push((f.function.clone(), rel));
    }
    Ok(RelativeAdSummary { axes: axes.to_vec(), relative, sums, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn axes() -> Vec<String> {
        ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn mop_by_hand() {
        let mop = mean_path(&[vec![3.0, 2.0, 2.0], vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(mop, vec![2.0, 1.5, 1.0]);
        assert_eq!(mean_path(&[vec![4.0, 3.0]]).unwrap(), vec![4.0, 3.0]);
        assert!(mean_path(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn ad_by_hand() {
        let mop = MopMatrix::new(vec!["p".into(), "q".into()], vec![vec![1.0, 2.0], vec![3.0, 2.0]], 1).unwrap();
        assert_eq!(accumulated_difference(&mop).unwrap(), 2.0);
        let single = MopMatrix::new(vec!["p".into()], vec![vec![1.0]], 1).unwrap();
        assert!(accumulated_difference(&single).is_err());
        let same = MopMatrix::new(vec!["p".into(), "q".into()], vec![vec![1.0, 0.5]; 2], 1).unwrap();
        assert_eq!(accumulated_difference(&same).unwrap(), 0.0);
    }

    #[test]
    fn relative_ads_by_hand() {
        let s = relative_ad_summary(&axes(), &[FunctionAds { function: "f".into(), ads: vec![1.0; 4] }]).unwrap();
        assert_eq!(s.sums, vec![1.0; 4]);
        let s = relative_ad_summary(&axes(), &[FunctionAds { function: "f".into(), ads: vec![2.0, 0.0, 0.0, 2.0] }])
            .unwrap();
        assert_eq!(s.relative[0].1, vec![2.0, 0.0, 0.0, 2.0]);
        let s = relative_ad_summary(
            &axes(),
            &[
                FunctionAds { function: "zero".into(), ads: vec![0.0; 4] },
                FunctionAds { function: "g".into(), ads: vec![1.0, 3.0, 0.5, 0.5] },
            ],
        )
        .unwrap();
        assert_eq!(s.excluded, vec!["zero".to_string()]);
        assert_eq!(s.relative.len(), 1);
    }

    #[test]
    fn ci_half_width_formula() {
        let paths = vec![vec![1.0], vec![3.0]];
        // sd = √2, R = 2
        assert!((ci95_half_widths(&paths).unwrap()[0] - 1.96).abs() <= 1e-12);
        assert_eq!(ci95_half_widths(&paths[..1]).unwrap(), vec![0.0]);
    }

    #[test]
    fn mop_csv_shape() {
        let mop = MopMatrix::new(vec!["ei".into(), "lcb".into()], vec![vec![2.0, 1.0], vec![3.0, 0.5]], 4).unwrap();
        let mut buf = Vec::new();
        mop.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iter,ei,lcb\n1,2,3\n2,1,0.5\n");
    }

    proptest! {
        #[test]
        fn relative_ads_sum_to_axis_count(ads in prop::collection::vec(0.001f64..100.0, 4), scale in 0.01f64..100.0) {
            let s = relative_ad_summary(&axes(), &[FunctionAds { function: "f".into(), ads: ads.clone() }]).unwrap();
            prop_assert!((s.relative[0].1.iter().sum::<f64>() - 4.0).abs() <= 1e-10);
            let scaled: Vec<f64> = ads.iter().map(|a| a * scale).collect();
            let t = relative_ad_summary(&axes(), &[FunctionAds { function: "f".into(), ads: scaled }]).unwrap();
            for (a, b) in s.relative[0].1.iter().zip(&t.relative[0].1) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn ad_nonnegative_and_shift_invariant(
            cols in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 5), 2..5),
            shift in -100.0f64..100.0,
        ) {
            let labels = (0..cols.len()).map(|i| i.to_string()).collect::<Vec<_>>();
            let mop = MopMatrix::new(labels.clone(), cols.clone(), 1).unwrap();
            let ad = accumulated_difference(&mop).unwrap();
            prop_assert!(ad >= 0.0);
            let shifted: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|v| v + shift).collect()).collect();
            let ad2 = accumulated_difference(&MopMatrix::new(labels, shifted, 1).unwrap()).unwrap();
            prop_assert!((ad - ad2).abs() <= 1e-9);
        }

        #[test]
        fn mop_is_permutation_invariant(mut paths in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..6)) {
            let a = mean_path(&paths).unwrap();
            paths.reverse();
            let b = mean_path(&paths).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
