//! Descriptive statistics shared by the zoning and log-analysis modules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no values to summarise")]
    EmptyInput,
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (n − 1 denominator); 0 for a single value.
pub fn sample_sd(values: &[f64]) -> Result<f64, StatsError> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Ok(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Quantile of already-sorted values with linear interpolation between order
/// statistics at position `(n − 1)·q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let pos = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    quantile_sorted(&sorted_copy(values), 0.5)
}

/// The column set of a daily-pressure summary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub range: f64,
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats, StatsError> {
    let sorted = sorted_copy(values);
    let min = *sorted.first().ok_or(StatsError::EmptyInput)?;
    let max = sorted[sorted.len() - 1];
    Ok(DescriptiveStats {
        mean: mean(values)?,
        sd: sample_sd(values)?,
        min,
        median: quantile_sorted(&sorted, 0.5)?,
        max,
        range: max - min,
    })
}

/// Adjusted Fisher–Pearson skewness (G1) and sample excess kurtosis (G2).
/// Both are 0 when the values have no spread or there are too few of them
/// (n < 3 for skewness, n < 4 for kurtosis).
pub fn skew_kurtosis(values: &[f64]) -> Result<(f64, f64), StatsError> {
    let m = mean(values)?;
    let n = values.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let skew = if values.len() >= 3 {
        let g1 = m3 / m2.powf(1.5);
        g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
    } else {
        0.0
    };
    let kurt = if values.len() >= 4 {
        let g2 = m4 / (m2 * m2) - 3.0;
        ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
    } else {
        0.0
    };
    Ok((skew, kurt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressure_table_fixture() {
        let s = descriptive_stats(&[986.1, 1012.6, 1035.7]).unwrap();
        assert_eq!(s.min, 986.1);
        assert_eq!(s.max, 1035.7);
        assert_eq!(s.median, 1012.6);
        assert!((s.range - 49.6).abs() < 1e-9);
    }

    #[test]
    fn single_value() {
        let s = descriptive_stats(&[7.5]).unwrap();
        assert_eq!((s.sd, s.range, s.mean, s.median), (0.0, 0.0, 7.5, 7.5));
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(descriptive_stats(&[]), Err(StatsError::EmptyInput));
        assert_eq!(median(&[]), Err(StatsError::EmptyInput));
    }

    #[test]
    fn quartiles_of_one_to_five() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.25).unwrap(), 2.0);
        assert_eq!(quantile_sorted(&v, 0.5).unwrap(), 3.0);
        assert_eq!(quantile_sorted(&v, 0.75).unwrap(), 4.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5).unwrap(), 1.5);
    }

    #[test]
    fn skew_kurtosis_reference_values() {
        // Reference values from pandas' Series.skew() / Series.kurt().
        let v = [1.0, 2.0, 2.0, 3.0, 7.0, 11.0];
        let (s, k) = skew_kurtosis(&v).unwrap();
        assert!((s - 1.2847152721252146).abs() < 1e-12, "{s}");
        assert!((k - 0.5703265721669677).abs() < 1e-12, "{k}");
        assert_eq!(skew_kurtosis(&[4.0; 10]).unwrap(), (0.0, 0.0));
    }
}
