//! Replicate summaries.

use serde::{Deserialize, Serialize};

/// Type-7 quantile of `sorted` (ascending) at level `p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean (sample standard deviation over √reps).
pub fn std_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub reps: usize,
    pub values: Vec<f64>,
    pub q50: f64,
    pub q90: f64,
    pub q95: f64,
    pub mean: f64,
    pub stderr: f64,
    pub seeds: Vec<u64>,
}

impl ReplicationSummary {
    /// Builds a summary; statistics use a sorted copy, so they do not depend
    /// on the order of `values`.
    pub fn from_values(values: Vec<f64>, seeds: Vec<u64>) -> Self {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        // Summing in sorted order keeps the mean permutation invariant.
        let mean = mean(&sorted);
        let stderr = std_error(&sorted);
        Self {
            reps: values.len(),
            q50: quantile_sorted(&sorted, 0.5),
            q90: quantile_sorted(&sorted, 0.9),
            q95: quantile_sorted(&sorted, 0.95),
            mean,
            stderr,
            values,
            seeds,
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile(&self.values, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_matches_hand_values() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert!((quantile(&v, 0.9) - 3.7).abs() < 1e-12);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn summary_is_permutation_invariant() {
        let a = ReplicationSummary::from_values(vec![0.1, 0.7, 0.3, 0.2], vec![]);
        let b = ReplicationSummary::from_values(vec![0.7, 0.2, 0.1, 0.3], vec![]);
        assert_eq!(a.q50.to_bits(), b.q50.to_bits());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
