//! Exact univariate k-means by dynamic programming.
//!
//! Minimizes the within-cluster sum of squared deviations over all partitions
//! of the sorted sequence into `k` contiguous runs. `D[m][i]` is the optimal
//! cost of the first `i + 1` points in `m + 1` clusters:
//!
//! ```text
//! D[m][i] = min over j of D[m-1][j-1] + ssq(j..=i)
//! ```
//!
//! with `ssq` evaluated in O(1) from shifted, compensated prefix sums.
//! O(k * n^2) time and O(k * n) space, which is ample at per-device event
//! counts; ties take the smaller left split index so results are fully
//! deterministic.

use crate::error::{Error, Result};

use super::bic::{bic_score, DEFAULT_VARIANCE_FLOOR};

/// An optimal contiguous clustering of a sorted 1-D sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub k: usize,
    /// Cluster index per point of the ascending sequence; non-decreasing.
    pub assignments: Vec<usize>,
    /// Sum over clusters of squared deviations from the cluster mean.
    pub within_ssq: f64,
    /// BIC of this clustering under the per-cluster Gaussian model.
    pub bic: f64,
}

/// Prefix statistics with values shifted near zero and Kahan-compensated
/// accumulation, so segment costs stay accurate for large timestamps.
pub(super) struct PrefixStats {
    /// `sum[i]` = sum of the first `i` shifted values.
    sum: Vec<f64>,
    /// `sum_sq[i]` = sum of the first `i` squared shifted values.
    sum_sq: Vec<f64>,
}

impl PrefixStats {
    pub(super) fn new(sorted: &[f64]) -> Self {
        let shift = sorted[sorted.len() / 2];
        let mut sum = Vec::with_capacity(sorted.len() + 1);
        let mut sum_sq = Vec::with_capacity(sorted.len() + 1);
        sum.push(0.0);
        sum_sq.push(0.0);
        let (mut s, mut s_c) = (0.0f64, 0.0f64);
        let (mut q, mut q_c) = (0.0f64, 0.0f64);
        for &x in sorted {
            let v = x - shift;
            kahan_add(&mut s, &mut s_c, v);
            kahan_add(&mut q, &mut q_c, v * v);
            sum.push(s);
            sum_sq.push(q);
        }
        PrefixStats { sum, sum_sq }
    }

    /// Within sum of squares of the inclusive segment `[j, i]`.
    #[inline]
    pub(super) fn ssq(&self, j: usize, i: usize) -> f64 {
        let n = (i - j + 1) as f64;
        let s = self.sum[i + 1] - self.sum[j];
        let q = self.sum_sq[i + 1] - self.sum_sq[j];
        (q - s * s / n).max(0.0)
    }
}

#[inline]
fn kahan_add(sum: &mut f64, compensation: &mut f64, value: f64) {
    let y = value - *compensation;
    let t = *sum + y;
    *compensation = (t - *sum) - y;
    *sum = t;
}

/// The filled DP tables for clusterings of one sequence into 1..=k_max
/// clusters. Filling once and backtracking per `k` is what makes the BIC scan
/// cheap.
pub(super) struct DpSolution {
    pub(super) sorted: Vec<f64>,
    k_max: usize,
    /// Row m: optimal cost with m + 1 clusters.
    cost: Vec<f64>,
    /// Row m: first index of the last cluster in the optimal split.
    split: Vec<usize>,
}

impl DpSolution {
    pub(super) fn solve(timestamps: &[f64], k_max: usize) -> Result<Self> {
        if timestamps.is_empty() {
            return Err(Error::validation("cannot cluster an empty sequence"));
        }
        let n = timestamps.len();
        if k_max == 0 {
            return Err(Error::validation("k must be positive"));
        }
        if k_max > n {
            return Err(Error::validation(format!(
                "k = {k_max} exceeds the number of points ({n})"
            )));
        }
        if timestamps.iter().any(|t| !t.is_finite()) {
            return Err(Error::validation("timestamps must be finite"));
        }
        let mut sorted = timestamps.to_vec();
        sorted.sort_by(f64::total_cmp);
        let stats = PrefixStats::new(&sorted);

        let mut cost = vec![0.0f64; k_max * n];
        let mut split = vec![0usize; k_max * n];
        for i in 0..n {
            cost[i] = stats.ssq(0, i);
        }
        for m in 1..k_max {
            let (prev_rows, rest) = cost.split_at_mut(m * n);
            let prev = &prev_rows[(m - 1) * n..m * n];
            let row = &mut rest[..n];
            let split_row = &mut split[m * n..(m + 1) * n];
            for i in m..n {
                let mut best = f64::INFINITY;
                let mut best_j = m;
                // j is the first index of the last cluster; ties keep the
                // smaller j for determinism.
                for j in m..=i {
                    let candidate = prev[j - 1] + stats.ssq(j, i);
                    if candidate < best {
                        best = candidate;
                        best_j = j;
                    }
                }
                row[i] = best;
                split_row[i] = best_j;
            }
        }
        Ok(DpSolution {
            sorted,
            k_max,
            cost,
            split,
        })
    }

    /// Backtrack the optimal assignment for `k` clusters (1-based count).
    pub(super) fn extract(&self, k: usize) -> (Vec<usize>, f64) {
        assert!(k >= 1 && k <= self.k_max);
        let n = self.sorted.len();
        let mut assignments = vec![0usize; n];
        let mut right = n - 1;
        for m in (0..k).rev() {
            let left = if m == 0 { 0 } else { self.split[m * n + right] };
            for a in assignments.iter_mut().take(right + 1).skip(left) {
                *a = m;
            }
            if m > 0 {
                right = left - 1;
            }
        }
        (assignments, self.cost[(k - 1) * n + (n - 1)])
    }
}

/// Optimal k-means clustering of `timestamps` into exactly `k` contiguous
/// clusters. Input order is irrelevant; assignments refer to the ascending
/// sequence.
pub fn ckmeans_fixed_k(timestamps: &[f64], k: usize) -> Result<ClusteringResult> {
    let solution = DpSolution::solve(timestamps, k)?;
    let (assignments, within_ssq) = solution.extract(k);
    let bic = bic_score(&solution.sorted, &assignments, k, DEFAULT_VARIANCE_FLOOR);
    Ok(ClusteringResult {
        k,
        assignments,
        within_ssq,
        bic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_example_three_clusters() {
        // Exhaustive search over contiguous 3-partitions of the sorted array
        // gives {-1 x4}, {2 x3}, {4, 5, 6} with within_ssq = 2.0.
        let input = [-1.0, 2.0, -1.0, 2.0, 4.0, 5.0, 6.0, -1.0, 2.0, -1.0];
        let result = ckmeans_fixed_k(&input, 3).unwrap();
        assert!((result.within_ssq - 2.0).abs() < 1e-9);
        assert_eq!(result.assignments, vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn equal_points_single_cluster_has_zero_ssq() {
        let input = [7.0; 6];
        let result = ckmeans_fixed_k(&input, 1).unwrap();
        assert_eq!(result.within_ssq, 0.0);
        assert_eq!(result.assignments, vec![0; 6]);
    }

    #[test]
    fn k_equals_n_gives_singletons_with_zero_ssq() {
        let input = [1.0, 5.0, 9.0, 20.0];
        let result = ckmeans_fixed_k(&input, 4).unwrap();
        assert_eq!(result.within_ssq, 0.0);
        assert_eq!(result.assignments, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        assert!(ckmeans_fixed_k(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(ckmeans_fixed_k(&[], 1).is_err());
    }

    #[test]
    fn assignments_are_non_decreasing() {
        let input = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let result = ckmeans_fixed_k(&input, 3).unwrap();
        assert!(result.assignments.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*result.assignments.last().unwrap(), 2);
    }

    #[test]
    fn large_offsets_do_not_lose_precision() {
        // Same structure shifted by ~10^9 minutes must give the same ssq.
        let base = [0.0, 5.0, 10.0, 5000.0, 5005.0, 5010.0];
        let shifted: Vec<f64> = base.iter().map(|t| t + 1.0e9).collect();
        let a = ckmeans_fixed_k(&base, 2).unwrap();
        let b = ckmeans_fixed_k(&shifted, 2).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert!((a.within_ssq - b.within_ssq).abs() < 1e-9);
    }
}
