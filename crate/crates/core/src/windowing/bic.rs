//! Window-count selection by Bayesian information criterion.
//!
//! Each cluster is modeled as a Gaussian with its own mean, variance, and
//! mixing weight `n_c / n`:
//!
//! ```text
//! L   = sum over clusters c, points x in c of
//!       ln(n_c / n) + ln N(x; mean_c, var_c)
//! BIC = 2 L - (3 k - 1) ln n        (maximized)
//! ```
//!
//! Zero-variance and singleton clusters use a variance floor of one sampling
//! slot's uniform variance, `(5 min)^2 / 12`, so the likelihood stays finite.

use serde::Serialize;

use crate::error::Result;

use super::ckmeans::{ClusteringResult, DpSolution};

/// Default cap on the scanned number of windows.
pub const DEFAULT_K_MAX: usize = 25;

/// Variance floor: a uniform distribution over one 5-minute sampling slot.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 25.0 / 12.0;

/// One point of the BIC scan, exported as cluster diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BicPoint {
    pub k: usize,
    pub within_ssq: f64,
    pub bic: f64,
}

/// Outcome of the scan over k = 1..=k_max.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub best: ClusteringResult,
    /// BIC curve for every scanned k, ascending in k.
    pub scan: Vec<BicPoint>,
}

/// Gaussian-mixture BIC of a contiguous clustering of `sorted`.
pub(super) fn bic_score(
    sorted: &[f64],
    assignments: &[usize],
    k: usize,
    variance_floor: f64,
) -> f64 {
    let n = sorted.len() as f64;
    let mut log_likelihood = 0.0;
    let mut start = 0usize;
    for cluster in 0..k {
        let end = assignments
            .iter()
            .rposition(|&a| a == cluster)
            .map(|i| i + 1)
            .unwrap_or(start);
        if end == start {
            continue;
        }
        let points = &sorted[start..end];
        let n_c = points.len() as f64;
        let mean = points.iter().sum::<f64>() / n_c;
        let ssq: f64 = points.iter().map(|x| (x - mean) * (x - mean)).sum();
        let variance = (ssq / n_c).max(variance_floor);
        log_likelihood += n_c * (n_c / n).ln()
            - 0.5 * n_c * (2.0 * std::f64::consts::PI * variance).ln()
            - ssq / (2.0 * variance);
        start = end;
    }
    let parameter_count = (3 * k - 1) as f64;
    2.0 * log_likelihood - parameter_count * n.ln()
}

/// Scan k = 1..=k_max (capped at the number of distinct values) and return
/// the clustering with the highest BIC; ties go to the smaller k.
pub fn select_k_bic(timestamps: &[f64], k_max: usize) -> Result<KSelection> {
    select_k_bic_with(timestamps, k_max, DEFAULT_VARIANCE_FLOOR)
}

pub fn select_k_bic_with(
    timestamps: &[f64],
    k_max: usize,
    variance_floor: f64,
) -> Result<KSelection> {
    let k_cap = k_max.clamp(1, timestamps.len().max(1));
    let solution = DpSolution::solve(timestamps, k_cap)?;
    let distinct = 1 + solution
        .sorted
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    let k_cap = k_cap.min(distinct);

    let mut scan = Vec::with_capacity(k_cap);
    let mut best: Option<ClusteringResult> = None;
    for k in 1..=k_cap {
        let (assignments, within_ssq) = solution.extract(k);
        let bic = bic_score(&solution.sorted, &assignments, k, variance_floor);
        scan.push(BicPoint { k, within_ssq, bic });
        let improves = best.as_ref().map_or(true, |b| bic > b.bic);
        if improves {
            best = Some(ClusteringResult {
                k,
                assignments,
                within_ssq,
                bic,
            });
        }
    }
    Ok(KSelection {
        best: best.expect("scan covers at least k = 1"),
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_separated_groups_recover_k_3() {
        let timestamps = [0.0, 1.0, 2.0, 100.0, 101.0, 102.0, 500.0, 501.0, 502.0];
        let selection = select_k_bic(&timestamps, 9).unwrap();
        assert_eq!(selection.best.k, 3);
        assert_eq!(
            selection.best.assignments,
            vec![0, 0, 0, 1, 1, 1, 2, 2, 2]
        );
        assert_eq!(selection.scan.len(), 9);
    }

    #[test]
    fn single_timestamp_selects_k_1() {
        let selection = select_k_bic(&[42.0], 25).unwrap();
        assert_eq!(selection.best.k, 1);
        assert_eq!(selection.best.within_ssq, 0.0);
    }

    #[test]
    fn identical_timestamps_select_k_1() {
        let selection = select_k_bic(&[5.0; 20], 25).unwrap();
        assert_eq!(selection.best.k, 1);
    }

    #[test]
    fn k_cap_respects_distinct_count() {
        let selection = select_k_bic(&[1.0, 1.0, 2.0, 2.0, 3.0, 3.0], 25).unwrap();
        assert!(selection.scan.len() <= 3);
    }

    #[test]
    fn fig5_analogue_three_bursts_of_22_47_21_events() {
        // A resynthesized analogue of a 90-event device observed over 24h
        // whose three clusters have sizes 22, 47, and 21.
        let mut timestamps = Vec::new();
        for i in 0..22 {
            timestamps.push(60.0 + 5.0 * i as f64);
        }
        for i in 0..47 {
            timestamps.push(480.0 + 5.0 * i as f64);
        }
        for i in 0..21 {
            timestamps.push(1200.0 + 5.0 * i as f64);
        }
        let selection = select_k_bic(&timestamps, 25).unwrap();
        assert_eq!(selection.best.k, 3);
        let sizes: Vec<usize> = (0..3)
            .map(|c| selection.best.assignments.iter().filter(|&&a| a == c).count())
            .collect();
        assert_eq!(sizes, vec![22, 47, 21]);
    }

    #[test]
    fn bic_prefers_fewer_clusters_on_ties() {
        // Two identical values: k is capped at 1 distinct-wise; uniform data
        // in one tight clump should never pick k > 1 spuriously.
        let timestamps = [0.0, 5.0, 10.0, 15.0, 20.0];
        let selection = select_k_bic(&timestamps, 5).unwrap();
        assert_eq!(selection.best.k, 1);
    }
}
