//! Evaluation metrics: mean queue length (efficiency), the second-order
//! difference ratio of phase durations (steadiness), and green-time ratios.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean queue length per lane per time step over a rectangular `T x M` trace
/// of per-lane queue lengths (meters).
pub fn efficiency<S: Scalar>(queue_trace: &[Vec<S>]) -> Result<S> {
    if queue_trace.is_empty() || queue_trace[0].is_empty() {
        return Err(Error::spec("efficiency needs a non-empty queue trace"));
    }
    let lanes = queue_trace[0].len();
    let mut total = S::zero();
    for row in queue_trace {
        if row.len() != lanes {
            return Err(Error::spec("queue trace rows must have equal lane counts"));
        }
        for &q in row {
            total = total + q;
        }
    }
    let cells = S::from_usize_lossy(queue_trace.len() * lanes);
    Ok(total / cells)
}

/// Steadiness of a `K x N` phase-duration matrix (rows are periods): the sum
/// of absolute second-order differences per phase, normalized by the total
/// duration. Zero for constant or linearly ramping durations.
pub fn steadiness<S: Scalar>(duration_matrix: &[Vec<u32>]) -> Result<S> {
    let periods = duration_matrix.len();
    if periods < 3 {
        return Err(Error::spec(format!("steadiness needs at least 3 periods, got {periods}")));
    }
    let phases = duration_matrix[0].len();
    if phases == 0 || duration_matrix.iter().any(|row| row.len() != phases) {
        return Err(Error::spec("duration matrix rows must have equal phase counts"));
    }
    let mut second_diff_total: u64 = 0;
    let mut duration_total: u64 = 0;
    for n in 0..phases {
        for i in 0..periods {
            duration_total += duration_matrix[i][n] as u64;
            if i + 2 < periods {
                let d0 = duration_matrix[i][n] as i64;
                let d1 = duration_matrix[i + 1][n] as i64;
                let d2 = duration_matrix[i + 2][n] as i64;
                second_diff_total += (d2 - 2 * d1 + d0).unsigned_abs();
            }
        }
    }
    if duration_total == 0 {
        return Err(Error::spec("duration matrix sums to zero"));
    }
    Ok(S::from_f64_lossy(second_diff_total as f64 / duration_total as f64))
}

/// Per-period share of the cycle allocated to each phase group.
///
/// `groups` lists phase indices per direction group; every returned row holds
/// one ratio per group, in group order.
pub fn green_time_ratio<S: Scalar>(duration_matrix: &[Vec<u32>], groups: &[Vec<usize>]) -> Result<Vec<Vec<S>>> {
    if groups.is_empty() {
        return Err(Error::spec("green-time ratio needs at least one phase group"));
    }
    let mut out = Vec::with_capacity(duration_matrix.len());
    for row in duration_matrix {
        let cycle: u64 = row.iter().map(|&d| d as u64).sum();
        if cycle == 0 {
            return Err(Error::spec("period with zero cycle length"));
        }
        let mut ratios = Vec::with_capacity(groups.len());
        for group in groups {
            let mut g: u64 = 0;
            for &n in group {
                let d = row
                    .get(n)
                    .ok_or_else(|| Error::spec(format!("group references phase {n} beyond row width {}", row.len())))?;
                g += *d as u64;
            }
            ratios.push(S::from_f64_lossy(g as f64 / cycle as f64));
        }
        out.push(ratios);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_of_constant_and_mixed_traces() {
        let zeros = vec![vec![0.0f64; 4]; 10];
        assert_eq!(efficiency(&zeros).unwrap(), 0.0);
        let constant = vec![vec![7.5f64; 3]; 20];
        assert!((efficiency(&constant).unwrap() - 7.5).abs() < 1e-12);
        let trace = vec![vec![0.0f64, 10.0], vec![20.0, 30.0]];
        assert!((efficiency(&trace).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_rejects_empty_and_ragged_traces() {
        assert!(efficiency::<f64>(&[]).is_err());
        let ragged = vec![vec![1.0f64, 2.0], vec![1.0]];
        assert!(efficiency(&ragged).is_err());
    }

    #[test]
    fn steadiness_vanishes_for_constant_and_linear_sequences() {
        let constant = vec![vec![30u32, 40]; 6];
        assert_eq!(steadiness::<f64>(&constant).unwrap(), 0.0);
        let linear: Vec<Vec<u32>> = (0..6).map(|i| vec![20 + 3 * i, 50 - 2 * i]).collect();
        assert_eq!(steadiness::<f64>(&linear).unwrap(), 0.0);
    }

    #[test]
    fn steadiness_hand_example() {
        // single phase, durations (30, 40, 30): |30 - 80 + 30| / 100 = 0.2
        let m = vec![vec![30u32], vec![40], vec![30]];
        assert!((steadiness::<f64>(&m).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn steadiness_is_scale_invariant() {
        let base = vec![vec![30u32, 12], vec![45, 20], vec![30, 16], vec![60, 9]];
        let scaled: Vec<Vec<u32>> = base.iter().map(|r| r.iter().map(|&d| d * 3).collect()).collect();
        let a: f64 = steadiness(&base).unwrap();
        let b: f64 = steadiness(&scaled).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn steadiness_needs_three_periods() {
        assert!(steadiness::<f64>(&[vec![30], vec![40]]).is_err());
    }

    #[test]
    fn green_ratio_examples() {
        let equal = vec![vec![30u32, 30, 30, 30]];
        let r: Vec<Vec<f64>> = green_time_ratio(&equal, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(r[0], vec![0.5, 0.5]);

        let skew = vec![vec![40u32, 20, 20, 20]];
        let r: Vec<Vec<f64>> = green_time_ratio(&skew, &[vec![0]]).unwrap();
        assert!((r[0][0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_groups_partition_each_period() {
        let m = vec![vec![25u32, 14, 33, 9], vec![40, 9, 9, 61]];
        let groups: Vec<Vec<usize>> = (0..4).map(|n| vec![n]).collect();
        let r: Vec<Vec<f64>> = green_time_ratio(&m, &groups).unwrap();
        for row in r {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
