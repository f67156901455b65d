use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HIST_BIN: u64 = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: u64,
    /// `counts.len() + 1` edges; bin `i` holds values in `[edges[i], edges[i+1])`.
    pub edges: Vec<u64>,
    pub counts: Vec<u64>,
}

/// Aggregate point counts over a set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    /// Number of samples.
    pub count: usize,
    pub total_points: u128,
    pub min: u64,
    pub max: u64,
    /// `total_points / count`, rounded once to the nearest f64.
    pub mean: f64,
    /// Middle value; average of the two middle values for even counts.
    pub median: f64,
    pub histogram: Histogram,
}

pub fn compute_stats(counts: &[u64]) -> Result<CloudStats> {
    compute_stats_with_bin(counts, DEFAULT_HIST_BIN)
}

pub fn compute_stats_with_bin(counts: &[u64], bin_width: u64) -> Result<CloudStats> {
    if counts.is_empty() {
        return Err(Error::EmptyInput("point-count sequence"));
    }
    if bin_width == 0 {
        return Err(Error::Validation("histogram bin width must be positive".into()));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let total: u128 = sorted.iter().map(|&c| c as u128).sum();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        let (a, b) = (sorted[n / 2 - 1] as u128, sorted[n / 2] as u128);
        ratio_to_f64(a + b, 2)
    };
    let (min, max) = (sorted[0], sorted[n - 1]);

    let first = min / bin_width * bin_width;
    let bins = ((max - first) / bin_width + 1) as usize;
    let mut hist = vec![0u64; bins];
    for &c in &sorted {
        hist[((c - first) / bin_width) as usize] += 1;
    }
    let edges = (0..=bins as u64).map(|i| first + i * bin_width).collect();

    Ok(CloudStats {
        count: n,
        total_points: total,
        min,
        max,
        mean: ratio_to_f64(total, n as u128),
        median,
        histogram: Histogram {
            bin_width,
            edges,
            counts: hist,
        },
    })
}

/// `num / den` as the f64 nearest the exact quotient (integer part exact up
/// to 2^53, remainder added once).
fn ratio_to_f64(num: u128, den: u128) -> f64 {
    let q = num / den;
    let r = num % den;
    q as f64 + r as f64 / den as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton() {
        let s = compute_stats(&[5]).unwrap();
        assert_eq!((s.mean, s.median), (5.0, 5.0));
        assert_eq!(s.histogram.counts, vec![1]);
        assert_eq!(s.histogram.edges, vec![0, 2000]);
    }

    #[test]
    fn even_length_median() {
        let s = compute_stats(&[4, 1, 3, 2]).unwrap();
        assert_eq!((s.mean, s.median), (2.5, 2.5));
    }

    #[test]
    fn constant_sequence() {
        let s = compute_stats(&[34_720, 34_720, 34_720]).unwrap();
        assert_eq!((s.mean, s.median), (34_720.0, 34_720.0));
        assert_eq!(s.histogram.edges, vec![34_000, 36_000]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(compute_stats(&[]), Err(Error::EmptyInput(_))));
        assert!(compute_stats_with_bin(&[1], 0).is_err());
    }

    #[test]
    fn histogram_bins() {
        let s = compute_stats_with_bin(&[0, 1999, 2000, 5999, 6000], 2000).unwrap();
        assert_eq!(s.histogram.edges, vec![0, 2000, 4000, 6000, 8000]);
        assert_eq!(s.histogram.counts, vec![2, 1, 1, 1]);
    }

    proptest! {
        #[test]
        fn summary_invariants(counts in prop::collection::vec(0u64..200_000, 1..200), bin in 1u64..10_000) {
            let s = compute_stats_with_bin(&counts, bin).unwrap();
            prop_assert!(s.min as f64 <= s.mean && s.mean <= s.max as f64);
            prop_assert!(s.min as f64 <= s.median && s.median <= s.max as f64);
            prop_assert_eq!(s.histogram.counts.iter().sum::<u64>(), counts.len() as u64);
            prop_assert_eq!(s.histogram.edges.len(), s.histogram.counts.len() + 1);
            prop_assert!(*s.histogram.edges.last().unwrap() > s.max);
        }
    }
}
