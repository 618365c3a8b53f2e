use serde::{Deserialize, Serialize};

/// Log-spaced key-press duration histogram.
///
/// `n_buckets` edges are spaced log-uniformly over `[low, high]`; bucket `i`
/// covers `[edge[i], edge[i + 1])` and the last bucket absorbs every duration
/// at or above `high`. Durations under `min_timing` are discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBuckets {
    pub n_buckets: usize,
    pub low: f64,
    pub high: f64,
    pub min_timing: f64,
}

impl Default for TimingBuckets {
    fn default() -> Self {
        TimingBuckets {
            n_buckets: 100,
            low: 1e-2,
            high: 10.0,
            min_timing: 1e-2,
        }
    }
}

impl TimingBuckets {
    pub fn edges(&self) -> Vec<f64> {
        let span = (self.high / self.low).ln();
        let last = (self.n_buckets - 1) as f64;
        (0..self.n_buckets)
            .map(|i| {
                if i + 1 == self.n_buckets {
                    self.high
                } else {
                    self.low * (span * i as f64 / last).exp()
                }
            })
            .collect()
    }

    /// Bucket index for a duration, or `None` when it falls under the
    /// minimum timing (or below the first edge).
    pub fn bucket(&self, duration: f64) -> Option<usize> {
        if !(duration >= self.min_timing) || duration < self.low {
            return None;
        }
        let overflow = self.n_buckets - 1;
        if duration >= self.high {
            return Some(overflow);
        }
        let edges = self.edges();
        let pos = (duration / self.low).ln() / (self.high / self.low).ln() * overflow as f64;
        let mut idx = (pos.floor().max(0.0) as usize).min(overflow - 1);
        // float rounding near an edge
        while idx + 1 < overflow && duration >= edges[idx + 1] {
            idx += 1;
        }
        while idx > 0 && duration < edges[idx] {
            idx -= 1;
        }
        Some(idx)
    }

    pub fn histogram<I: IntoIterator<Item = f64>>(&self, durations: I) -> Vec<f64> {
        let mut h = vec![0.0; self.n_buckets];
        for d in durations {
            if let Some(b) = self.bucket(d) {
                h[b] += 1.0;
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_strictly_increasing() {
        let b = TimingBuckets::default();
        let e = b.edges();
        assert_eq!(e.len(), 100);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(e[0], 1e-2);
        assert_eq!(e[99], 10.0);
    }

    #[test]
    fn every_bucket_reachable_at_its_edge() {
        let b = TimingBuckets::default();
        for (i, e) in b.edges().iter().enumerate() {
            assert_eq!(b.bucket(*e), Some(i), "edge {i}");
        }
        assert_eq!(b.bucket(1e6), Some(99));
        assert_eq!(b.bucket(0.0099), None);
    }
}
