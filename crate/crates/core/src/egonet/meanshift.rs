//! One-dimensional flat-kernel mean shift.
//!
//! Every point seeds a trajectory; the window at center `m` is the closed
//! interval `[m - h, m + h]`. A trajectory stops once a step moves less than
//! `1e-6` of the data range. Converged modes closer than `h / 2` are chained
//! into one cluster.

/// Relative convergence tolerance, as a fraction of the data range.
pub const CONVERGENCE_FRACTION: f64 = 1e-6;
/// Neighbor rank used by [`estimate_bandwidth`], as a fraction of `n`.
pub const DEFAULT_QUANTILE: f64 = 0.3;
const MAX_ITERATIONS: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per input point; clusters are numbered by ascending mode.
    pub labels: Vec<usize>,
    /// Mean of the converged modes merged into each cluster.
    pub modes: Vec<f64>,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.modes.len()
    }
}

/// Mean distance from each point to its `ceil(quantile * n)`-th nearest
/// neighbor (the point itself excluded).
pub fn estimate_bandwidth(values: &[f64], quantile: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((quantile * n as f64).ceil() as usize).clamp(1, n - 1);

    // In sorted 1-D data the k nearest neighbors of a point form a contiguous
    // run around it, so a two-pointer merge finds the k-th distance in O(k).
    let total: f64 = (0..n)
        .map(|i| {
            let x = sorted[i];
            let (mut left, mut right) = (i, i);
            let mut kth = 0.0;
            for _ in 0..k {
                let dl = if left > 0 { x - sorted[left - 1] } else { f64::INFINITY };
                let dr = if right + 1 < n { sorted[right + 1] - x } else { f64::INFINITY };
                if dl <= dr {
                    left -= 1;
                    kth = dl;
                } else {
                    right += 1;
                    kth = dr;
                }
            }
            kth
        })
        .sum();
    total / n as f64
}

/// Runs mean shift over `values` with window half-width `bandwidth`.
pub fn mean_shift(values: &[f64], bandwidth: f64) -> Clustering {
    let n = values.len();
    if n == 0 {
        return Clustering { labels: Vec::new(), modes: Vec::new() };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let range = sorted[n - 1] - sorted[0];
    if range == 0.0 {
        return Clustering { labels: vec![0; n], modes: vec![sorted[0]] };
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &x in &sorted {
        prefix.push(prefix.last().unwrap() + x);
    }
    let tol = CONVERGENCE_FRACTION * range;
    let h = bandwidth.max(0.0);

    let climb = |start: f64| -> f64 {
        let mut m = start;
        for _ in 0..MAX_ITERATIONS {
            let lo = sorted.partition_point(|&x| x < m - h);
            let hi = sorted.partition_point(|&x| x <= m + h);
            if hi <= lo {
                break;
            }
            let next = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            let step = (next - m).abs();
            m = next;
            if step < tol {
                break;
            }
        }
        m
    };

    // Equal values follow identical trajectories; climb once per distinct value.
    let mut modes_sorted = Vec::with_capacity(n);
    let mut last: Option<(f64, f64)> = None;
    for &x in &sorted {
        let mode = match last {
            Some((v, m)) if v == x => m,
            _ => climb(x),
        };
        last = Some((x, mode));
        modes_sorted.push(mode);
    }

    // Sort points by converged mode and chain-merge modes within h / 2.
    let mut by_mode: Vec<usize> = (0..n).collect();
    by_mode.sort_by(|&a, &b| modes_sorted[a].total_cmp(&modes_sorted[b]).then(a.cmp(&b)));
    let mut labels_sorted = vec![0usize; n];
    let mut modes: Vec<f64> = Vec::new();
    let mut group_sum = 0.0;
    let mut group_len = 0usize;
    let mut prev: Option<f64> = None;
    for &p in &by_mode {
        let m = modes_sorted[p];
        if let Some(pm) = prev {
            if m > pm && m - pm >= h / 2.0 {
                modes.push(group_sum / group_len as f64);
                group_sum = 0.0;
                group_len = 0;
            }
        }
        labels_sorted[p] = modes.len();
        group_sum += m;
        group_len += 1;
        prev = Some(m);
    }
    modes.push(group_sum / group_len as f64);

    let mut labels = vec![0usize; n];
    for (rank, &orig) in order.iter().enumerate() {
        labels[orig] = labels_sorted[rank];
    }
    Clustering { labels, modes }
}
