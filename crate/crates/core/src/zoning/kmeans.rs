//! One-dimensional K-means and elbow selection of K.
//!
//! Lloyd's algorithm runs on the sorted values: with ascending centroids every
//! cluster is a contiguous run of the sorted array, so an assignment step is a
//! binary search per centroid boundary and an update step is a prefix-sum
//! lookup. Besides the seeded restarts, each fit also starts once from the
//! exact optimal partition.

use serde::{Deserialize, Serialize};

use super::ZoningError;

pub const MAX_ITERATIONS: usize = 300;
/// K-means++ restarts per call; the run with the lowest WCSS wins.
pub const RESTARTS: usize = 10;
/// WCSS values are floored at this fraction of WCSS(1) before taking logs.
const LOG_FLOOR: f64 = 1e-12;

/// xorshift64* seeded through splitmix64.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self {
            state: if z == 0 { 0x2545_F491_4F6C_DD1D } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Strictly ascending.
    pub centroids: Vec<f64>,
    /// Cluster index of each input value, in input order.
    pub labels: Vec<usize>,
    pub wcss: f64,
}

impl ClusterModel {
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.labels.len() as f64;
        self.counts().into_iter().map(|c| c as f64 / n).collect()
    }
}

/// True when `v` is at least as close to `lower` as to `upper`; ties go to
/// the lower centroid.
fn nearer_lower(v: f64, lower: f64, upper: f64) -> bool {
    (v - lower).abs() <= (v - upper).abs()
}

/// Index of the nearest centroid; ties break toward the lower index.
pub fn nearest_centroid(v: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate().skip(1) {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = i;
        }
    }
    best
}

pub fn distinct_count(sorted: &[f64]) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

struct Sorted<'a> {
    values: &'a [f64],
    prefix: Vec<f64>,
}

impl<'a> Sorted<'a> {
    fn new(values: &'a [f64]) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in values {
            acc += v;
            prefix.push(acc);
        }
        Self { values, prefix }
    }

    /// End index (exclusive) of each cluster for ascending `centroids`.
    fn boundaries(&self, centroids: &[f64]) -> Vec<usize> {
        let k = centroids.len();
        let mut ends = Vec::with_capacity(k);
        for j in 0..k - 1 {
            let (lo, hi) = (centroids[j], centroids[j + 1]);
            ends.push(self.values.partition_point(|&v| nearer_lower(v, lo, hi)));
        }
        ends.push(self.values.len());
        // Monotone by construction for ascending centroids; enforce against
        // rounding at coincident boundaries.
        for j in 1..k {
            ends[j] = ends[j].max(ends[j - 1]);
        }
        ends
    }

    fn segment_mean(&self, start: usize, end: usize) -> f64 {
        (self.prefix[end] - self.prefix[start]) / (end - start) as f64
    }
}

fn kmeans_pp_seed(values: &[f64], k: usize, rng: &mut XorShift64Star) -> Vec<f64> {
    let mut centroids = vec![values[rng.below(values.len())]];
    let mut d2: Vec<f64> = values
        .iter()
        .map(|v| (v - centroids[0]) * (v - centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        // `total > 0` while fewer centroids than distinct values are chosen.
        let c = values[pick.expect("a value away from every chosen centroid")];
        centroids.push(c);
        for (w, v) in d2.iter_mut().zip(values) {
            *w = w.min((v - c) * (v - c));
        }
    }
    centroids.sort_by(f64::total_cmp);
    centroids
}

/// One Lloyd run from `centroids`; returns the final cluster ends.
fn lloyd(data: &Sorted<'_>, centroids: &mut [f64]) -> Vec<usize> {
    let n = data.values.len();
    let mut ends = data.boundaries(centroids);
    for _ in 0..MAX_ITERATIONS {
        let mut start = 0;
        for (j, &end) in ends.iter().enumerate() {
            if end > start {
                centroids[j] = data.segment_mean(start, end);
            }
            start = end;
        }
        // Re-seed empty clusters at the value farthest from its centroid.
        let mut start = 0;
        let mut empty = Vec::new();
        for (j, &end) in ends.iter().enumerate() {
            if end == start {
                empty.push(j);
            }
            start = end;
        }
        if !empty.is_empty() {
            let mut taken = Vec::new();
            for j in empty {
                let mut best: Option<(f64, usize)> = None;
                let mut s = 0;
                for (c, &e) in ends.iter().enumerate() {
                    for i in s..e {
                        let d = (data.values[i] - centroids[c]).abs();
                        if !taken.contains(&i) && best.is_none_or(|(bd, _)| d > bd) {
                            best = Some((d, i));
                        }
                    }
                    s = e;
                }
                if let Some((_, i)) = best {
                    taken.push(i);
                    centroids[j] = data.values[i];
                }
            }
        }
        centroids.sort_by(f64::total_cmp);
        let next = data.boundaries(centroids);
        if next == ends {
            break;
        }
        ends = next;
    }
    debug_assert_eq!(*ends.last().unwrap_or(&0), n);
    ends
}

fn has_empty(ends: &[usize]) -> bool {
    ends.iter()
        .zip(std::iter::once(&0).chain(ends.iter()))
        .any(|(e, s)| e == s)
}

fn wcss_of(values: &[f64], ends: &[usize]) -> (Vec<f64>, f64) {
    let mut centroids = Vec::with_capacity(ends.len());
    let mut total = 0.0;
    let mut start = 0;
    for &end in ends {
        let seg = &values[start..end];
        let c = seg.iter().sum::<f64>() / seg.len() as f64;
        total += seg.iter().map(|v| (v - c) * (v - c)).sum::<f64>();
        centroids.push(c);
        start = end;
    }
    (centroids, total)
}

/// Values sorted ascending together with their input positions.
struct Prepared {
    order: Vec<usize>,
    sorted: Vec<f64>,
    distinct: usize,
}

fn prepare(values: &[f64]) -> Result<Prepared, ZoningError> {
    if values.is_empty() {
        return Err(ZoningError::EmptyInput);
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ZoningError::NonFiniteValue(*bad));
    }
    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (sorted, order): (Vec<f64>, Vec<usize>) = pairs.into_iter().unzip();
    let distinct = distinct_count(&sorted);
    Ok(Prepared {
        order,
        sorted,
        distinct,
    })
}

/// Best of [`RESTARTS`] seeded runs: `(wcss, centroids, cluster ends)`.
fn fit(
    prepared: &Prepared,
    k: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>, Vec<usize>), ZoningError> {
    let distinct = prepared.distinct;
    if k == 0 || k > distinct {
        return Err(ZoningError::KTooLarge { k, distinct });
    }
    let sorted = &prepared.sorted;
    let data = Sorted::new(sorted);
    let mut rng = XorShift64Star::new(seed);
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut consider = |ends: Vec<usize>| {
        if has_empty(&ends) {
            return;
        }
        let candidate = settle(&data, ends);
        if best.as_ref().is_none_or(|b| candidate.0 < b.0) {
            best = Some(candidate);
        }
    };
    for _ in 0..RESTARTS {
        let mut centroids = kmeans_pp_seed(sorted, k, &mut rng);
        consider(lloyd(&data, &mut centroids));
        if k == 1 {
            break;
        }
    }
    // The optimal 1-D partition is itself a Lloyd fixed point; offering it
    // as a final start keeps restarts from settling in a local optimum.
    if k > 1 {
        consider(optimal_ends(sorted, k));
    }
    best.ok_or(ZoningError::EmptyCluster { k })
}

/// Settles a partition against directly summed centroids so that the
/// published centroids and labels agree exactly.
fn settle(data: &Sorted<'_>, mut ends: Vec<usize>) -> (f64, Vec<f64>, Vec<usize>) {
    let (mut centroids, mut wcss) = wcss_of(data.values, &ends);
    for _ in 0..MAX_ITERATIONS {
        let next = data.boundaries(&centroids);
        if next == ends || has_empty(&next) {
            break;
        }
        ends = next;
        (centroids, wcss) = wcss_of(data.values, &ends);
    }
    (wcss, centroids, ends)
}

/// Cluster ends of the minimum-WCSS split of `sorted` into `k` contiguous
/// runs. Dynamic programming over prefix sums; the best split point is
/// monotone in the run end, so each layer is solved by divide and conquer.
#[allow(clippy::needless_range_loop)]
fn optimal_ends(sorted: &[f64], k: usize) -> Vec<usize> {
    let n = sorted.len();
    let shift = sorted[n / 2];
    let (mut s1, mut s2) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    for (i, v) in sorted.iter().enumerate() {
        let d = v - shift;
        s1[i + 1] = s1[i] + d;
        s2[i + 1] = s2[i] + d * d;
    }
    let cost = |i: usize, j: usize| {
        let sum = s1[j] - s1[i];
        (s2[j] - s2[i] - sum * sum / (j - i) as f64).max(0.0)
    };

    let mut prev: Vec<f64> = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { cost(0, j) })
        .collect();
    let mut split = vec![vec![0usize; n + 1]; k + 1];
    for m in 2..=k {
        let mut cur = vec![f64::INFINITY; n + 1];
        // (run-end range, split range) pairs still to solve.
        let mut stack = vec![(m, n, m - 1, n - 1)];
        while let Some((jlo, jhi, ilo, ihi)) = stack.pop() {
            if jlo > jhi {
                continue;
            }
            let j = (jlo + jhi) / 2;
            let mut best = (f64::INFINITY, ilo.max(m - 1));
            for i in ilo.max(m - 1)..=ihi.min(j - 1) {
                let c = prev[i] + cost(i, j);
                if c < best.0 {
                    best = (c, i);
                }
            }
            cur[j] = best.0;
            split[m][j] = best.1;
            if j > jlo {
                stack.push((jlo, j - 1, ilo, best.1));
            }
            stack.push((j + 1, jhi, best.1, ihi));
        }
        prev = cur;
    }

    let mut ends = vec![n; k];
    let mut j = n;
    for m in (2..=k).rev() {
        j = split[m][j];
        ends[m - 2] = j;
    }
    ends
}

/// Lloyd's K-means on scalars with deterministic k-means++ seeding.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Result<ClusterModel, ZoningError> {
    let prepared = prepare(values)?;
    let (wcss, centroids, ends) = fit(&prepared, k, seed)?;
    let mut labels = vec![0; values.len()];
    let mut start = 0;
    for (j, &end) in ends.iter().enumerate() {
        for &i in &prepared.order[start..end] {
            labels[i] = j;
        }
        start = end;
    }
    Ok(ClusterModel {
        k,
        centroids,
        labels,
        wcss,
    })
}

/// WCSS of the best K-means fit for `k = 1..=k_max`. Values of `k` at or
/// beyond the number of distinct values have zero WCSS.
pub fn wcss_curve(values: &[f64], k_max: usize, seed: u64) -> Result<Vec<f64>, ZoningError> {
    let prepared = prepare(values)?;
    (1..=k_max)
        .map(|k| {
            if k >= prepared.distinct {
                Ok(0.0)
            } else {
                fit(&prepared, k, seed).map(|f| f.0)
            }
        })
        .collect()
}

/// Elbow of the WCSS curve: the `k` in `2..k_max` with the largest second
/// difference of `ln WCSS`; ties go to the smaller `k`. Returns 1 when the
/// values are constant.
pub fn elbow_k(values: &[f64], k_max: usize, seed: u64) -> Result<usize, ZoningError> {
    if k_max < 3 {
        return Err(ZoningError::InvalidConfig(format!(
            "k_max must be at least 3, got {k_max}"
        )));
    }
    let curve = wcss_curve(values, k_max, seed)?;
    Ok(elbow_from_curve(&curve))
}

/// Elbow selection over a precomputed WCSS curve (`curve[i]` is WCSS for
/// `k = i + 1`).
pub fn elbow_from_curve(curve: &[f64]) -> usize {
    let w1 = curve[0];
    if w1 <= 0.0 {
        return 1;
    }
    let logs: Vec<f64> = curve.iter().map(|w| w.max(w1 * LOG_FLOOR).ln()).collect();
    let mut best_k = 2;
    let mut best = f64::NEG_INFINITY;
    for k in 2..curve.len() {
        let d = logs[k - 2] - 2.0 * logs[k - 1] + logs[k];
        if d > best {
            best = d;
            best_k = k;
        }
    }
    best_k
}
