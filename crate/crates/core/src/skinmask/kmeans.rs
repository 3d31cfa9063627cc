//! k-means++ on circular hue values.
//!
//! Hues are embedded on the unit circle `(cos 2πh, sin 2πh)`; centers are
//! circular means and the cost is `Σ (1 − cos 2π(h − c))`, which Lloyd
//! iterations never increase.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_LLOYD_ITERS: usize = 100;
pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HueClusterModel {
    pub k: usize,
    /// Circular centers in `[0, 1)`, sorted ascending.
    pub centers: Vec<f64>,
    /// Cluster index per input hue.
    pub assignment: Vec<usize>,
    pub seed: u64,
    /// Cost after seeding and after each Lloyd iteration of the winning restart.
    pub cost_history: Vec<f64>,
}

impl HueClusterModel {
    pub fn cost(&self) -> f64 {
        *self.cost_history.last().unwrap_or(&0.0)
    }
}

/// Shortest distance on the unit hue circle.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Circular mean of hues in `[0, 1)`; `None` if the resultant vanishes.
pub fn circular_mean(hues: &[f64]) -> Option<f64> {
    let (s, c) = hues
        .iter()
        .fold((0.0, 0.0), |(s, c), &h| (s + (TAU * h).sin(), c + (TAU * h).cos()));
    if s.hypot(c) < 1e-12 * hues.len().max(1) as f64 {
        return None;
    }
    Some((s.atan2(c) / TAU).rem_euclid(1.0))
}

/// Sum of `1 − cos 2π(h − c)` with `c` the circular mean of each group.
pub fn partition_cost(hues: &[f64], assignment: &[usize], k: usize) -> f64 {
    let mut acc = vec![(0.0f64, 0.0f64, 0usize); k];
    for (&h, &a) in hues.iter().zip(assignment) {
        acc[a].0 += (TAU * h).cos();
        acc[a].1 += (TAU * h).sin();
        acc[a].2 += 1;
    }
    acc.iter().map(|&(c, s, n)| n as f64 - c.hypot(s)).sum()
}

struct Point {
    hue: f64,
    e: [f64; 2],
    weight: f64,
}

fn embed(h: f64) -> [f64; 2] {
    [(TAU * h).cos(), (TAU * h).sin()]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn nearest(e: [f64; 2], centers: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        let d = dot(e, c);
        if d > best_dot {
            best_dot = d;
            best = j;
        }
    }
    best
}

fn cost(points: &[Point], centers: &[[f64; 2]], assign: &[usize]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &a)| p.weight * (1.0 - dot(p.e, centers[a])))
        .sum()
}

fn seed_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let total: f64 = points.iter().map(|p| p.weight).sum();
    let pick = |rng: &mut ChaCha8Rng, weights: &[f64], total: f64| {
        let mut t = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if t < w {
                return i;
            }
            t -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    };
    let weights: Vec<f64> = points.iter().map(|p| p.weight).collect();
    let mut centers = vec![points[pick(rng, &weights, total)].e];
    let mut d2: Vec<f64> = points.iter().map(|p| 2.0 - 2.0 * dot(p.e, centers[0])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = points.iter().zip(&d2).map(|(p, &d)| p.weight * d.max(0.0)).collect();
        let sum: f64 = scores.iter().sum();
        let idx = if sum > 0.0 {
            pick(rng, &scores, sum)
        } else {
            pick(rng, &weights, total)
        };
        let c = points[idx].e;
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(2.0 - 2.0 * dot(p.e, c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &[Point], mut centers: Vec<[f64; 2]>) -> (Vec<[f64; 2]>, Vec<usize>, Vec<f64>) {
    let k = centers.len();
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p.e, &centers)).collect();
    let mut history = vec![cost(points, &centers, &assign)];
    for _ in 0..MAX_LLOYD_ITERS {
        // update: circular mean per cluster
        let mut sums = vec![[0.0f64; 2]; k];
        let mut mass = vec![0.0f64; k];
        for (p, &a) in points.iter().zip(&assign) {
            sums[a][0] += p.weight * p.e[0];
            sums[a][1] += p.weight * p.e[1];
            mass[a] += p.weight;
        }
        for j in 0..k {
            let norm = sums[j][0].hypot(sums[j][1]);
            if mass[j] > 0.0 && norm > 1e-12 * mass[j] {
                centers[j] = [sums[j][0] / norm, sums[j][1] / norm];
            } else if mass[j] == 0.0 {
                // empty cluster: move to the worst-served point
                let worst = points
                    .iter()
                    .zip(&assign)
                    .enumerate()
                    .max_by(|a, b| {
                        let ca = 1.0 - dot(a.1 .0.e, centers[*a.1 .1]);
                        let cb = 1.0 - dot(b.1 .0.e, centers[*b.1 .1]);
                        ca.total_cmp(&cb)
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                centers[j] = points[worst].e;
            }
        }
        // assignment: move only on strict improvement
        let mut changed = false;
        for (p, a) in points.iter().zip(assign.iter_mut()) {
            let cand = nearest(p.e, &centers);
            if cand != *a && dot(p.e, centers[cand]) > dot(p.e, centers[*a]) {
                *a = cand;
                changed = true;
            }
        }
        history.push(cost(points, &centers, &assign));
        if !changed {
            break;
        }
    }
    (centers, assign, history)
}

/// Clusters circular hue values into `k` groups, deterministically for a seed.
pub fn kmeans_hue<T: Scalar>(hues: &[T], k: usize, seed: u64) -> Result<HueClusterModel> {
    kmeans_hue_with_restarts(hues, k, seed, DEFAULT_RESTARTS)
}

pub fn kmeans_hue_with_restarts<T: Scalar>(
    hues: &[T],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<HueClusterModel> {
    if k == 0 {
        return Err(Error::invalid("cluster count must be at least 1"));
    }
    let mut sorted: Vec<f64> = hues.iter().map(|h| h.to_f64_lossy().rem_euclid(1.0)).collect();
    if sorted.iter().any(|h| !h.is_finite()) {
        return Err(Error::invalid("non-finite hue"));
    }
    sorted.sort_by(f64::total_cmp);
    let mut points: Vec<Point> = Vec::new();
    for &h in &sorted {
        match points.last_mut() {
            Some(p) if p.hue == h => p.weight += 1.0,
            _ => points.push(Point { hue: h, e: embed(h), weight: 1.0 }),
        }
    }
    if k > points.len() {
        return Err(Error::invalid(format!(
            "cluster count {k} exceeds the {} distinct hue values",
            points.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<[f64; 2]>, Vec<usize>, Vec<f64>)> = None;
    for _ in 0..restarts.max(1) {
        let init = seed_plus_plus(&points, k, &mut rng);
        let run = lloyd(&points, init);
        let better = match &best {
            None => true,
            Some(b) => run.2.last() < b.2.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let (centers, point_assign, cost_history) = best.expect("at least one restart");

    // canonical order: centers ascending by hue
    let mut hue_centers: Vec<(f64, usize)> = centers
        .iter()
        .enumerate()
        .map(|(j, c)| ((c[1].atan2(c[0]) / TAU).rem_euclid(1.0), j))
        .collect();
    hue_centers.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut relabel = vec![0; k];
    for (new, &(_, old)) in hue_centers.iter().enumerate() {
        relabel[old] = new;
    }
    let assignment = hues
        .iter()
        .map(|h| {
            let h = h.to_f64_lossy().rem_euclid(1.0);
            let idx = points.partition_point(|p| p.hue < h);
            relabel[point_assign[idx]]
        })
        .collect();
    Ok(HueClusterModel {
        k,
        centers: hue_centers.iter().map(|&(h, _)| h).collect(),
        assignment,
        seed,
        cost_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive minimum of `partition_cost` over all labelings with
    /// every group non-empty.
    fn exhaustive_optimum(hues: &[f64], k: usize) -> f64 {
        let n = hues.len();
        let mut labels = vec![0usize; n];
        let mut best = f64::INFINITY;
        loop {
            let mut used = vec![false; k];
            for &l in &labels {
                used[l] = true;
            }
            if used.iter().all(|&u| u) {
                best = best.min(partition_cost(hues, &labels, k));
            }
            let mut i = 0;
            loop {
                if i == n {
                    return best;
                }
                labels[i] += 1;
                if labels[i] < k {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn two_obvious_clusters() {
        let hues = [0.10, 0.11, 0.50, 0.51];
        let m = kmeans_hue(&hues, 2, 1).unwrap();
        assert_eq!(m.assignment[0], m.assignment[1]);
        assert_eq!(m.assignment[2], m.assignment[3]);
        assert_ne!(m.assignment[0], m.assignment[2]);
        // brute force over all 2-partitions agrees
        let opt = exhaustive_optimum(&hues, 2);
        assert!((partition_cost(&hues, &m.assignment, 2) - opt).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_circular_mean() {
        let hues = [0.2, 0.25, 0.3];
        let m = kmeans_hue(&hues, 1, 3).unwrap();
        assert!((m.centers[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn wrap_around_mean() {
        let hues = [0.98, 0.99, 0.01, 0.02];
        let m = kmeans_hue(&hues, 1, 3).unwrap();
        assert!(circular_distance(m.centers[0], 0.0) < 1e-12, "{}", m.centers[0]);
        let oracle = circular_mean(&hues).unwrap();
        assert!(circular_distance(oracle, m.centers[0]) < 1e-12);
    }

    #[test]
    fn too_many_clusters() {
        assert!(kmeans_hue(&[0.1, 0.1, 0.2], 3, 0).is_err());
        assert!(kmeans_hue(&[0.1f64], 0, 0).is_err());
    }

    #[test]
    fn assignments_are_nearest_centers() {
        let hues: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let m = kmeans_hue(&hues, 4, 9).unwrap();
        for (&h, &a) in hues.iter().zip(&m.assignment) {
            let d = circular_distance(h, m.centers[a]);
            assert!(m.centers.iter().all(|&c| circular_distance(h, c) >= d - 1e-12));
        }
        for j in 0..4 {
            let members: Vec<f64> = hues.iter().zip(&m.assignment).filter(|(_, &a)| a == j).map(|(&h, _)| h).collect();
            let cm = circular_mean(&members).unwrap();
            assert!(circular_distance(cm, m.centers[j]) < 1e-9);
        }
    }

    #[test]
    fn lloyd_cost_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..30 {
            let hues: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
            let m = kmeans_hue_with_restarts(&hues, 4, seed, 1).unwrap();
            for w in m.cost_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", m.cost_history);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let hues: Vec<f64> = (0..500).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        assert_eq!(kmeans_hue(&hues, 4, 42).unwrap(), kmeans_hue(&hues, 4, 42).unwrap());
    }

    #[test]
    fn reaches_exhaustive_optimum_on_small_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut hits = 0;
        for run in 0..100u64 {
            let n = rng.random_range(4..=12);
            let k = rng.random_range(1..=3);
            let hues: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let m = kmeans_hue(&hues, k, run).unwrap();
            let got = partition_cost(&hues, &m.assignment, k);
            if (got - exhaustive_optimum(&hues, k)).abs() <= 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs reached the optimum");
    }
}
