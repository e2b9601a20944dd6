use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{PointCloud, ReconError};

/// Default Huber threshold.
pub const HUBER_K: f64 = 1.345;

/// `min(1, k / |r|)`; equals 1 for `|r| <= k`, including `r = 0`.
///
/// # Panics
/// If `k` is not positive.
pub fn huber_weight(residual: f64, k: f64) -> f64 {
    assert!(k > 0.0, "huber threshold must be positive");
    let r = residual.abs();
    if r <= k {
        1.0
    } else {
        k / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Points with a larger reprojection error are dropped (meters).
    pub max_reproj: f64,
    /// Connected clusters with fewer points are dropped.
    pub min_cluster: usize,
    /// Two points closer than this are connected (meters).
    pub cluster_radius: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { max_reproj: 0.1, min_cluster: 100, cluster_radius: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_points: usize,
    pub after_gate: usize,
    pub output_points: usize,
    pub clusters_kept: usize,
    pub clusters_removed: usize,
    /// `output_points / input_points`.
    pub retention: f64,
}

/// Drops points with `reproj_error > max_reproj`.
pub fn reprojection_gate(cloud: &PointCloud, max_reproj: f64) -> PointCloud {
    assert!(max_reproj > 0.0, "reprojection gate must be positive");
    let pts = cloud.points();
    cloud.retain_indices(|i| pts[i].reproj_error <= max_reproj)
}

/// Cluster id per point (clusters numbered by their lowest point index) and
/// each cluster's size. Points within `radius` of each other share a cluster.
fn clusters(cloud: &PointCloud, radius: f64) -> (Vec<usize>, HashMap<usize, usize>) {
    let pts = cloud.points();
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let cell = |i: usize| pts[i].position.map(|c| (c / radius).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for i in 0..n {
        grid.entry(cell(i).into()).or_default().push(i);
    }
    let r2 = radius * radius;
    for i in 0..n {
        let c = cell(i);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[c.x + dx, c.y + dy, c.z + dz]) else { continue };
                    for &j in bucket {
                        if j <= i || (pts[i].position - pts[j].position).norm_squared() > r2 {
                            continue;
                        }
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut sizes = HashMap::new();
    for &r in &roots {
        *sizes.entry(r).or_insert(0) += 1;
    }
    (roots, sizes)
}

/// Removes Euclidean-connected clusters with fewer than `min_cluster` points.
/// Returns the filtered cloud and the number of kept and removed clusters.
pub fn cluster_filter(cloud: &PointCloud, radius: f64, min_cluster: usize) -> (PointCloud, usize, usize) {
    assert!(radius > 0.0 && min_cluster >= 1);
    let (roots, sizes) = clusters(cloud, radius);
    let kept = sizes.values().filter(|&&s| s >= min_cluster).count();
    let out = cloud.retain_indices(|i| sizes[&roots[i]] >= min_cluster);
    (out, kept, sizes.len() - kept)
}

/// Reprojection gate followed by the cluster-size filter.
pub fn filter_outliers(cloud: &PointCloud, cfg: &FilterConfig) -> Result<(PointCloud, FilterReport), ReconError> {
    if cloud.is_empty() {
        return Err(ReconError::EmptyCloud { stage: "input" });
    }
    let gated = reprojection_gate(cloud, cfg.max_reproj);
    if gated.is_empty() {
        return Err(ReconError::EmptyCloud { stage: "reprojection gate" });
    }
    let (out, kept, removed) = cluster_filter(&gated, cfg.cluster_radius, cfg.min_cluster);
    if out.is_empty() {
        return Err(ReconError::EmptyCloud { stage: "cluster filter" });
    }
    let report = FilterReport {
        input_points: cloud.len(),
        after_gate: gated.len(),
        output_points: out.len(),
        clusters_kept: kept,
        clusters_removed: removed,
        retention: out.len() as f64 / cloud.len() as f64,
    };
    log::info!(
        "filter: {} -> {} (gate) -> {} points, retention {:.3}",
        report.input_points,
        report.after_gate,
        report.output_points,
        report.retention
    );
    Ok((out, report))
}
