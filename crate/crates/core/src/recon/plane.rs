use std::collections::BTreeMap;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geometry::{any_orthonormal, Vec3};

use super::{convex_hull_area, ReconError};

/// Merges tolerate this much floating-point slack past the configured thresholds.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Plane `normal . p + offset = 0` with its supporting points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanePrimitive {
    pub normal: Vec3,
    pub offset: f64,
    /// Weighted centroid of the inliers; lies on the plane.
    pub centroid: Vec3,
    pub inlier_ids: Vec<u32>,
    /// Surface area in square meters.
    pub area: f64,
    #[serde(skip)]
    moments: Moments,
}

/// Weighted zeroth, first and centered second moments of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    weight: f64,
    mean: Vec3,
    scatter: Matrix3<f64>,
}

impl Moments {
    fn of(points: &[(Vec3, f64)]) -> Result<Moments, ReconError> {
        let mut weight = 0.0;
        let mut sum = Vec3::zeros();
        for (p, w) in points {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(ReconError::Degenerate(format!("invalid weight {w}")));
            }
            weight += w;
            sum += p * *w;
        }
        if weight <= 0.0 {
            return Err(ReconError::Degenerate("zero total weight".into()));
        }
        let mean = sum / weight;
        let mut scatter = Matrix3::zeros();
        for (p, w) in points {
            let d = p - mean;
            scatter += d * d.transpose() * *w;
        }
        Ok(Moments { weight, mean, scatter })
    }

    fn scaled(self, k: f64) -> Moments {
        Moments { weight: self.weight * k, mean: self.mean, scatter: self.scatter * k }
    }

    /// Parallel-axis combination.
    fn combine(parts: &[Moments]) -> Moments {
        let weight: f64 = parts.iter().map(|m| m.weight).sum();
        let mean = parts.iter().fold(Vec3::zeros(), |acc, m| acc + m.mean * m.weight) / weight;
        let scatter = parts.iter().fold(Matrix3::zeros(), |acc, m| {
            let d = m.mean - mean;
            acc + m.scatter + d * d.transpose() * m.weight
        });
        Moments { weight, mean, scatter }
    }

    fn normal(&self) -> Result<Vec3, ReconError> {
        let eig = SymmetricEigen::new(self.scatter / self.weight);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let (mid, top) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
        if !(top > 0.0) || mid <= 1e-12 * top {
            return Err(ReconError::Degenerate("points are collinear or coincident".into()));
        }
        Ok(eig.eigenvectors.column(order[0]).normalize())
    }
}

impl PlanePrimitive {
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Angle between the two planes in radians, ignoring normal sign.
    pub fn angle_to(&self, other: &PlanePrimitive) -> f64 {
        let c = self.normal.cross(&other.normal).norm();
        c.atan2(self.normal.dot(&other.normal).abs())
    }

    /// Larger of the two centroid-to-other-plane distances.
    pub fn projection_distance(&self, other: &PlanePrimitive) -> f64 {
        self.signed_distance(&other.centroid).abs().max(other.signed_distance(&self.centroid).abs())
    }

    pub fn flipped(mut self) -> Self {
        self.normal = -self.normal;
        self.offset = -self.offset;
        self
    }

    /// Flips the normal, if needed, so that `p` lies on its positive side.
    pub fn oriented_toward(self, p: &Vec3) -> Self {
        if self.signed_distance(p) < 0.0 {
            self.flipped()
        } else {
            self
        }
    }

    /// Sets the area, rescaling the fit weights so they sum to it.
    pub fn with_area(mut self, area: f64) -> Self {
        self.moments = self.moments.scaled(area / self.moments.weight);
        self.area = area;
        self
    }

    /// Orthonormal in-plane basis `(u, v)` with `u x v = normal`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let u = any_orthonormal(&self.normal);
        (u, self.normal.cross(&u))
    }

    fn from_moments(m: Moments, inlier_ids: Vec<u32>) -> Result<PlanePrimitive, ReconError> {
        let mut normal = m.normal()?;
        // canonical sign: largest component positive
        let k = normal.iamax();
        if normal[k] < 0.0 {
            normal = -normal;
        }
        Ok(PlanePrimitive {
            normal,
            offset: -normal.dot(&m.mean),
            centroid: m.mean,
            inlier_ids,
            area: m.weight,
            moments: m,
        })
    }
}

/// Weighted least-squares plane: the normal is the eigenvector of the smallest
/// eigenvalue of the weighted covariance about the weighted centroid. Weights
/// are areas (m^2); the result's `area` is their sum and `inlier_ids` index
/// `points`. The normal's largest component is made positive; use
/// [`PlanePrimitive::oriented_toward`] to pick a side.
pub fn fit_plane(points: &[(Vec3, f64)]) -> Result<PlanePrimitive, ReconError> {
    if points.len() < 3 {
        return Err(ReconError::Degenerate(format!("{} points, need 3", points.len())));
    }
    let m = Moments::of(points)?;
    PlanePrimitive::from_moments(m, (0..points.len() as u32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    /// Meters.
    pub max_proj_dist: f64,
    pub max_normal_angle_deg: f64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig { max_proj_dist: 0.1, max_normal_angle_deg: 10.0 }
    }
}

/// Merges primitives related by `projection distance <= max_proj_dist` and
/// `angle <= max_normal_angle`, closed transitively. Each merged group is
/// re-fitted over the union of its members' points with every member weighted
/// by its area, and the process repeats until nothing merges, so the output is
/// a fixed point. Unmerged primitives pass through untouched.
pub fn merge_planes(primitives: &[PlanePrimitive], cfg: &MergeConfig) -> Vec<PlanePrimitive> {
    let max_angle = cfg.max_normal_angle_deg.to_radians();
    let mut current = primitives.to_vec();
    loop {
        let n = current.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut merged_any = false;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&current[i], &current[j]);
                if a.angle_to(b) <= max_angle + BOUNDARY_SLACK
                    && a.projection_distance(b) <= cfg.max_proj_dist + BOUNDARY_SLACK
                {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                        merged_any = true;
                    }
                }
            }
        }
        if !merged_any {
            return current;
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            groups.entry(find(&mut parent, i)).or_default().push(i);
        }
        let mut next = Vec::with_capacity(groups.len());
        let mut refitted = 0;
        for members in groups.values() {
            if members.len() == 1 {
                next.push(current[members[0]].clone());
                continue;
            }
            let lead = current[members[0]].normal;
            let moments: Vec<Moments> = members.iter().map(|&i| current[i].moments).collect();
            let mut ids: Vec<u32> = members.iter().flat_map(|&i| current[i].inlier_ids.iter().copied()).collect();
            ids.sort_unstable();
            ids.dedup();
            let mean_normal = members.iter().fold(Vec3::zeros(), |acc, &i| {
                let n = current[i].normal;
                acc + n * (current[i].area * n.dot(&lead).signum())
            });
            match PlanePrimitive::from_moments(Moments::combine(&moments), ids) {
                Ok(p) => {
                    refitted += 1;
                    next.push(if p.normal.dot(&mean_normal) < 0.0 { p.flipped() } else { p });
                }
                // a union of planar patches is at least as well spread as one of them
                Err(_) => next.extend(members.iter().map(|&i| current[i].clone())),
            }
        }
        if refitted == 0 {
            return next;
        }
        current = next;
    }
}

/// Splits points near one plane into square in-plane tiles of roughly
/// `tile` meters and fits a primitive per tile with at least `min_points`
/// points. Each tile's area comes from the convex hull of its projected points.
/// Returns the primitives (inlier ids taken from `ids`) and the number of
/// tiles skipped as too small or degenerate.
pub fn extract_patches(
    points: &[(Vec3, f64)],
    ids: &[u32],
    tile: f64,
    min_points: usize,
) -> Result<(Vec<PlanePrimitive>, usize), ReconError> {
    assert_eq!(points.len(), ids.len());
    let rough = fit_plane(points)?;
    let (u, v) = rough.basis();
    let uv: Vec<[f64; 2]> = points.iter().map(|(p, _)| [u.dot(p), v.dot(p)]).collect();
    let lo = |k: usize| uv.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
    let hi = |k: usize| uv.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = ([lo(0), lo(1)], [hi(0), hi(1)]);
    // equal tiles spanning the extent exactly, so no sliver tiles at the far edge
    let counts = [0, 1].map(|k| ((max[k] - min[k]) / tile).round().max(1.0) as i64);
    let size = [0, 1].map(|k| (max[k] - min[k]).max(f64::MIN_POSITIVE) / counts[k] as f64);
    let mut tiles: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, c) in uv.iter().enumerate() {
        let key = [0, 1].map(|k| (((c[k] - min[k]) / size[k]).floor() as i64).clamp(0, counts[k] - 1));
        tiles.entry((key[0], key[1])).or_default().push(i);
    }
    let mut out = Vec::new();
    let mut skipped = 0;
    for members in tiles.values() {
        if members.len() < min_points.max(3) {
            skipped += 1;
            continue;
        }
        let pts: Vec<(Vec3, f64)> = members.iter().map(|&i| points[i]).collect();
        let Ok(mut prim) = fit_plane(&pts) else {
            skipped += 1;
            continue;
        };
        let (pu, pv) = prim.basis();
        let flat: Vec<[f64; 2]> = pts.iter().map(|(p, _)| [pu.dot(p), pv.dot(p)]).collect();
        let area = convex_hull_area(&flat);
        if area <= 0.0 {
            skipped += 1;
            continue;
        }
        prim.inlier_ids = members.iter().map(|&i| ids[i]).collect();
        out.push(prim.with_area(area));
    }
    Ok((out, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid_on(normal: Vec3, offset: f64, n: usize, span: f64, seed: u64, sigma: f64) -> Vec<(Vec3, f64)> {
        let normal = normal.normalize();
        let u = any_orthonormal(&normal);
        let v = normal.cross(&u);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        (0..n)
            .map(|_| {
                let base = -normal * offset + u * rng.gen_range(-span..span) + v * rng.gen_range(-span..span);
                let e = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (base + normal * e, 1.0)
            })
            .collect()
    }

    fn prim(normal: Vec3, centroid: Vec3, area: f64) -> PlanePrimitive {
        let normal = normal.normalize();
        let (u, v) = {
            let u = any_orthonormal(&normal);
            (u, normal.cross(&u))
        };
        let s = area.sqrt() / 2.0;
        let pts: Vec<(Vec3, f64)> =
            [(-s, -s), (s, -s), (s, s), (-s, s)].iter().map(|&(a, b)| (centroid + u * a + v * b, area / 4.0)).collect();
        let p = fit_plane(&pts).unwrap();
        if p.normal.dot(&normal) < 0.0 {
            p.flipped()
        } else {
            p
        }
    }

    #[test]
    fn axis_aligned_exact() {
        let pts: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
            .iter()
            .map(|&(x, y)| (Vec3::new(x, y, 2.0), 1.0))
            .collect();
        let p = fit_plane(&pts).unwrap();
        assert_eq!(p.normal, Vec3::z());
        assert!((p.offset + 2.0).abs() < 1e-15);
        assert_eq!(p.area, 4.0);
    }

    #[test]
    fn noisy_tilted_plane_within_tenth_degree() {
        let n = Vec3::new(1.0, 1.0, 1.0).normalize();
        let pts = grid_on(n, -1.0 / 3f64.sqrt(), 2000, 2.0, 3, 1e-3);
        let p = fit_plane(&pts).unwrap();
        let ang = p.normal.dot(&n).abs().min(1.0).acos().to_degrees();
        assert!(ang < 0.1, "{ang}");
    }

    #[test]
    fn degenerate_inputs() {
        let two = [(Vec3::zeros(), 1.0), (Vec3::x(), 1.0)];
        assert!(matches!(fit_plane(&two), Err(ReconError::Degenerate(_))));
        let line: Vec<_> = (0..5).map(|i| (Vec3::new(i as f64, 2.0 * i as f64, 0.0), 1.0)).collect();
        assert!(matches!(fit_plane(&line), Err(ReconError::Degenerate(_))));
        let zero = [(Vec3::zeros(), 0.0), (Vec3::x(), 0.0), (Vec3::y(), 0.0)];
        assert!(fit_plane(&zero).is_err());
    }

    #[test]
    fn coplanar_halves_merge() {
        let a = prim(Vec3::z(), Vec3::new(-1.0, 0.0, 0.0), 2.0);
        let b = prim(Vec3::z(), Vec3::new(1.0, 0.0, 0.0), 2.0);
        let out = merge_planes(&[a, b], &MergeConfig::default());
        assert_eq!(out.len(), 1);
        assert!((out[0].area - 4.0).abs() < 1e-12);
        assert!((out[0].normal - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn five_degrees_five_cm_merge() {
        let t = 5f64.to_radians();
        let a = prim(Vec3::z(), Vec3::zeros(), 1.0);
        let b = prim(Vec3::new(t.sin(), 0.0, t.cos()), Vec3::new(0.0, 0.0, 0.05), 1.0);
        assert_eq!(merge_planes(&[a, b], &MergeConfig::default()).len(), 1);
    }

    #[test]
    fn perpendicular_walls_stay_apart() {
        let a = prim(Vec3::x(), Vec3::zeros(), 1.0);
        let b = prim(Vec3::y(), Vec3::zeros(), 1.0);
        assert_eq!(merge_planes(&[a, b], &MergeConfig::default()).len(), 2);
    }

    #[test]
    fn thresholds_are_inclusive() {
        let cfg = MergeConfig::default();
        let base = prim(Vec3::z(), Vec3::zeros(), 1.0);
        for (dz, merged) in [(0.1, true), (0.1 + 1e-6, false)] {
            let other = prim(Vec3::z(), Vec3::new(0.0, 0.0, dz), 1.0);
            assert_eq!(merge_planes(&[base.clone(), other], &cfg).len() == 1, merged, "dz {dz}");
        }
        for (deg, merged) in [(10.0, true), (10.0 + 1e-6, false)] {
            let t = f64::to_radians(deg);
            let other = prim(Vec3::new(t.sin(), 0.0, t.cos()), Vec3::zeros(), 1.0);
            assert_eq!(merge_planes(&[base.clone(), other], &cfg).len() == 1, merged, "deg {deg}");
        }
    }

    #[test]
    fn chain_merges_transitively() {
        let ps: Vec<_> = (0..5).map(|i| prim(Vec3::z(), Vec3::new(i as f64, 0.0, 0.06 * i as f64), 1.0)).collect();
        // neighbors are 6 cm apart, so everything joins through the chain
        let out = merge_planes(&ps, &MergeConfig::default());
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn area_weights_pull_the_fit() {
        let t = 8f64.to_radians();
        let big = prim(Vec3::z(), Vec3::zeros(), 9.0);
        let small = prim(Vec3::new(t.sin(), 0.0, t.cos()), Vec3::new(0.5, 0.0, 0.0), 0.01);
        let out = merge_planes(&[big, small], &MergeConfig::default());
        assert_eq!(out.len(), 1);
        assert!(out[0].normal.dot(&Vec3::z()) > 0.9999);
    }

    #[test]
    fn patches_tile_a_wall() {
        let pts = grid_on(Vec3::x(), -2.0, 6000, 1.5, 9, 0.005);
        let ids: Vec<u32> = (0..pts.len() as u32).collect();
        let (patches, skipped) = extract_patches(&pts, &ids, 1.0, 20).unwrap();
        assert_eq!(skipped, 0);
        assert_eq!(patches.len(), 9);
        let total: f64 = patches.iter().map(|p| p.area).sum();
        assert!(total > 8.0 && total <= 9.0, "{total}");
        let merged = merge_planes(&patches, &MergeConfig::default());
        assert_eq!(merged.len(), 1);
        assert!((merged[0].normal.x.abs() - 1.0).abs() < 1e-4);
        assert!((merged[0].offset.abs() - 2.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn merge_output_is_fixed_point(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ps: Vec<_> = (0..8)
                .map(|_| {
                    let n = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), 1.0);
                    let c = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-0.3..0.3));
                    prim(n, c, rng.gen_range(0.1..2.0))
                })
                .collect();
            let cfg = MergeConfig::default();
            let once = merge_planes(&ps, &cfg);
            prop_assert!(once.len() <= ps.len());
            let twice = merge_planes(&once, &cfg);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn fit_normal_is_unit(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0));
            let pts = grid_on(n, rng.gen_range(-5.0..5.0), 50, 1.0, seed, 0.01);
            let p = fit_plane(&pts).unwrap();
            prop_assert!((p.normal.norm() - 1.0).abs() < 1e-9);
        }
    }
}
