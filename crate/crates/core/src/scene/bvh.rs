//! Bounding-volume hierarchy over scene triangles.
//!
//! Built by median split along the longest centroid axis. Construction is a
//! pure function of the triangle list, so traversal order is reproducible.

use crate::geometry::{Aabb, Vec3};

/// Relative barycentric slack. Rays through a shared edge hit at least one side.
pub const BARYCENTRIC_EPS: f64 = 1e-7;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Triangle {
    pub v0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub normal: Vec3,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        let e1 = b - a;
        let e2 = c - a;
        Triangle { v0: a, e1, e2, normal: e1.cross(&e2).normalize() }
    }

    fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        b.grow(&self.v0);
        b.grow(&(self.v0 + self.e1));
        b.grow(&(self.v0 + self.e2));
        let span = self.e1.norm().max(self.e2.norm()).max((self.e2 - self.e1).norm());
        b.padded(4.0 * BARYCENTRIC_EPS * span + 1e-9)
    }

    /// Möller-Trumbore with barycentric slack. Hit distance in `(t_min, t_max]`.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let pvec = dir.cross(&self.e2);
        let det = self.e1.dot(&pvec);
        if det.abs() <= 1e-14 * self.e1.norm() * self.e2.norm() {
            return None;
        }
        let inv = 1.0 / det;
        let tvec = origin - self.v0;
        let u = tvec.dot(&pvec) * inv;
        if !(-BARYCENTRIC_EPS..=1.0 + BARYCENTRIC_EPS).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(&self.e1);
        let v = dir.dot(&qvec) * inv;
        if v < -BARYCENTRIC_EPS || u + v > 1.0 + BARYCENTRIC_EPS {
            return None;
        }
        let t = self.e2.dot(&qvec) * inv;
        (t > t_min && t <= t_max).then_some(t)
    }

    /// Whether `p` lies on the triangle (within `plane_tol` of its plane).
    pub fn contains(&self, p: &Vec3, plane_tol: f64) -> bool {
        let w = p - self.v0;
        if self.normal.dot(&w).abs() > plane_tol {
            return false;
        }
        let d00 = self.e1.dot(&self.e1);
        let d01 = self.e1.dot(&self.e2);
        let d11 = self.e2.dot(&self.e2);
        let d20 = w.dot(&self.e1);
        let d21 = w.dot(&self.e2);
        let denom = d00 * d11 - d01 * d01;
        let v = (d11 * d20 - d01 * d21) / denom;
        let w2 = (d00 * d21 - d01 * d20) / denom;
        v >= -BARYCENTRIC_EPS && w2 >= -BARYCENTRIC_EPS && v + w2 <= 1.0 + BARYCENTRIC_EPS
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Interior: index of the right child
    /// (the left child follows the node).
    first: u32,
    /// Number of triangles for a leaf, 0 for an interior node.
    count: u32,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(tris: &[Triangle]) -> Bvh {
        if tris.is_empty() {
            return Bvh::default();
        }
        let boxes: Vec<Aabb> = tris.iter().map(Triangle::bounds).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(Aabb::center).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, &boxes, &centroids);
        Bvh { nodes, order }
    }

    /// Nearest hit as `(t, triangle index)`; equal distances resolve to the lower index.
    pub fn closest(&self, tris: &[Triangle], origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, u32)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = dir.map(|c| 1.0 / c);
        let mut best: Option<(f64, u32)> = None;
        let mut stack = vec![0usize];
        while let Some(ix) = stack.pop() {
            let node = &self.nodes[ix];
            let limit = best.map_or(t_max, |b| b.0);
            if node.bounds.ray_entry(origin, &inv, t_min, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    let limit = best.map_or(t_max, |b| b.0);
                    if let Some(t) = tris[tri as usize].intersect(origin, dir, t_min, limit) {
                        if best.is_none_or(|(bt, bi)| t < bt || (t == bt && tri < bi)) {
                            best = Some((t, tri));
                        }
                    }
                }
            } else {
                let (left, right) = (ix + 1, node.first as usize);
                let lt = self.nodes[left].bounds.ray_entry(origin, &inv, t_min, limit);
                let rt = self.nodes[right].bounds.ray_entry(origin, &inv, t_min, limit);
                match (lt, rt) {
                    (Some(a), Some(b)) if a <= b => {
                        stack.push(right);
                        stack.push(left);
                    }
                    (Some(_), Some(_)) => {
                        stack.push(left);
                        stack.push(right);
                    }
                    (Some(_), None) => stack.push(left),
                    (None, Some(_)) => stack.push(right),
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// Every hit in `(t_min, t_max]`, sorted by `(t, index)`.
    pub fn all_hits(&self, tris: &[Triangle], origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Vec<(f64, u32)> {
        let mut hits = Vec::new();
        if self.nodes.is_empty() {
            return hits;
        }
        let inv = dir.map(|c| 1.0 / c);
        let mut stack = vec![0usize];
        while let Some(ix) = stack.pop() {
            let node = &self.nodes[ix];
            if node.bounds.ray_entry(origin, &inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    if let Some(t) = tris[tri as usize].intersect(origin, dir, t_min, t_max) {
                        hits.push((t, tri));
                    }
                }
            } else {
                stack.push(node.first as usize);
                stack.push(ix + 1);
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits
    }

    /// Triangles whose (padded) bounds contain `p`, in ascending index order.
    pub fn near_point(&self, p: &Vec3, pad: f64) -> Vec<u32> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(ix) = stack.pop() {
            let node = &self.nodes[ix];
            if !node.bounds.padded(pad).contains(p) {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                out.extend_from_slice(&self.order[start..start + node.count as usize]);
            } else {
                stack.push(node.first as usize);
                stack.push(ix + 1);
            }
        }
        out.sort_unstable();
        out
    }
}

fn build_node(nodes: &mut Vec<Node>, order: &mut [u32], offset: usize, boxes: &[Aabb], centroids: &[Vec3]) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &t in order.iter() {
        bounds = bounds.union(&boxes[t as usize]);
        cbounds.grow(&centroids[t as usize]);
    }
    let ix = nodes.len();
    nodes.push(Node { bounds, first: offset as u32, count: order.len() as u32 });
    if order.len() <= LEAF_SIZE {
        return ix;
    }
    let axis = cbounds.longest_axis();
    order.sort_by(|&a, &b| centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis]).then(a.cmp(&b)));
    let mid = order.len() / 2;
    let (left, right) = order.split_at_mut(mid);
    build_node(nodes, left, offset, boxes, centroids);
    let right_ix = build_node(nodes, right, offset + mid, boxes, centroids);
    nodes[ix].first = right_ix as u32;
    nodes[ix].count = 0;
    ix
}
