//! Shooting-and-bouncing-ray candidate discovery.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::geometry::{reflect_dir, Vec3};
use crate::scene::Scene;

/// Distance skipped after each interaction so a ray does not re-hit its own face.
pub const SELF_HIT_OFFSET: f64 = 1e-4;

/// Point `i` of an `n`-point spherical Fibonacci lattice.
pub fn fibonacci_direction(i: usize, n: usize) -> Vec3 {
    let golden = PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    Vec3::new(r * phi.cos(), r * phi.sin(), z).normalize()
}

/// `n` near-uniform unit vectors on the sphere, deterministic in `n`.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    (0..n).map(|i| fibonacci_direction(i, n)).collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SbrLimits {
    pub max_reflections: usize,
    pub max_penetrations: usize,
    pub reflect: bool,
    pub penetrate: bool,
}

struct Branch {
    origin: Vec3,
    dir: Vec3,
    facets: Vec<u32>,
    penetrations: usize,
    steps: usize,
}

/// Launches `n_rays` lattice rays from `tx` and returns every reflection
/// facet sequence (including the empty one) that some ray branch realised.
///
/// At a front-side hit a branch splits into a specular continuation and, if
/// penetration is on and budget remains, a straight pass-through. Hits on the
/// inside of a closed mesh are exits and always pass straight through.
pub(crate) fn discover(scene: &Scene, tx: Vec3, n_rays: usize, limits: SbrLimits) -> BTreeSet<Vec<u32>> {
    let max_steps = limits.max_reflections + 2 * limits.max_penetrations + 4;
    let found = (0..n_rays)
        .into_par_iter()
        .fold(HashSet::new, |mut seen: HashSet<Vec<u32>>, i| {
            let mut stack = vec![Branch {
                origin: tx,
                dir: fibonacci_direction(i, n_rays),
                facets: Vec::new(),
                penetrations: 0,
                steps: 0,
            }];
            while let Some(b) = stack.pop() {
                if b.steps >= max_steps {
                    continue;
                }
                let Some(hit) = scene.intersect(&b.origin, &b.dir, SELF_HIT_OFFSET, f64::INFINITY) else {
                    continue;
                };
                let closed = scene.mesh_is_closed(hit.mesh);
                if closed && !hit.front {
                    stack.push(Branch { origin: hit.point, steps: b.steps + 1, ..b });
                    continue;
                }
                if limits.penetrate && b.penetrations < limits.max_penetrations {
                    stack.push(Branch {
                        origin: hit.point,
                        dir: b.dir,
                        facets: b.facets.clone(),
                        penetrations: b.penetrations + 1,
                        steps: b.steps + 1,
                    });
                }
                if limits.reflect && b.facets.len() < limits.max_reflections {
                    let mut facets = b.facets;
                    facets.push(hit.facet);
                    if !seen.contains(&facets) {
                        seen.insert(facets.clone());
                    }
                    stack.push(Branch {
                        origin: hit.point,
                        dir: reflect_dir(&b.dir, &hit.normal).normalize(),
                        facets,
                        penetrations: b.penetrations,
                        steps: b.steps + 1,
                    });
                }
            }
            seen
        })
        .reduce(HashSet::new, |mut a, b| {
            if a.len() < b.len() {
                return b.into_iter().chain(a).collect();
            }
            a.extend(b);
            a
        });
    let mut out: BTreeSet<Vec<u32>> = found.into_iter().collect();
    out.insert(Vec::new());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::box_room;

    #[test]
    fn single_direction_is_unit() {
        let d = fibonacci_directions(1);
        assert_eq!(d.len(), 1);
        assert!((d[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_is_near_uniform() {
        let d = fibonacci_directions(1000);
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        let mean: Vec3 = d.iter().sum::<Vec3>() / 1000.0;
        assert!(mean.norm() < 0.01, "{}", mean.norm());
        let nn: Vec<f64> = d
            .iter()
            .enumerate()
            .map(|(i, a)| {
                d.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| a.dot(b).clamp(-1.0, 1.0).acos())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let m = nn.iter().sum::<f64>() / nn.len() as f64;
        let sd = (nn.iter().map(|x| (x - m).powi(2)).sum::<f64>() / nn.len() as f64).sqrt();
        assert!(sd / m < 0.25, "cv {}", sd / m);
    }

    #[test]
    fn deterministic() {
        assert_eq!(fibonacci_directions(777), fibonacci_directions(777));
    }

    #[test]
    fn box_room_first_order_candidates() {
        let scene = Scene::from_meshes(vec![box_room()]).unwrap();
        let limits = SbrLimits { max_reflections: 1, max_penetrations: 2, reflect: true, penetrate: true };
        let c = discover(&scene, Vec3::new(1.0, 1.0, 1.5), 2000, limits);
        // empty sequence plus the six walls
        assert_eq!(c.len(), 7);
    }
}
