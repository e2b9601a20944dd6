//! Synthetic scans of the box room with known ground truth.
//!
//! Surface points are spread over the six inner faces in proportion to area
//! with Gaussian noise along the face normal. Two kinds of corruption are
//! mixed in: points with reprojection errors above the 0.1 m gate, and small
//! floating blobs (fewer than 100 points) of clutter. With the default
//! fractions roughly 88% of the points survive filtering.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::materials::MaterialClass;
use crate::scene::fixtures::{BOX_ROOM_DIMS, BOX_ROOM_MATERIALS};

use super::{FrameVote, PointCloud, RawPoint, SemanticClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub dims: [f64; 3],
    pub n_points: usize,
    /// Standard deviation of the along-normal noise (meters).
    pub noise_sigma: f64,
    /// Share of points whose reprojection error exceeds the gate.
    pub gate_outlier_fraction: f64,
    /// Share of points placed in small floating blobs.
    pub blob_fraction: f64,
    pub frames: u32,
    pub votes_per_object: usize,
    /// Votes per object that name a wrong material.
    pub wrong_votes: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dims: BOX_ROOM_DIMS,
            n_points: 100_000,
            noise_sigma: 0.005,
            gate_outlier_fraction: 0.07,
            blob_fraction: 0.05,
            frames: 300,
            votes_per_object: 12,
            wrong_votes: 3,
            seed: 2024,
        }
    }
}

/// A face of the room: instance id, inward normal and offset with
/// `normal . p + offset = 0`, material and class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruthPlane {
    pub instance: u32,
    pub normal: Vec3,
    pub offset: f64,
    pub material: MaterialClass,
    pub class: SemanticClass,
}

#[derive(Debug, Clone)]
pub struct SynthRoom {
    pub cloud: PointCloud,
    pub votes: Vec<FrameVote>,
    pub truth: Vec<TruthPlane>,
}

/// Ground-truth faces in the side order -x, +x, -y, +y, -z (floor), +z (ceiling).
pub fn truth_planes(dims: [f64; 3]) -> Vec<TruthPlane> {
    (0..6)
        .map(|s| {
            let axis = s / 2;
            let high = s % 2 == 1;
            let mut normal = Vec3::zeros();
            normal[axis] = if high { -1.0 } else { 1.0 };
            let offset = if high { dims[axis] } else { 0.0 };
            let class = match s {
                4 => SemanticClass::Floor,
                5 => SemanticClass::Ceiling,
                _ => SemanticClass::Wall,
            };
            TruthPlane { instance: s as u32, normal, offset, material: BOX_ROOM_MATERIALS[s], class }
        })
        .collect()
}

pub fn synthetic_room(cfg: &SynthConfig) -> SynthRoom {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("valid sigma");
    let wide = Normal::new(0.0, 0.05).unwrap();
    let truth = truth_planes(cfg.dims);
    let d = cfg.dims;
    let face_area = |axis: usize| d[(axis + 1) % 3] * d[(axis + 2) % 3];
    let total_area: f64 = (0..6).map(|s| face_area(s / 2)).sum();

    let n_blob = (cfg.n_points as f64 * cfg.blob_fraction).round() as usize;
    let n_surface = cfg.n_points - n_blob;
    let mut points = Vec::with_capacity(cfg.n_points);
    let mut semantic = Vec::with_capacity(cfg.n_points);
    let mut instance = Vec::with_capacity(cfg.n_points);

    let attrs = |rng: &mut ChaCha8Rng, reproj: f64| {
        (rng.gen_range(0.6..=1.0), rng.gen_range(0.6..=1.0), rng.gen_range(0..cfg.frames), reproj)
    };

    let mut assigned = 0;
    for (s, t) in truth.iter().enumerate() {
        let axis = s / 2;
        let share = if s == 5 {
            n_surface - assigned
        } else {
            (n_surface as f64 * face_area(axis) / total_area).round() as usize
        };
        assigned += share;
        for _ in 0..share {
            let outlier = rng.gen_bool(cfg.gate_outlier_fraction);
            let mut p = Vec3::zeros();
            for k in 0..3 {
                p[k] = rng.gen_range(0.0..d[k]);
            }
            p[axis] = -t.offset * t.normal[axis];
            let e = if outlier { wide.sample(&mut rng) } else { noise.sample(&mut rng) };
            p += t.normal * e;
            let reproj = if outlier { rng.gen_range(0.1000001..0.5) } else { rng.gen_range(0.0..0.1) };
            let (c, q, f, r) = attrs(&mut rng, reproj);
            points.push(RawPoint::new(p, c, q, f, r));
            semantic.push(t.class);
            instance.push(t.instance);
        }
    }

    // blobs on a jittered 0.5 m grid at least 0.5 m inside the walls, so no two
    // blobs touch and none reaches a wall
    let mut slots = Vec::new();
    let steps = [0, 1, 2].map(|k| ((d[k] - 1.0) / 0.5).floor() as i64);
    for i in 0..=steps[0] {
        for j in 0..=steps[1] {
            for k in 0..=steps[2] {
                slots.push(Vec3::new(0.5 + 0.5 * i as f64, 0.5 + 0.5 * j as f64, 0.5 + 0.5 * k as f64));
            }
        }
    }
    slots.shuffle(&mut rng);
    let mut remaining = n_blob;
    let mut blob_id = 1000u32;
    let mut slot_iter = slots.into_iter();
    while remaining > 0 {
        let Some(center) = slot_iter.next() else {
            log::warn!("synthetic room: out of blob slots, {remaining} blob points dropped");
            break;
        };
        let center = center + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        let size = rng.gen_range(20..=80).min(remaining);
        for _ in 0..size {
            let off = Vec3::new(rng.gen_range(-0.04..0.04), rng.gen_range(-0.04..0.04), rng.gen_range(-0.04..0.04));
            let reproj = rng.gen_range(0.0..0.1);
            let (c, q, f, r) = attrs(&mut rng, reproj);
            points.push(RawPoint::new(center + off, c, q, f, r));
            semantic.push(SemanticClass::Clutter);
            instance.push(blob_id);
        }
        remaining -= size;
        blob_id += 1;
    }

    let mut votes = Vec::new();
    let frames: Vec<u32> = (0..cfg.frames).collect();
    for t in &truth {
        let picked: Vec<u32> = frames.choose_multiple(&mut rng, cfg.votes_per_object).copied().collect();
        for (k, &frame_id) in picked.iter().enumerate() {
            let material = if k < cfg.wrong_votes {
                let others: Vec<MaterialClass> =
                    MaterialClass::ALL.into_iter().filter(|&m| m != t.material && m != MaterialClass::Air).collect();
                *others.choose(&mut rng).unwrap()
            } else {
                t.material
            };
            votes.push(FrameVote { object_id: t.instance, frame_id, predicted_material: material });
        }
    }
    votes.sort();
    let cloud = PointCloud::new(points, Some(semantic), Some(instance)).expect("synthetic cloud is valid");
    SynthRoom { cloud, votes, truth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon::{filter_outliers, FilterConfig};

    #[test]
    fn retention_in_expected_band() {
        let room = synthetic_room(&SynthConfig { n_points: 40_000, ..SynthConfig::default() });
        assert_eq!(room.cloud.len(), 40_000);
        let (_, report) = filter_outliers(&room.cloud, &FilterConfig::default()).unwrap();
        assert!((0.85..=0.90).contains(&report.retention), "{report:?}");
    }

    #[test]
    fn same_seed_same_room() {
        let cfg = SynthConfig { n_points: 5_000, ..SynthConfig::default() };
        let (a, b) = (synthetic_room(&cfg), synthetic_room(&cfg));
        assert_eq!(a.cloud, b.cloud);
        assert_eq!(a.votes, b.votes);
    }
}
