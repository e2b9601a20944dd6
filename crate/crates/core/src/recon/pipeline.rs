use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::materials::{MaterialClass, MaterialTable};
use crate::scene::{validate_manifold, ManifoldReport, Scene, TriMesh};

use super::{
    extract_patches, filter_outliers, fuse_tracks, merge_planes, plane_mesh, vote_material, FilterConfig, FilterReport,
    FrameVote, MergeConfig, PlanePrimitive, PointCloud, ReconError, SemanticClass, HUBER_K,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub filter: FilterConfig,
    pub merge: MergeConfig,
    /// Multiply Huber weights of the reprojection residual into track fusion.
    pub use_huber: bool,
    pub huber_k: f64,
    /// Edge length of the in-plane tiles fitted before merging (meters).
    pub patch_size: f64,
    pub min_patch_points: usize,
    /// Points farther than this from their merged plane are not meshed (meters).
    pub inlier_distance: f64,
    /// Concave-hull scale; the triangulation lattice uses `alpha / 2` (meters).
    pub alpha: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            filter: FilterConfig::default(),
            merge: MergeConfig::default(),
            use_huber: false,
            huber_k: HUBER_K,
            patch_size: 1.0,
            min_patch_points: 30,
            inlier_distance: 0.1,
            alpha: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneSummary {
    pub object_id: String,
    pub normal: [f64; 3],
    pub offset: f64,
    pub area: f64,
    pub inliers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceReport {
    pub instance: u32,
    pub class: SemanticClass,
    pub points: usize,
    pub material: MaterialClass,
    pub votes: BTreeMap<MaterialClass, usize>,
    pub tied: Vec<MaterialClass>,
    pub patches: usize,
    pub patches_skipped: usize,
    pub merged_planes: usize,
    pub planes: Vec<PlaneSummary>,
    /// Object ids of the meshes produced for this instance.
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconReport {
    pub filter: FilterReport,
    /// Point count after track fusion.
    pub fused_points: usize,
    pub instances: Vec<InstanceReport>,
    /// Instances whose vote was decided by the tie-break order.
    pub ties: Vec<u32>,
    pub manifold: BTreeMap<String, ManifoldReport>,
    /// Instances left out of the scene because they voted as air.
    pub skipped_air: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct RtModel {
    pub scene: Scene,
    /// Merged planes per planar instance, oriented toward the room interior.
    pub planes: Vec<(u32, PlanePrimitive)>,
    pub report: ReconReport,
}

struct Built {
    report: InstanceReport,
    planes: Vec<PlanePrimitive>,
    meshes: Vec<TriMesh>,
}

/// Cleans, fits, meshes and labels a scanned scene.
///
/// Planar instances (walls, floors, ceilings) are tiled, fitted, merged and
/// extruded into closed slabs of their voted material's thickness on the side
/// away from the cloud centroid. Any other instance must come with a supplied
/// watertight mesh whose object id is the instance id in decimal.
pub fn build_rt_model(
    cloud: &PointCloud,
    votes: &[FrameVote],
    nonplanar_meshes: &[TriMesh],
    materials: &MaterialTable,
    cfg: &ReconConfig,
) -> Result<RtModel, ReconError> {
    if cloud.instance().is_none() {
        return Err(ReconError::InvalidCloud("point cloud carries no instance labels".into()));
    }
    let (filtered, filter_report) = filter_outliers(cloud, &cfg.filter)?;
    let fused = fuse_tracks(&filtered, cfg.use_huber.then_some(cfg.huber_k))?;
    let semantic = fused.semantic().expect("instance labels imply semantic labels");
    let instance = fused.instance().expect("checked above");

    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &id) in instance.iter().enumerate() {
        members.entry(id).or_default().push(i);
    }
    let class_of = |idx: &[usize]| {
        let mut counts: BTreeMap<SemanticClass, usize> = BTreeMap::new();
        for &i in idx {
            *counts.entry(semantic[i]).or_default() += 1;
        }
        let top = *counts.values().max().unwrap();
        *counts.iter().find(|&(_, &c)| c == top).unwrap().0
    };
    let classes: BTreeMap<u32, SemanticClass> = members.iter().map(|(&id, idx)| (id, class_of(idx))).collect();

    let unlabeled: Vec<u32> = members.keys().copied().filter(|&id| vote_material(votes, id).is_err()).collect();
    if !unlabeled.is_empty() {
        return Err(ReconError::Unlabeled(unlabeled));
    }
    let supplied: BTreeMap<&str, &TriMesh> = nonplanar_meshes.iter().map(|m| (m.object_id.as_str(), m)).collect();
    let missing: Vec<u32> = classes
        .iter()
        .filter(|&(id, c)| !c.is_planar() && !supplied.contains_key(id.to_string().as_str()))
        .map(|(&id, _)| id)
        .collect();
    if !missing.is_empty() {
        return Err(ReconError::MissingMesh(missing));
    }
    for m in nonplanar_meshes {
        if !classes.keys().any(|id| id.to_string() == m.object_id) {
            log::warn!("supplied mesh `{}` matches no instance; ignored", m.object_id);
        }
    }

    let centroid = fused.centroid().expect("filtered cloud is non-empty");
    let pts = fused.points();
    let built: Vec<Result<Option<Built>, ReconError>> = members
        .par_iter()
        .map(|(&id, idx)| {
            let class = classes[&id];
            let outcome = vote_material(votes, id)?;
            let mut report = InstanceReport {
                instance: id,
                class,
                points: idx.len(),
                material: outcome.material,
                votes: outcome.counts.clone(),
                tied: outcome.tied.clone(),
                patches: 0,
                patches_skipped: 0,
                merged_planes: 0,
                planes: Vec::new(),
                objects: Vec::new(),
            };
            if outcome.material == MaterialClass::Air {
                return Ok(None);
            }
            if !class.is_planar() {
                let mesh = supplied[id.to_string().as_str()].clone().with_material(outcome.material);
                report.objects.push(mesh.object_id.clone());
                return Ok(Some(Built { report, planes: Vec::new(), meshes: vec![mesh] }));
            }
            let weighted: Vec<(Vec3, f64)> =
                idx.iter().map(|&i| (pts[i].position, pts[i].confidence * pts[i].quality)).collect();
            let ids: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
            let (patches, skipped) = extract_patches(&weighted, &ids, cfg.patch_size, cfg.min_patch_points)?;
            report.patches = patches.len();
            report.patches_skipped = skipped;
            let oriented: Vec<PlanePrimitive> = patches.into_iter().map(|p| p.oriented_toward(&centroid)).collect();
            let merged = merge_planes(&oriented, &cfg.merge);
            report.merged_planes = merged.len();
            let thickness = materials.get(outcome.material).thickness_m;
            let mut planes = Vec::new();
            let mut meshes = Vec::new();
            for (k, plane) in merged.into_iter().enumerate() {
                let plane = plane.oriented_toward(&centroid);
                let mut inliers: Vec<u32> = plane
                    .inlier_ids
                    .iter()
                    .copied()
                    .filter(|&i| plane.signed_distance(&pts[i as usize].position).abs() <= cfg.inlier_distance)
                    .collect();
                inliers.sort_unstable();
                let positions: Vec<Vec3> = inliers.iter().map(|&i| pts[i as usize].position).collect();
                let object_id = format!("{class}_{id}_{k}");
                let mesh = plane_mesh(&object_id, &plane, &positions, cfg.alpha / 2.0, thickness, outcome.material)?;
                report.planes.push(PlaneSummary {
                    object_id: object_id.clone(),
                    normal: plane.normal.into(),
                    offset: plane.offset,
                    area: plane.area,
                    inliers: inliers.len(),
                });
                report.objects.push(object_id);
                let mut plane = plane;
                plane.inlier_ids = inliers;
                planes.push(plane);
                meshes.push(mesh);
            }
            Ok(Some(Built { report, planes, meshes }))
        })
        .collect();

    let mut report = ReconReport {
        filter: filter_report,
        fused_points: fused.len(),
        instances: Vec::new(),
        ties: Vec::new(),
        manifold: BTreeMap::new(),
        skipped_air: Vec::new(),
    };
    let mut planes = Vec::new();
    let mut meshes = Vec::new();
    for (b, &id) in built.into_iter().zip(members.keys()) {
        let Some(b) = b? else {
            report.skipped_air.push(id);
            continue;
        };
        if !b.report.tied.is_empty() {
            report.ties.push(id);
        }
        for m in &b.meshes {
            let r = validate_manifold(m);
            report.manifold.insert(m.object_id.clone(), r);
            if !r.is_watertight {
                return Err(ReconError::NonWatertight { object: m.object_id.clone(), report: r });
            }
        }
        planes.extend(b.planes.into_iter().map(|p| (id, p)));
        meshes.extend(b.meshes);
        report.instances.push(b.report);
    }
    let scene = Scene::from_meshes(meshes)?;
    Ok(RtModel { scene, planes, report })
}
