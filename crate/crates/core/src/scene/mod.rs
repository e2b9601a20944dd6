//! Material-labeled triangle scenes: loading, manifold validation and ray queries.

mod bvh;
pub mod fixtures;
mod manifold;
mod mesh;
mod xml;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};
use crate::materials::MaterialClass;
use crate::ply::PlyError;

pub use bvh::BARYCENTRIC_EPS;
pub use fixtures::unit_cube;
pub use manifold::{validate_manifold, ManifoldReport};
pub use mesh::{TriMesh, DEFAULT_AREA_EPSILON};
pub use xml::{load_scene, parse_scene, resolve_material, write_scene};

use bvh::{Bvh, Triangle};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("xml parse error at line {line}, column {column}: {msg}")]
    Xml { line: u32, column: u32, msg: String },
    #[error("shape `{shape}` (line {line}): {msg}")]
    Shape { shape: String, line: u32, msg: String },
    #[error("shape `{shape}` references missing mesh file {path}")]
    MissingMesh { shape: String, path: PathBuf },
    #[error("shape `{shape}` (line {line}): unknown material `{label}`")]
    UnknownMaterial { shape: String, label: String, line: u32 },
    #[error("mesh `{object}`: {reason}")]
    InvalidMesh { object: String, reason: String },
    #[error("duplicate object id `{0}`")]
    DuplicateObject(String),
    #[error("reading {path}: {source}")]
    Ply { path: PathBuf, source: PlyError },
}

/// A group of edge-connected coplanar faces of one mesh; the unit of reflection.
#[derive(Debug, Clone, Serialize)]
pub struct Facet {
    pub mesh: u32,
    pub normal: Vec3,
    /// Plane offset: `normal . x + offset = 0`.
    pub offset: f64,
    pub faces: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Global face index.
    pub face: u32,
    pub facet: u32,
    pub mesh: u32,
    pub distance: f64,
    pub point: Vec3,
    /// Face normal flipped to oppose the ray direction.
    pub normal: Vec3,
    pub geometric_normal: Vec3,
    /// The ray arrives on the side the geometric normal points to.
    pub front: bool,
    pub material: MaterialClass,
}

#[derive(Debug, Clone, Copy)]
struct FaceOwner {
    mesh: u32,
    local: u32,
}

/// Immutable, indexed scene. Global face ids follow mesh order, then face order.
#[derive(Debug, Clone)]
pub struct Scene {
    meshes: Vec<TriMesh>,
    bounds: Aabb,
    tris: Vec<Triangle>,
    owners: Vec<FaceOwner>,
    facet_of: Vec<u32>,
    facets: Vec<Facet>,
    reports: Vec<ManifoldReport>,
    bvh: Bvh,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.meshes == other.meshes
    }
}

impl Scene {
    pub fn empty() -> Scene {
        Scene::from_meshes(Vec::new()).expect("empty scene")
    }

    pub fn from_meshes(meshes: Vec<TriMesh>) -> Result<Scene, SceneError> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &meshes {
            if !seen.insert(m.object_id.as_str()) {
                return Err(SceneError::DuplicateObject(m.object_id.clone()));
            }
        }
        let mut bounds = Aabb::empty();
        let mut tris = Vec::new();
        let mut owners = Vec::new();
        let mut facet_of = Vec::new();
        let mut facets = Vec::new();
        let mut reports = Vec::new();
        for (mi, mesh) in meshes.iter().enumerate() {
            bounds = bounds.union(&mesh.bounds());
            let base = tris.len() as u32;
            for f in 0..mesh.face_count() {
                let [a, b, c] = mesh.triangle(f);
                tris.push(Triangle::new(a, b, c));
                owners.push(FaceOwner { mesh: mi as u32, local: f as u32 });
            }
            let (local_facet, groups) = coplanar_groups(mesh);
            let facet_base = facets.len() as u32;
            facet_of.extend(local_facet.iter().map(|g| g + facet_base));
            for group in groups {
                let first = group[0] as usize;
                let normal = mesh.face_normals()[first];
                let offset = -normal.dot(&mesh.triangle(first)[0]);
                facets.push(Facet {
                    mesh: mi as u32,
                    normal,
                    offset,
                    faces: group.into_iter().map(|f| f + base).collect(),
                });
            }
            reports.push(validate_manifold(mesh));
        }
        let bvh = Bvh::build(&tris);
        Ok(Scene { meshes, bounds, tris, owners, facet_of, facets, reports, bvh })
    }

    pub fn meshes(&self) -> &[TriMesh] {
        &self.meshes
    }

    pub fn into_meshes(self) -> Vec<TriMesh> {
        self.meshes
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn face_count(&self) -> usize {
        self.tris.len()
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet_of(&self, face: u32) -> u32 {
        self.facet_of[face as usize]
    }

    pub fn mesh_of(&self, face: u32) -> u32 {
        self.owners[face as usize].mesh
    }

    pub fn material_of(&self, face: u32) -> MaterialClass {
        let o = self.owners[face as usize];
        self.meshes[o.mesh as usize].face_material()[o.local as usize]
    }

    pub fn face_normal(&self, face: u32) -> Vec3 {
        self.tris[face as usize].normal
    }

    pub fn manifold_reports(&self) -> &[ManifoldReport] {
        &self.reports
    }

    pub fn mesh_is_closed(&self, mesh: u32) -> bool {
        self.reports[mesh as usize].is_watertight
    }

    pub fn is_watertight(&self) -> bool {
        self.reports.iter().all(|r| r.is_watertight)
    }

    /// Nearest hit in `(t_min, t_max]` through the BVH.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<Hit> {
        self.bvh.closest(&self.tris, origin, dir, t_min, t_max).map(|(t, f)| self.make_hit(origin, dir, t, f))
    }

    /// Exhaustive scan over every face with the same tie rule as [`Scene::intersect`].
    pub fn intersect_brute(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<Hit> {
        let mut best: Option<(f64, u32)> = None;
        for (i, tri) in self.tris.iter().enumerate() {
            let limit = best.map_or(t_max, |b| b.0);
            if let Some(t) = tri.intersect(origin, dir, t_min, limit) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, i as u32));
                }
            }
        }
        best.map(|(t, f)| self.make_hit(origin, dir, t, f))
    }

    /// All hits in `(t_min, t_max]`, nearest first.
    pub fn hits_along(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Vec<Hit> {
        self.bvh
            .all_hits(&self.tris, origin, dir, t_min, t_max)
            .into_iter()
            .map(|(t, f)| self.make_hit(origin, dir, t, f))
            .collect()
    }

    /// Lowest-index face of `facet` containing `p`, if any.
    pub fn locate_on_facet(&self, p: &Vec3, facet: u32, plane_tol: f64) -> Option<u32> {
        self.bvh
            .near_point(p, plane_tol)
            .into_iter()
            .filter(|&f| self.facet_of[f as usize] == facet)
            .find(|&f| self.tris[f as usize].contains(p, plane_tol))
    }

    fn make_hit(&self, origin: &Vec3, dir: &Vec3, t: f64, face: u32) -> Hit {
        let n = self.tris[face as usize].normal;
        let front = dir.dot(&n) < 0.0;
        Hit {
            face,
            facet: self.facet_of[face as usize],
            mesh: self.owners[face as usize].mesh,
            distance: t,
            point: origin + dir * t,
            normal: if front { n } else { -n },
            geometric_normal: n,
            front,
            material: self.material_of(face),
        }
    }
}

/// Groups each mesh's faces into edge-connected coplanar sets.
/// Returns the per-face group index and the sorted member lists.
fn coplanar_groups(mesh: &TriMesh) -> (Vec<u32>, Vec<Vec<u32>>) {
    let n = mesh.face_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut weld: HashMap<[u64; 3], u32> = HashMap::new();
    let canon: Vec<u32> = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| *weld.entry(v.map(f64::to_bits).into()).or_insert(i as u32))
        .collect();
    let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        let f = f.map(|i| canon[i as usize]);
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let normals = mesh.face_normals();
    let mut keys: Vec<_> = edge_faces.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let fs = &edge_faces[&key];
        for i in 0..fs.len() {
            for j in i + 1..fs.len() {
                let (a, b) = (fs[i], fs[j]);
                let coplanar = normals[a].dot(&normals[b]) >= 1.0 - 1e-9
                    && mesh.triangle(b).iter().all(|v| normals[a].dot(&(v - mesh.triangle(a)[0])).abs() <= 1e-7);
                if coplanar {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }
    let mut group_of_root: HashMap<usize, u32> = HashMap::new();
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut local = Vec::with_capacity(n);
    for f in 0..n {
        let r = find(&mut parent, f);
        let g = *group_of_root.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            (groups.len() - 1) as u32
        });
        groups[g as usize].push(f as u32);
        local.push(g);
    }
    (local, groups)
}
