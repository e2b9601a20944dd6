use std::path::Path;

use crate::geometry::{Aabb, Vec3};
use crate::materials::MaterialClass;
use crate::ply::{Element, Ply, ScalarType};

use super::SceneError;

/// Default minimum triangle area in m^2.
pub const DEFAULT_AREA_EPSILON: f64 = 1e-8;

/// Triangle mesh with one material label per face.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub object_id: String,
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    face_normals: Vec<Vec3>,
    face_material: Vec<MaterialClass>,
}

impl TriMesh {
    pub fn new(
        object_id: impl Into<String>,
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
        face_material: Vec<MaterialClass>,
    ) -> Result<Self, SceneError> {
        Self::with_area_epsilon(object_id, vertices, faces, face_material, DEFAULT_AREA_EPSILON)
    }

    pub fn with_area_epsilon(
        object_id: impl Into<String>,
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
        face_material: Vec<MaterialClass>,
        area_epsilon: f64,
    ) -> Result<Self, SceneError> {
        let object_id = object_id.into();
        let invalid = |reason: String| SceneError::InvalidMesh { object: object_id.clone(), reason };
        if face_material.len() != faces.len() {
            return Err(invalid(format!("{} faces but {} material labels", faces.len(), face_material.len())));
        }
        if let Some(v) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(invalid(format!("vertex {v} is not finite")));
        }
        let mut face_normals = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&ix| ix as usize >= vertices.len()) {
                return Err(invalid(format!("face {i} references a missing vertex")));
            }
            let [a, b, c] = f.map(|ix| vertices[ix as usize]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            if !(area > area_epsilon) {
                return Err(invalid(format!("face {i} is degenerate (area {area:e} m^2)")));
            }
            face_normals.push(cross / cross.norm());
        }
        Ok(TriMesh { object_id, vertices, faces, face_normals, face_material })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vec3] {
        &self.face_normals
    }

    pub fn face_material(&self) -> &[MaterialClass] {
        &self.face_material
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|ix| self.vertices[ix as usize])
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(v);
        }
        b
    }

    /// Relabels every face.
    pub fn with_material(mut self, material: MaterialClass) -> Self {
        self.face_material.iter_mut().for_each(|m| *m = material);
        self
    }

    /// Replaces vertex positions through `f`, keeping connectivity and labels.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<TriMesh, SceneError> {
        TriMesh::new(
            self.object_id.clone(),
            self.vertices.iter().map(f).collect(),
            self.faces.clone(),
            self.face_material.clone(),
        )
    }

    /// Loads a PLY mesh. Faces with more than three vertices are fan-triangulated.
    /// A face `material_index` property selects from `palette`; otherwise every face
    /// gets `default_material`.
    pub fn from_ply(
        object_id: &str,
        ply: &Ply,
        palette: &[MaterialClass],
        default_material: Option<MaterialClass>,
    ) -> Result<TriMesh, SceneError> {
        let invalid = |reason: String| SceneError::InvalidMesh { object: object_id.to_string(), reason };
        let vertex = ply.element("vertex").ok_or_else(|| invalid("no vertex element".into()))?;
        let coord = |n: &str| vertex.scalar(n).ok_or_else(|| invalid(format!("vertex has no `{n}`")));
        let (xs, ys, zs) = (coord("x")?, coord("y")?, coord("z")?);
        let vertices: Vec<Vec3> = (0..vertex.count).map(|i| Vec3::new(xs[i], ys[i], zs[i])).collect();

        let face = ply.element("face").ok_or_else(|| invalid("no face element".into()))?;
        let polys = face
            .list("vertex_indices")
            .or_else(|| face.list("vertex_index"))
            .ok_or_else(|| invalid("face has no vertex_indices".into()))?;
        let mat_index = face.scalar("material_index");

        let mut faces = Vec::new();
        let mut materials = Vec::new();
        for (i, poly) in polys.iter().enumerate() {
            if poly.len() < 3 {
                return Err(invalid(format!("face {i} has {} vertices", poly.len())));
            }
            let material = match mat_index {
                Some(idx) => {
                    let k = idx[i];
                    *palette
                        .get(k as usize)
                        .filter(|_| k >= 0.0)
                        .ok_or_else(|| invalid(format!("face {i}: material_index {k} outside palette")))?
                }
                None => default_material
                    .or_else(|| (palette.len() == 1).then(|| palette[0]))
                    .ok_or_else(|| invalid("no material for faces".into()))?,
            };
            let ix = |k: i64| u32::try_from(k).map_err(|_| invalid(format!("face {i}: bad index {k}")));
            for k in 1..poly.len() - 1 {
                faces.push([ix(poly[0])?, ix(poly[k])?, ix(poly[k + 1])?]);
                materials.push(material);
            }
        }
        TriMesh::new(object_id, vertices, faces, materials)
    }

    pub fn load_ply(
        object_id: &str,
        path: &Path,
        palette: &[MaterialClass],
        default_material: Option<MaterialClass>,
    ) -> Result<TriMesh, SceneError> {
        let ply = Ply::read_path(path).map_err(|e| SceneError::Ply { path: path.to_path_buf(), source: e })?;
        Self::from_ply(object_id, &ply, palette, default_material)
    }

    /// PLY export with a per-face `material_index` into the returned palette.
    pub fn to_ply(&self) -> (Ply, Vec<MaterialClass>) {
        let palette = self.palette();
        let coord = |k: usize| self.vertices.iter().map(|v| v[k]).collect::<Vec<_>>();
        let vertex = Element::new("vertex", self.vertices.len())
            .with_scalar("x", ScalarType::F64, coord(0))
            .with_scalar("y", ScalarType::F64, coord(1))
            .with_scalar("z", ScalarType::F64, coord(2));
        let face = Element::new("face", self.faces.len())
            .with_list(
                "vertex_indices",
                ScalarType::U8,
                ScalarType::U32,
                self.faces.iter().map(|f| f.iter().map(|&i| i as i64).collect()).collect(),
            )
            .with_scalar(
                "material_index",
                ScalarType::I32,
                self.face_material.iter().map(|m| palette.iter().position(|p| p == m).unwrap() as f64).collect(),
            );
        let ply = Ply { comments: vec![format!("object {}", self.object_id)], elements: vec![vertex, face] };
        (ply, palette)
    }

    /// Distinct face materials in order of first appearance.
    pub fn palette(&self) -> Vec<MaterialClass> {
        let mut out = Vec::new();
        for m in &self.face_material {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_and_out_of_range() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        let err = TriMesh::new("line", v.clone(), vec![[0, 1, 2]], vec![MaterialClass::Wood]);
        assert!(matches!(err, Err(SceneError::InvalidMesh { .. })));
        let err = TriMesh::new("oob", v, vec![[0, 1, 5]], vec![MaterialClass::Wood]);
        assert!(matches!(err, Err(SceneError::InvalidMesh { .. })));
    }

    #[test]
    fn normals_are_unit() {
        let v = vec![Vec3::zeros(), Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, 0.5, 0.0)];
        let m = TriMesh::new("t", v, vec![[0, 1, 2]], vec![MaterialClass::Glass]).unwrap();
        assert!((m.face_normals()[0].norm() - 1.0).abs() < 1e-12);
        assert_eq!(m.face_normals()[0], Vec3::z());
    }

    #[test]
    fn quads_are_fan_triangulated_from_ply() {
        let text = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let ply = Ply::read(text.as_bytes()).unwrap();
        let m = TriMesh::from_ply("quad", &ply, &[], Some(MaterialClass::Concrete)).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }
}
