use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::geometry::Vec3;
use crate::materials::MaterialClass;
use crate::scene::TriMesh;

use super::{PlanePrimitive, ReconError};

const MAX_PINCH_PASSES: usize = 64;

/// Area of the convex hull of 2-D points (monotone chain). Zero for fewer than
/// three distinct points.
pub fn convex_hull_area(points: &[[f64; 2]]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let twice: f64 = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    twice.abs() / 2.0
}

/// Triangulates the region covered by `points` (assumed near `plane`) on a
/// square lattice of spacing `cell`.
///
/// Lattice cells containing a point mark their four corner nodes. Every cell
/// with four marked corners yields two triangles and every cell with three
/// yields one, which smooths staircase edges and fills single-cell holes.
/// Corners where the surface would touch itself only at a vertex are filled in.
/// Triangles wind counter-clockwise around the plane normal.
pub fn lattice_surface(plane: &PlanePrimitive, points: &[Vec3], cell: f64) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    assert!(cell > 0.0);
    if points.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let (u, v) = plane.basis();
    let uv: Vec<[f64; 2]> = points.iter().map(|p| [u.dot(p), v.dot(p)]).collect();
    let mut origin = [0.0; 2];
    let mut counts = [0i64; 2];
    for k in 0..2 {
        let lo = uv.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
        let hi = uv.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
        counts[k] = (((hi - lo) / cell - 1e-9).ceil() as i64).max(1);
        origin[k] = lo - (counts[k] as f64 * cell - (hi - lo)) / 2.0;
    }
    let mut occupied: BTreeSet<(i64, i64)> = uv
        .iter()
        .map(|c| {
            let i = (((c[0] - origin[0]) / cell).floor() as i64).clamp(0, counts[0] - 1);
            let j = (((c[1] - origin[1]) / cell).floor() as i64).clamp(0, counts[1] - 1);
            (i, j)
        })
        .collect();

    let mut tris = triangulate(&occupied);
    for _ in 0..MAX_PINCH_PASSES {
        let pinched = pinch_nodes(&tris);
        if pinched.is_empty() {
            break;
        }
        for (i, j) in pinched {
            occupied.extend([(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)]);
        }
        tris = triangulate(&occupied);
    }

    let on_plane = -plane.normal * plane.offset;
    let mut index: BTreeMap<(i64, i64), u32> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::with_capacity(tris.len());
    for t in &tris {
        let f = t.map(|node| {
            *index.entry(node).or_insert_with(|| {
                let (a, b) = (origin[0] + node.0 as f64 * cell, origin[1] + node.1 as f64 * cell);
                vertices.push(on_plane + u * a + v * b);
                (vertices.len() - 1) as u32
            })
        });
        faces.push(f);
    }
    (vertices, faces)
}

type Node = (i64, i64);

fn triangulate(occupied: &BTreeSet<(i64, i64)>) -> Vec<[Node; 3]> {
    let nodes: BTreeSet<Node> =
        occupied.iter().flat_map(|&(i, j)| [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]).collect();
    let cells: BTreeSet<(i64, i64)> =
        nodes.iter().flat_map(|&(i, j)| [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)]).collect();
    let mut tris = Vec::new();
    for &(i, j) in &cells {
        // counter-clockwise ring
        let ring = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
        let present: Vec<bool> = ring.iter().map(|n| nodes.contains(n)).collect();
        match present.iter().filter(|&&p| p).count() {
            4 => {
                tris.push([ring[0], ring[1], ring[2]]);
                tris.push([ring[0], ring[2], ring[3]]);
            }
            3 => {
                let missing = present.iter().position(|&p| !p).unwrap();
                tris.push([ring[(missing + 1) % 4], ring[(missing + 2) % 4], ring[(missing + 3) % 4]]);
            }
            _ => {}
        }
    }
    tris
}

/// Nodes with more than two incident boundary edges.
fn pinch_nodes(tris: &[[Node; 3]]) -> Vec<Node> {
    let mut edges: HashMap<(Node, Node), u32> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut degree: BTreeMap<Node, u32> = BTreeMap::new();
    for (&(a, b), &c) in &edges {
        if c == 1 {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
    }
    degree.into_iter().filter(|&(_, d)| d > 2).map(|(n, _)| n).collect()
}

/// Moves every vertex orthogonally onto `plane`; connectivity is unchanged.
pub fn project_to_plane(mesh: &TriMesh, plane: &PlanePrimitive) -> Result<TriMesh, ReconError> {
    Ok(mesh.map_vertices(|p| plane.project(p))?)
}

/// Closes an oriented open surface into a slab by sweeping it `thickness`
/// meters along `-normal`. The original faces keep their orientation; the
/// swept copy is reversed and boundary edges get side walls, so the result
/// is a closed solid whose normals point outward when the surface's own
/// normals agree with `normal`.
pub fn extrude_slab(
    id: &str,
    vertices: &[Vec3],
    faces: &[[u32; 3]],
    normal: &Vec3,
    thickness: f64,
    material: MaterialClass,
) -> Result<TriMesh, ReconError> {
    assert!(thickness > 0.0);
    let n = vertices.len() as u32;
    let shift = -normal * thickness;
    let mut verts = vertices.to_vec();
    verts.extend(vertices.iter().map(|p| p + shift));
    let mut out: Vec<[u32; 3]> = faces.to_vec();
    out.extend(faces.iter().map(|&[a, b, c]| [a + n, c + n, b + n]));

    let mut directed: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *directed.entry((a, b)).or_default() += 1;
        }
    }
    for (&(a, b), _) in directed.iter().filter(|(&(a, b), _)| !directed.contains_key(&(b, a))) {
        out.push([b, a, a + n]);
        out.push([b, a + n, b + n]);
    }
    let count = out.len();
    Ok(TriMesh::new(id, verts, out, vec![material; count])?)
}

/// Bounded mesh for one plane: lattice triangulation of the inliers,
/// projection onto the plane, then extrusion to `thickness` on the side
/// opposite the plane normal. A zero thickness leaves the surface open.
pub fn plane_mesh(
    id: &str,
    plane: &PlanePrimitive,
    points: &[Vec3],
    cell: f64,
    thickness: f64,
    material: MaterialClass,
) -> Result<TriMesh, ReconError> {
    let (vertices, faces) = lattice_surface(plane, points, cell);
    if faces.is_empty() {
        return Err(ReconError::Degenerate(format!("plane `{id}` has no supporting points")));
    }
    let count = faces.len();
    let surface = project_to_plane(&TriMesh::new(id, vertices, faces, vec![material; count])?, plane)?;
    if thickness <= 0.0 {
        return Ok(surface);
    }
    extrude_slab(id, surface.vertices(), surface.faces(), &plane.normal, thickness, material)
}
