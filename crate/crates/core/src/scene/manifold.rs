use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TriMesh;

/// Edge-incidence census of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldReport {
    pub is_watertight: bool,
    pub boundary_edge_count: usize,
    pub nonmanifold_edge_count: usize,
    pub inconsistent_normal_pairs: usize,
}

/// Classifies every undirected edge by the faces that use it.
///
/// Vertices with bit-identical positions are welded first, so meshes exported
/// with split vertices (per-face normals or UVs) are judged by their geometry.
/// Two incident faces must traverse the shared edge in opposite directions.
pub fn validate_manifold(mesh: &TriMesh) -> ManifoldReport {
    let mut weld: HashMap<[u64; 3], u32> = HashMap::new();
    let canonical: Vec<u32> = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| *weld.entry(v.map(f64::to_bits).into()).or_insert(i as u32))
        .collect();

    // (lo, hi) -> (incident faces, faces traversing lo -> hi)
    let mut edges: HashMap<(u32, u32), (usize, usize)> = HashMap::new();
    for f in mesh.faces() {
        let f = f.map(|i| canonical[i as usize]);
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a == b {
                continue;
            }
            let e = edges.entry((a.min(b), a.max(b))).or_default();
            e.0 += 1;
            if a < b {
                e.1 += 1;
            }
        }
    }

    let mut report = ManifoldReport {
        is_watertight: false,
        boundary_edge_count: 0,
        nonmanifold_edge_count: 0,
        inconsistent_normal_pairs: 0,
    };
    for &(count, forward) in edges.values() {
        match count {
            1 => report.boundary_edge_count += 1,
            2 if forward != 1 => report.inconsistent_normal_pairs += 1,
            2 => {}
            _ => report.nonmanifold_edge_count += 1,
        }
    }
    report.is_watertight =
        report.boundary_edge_count == 0 && report.nonmanifold_edge_count == 0 && report.inconsistent_normal_pairs == 0;
    report
}
