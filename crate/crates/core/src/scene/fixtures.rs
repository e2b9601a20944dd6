//! Reference geometry used by tests, benchmarks and the bundled fixture files.

use crate::geometry::Vec3;
use crate::materials::MaterialClass;

use super::TriMesh;

/// Box-room dimensions in meters (x, y, z).
pub const BOX_ROOM_DIMS: [f64; 3] = [6.0, 4.0, 3.0];

/// Side order: -x, +x, -y, +y, -z, +z.
pub const BOX_ROOM_MATERIALS: [MaterialClass; 6] = [
    MaterialClass::Concrete,
    MaterialClass::Glass,
    MaterialClass::Wood,
    MaterialClass::Concrete,
    MaterialClass::Concrete,
    MaterialClass::Concrete,
];

/// Axis-aligned box with two triangles per side. With `inward` the normals
/// face the interior, which makes the box a cavity inside solid material.
pub fn box_mesh(id: &str, min: Vec3, max: Vec3, inward: bool, materials: [MaterialClass; 6]) -> TriMesh {
    let corner = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices: Vec<Vec3> = (0..8).map(corner).collect();
    // corners of each side in cyclic order
    let sides: [[u32; 4]; 6] = [[0, 2, 6, 4], [1, 3, 7, 5], [0, 1, 5, 4], [2, 3, 7, 6], [0, 1, 3, 2], [4, 5, 7, 6]];
    let outward = [-Vec3::x(), Vec3::x(), -Vec3::y(), Vec3::y(), -Vec3::z(), Vec3::z()];
    let mut faces = Vec::with_capacity(12);
    let mut labels = Vec::with_capacity(12);
    for (s, q) in sides.iter().enumerate() {
        let want = if inward { -outward[s] } else { outward[s] };
        let [a, b, c, d] = *q;
        let n = (vertices[b as usize] - vertices[a as usize]).cross(&(vertices[c as usize] - vertices[a as usize]));
        let (t1, t2) = if n.dot(&want) > 0.0 { ([a, b, c], [a, c, d]) } else { ([a, c, b], [a, d, c]) };
        faces.push(t1);
        faces.push(t2);
        labels.extend([materials[s]; 2]);
    }
    TriMesh::new(id, vertices, faces, labels).expect("box fixture is valid")
}

pub fn unit_cube(id: &str, material: MaterialClass) -> TriMesh {
    box_mesh(id, Vec3::zeros(), Vec3::repeat(1.0), false, [material; 6])
}

/// The 6 x 4 x 3 m box room: a closed cavity with inward normals, 12 faces.
pub fn box_room() -> TriMesh {
    let [x, y, z] = BOX_ROOM_DIMS;
    box_mesh("room", Vec3::zeros(), Vec3::new(x, y, z), true, BOX_ROOM_MATERIALS)
}

/// Concrete slab with its top face at z = 0, standing in for an infinite ground plane.
pub fn ground_slab(half_width: f64, thickness: f64) -> TriMesh {
    box_mesh(
        "ground",
        Vec3::new(-half_width, -half_width, -thickness),
        Vec3::new(half_width, half_width, 0.0),
        false,
        [MaterialClass::Concrete; 6],
    )
}
