//! Mitsuba-style scene XML, restricted to triangle-mesh shapes.
//!
//! Supported shapes:
//!
//! * `<shape type="ply">` with `<string name="filename">` pointing at an ascii or
//!   binary PLY file (relative paths resolve against the scene file's directory).
//! * `<shape type="trimesh">` with inline `positions`, `indices` and optional
//!   `face_materials` strings.
//!
//! Materials come from a `<ref id="...">` (or nested `<bsdf id="...">`) whose id
//! names a material class, optionally prefixed `mat-` and/or `itu_`. A
//! `<string name="materials">` list turns per-face indices (`face_materials`, or the
//! PLY `material_index` face property) into labels.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use roxmltree::{Document, Node};

use crate::geometry::Vec3;
use crate::materials::MaterialClass;

use super::{Scene, SceneError, TriMesh};

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io { path: path.to_path_buf(), source: e })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scene(&text, base)
}

/// Maps `concrete`, `itu_concrete`, `mat-itu_concrete`, ... to a class.
pub fn resolve_material(label: &str) -> Option<MaterialClass> {
    let mut s = label.trim().to_ascii_lowercase();
    for prefix in ["mat-", "mat_"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.to_string();
        }
    }
    for prefix in ["itu_", "itu-"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.to_string();
        }
    }
    s.parse().ok()
}

struct Ctx<'a> {
    doc: &'a Document<'a>,
    bsdf_labels: HashMap<String, String>,
    base: &'a Path,
}

impl Ctx<'_> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }
}

pub fn parse_scene(text: &str, base_dir: &Path) -> Result<Scene, SceneError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        SceneError::Xml { line: pos.row, column: pos.col, msg: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "scene" {
        let pos = doc.text_pos_at(root.range().start);
        return Err(SceneError::Xml {
            line: pos.row,
            column: pos.col,
            msg: format!("root element is <{}>, expected <scene>", root.tag_name().name()),
        });
    }
    let mut ctx = Ctx { doc: &doc, bsdf_labels: HashMap::new(), base: base_dir };
    for bsdf in root.children().filter(|n| n.has_tag_name("bsdf")) {
        if let Some(id) = bsdf.attribute("id") {
            ctx.bsdf_labels.insert(id.to_string(), bsdf_label(bsdf, id));
        }
    }
    let mut meshes = Vec::new();
    for (k, shape) in root.children().filter(|n| n.has_tag_name("shape")).enumerate() {
        meshes.push(parse_shape(&ctx, shape, k)?);
    }
    Scene::from_meshes(meshes)
}

fn bsdf_label(bsdf: Node, id: &str) -> String {
    bsdf.descendants()
        .find(|n| n.has_tag_name("string") && n.attribute("name") == Some("material"))
        .and_then(|n| n.attribute("value"))
        .unwrap_or(id)
        .to_string()
}

fn parse_shape(ctx: &Ctx, shape: Node, index: usize) -> Result<TriMesh, SceneError> {
    let id = shape.attribute("id").map(str::to_string).unwrap_or_else(|| format!("shape_{index}"));
    let line = ctx.line(shape);
    let err = |msg: String| SceneError::Shape { shape: id.clone(), line, msg };

    let mut strings: HashMap<&str, (&str, u32)> = HashMap::new();
    let mut material_labels: Vec<(String, u32)> = Vec::new();
    for child in shape.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "string" => {
                let name = child.attribute("name").ok_or_else(|| err("<string> without name".into()))?;
                let value = child.attribute("value").ok_or_else(|| err(format!("string `{name}` without value")))?;
                strings.insert(name, (value, ctx.line(child)));
            }
            "ref" => {
                let rid = child.attribute("id").ok_or_else(|| err("<ref> without id".into()))?;
                let label = ctx.bsdf_labels.get(rid).cloned().unwrap_or_else(|| rid.to_string());
                material_labels.push((label, ctx.line(child)));
            }
            "bsdf" => {
                let bid = child.attribute("id").unwrap_or("");
                material_labels.push((bsdf_label(child, bid), ctx.line(child)));
            }
            "boolean" | "float" | "integer" => {}
            other => return Err(err(format!("unsupported element <{other}>"))),
        }
    }
    if material_labels.len() > 1 {
        return Err(err("more than one material reference".into()));
    }
    let resolve = |label: &str, at: u32| {
        resolve_material(label).ok_or_else(|| SceneError::UnknownMaterial {
            shape: id.clone(),
            label: label.to_string(),
            line: at,
        })
    };
    let single = match material_labels.first() {
        Some((label, at)) => Some(resolve(label, *at)?),
        None => None,
    };
    let palette = match strings.get("materials") {
        Some((list, at)) => list
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| resolve(s, *at))
            .collect::<Result<Vec<_>, _>>()?,
        None => single.into_iter().collect(),
    };

    match shape.attribute("type") {
        Some("ply") => {
            let (file, _) = strings.get("filename").ok_or_else(|| err("ply shape without filename".into()))?;
            let path: PathBuf = ctx.base.join(file);
            if !path.is_file() {
                return Err(SceneError::MissingMesh { shape: id.clone(), path });
            }
            TriMesh::load_ply(&id, &path, &palette, single)
        }
        Some("trimesh") => {
            let numbers = |key: &str| -> Result<Vec<f64>, SceneError> {
                let (text, _) = strings.get(key).ok_or_else(|| err(format!("trimesh without `{key}`")))?;
                text.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| err(format!("`{key}`: {e}")))).collect()
            };
            let pos = numbers("positions")?;
            let idx = numbers("indices")?;
            if pos.len() % 3 != 0 || idx.len() % 3 != 0 {
                return Err(err("positions/indices length not a multiple of 3".into()));
            }
            let vertices = pos.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
            let faces: Vec<[u32; 3]> = idx
                .chunks(3)
                .map(|c| {
                    let conv = |x: f64| {
                        (x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64)
                            .then_some(x as u32)
                            .ok_or_else(|| err(format!("bad index {x}")))
                    };
                    Ok([conv(c[0])?, conv(c[1])?, conv(c[2])?])
                })
                .collect::<Result<_, SceneError>>()?;
            let labels = if strings.contains_key("face_materials") {
                numbers("face_materials")?
                    .into_iter()
                    .map(|k| {
                        palette
                            .get(k as usize)
                            .copied()
                            .filter(|_| k >= 0.0)
                            .ok_or_else(|| err(format!("face material index {k} outside palette")))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                let m = single
                    .or_else(|| (palette.len() == 1).then(|| palette[0]))
                    .ok_or_else(|| err("no material assigned".into()))?;
                vec![m; faces.len()]
            };
            TriMesh::new(id.clone(), vertices, faces, labels)
        }
        other => Err(err(format!("unsupported shape type {other:?}"))),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;").replace('\'', "&apos;")
}

/// Serializes every mesh inline. Floats use the shortest round-trip form, so
/// `parse_scene(write_scene(s))` reproduces `s` exactly.
pub fn write_scene(scene: &Scene) -> String {
    let mut used: Vec<MaterialClass> = scene.meshes().iter().flat_map(|m| m.palette()).collect();
    used.sort();
    used.dedup();

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<scene version=\"3.0.0\">\n");
    for m in &used {
        let _ = writeln!(out, "    <bsdf type=\"diffuse\" id=\"mat-{m}\"/>");
    }
    for mesh in scene.meshes() {
        let _ = writeln!(out, "    <shape type=\"trimesh\" id=\"{}\">", escape(&mesh.object_id));
        let palette = mesh.palette();
        if palette.len() == 1 {
            let _ = writeln!(out, "        <ref id=\"mat-{}\"/>", palette[0]);
        } else {
            let names: Vec<&str> = palette.iter().map(|m| m.as_str()).collect();
            let _ = writeln!(out, "        <string name=\"materials\" value=\"{}\"/>", names.join(" "));
        }
        out.push_str("        <string name=\"positions\" value=\"");
        for (i, v) in mesh.vertices().iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(out, "{sep}{} {} {}", v.x, v.y, v.z);
        }
        out.push_str("\"/>\n        <string name=\"indices\" value=\"");
        for (i, f) in mesh.faces().iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(out, "{sep}{} {} {}", f[0], f[1], f[2]);
        }
        out.push_str("\"/>\n");
        if palette.len() > 1 {
            out.push_str("        <string name=\"face_materials\" value=\"");
            for (i, m) in mesh.face_material().iter().enumerate() {
                let sep = if i == 0 { "" } else { " " };
                let k = palette.iter().position(|p| p == m).unwrap();
                let _ = write!(out, "{sep}{k}");
            }
            out.push_str("\"/>\n");
        }
        out.push_str("    </shape>\n");
    }
    out.push_str("</scene>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::{box_room, unit_cube};

    const FLOOR: &str = r#"<scene version="3.0.0">
    <bsdf type="diffuse" id="mat-itu_concrete"/>
    <shape type="trimesh" id="floor">
        <ref id="mat-itu_concrete"/>
        <string name="positions" value="-1 -1 0 1 -1 0 1 1 0 -1 1 0"/>
        <string name="indices" value="0 1 2 0 2 3"/>
    </shape>
</scene>"#;

    #[test]
    fn minimal_floor_scene() {
        let scene = parse_scene(FLOOR, Path::new(".")).unwrap();
        assert_eq!(scene.meshes().len(), 1);
        assert_eq!(scene.face_count(), 2);
        assert_eq!(scene.meshes()[0].face_material(), &[MaterialClass::Concrete; 2]);
    }

    #[test]
    fn missing_mesh_file_names_the_path() {
        let xml = r#"<scene><shape type="ply" id="wall"><string name="filename" value="nope/wall.ply"/><ref id="wood"/></shape></scene>"#;
        match parse_scene(xml, Path::new("/tmp")) {
            Err(SceneError::MissingMesh { shape, path }) => {
                assert_eq!(shape, "wall");
                assert!(path.ends_with("nope/wall.ply"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_material_is_rejected_with_line() {
        let xml = "<scene>\n<shape type=\"trimesh\" id=\"w\">\n<ref id=\"mat-brick\"/>\n<string name=\"positions\" value=\"0 0 0 1 0 0 0 1 0\"/><string name=\"indices\" value=\"0 1 2\"/></shape></scene>";
        match parse_scene(xml, Path::new(".")) {
            Err(SceneError::UnknownMaterial { label, line, .. }) => {
                assert_eq!(label, "mat-brick");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = "<scene>\n<shape type=\"trimesh\">\n</scene>";
        match parse_scene(xml, Path::new(".")) {
            Err(SceneError::Xml { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ply_shape_with_material_palette() {
        let dir = tempfile::tempdir().unwrap();
        let cube = box_room();
        let (ply, palette) = cube.to_ply();
        std::fs::write(dir.path().join("room.ply"), ply.to_ascii()).unwrap();
        let names: Vec<_> = palette.iter().map(|m| m.as_str()).collect();
        let xml = format!(
            r#"<scene><shape type="ply" id="room"><string name="filename" value="room.ply"/><string name="materials" value="{}"/></shape></scene>"#,
            names.join(",")
        );
        std::fs::write(dir.path().join("scene.xml"), xml).unwrap();
        let scene = load_scene(&dir.path().join("scene.xml")).unwrap();
        assert_eq!(scene.meshes()[0], cube);
    }

    #[test]
    fn round_trip_is_identical() {
        let scene = Scene::from_meshes(vec![box_room(), unit_cube("crate & box", MaterialClass::Metal)]).unwrap();
        let text = write_scene(&scene);
        let back = parse_scene(&text, Path::new(".")).unwrap();
        assert_eq!(back, scene);
        assert_eq!(write_scene(&back), text);
    }

    #[test]
    fn resolves_common_material_ids() {
        assert_eq!(resolve_material("mat-itu_concrete"), Some(MaterialClass::Concrete));
        assert_eq!(resolve_material("itu_glass"), Some(MaterialClass::Glass));
        assert_eq!(resolve_material("Metal"), Some(MaterialClass::Metal));
        assert_eq!(resolve_material("itu_brick"), None);
    }
}
