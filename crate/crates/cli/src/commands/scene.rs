use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;
use sitewave_core::scene::load_scene;

use super::Outcome;
use crate::error::{CliError, ErrorKind};

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Scene XML file.
    #[arg(value_name = "SCENE", required_unless_present = "scene")]
    pub file: Option<PathBuf>,
    /// Same as the positional argument.
    #[arg(long, conflicts_with = "file")]
    pub scene: Option<PathBuf>,
}

impl CheckArgs {
    fn path(&self) -> &Path {
        self.file.as_deref().or(self.scene.as_deref()).expect("clap requires one of them")
    }
}

pub fn check(args: &CheckArgs) -> Result<Outcome, CliError> {
    let scene = load_scene(args.path())?;
    let mut meshes = Vec::new();
    let mut text = String::new();
    for (i, (m, r)) in scene.meshes().iter().zip(scene.manifold_reports()).enumerate() {
        let facets = scene.facets().iter().filter(|f| f.mesh == i as u32).count();
        text.push_str(&format!(
            "{:<24} faces {:>6}  facets {:>4}  {}\n",
            m.object_id,
            m.face_count(),
            facets,
            if r.is_watertight {
                "watertight".to_string()
            } else {
                format!(
                    "OPEN: {} boundary, {} non-manifold, {} inconsistent",
                    r.boundary_edge_count, r.nonmanifold_edge_count, r.inconsistent_normal_pairs
                )
            }
        ));
        meshes.push(json!({
            "object_id": m.object_id,
            "faces": m.face_count(),
            "facets": facets,
            "materials": m.palette(),
            "manifold": r,
        }));
    }
    let b = scene.bounds();
    let watertight = scene.is_watertight();
    let json = json!({
        "scene": args.path(),
        "watertight": watertight,
        "faces": scene.face_count(),
        "facets": scene.facets().len(),
        "bounds": if b.is_empty() { json!(null) } else { json!({ "min": b.min, "max": b.max }) },
        "meshes": meshes,
    });
    text.push_str(if watertight { "scene is watertight\n" } else { "scene has open meshes\n" });
    Ok(Outcome { json, text, code: if watertight { 0 } else { ErrorKind::Refusal.exit_code() } })
}
