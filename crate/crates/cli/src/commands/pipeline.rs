use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;
use sitewave_core::recon::{build_rt_model, load_votes, PointCloud, ReconConfig, RtModel};
use sitewave_core::scene::write_scene;
use sitewave_core::{MaterialClass, MaterialTable, TriMesh};

use super::Outcome;
use crate::error::{read_error, CliError};
use crate::util::{read_text, to_json, write_output};

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Labeled point cloud (PLY).
    #[arg(long)]
    pub cloud: PathBuf,
    /// Per-frame material votes (CSV: object_id,frame_id,material).
    #[arg(long)]
    pub votes: PathBuf,
    /// Directory of `<instance_id>.ply` meshes for non-planar objects.
    #[arg(long)]
    pub meshes: Option<PathBuf>,
    /// Reconstruction settings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Material table CSV replacing the built-in one.
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Writes `scene.xml` and `recon_report.json` here.
    #[arg(long, required_unless_present = "out")]
    pub out_dir: Option<PathBuf>,
    /// Scene XML path (overrides `--out-dir` for the scene).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reconstruction report path (defaults next to the scene).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn load_table(path: Option<&Path>) -> Result<MaterialTable, CliError> {
    Ok(match path {
        Some(p) => MaterialTable::load(p)?,
        None => MaterialTable::builtin(),
    })
}

/// Meshes named by file stem; the material is replaced by the object's vote.
pub fn load_mesh_dir(dir: &Path) -> Result<Vec<(PathBuf, TriMesh)>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| read_error(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let mesh = TriMesh::load_ply(&stem, &p, &[], Some(MaterialClass::Concrete))?;
            Ok((p, mesh))
        })
        .collect()
}

pub fn build_model(
    cloud: &Path,
    votes: &Path,
    meshes: &[TriMesh],
    table: &MaterialTable,
    cfg: &ReconConfig,
) -> Result<RtModel, CliError> {
    let votes = load_votes(votes)?;
    let cloud = PointCloud::load_ply(cloud)?;
    log::info!("pipeline: {} points, {} votes, {} supplied meshes", cloud.len(), votes.len(), meshes.len());
    let model = build_rt_model(&cloud, &votes, meshes, table, cfg)?;
    log::info!(
        "pipeline: kept {} of {} points, {} meshes",
        model.report.filter.output_points,
        model.report.filter.input_points,
        model.scene.meshes().len()
    );
    Ok(model)
}

/// Writes `scene.xml` and `recon_report.json`; returns `(relative path, sha256)`.
pub fn write_model(model: &RtModel, out_dir: &Path) -> Result<Vec<(String, String)>, CliError> {
    let hashes = write_model_to(model, &out_dir.join("scene.xml"), &out_dir.join("recon_report.json"))?;
    Ok(["scene.xml", "recon_report.json"].iter().map(|s| s.to_string()).zip(hashes).collect())
}

/// Writes the scene and report to explicit paths; returns their sha256.
pub fn write_model_to(model: &RtModel, scene_path: &Path, report_path: &Path) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let scene_xml = write_scene(&model.scene);
    out.push(write_output(scene_path, scene_xml.as_bytes())?);
    let planes: Vec<_> = model
        .planes
        .iter()
        .map(|(id, p)| json!({ "instance": id, "normal": p.normal, "offset": p.offset, "area": p.area }))
        .collect();
    let report = json!({ "report": model.report, "planes": planes });
    out.push(write_output(report_path, to_json(&report).as_bytes())?);
    Ok(out)
}

pub fn build(args: &BuildArgs) -> Result<Outcome, CliError> {
    let cfg: ReconConfig = match &args.config {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        None => ReconConfig::default(),
    };
    let table = load_table(args.materials.as_deref())?;
    let meshes: Vec<TriMesh> = match &args.meshes {
        Some(d) => load_mesh_dir(d)?.into_iter().map(|(_, m)| m).collect(),
        None => Vec::new(),
    };
    let model = build_model(&args.cloud, &args.votes, &meshes, &table, &cfg)?;
    let base = args.out_dir.clone().unwrap_or_default();
    let scene_path = args.out.clone().unwrap_or_else(|| base.join("scene.xml"));
    let report_path = args.report.clone().unwrap_or_else(|| match &args.out {
        Some(s) => s.with_file_name("recon_report.json"),
        None => base.join("recon_report.json"),
    });
    let hashes = write_model_to(&model, &scene_path, &report_path)?;
    let written: Vec<(PathBuf, String)> = [scene_path, report_path].into_iter().zip(hashes).collect();
    let r = &model.report;
    let text = format!(
        "kept {}/{} points ({:.1}%), {} instances, {} meshes, {} tie(s)\nwrote {}\n",
        r.filter.output_points,
        r.filter.input_points,
        100.0 * r.filter.retention,
        r.instances.len(),
        model.scene.meshes().len(),
        r.ties.len(),
        written.iter().map(|(p, _)| p.display().to_string()).collect::<Vec<_>>().join(", ")
    );
    let json = json!({
        "outputs": written.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect::<Vec<_>>(),
        "filter": r.filter,
        "instances": r.instances.len(),
        "meshes": model.scene.meshes().len(),
        "ties": r.ties,
        "skipped_air": r.skipped_air,
    });
    Ok(Outcome::ok(json, text))
}
