//! Synthetic end-to-end fixture: the 6 x 4 x 3 m room scan plus a wooden
//! bookcase that needs a supplied mesh.

use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sitewave_core::ply::{Element, Ply, ScalarType};
use sitewave_core::recon::synth::{synthetic_room, SynthConfig};
use sitewave_core::recon::{write_votes, FrameVote, PointCloud, RawPoint, SemanticClass};
use sitewave_core::scene::fixtures::{box_mesh, box_room};
use sitewave_core::scene::write_scene;
use sitewave_core::{MaterialClass, Scene, TriMesh, Vec3};

use super::Outcome;
use crate::error::CliError;
use crate::util::write_output;

pub const BOOKCASE_ID: u32 = 6;
pub const BOOKCASE_MIN: [f64; 3] = [2.6, 1.2, 0.02];
pub const BOOKCASE_MAX: [f64; 3] = [3.0, 2.8, 2.0];

#[derive(Debug, Args)]
pub struct RoomArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Points in the room scan (the bookcase adds about 4%).
    #[arg(long, default_value_t = 30_000)]
    pub points: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Rays per link in the generated run manifest.
    #[arg(long, default_value_t = 200_000)]
    pub rays: usize,
}

fn box_distance(p: &Vec3, min: &Vec3, max: &Vec3) -> f64 {
    let d = Vec3::new(
        (min.x - p.x).max(p.x - max.x).max(0.0),
        (min.y - p.y).max(p.y - max.y).max(0.0),
        (min.z - p.z).max(p.z - max.z).max(0.0),
    );
    d.norm()
}

/// Nearest double to `x` written with `decimals` places, so it prints short.
fn round(x: f64, decimals: usize) -> f64 {
    format!("{x:.decimals$}").parse().expect("formatted float parses")
}

/// Like [`round`] but toward +inf, which keeps values on the same side of
/// any threshold with that many decimals (the reprojection gate).
fn round_up(x: f64, decimals: usize) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    round((x * scale).ceil() / scale, decimals)
}

/// The bookcase as a closed box; its material is assigned by the votes.
pub fn bookcase_mesh() -> TriMesh {
    box_mesh(
        &BOOKCASE_ID.to_string(),
        Vec3::from(BOOKCASE_MIN),
        Vec3::from(BOOKCASE_MAX),
        false,
        [MaterialClass::Wood; 6],
    )
}

fn mesh_ply(mesh: &TriMesh) -> Ply {
    let coord = |k: usize| mesh.vertices().iter().map(|v| v[k]).collect::<Vec<_>>();
    let vertex = Element::new("vertex", mesh.vertices().len())
        .with_scalar("x", ScalarType::F64, coord(0))
        .with_scalar("y", ScalarType::F64, coord(1))
        .with_scalar("z", ScalarType::F64, coord(2));
    let face = Element::new("face", mesh.face_count()).with_list(
        "vertex_indices",
        ScalarType::U8,
        ScalarType::U32,
        mesh.faces().iter().map(|f| f.iter().map(|&i| i as i64).collect()).collect(),
    );
    Ply { comments: vec![format!("object {}", mesh.object_id)], elements: vec![vertex, face] }
}

pub struct RoomFixture {
    pub cloud: PointCloud,
    pub votes: Vec<FrameVote>,
}

pub fn room_fixture(points: usize, seed: u64) -> RoomFixture {
    let cfg = SynthConfig { n_points: points, seed, ..SynthConfig::default() };
    let room = synthetic_room(&cfg);
    let (lo, hi) = (Vec3::from(BOOKCASE_MIN), Vec3::from(BOOKCASE_MAX));
    let src = room.cloud.points();
    let sem = room.cloud.semantic().unwrap();
    let inst = room.cloud.instance().unwrap();

    let mut pts = Vec::new();
    let mut semantic = Vec::new();
    let mut instance = Vec::new();
    let mut push = |p: RawPoint, s: SemanticClass, i: u32| {
        let q = RawPoint {
            position: p.position.map(|c| round(c, 4)),
            confidence: round(p.confidence, 3),
            quality: round(p.quality, 3),
            frame_id: p.frame_id,
            reproj_error: round_up(p.reproj_error, 4),
        };
        pts.push(q);
        semantic.push(s);
        instance.push(i);
    };
    for k in 0..src.len() {
        // keep clutter blobs clear of the bookcase so they stay isolated
        if inst[k] >= 1000 && box_distance(&src[k].position, &lo, &hi) < 0.35 {
            continue;
        }
        push(src[k], sem[k], inst[k]);
    }

    // bookcase surface samples on its five visible sides
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb00c);
    let n_case = (points as f64 * 0.04).round() as usize;
    let ext = hi - lo;
    let sides: Vec<(usize, bool)> = vec![(0, false), (0, true), (1, false), (1, true), (2, true)];
    let area = |axis: usize| ext[(axis + 1) % 3] * ext[(axis + 2) % 3];
    let total: f64 = sides.iter().map(|&(a, _)| area(a)).sum();
    for &(axis, high) in &sides {
        let n = (n_case as f64 * area(axis) / total).round() as usize;
        for _ in 0..n {
            let mut p = Vec3::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y), rng.gen_range(lo.z..hi.z));
            p[axis] = if high { hi[axis] } else { lo[axis] } + rng.gen_range(-0.004..0.004);
            let raw = RawPoint::new(
                p,
                rng.gen_range(0.6..=1.0),
                rng.gen_range(0.6..=1.0),
                rng.gen_range(0..cfg.frames),
                rng.gen_range(0.0..0.1),
            );
            push(raw, SemanticClass::Bookcase, BOOKCASE_ID);
        }
    }

    let mut votes = room.votes;
    for f in 0..12u32 {
        let m = if f < 9 { MaterialClass::Wood } else { MaterialClass::Plywood };
        votes.push(FrameVote { object_id: BOOKCASE_ID, frame_id: 10 + 7 * f, predicted_material: m });
    }
    votes.sort();
    let cloud = PointCloud::new(pts, Some(semantic), Some(instance)).expect("fixture cloud is valid");
    RoomFixture { cloud, votes }
}

pub fn run_manifest(rays: usize) -> String {
    format!(
        r#"# End-to-end run over the synthetic room scan.
cloud = "cloud.ply"
votes = "votes.csv"
meshes = "meshes"
# measurements = "meas"   # measured PDP CSVs; without them the run checks itself

[sim]
freq_hz = 6.75e9
n_rays = {rays}
max_reflections = 3
mechanisms = ["reflection", "penetration"]

[match]
gate_delay_ns = 20.0
gate_power_db = 25.0

[[links]]
id = "tx1-rx1"
tx = [1.0, 2.0, 1.5]
rx = [5.0, 2.0, 1.2]

[[links]]
id = "tx1-rx2"
tx = [1.0, 2.0, 1.5]
rx = [2.0, 3.5, 1.1]

[[links]]
id = "tx2-rx3"
tx = [5.3, 0.7, 2.2]
rx = [3.8, 3.3, 0.9]
"#
    )
}

pub fn room(args: &RoomArgs) -> Result<Outcome, CliError> {
    let fx = room_fixture(args.points, args.seed);
    let dir = &args.out_dir;
    let mut files = Vec::new();
    let mut put = |rel: &str, bytes: &[u8]| -> Result<(), CliError> {
        let sha = write_output(&dir.join(rel), bytes)?;
        files.push(json!({ "path": dir.join(rel), "sha256": sha }));
        Ok(())
    };
    put("cloud.ply", fx.cloud.to_ply().to_ascii().as_bytes())?;
    put("votes.csv", write_votes(&fx.votes).as_bytes())?;
    put(&format!("meshes/{BOOKCASE_ID}.ply"), mesh_ply(&bookcase_mesh()).to_ascii().as_bytes())?;
    put("run.toml", run_manifest(args.rays).as_bytes())?;
    let truth = Scene::from_meshes(vec![box_room(), bookcase_mesh().with_material(MaterialClass::Wood)])?;
    put("truth_scene.xml", write_scene(&truth).as_bytes())?;
    let text = format!("wrote fixture with {} points to {}\n", fx.cloud.len(), dir.display());
    Ok(Outcome::ok(json!({ "points": fx.cloud.len(), "files": files }), text))
}
