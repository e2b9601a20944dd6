//! End-to-end run driven by a TOML manifest.
//!
//! ```toml
//! cloud = "cloud.ply"
//! votes = "votes.csv"
//! meshes = "meshes"          # optional: <instance_id>.ply per non-planar object
//! measurements = "meas"      # optional: measured PDP CSVs; self-check when absent
//! [recon]                    # reconstruction settings
//! [sim]                      # simulation settings; tx/rx come from the links
//! [match]                    # matching parameters
//! [[links]]
//! id = "tx1-rx1"
//! tx = [1.0, 2.0, 1.5]
//! rx = [5.0, 2.0, 1.2]
//! ```
//!
//! Relative paths resolve against the manifest's directory. Everything is
//! written below the output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sitewave_core::recon::ReconConfig;
use sitewave_core::scene::parse_scene;
use sitewave_core::validation::{compare_runs, load_pdp_dir, LinkPdp, MatchParams, MatchReport, Scenario};
use sitewave_core::SimConfig;

use super::pipeline::{build_model, load_mesh_dir, load_table, write_model};
use super::trace::trace_link;
use super::validate::summarize;
use super::Outcome;
use crate::error::{CliError, ErrorKind};
use crate::util::{read_text, sha256_file, sha256_hex, to_json, write_output};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run manifest (TOML).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: String,
    pub tx: [f64; 3],
    pub rx: [f64; 3],
    /// Taken from the traced direct path when absent.
    pub scenario: Option<Scenario>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cloud: PathBuf,
    pub votes: PathBuf,
    pub meshes: Option<PathBuf>,
    pub measurements: Option<PathBuf>,
    pub materials: Option<PathBuf>,
    #[serde(default)]
    pub recon: ReconConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default, rename = "match")]
    pub matching: MatchParams,
    pub links: Vec<LinkSpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::input(format!("run manifest: {e}")))?;
        if cfg.links.is_empty() {
            return Err(CliError::input("run manifest lists no links"));
        }
        let mut seen = BTreeSet::new();
        for l in &cfg.links {
            let safe = !l.id.is_empty() && l.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !safe || l.id.starts_with('.') {
                return Err(CliError::input(format!("link id `{}` must use [A-Za-z0-9._-]", l.id)));
            }
            if !seen.insert(&l.id) {
                return Err(CliError::input(format!("link id `{}` repeated", l.id)));
            }
        }
        cfg.matching.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<CliError>,
}

/// Everything needed to reproduce and audit a run. `timings_ms` and
/// `started_unix` are the only fields expected to differ between reruns.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: BTreeMap<String, FileRecord>,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub outputs: BTreeMap<String, FileRecord>,
    pub summary: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
    pub started_unix: u64,
}

struct Runner<'a> {
    out_dir: &'a Path,
    manifest: RunManifest,
}

impl Runner<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        log::info!("stage {name}");
        let t = Instant::now();
        let r = f(self).map_err(|e| e.at_stage(name));
        self.manifest.timings_ms.insert(name.to_string(), t.elapsed().as_secs_f64() * 1e3);
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            status: if r.is_ok() { "ok" } else { "failed" },
            error: r.as_ref().err().cloned(),
        });
        r
    }

    fn output(&mut self, key: &str, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let sha = write_output(&self.out_dir.join(rel), bytes)?;
        self.manifest.outputs.insert(key.to_string(), FileRecord { path: rel.to_string(), sha256: sha });
        Ok(())
    }

    fn input(&mut self, key: &str, shown: &Path, actual: &Path) -> Result<(), CliError> {
        let sha = sha256_file(actual)?;
        self.manifest.inputs.insert(key.to_string(), FileRecord { path: shown.display().to_string(), sha256: sha });
        Ok(())
    }

    fn finish(&mut self) -> Result<(), CliError> {
        let text = to_json(&self.manifest);
        write_output(&self.out_dir.join("manifest.json"), text.as_bytes())?;
        Ok(())
    }
}

pub fn run(args: &RunArgs) -> Result<Outcome, CliError> {
    let manifest_text = read_text(&args.manifest)?;
    let cfg = RunConfig::parse(&manifest_text)?;
    let base = args.manifest.parent().unwrap_or(Path::new("")).to_path_buf();
    let resolve = |p: &Path| base.join(p);
    let mut runner = Runner {
        out_dir: &args.out_dir,
        manifest: RunManifest {
            tool: "sitewave",
            version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
            config: cfg.clone(),
            stages: Vec::new(),
            outputs: BTreeMap::new(),
            summary: json!(null),
            timings_ms: BTreeMap::new(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        },
    };
    runner.manifest.inputs.insert(
        "manifest".into(),
        FileRecord {
            path: args.manifest.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: sha256_hex(manifest_text.as_bytes()),
        },
    );
    std::fs::create_dir_all(&args.out_dir).map_err(|e| crate::error::write_error(&args.out_dir, e))?;

    let result = execute(&mut runner, &cfg, &resolve);
    match result {
        Ok(report) => {
            runner.manifest.summary = json!({
                "links": report.links.len(),
                "pairs": report.pooled.pairs,
                "pooled": report.pooled,
            });
            runner.finish()?;
            let mut text = summarize(&report);
            text.push_str(&format!("wrote {}\n", args.out_dir.join("manifest.json").display()));
            let json = json!({
                "out_dir": args.out_dir,
                "manifest": args.out_dir.join("manifest.json"),
                "outputs": runner.manifest.outputs,
                "summary": runner.manifest.summary,
            });
            Ok(Outcome::ok(json, text))
        }
        Err(e) => {
            runner.manifest.summary = json!({ "failed_stage": e.stage });
            if let Err(w) = runner.finish() {
                log::error!("could not write manifest: {w}");
            }
            Err(e)
        }
    }
}

fn execute(runner: &mut Runner, cfg: &RunConfig, resolve: &dyn Fn(&Path) -> PathBuf) -> Result<MatchReport, CliError> {
    let model = runner.stage("pipeline", |r| {
        let table = load_table(cfg.materials.as_deref().map(resolve).as_deref())?;
        if let Some(m) = &cfg.materials {
            r.input("materials", m, &resolve(m))?;
        }
        r.input("cloud", &cfg.cloud, &resolve(&cfg.cloud))?;
        r.input("votes", &cfg.votes, &resolve(&cfg.votes))?;
        let mut meshes = Vec::new();
        if let Some(dir) = &cfg.meshes {
            for (path, mesh) in load_mesh_dir(&resolve(dir))? {
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                r.input(&format!("meshes/{name}"), &dir.join(&name), &path)?;
                meshes.push(mesh);
            }
        }
        let model = build_model(&resolve(&cfg.cloud), &resolve(&cfg.votes), &meshes, &table, &cfg.recon)?;
        for (rel, sha) in write_model(&model, runner_out(r))? {
            r.manifest.outputs.insert(rel.clone(), FileRecord { path: rel, sha256: sha });
        }
        Ok((model, table))
    })?;
    let (model, table) = model;

    // trace the scene exactly as written to disk
    let scene = runner.stage("scene", |r| {
        let text = read_text(&r.out_dir.join("scene.xml"))?;
        let scene = parse_scene(&text, r.out_dir)?;
        if scene != model.scene {
            return Err(CliError::internal("scene.xml does not reproduce the reconstructed scene"));
        }
        if !scene.is_watertight() && !cfg.sim.allow_open_meshes {
            return Err(CliError::new(ErrorKind::Refusal, "reconstructed scene is not watertight"));
        }
        Ok(scene)
    })?;

    let sim = runner.stage("trace", |r| {
        let mut sim = BTreeMap::new();
        for link in &cfg.links {
            let sc = SimConfig { tx_pos: link.tx, rx_pos: link.rx, ..cfg.sim.clone() };
            sc.validate()?;
            let t = trace_link(&scene, &sc, &table, &link.id, link.scenario)?;
            r.output(&format!("paths/{}", link.id), &format!("paths/{}.json", link.id), t.paths_json.as_bytes())?;
            r.output(&format!("sim/{}", link.id), &format!("sim/{}.csv", link.id), t.pdp_csv.as_bytes())?;
            sim.insert(link.id.clone(), t.pdp);
        }
        Ok(sim)
    })?;

    runner.stage("validate", |r| {
        let meas: BTreeMap<String, LinkPdp> = match &cfg.measurements {
            Some(dir) => {
                let dir_abs = resolve(dir);
                let meas = load_pdp_dir(&dir_abs)?;
                let mut files: Vec<PathBuf> = std::fs::read_dir(&dir_abs)
                    .map_err(|e| crate::error::read_error(&dir_abs, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
                    .collect();
                files.sort();
                for f in files {
                    let name = f.file_name().unwrap().to_string_lossy().into_owned();
                    r.input(&format!("measurements/{name}"), &dir.join(&name), &f)?;
                }
                meas
            }
            None => {
                log::info!("no measurements given; validating the simulation against itself");
                sim.clone()
            }
        };
        let report = compare_runs(&sim, &meas, &cfg.matching)?;
        r.output("report", "report.json", to_json(&report).as_bytes())?;
        Ok(report)
    })
}

fn runner_out<'a>(r: &Runner<'a>) -> &'a Path {
    r.out_dir
}
