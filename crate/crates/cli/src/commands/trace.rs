use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use serde_json::json;
use sitewave_core::scene::load_scene;
use sitewave_core::tracer::{trace_with, Interaction, TraceDiagnostics, TraceResult};
use sitewave_core::validation::{write_pdp_csv, LinkPdp, Scenario};
use sitewave_core::{synthesize_pdp, MaterialTable, Scene, SimConfig};

use super::pipeline::load_table;
use super::Outcome;
use crate::error::CliError;
use crate::util::{parse_triple, to_json, write_output};

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Scene XML file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Simulation settings (TOML); built-in defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Path list output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the PDP as CSV.
    #[arg(long)]
    pub pdp: Option<PathBuf>,
    /// Link identifier used in the PDP file.
    #[arg(long, default_value = "link")]
    pub link_id: String,
    /// Override the transmitter position (x,y,z in meters).
    #[arg(long, value_parser = parse_triple)]
    pub tx: Option<[f64; 3]>,
    /// Override the receiver position (x,y,z in meters).
    #[arg(long, value_parser = parse_triple)]
    pub rx: Option<[f64; 3]>,
    /// Material table CSV replacing the built-in one.
    #[arg(long)]
    pub materials: Option<PathBuf>,
}

#[derive(Serialize)]
struct PathRecord<'a> {
    delay_s: f64,
    delay_ns: f64,
    power_dbm: f64,
    length_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<[f64; 2]>,
    interactions: &'a [Interaction],
}

#[derive(Serialize)]
struct PathsFile<'a> {
    link_id: &'a str,
    scenario: Scenario,
    config: &'a SimConfig,
    diagnostics: &'a TraceDiagnostics,
    paths: Vec<PathRecord<'a>>,
}

pub struct LinkTrace {
    pub result: TraceResult,
    pub pdp: LinkPdp,
    pub paths_json: String,
    pub pdp_csv: String,
}

/// LOS when the direct path exists without crossing anything.
pub fn scenario_of(result: &TraceResult) -> Scenario {
    if result.paths.iter().any(|p| p.is_los()) {
        Scenario::Los
    } else {
        Scenario::Nlos
    }
}

pub fn trace_link(
    scene: &Scene,
    cfg: &SimConfig,
    table: &MaterialTable,
    link_id: &str,
    scenario: Option<Scenario>,
) -> Result<LinkTrace, CliError> {
    let result = trace_with(scene, cfg, table)?;
    let d = &result.diagnostics;
    log::info!("trace {link_id}: {} rays, {} candidates, {} paths", d.rays_launched, d.candidates, d.validated);
    let scenario = scenario.unwrap_or_else(|| scenario_of(&result));
    let file = PathsFile {
        link_id,
        scenario,
        config: cfg,
        diagnostics: &result.diagnostics,
        paths: result
            .paths
            .iter()
            .map(|p| PathRecord {
                delay_s: p.delay_s,
                delay_ns: p.delay_s * 1e9,
                power_dbm: p.power_dbm,
                length_m: p.length_m,
                amplitude: cfg.export_complex.then_some([p.amplitude.re, p.amplitude.im]),
                interactions: &p.interactions,
            })
            .collect(),
    };
    let paths_json = to_json(&file);
    let pdp = LinkPdp::from_pdp(link_id, scenario, &synthesize_pdp(&result.paths, cfg));
    let pdp_csv = write_pdp_csv(&pdp);
    Ok(LinkTrace { result, pdp, paths_json, pdp_csv })
}

pub fn load_sim_config(path: Option<&std::path::Path>) -> Result<SimConfig, CliError> {
    match path {
        Some(p) => Ok(SimConfig::load(p)?),
        None => Ok(SimConfig::default()),
    }
}

pub fn run(args: &TraceArgs) -> Result<Outcome, CliError> {
    let mut cfg = load_sim_config(args.config.as_deref())?;
    if let Some(tx) = args.tx {
        cfg.tx_pos = tx;
    }
    if let Some(rx) = args.rx {
        cfg.rx_pos = rx;
    }
    cfg.validate()?;
    let table = load_table(args.materials.as_deref())?;
    let scene = load_scene(&args.scene)?;
    let t = trace_link(&scene, &cfg, &table, &args.link_id, None)?;
    let mut outputs = vec![json!({ "path": args.out, "sha256": write_output(&args.out, t.paths_json.as_bytes())? })];
    if let Some(p) = &args.pdp {
        outputs.push(json!({ "path": p, "sha256": write_output(p, t.pdp_csv.as_bytes())? }));
    }
    let d = &t.result.diagnostics;
    let mut text =
        format!("{} rays, {} candidates, {} paths ({})\n", d.rays_launched, d.candidates, d.validated, t.pdp.scenario);
    for p in t.result.paths.iter().take(10) {
        text.push_str(&format!(
            "  {:>9.3} ns {:>9.3} dBm  {} refl, {} pen\n",
            p.delay_s * 1e9,
            p.power_dbm,
            p.reflections(),
            p.penetrations()
        ));
    }
    if t.result.paths.len() > 10 {
        text.push_str(&format!("  ... {} more\n", t.result.paths.len() - 10));
    }
    let json = json!({
        "link_id": args.link_id,
        "scenario": t.pdp.scenario,
        "diagnostics": d,
        "paths": t.result.paths.len(),
        "outputs": outputs,
    });
    Ok(Outcome::ok(json, text))
}
