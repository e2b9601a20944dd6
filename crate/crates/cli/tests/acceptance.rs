//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion outside `KNOWN_UNATTAINABLE` fails. Set
//! `SITEWAVE_STRICT_ACCEPTANCE=1` to make those count too.

#[path = "../../core/tests/common/image_oracle.rs"]
#[allow(dead_code)]
mod image_oracle;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sitewave_core::materials::{fresnel, reflected_power_fraction, ComplexPermittivity, Polarization};
use sitewave_core::recon::synth::{synthetic_room, SynthConfig};
use sitewave_core::recon::{
    build_rt_model, cluster_filter, fit_plane, huber_weight, merge_planes, reprojection_gate, vote_material, FrameVote,
    MergeConfig, PlanePrimitive, PointCloud, RawPoint, ReconConfig, HUBER_K,
};
use sitewave_core::scene::fixtures::box_room;
use sitewave_core::tracer::SimConfig;
use sitewave_core::validation::{compare_runs, rmse, RmseStatus, Scenario};
use sitewave_core::{synthesize_pdp, trace, LinkPdp, MatchParams, MaterialClass, MaterialTable, Scene, Vec3};

/// Criteria that cannot hold with the stated inputs; see the README.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()))
}

fn box_scene() -> Scene {
    Scene::from_meshes(vec![box_room()]).expect("box room is valid")
}

fn c1_fresnel() -> Outcome {
    let start = Instant::now();
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/oracle/fresnel_oracle.json"))
        .map_err(|e| e.to_string())?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let freq = doc["freq_hz"].as_f64().unwrap();
    let samples = doc["samples"].as_array().unwrap();
    ensure(samples.len() == 100, || format!("{} samples", samples.len()))?;
    let (mut worst_r, mut worst_t) = (0.0f64, 0.0f64);
    for s in samples {
        let f = |k: &str| s[k].as_f64().unwrap();
        let pair = |k: &str| (s[k][0].as_f64().unwrap(), s[k][1].as_f64().unwrap());
        let eta = ComplexPermittivity::from_parts(f("eps_r"), f("sigma"), freq);
        let c = fresnel(eta, f("theta_deg").to_radians()).map_err(|e| e.to_string())?;
        for (got, want) in [(c.r_perp, pair("r_perp")), (c.r_par, pair("r_par"))] {
            let err = ((got.re - want.0).powi(2) + (got.im - want.1).powi(2)).sqrt();
            worst_r = worst_r.max(err / (want.0.powi(2) + want.1.powi(2)).sqrt());
        }
        worst_t = worst_t.max((c.t_perp - (1.0 + c.r_perp)).norm()).max((c.t_par - (1.0 + c.r_par)).norm());
    }
    ensure(worst_r <= 1e-10, || format!("max relative error {worst_r:e}"))?;
    ensure(worst_t <= 1e-12, || format!("t = 1 + r off by {worst_t:e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("100 samples, max rel err {worst_r:.1e}, |t-(1+r)| <= {worst_t:.1e}"))
}

fn c2_sensitivity() -> Outcome {
    let start = Instant::now();
    let power = |eps_r: f64, sigma: f64| {
        let c = fresnel(ComplexPermittivity::from_parts(eps_r, sigma, 6.75e9), 0.0).unwrap();
        reflected_power_fraction(&c, Polarization::Perp)
    };
    let gap = 10.0 * (power(5.24, 0.237) / power(1.99, 0.036)).log10();
    within(start.elapsed(), 1.0)?;
    let msg = format!("concrete vs wood normal-incidence gap {gap:.2} dB, target [3, 5] dB");
    ensure((3.0..=5.0).contains(&gap), || msg.clone())?;
    Ok(msg)
}

fn c3_free_space() -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig { tx_pos: [0.0, 0.0, 1.5], rx_pos: [10.0, 0.0, 1.5], ..SimConfig::default() };
    let paths = trace(&Scene::empty(), &cfg).map_err(|e| e.to_string())?.paths;
    ensure(paths.len() == 1, || format!("{} paths", paths.len()))?;
    let (loss, delay_ns) = (-paths[0].power_dbm, paths[0].delay_s * 1e9);
    ensure((loss - 69.03).abs() <= 0.01, || format!("loss {loss:.4} dB"))?;
    ensure((delay_ns - 33.36).abs() <= 0.01, || format!("delay {delay_ns:.4} ns"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("one path, loss {loss:.3} dB, delay {delay_ns:.3} ns"))
}

fn c4_image_sources() -> Outcome {
    let start = Instant::now();
    let (tx, rx) = ([1.0, 1.0, 1.5], [4.0, 2.5, 1.2]);
    let cfg = SimConfig { tx_pos: tx, rx_pos: rx, n_rays: 1_000_000, max_reflections: 2, ..SimConfig::default() };
    let paths = trace(&box_scene(), &cfg).map_err(|e| e.to_string())?.paths;
    let oracle = image_oracle::enumerate(Vec3::from(tx), Vec3::from(rx), 2, cfg.freq_hz);
    let walls = |p: &sitewave_core::PropPath| -> Option<Vec<usize>> {
        p.interactions.iter().map(|i| image_oracle::wall_of_point(&i.point)).collect()
    };
    let mut found = 0;
    for o in &oracle {
        if let Some(p) = paths.iter().find(|p| walls(p).as_deref() == Some(&o.walls[..])) {
            found += 1;
            ensure((p.delay_s - o.delay_s).abs() < 1e-9, || format!("{:?}: delay off", o.walls))?;
            ensure((p.power_dbm - o.power_dbm).abs() < 0.01, || {
                format!("{:?}: {} vs {} dBm", o.walls, p.power_dbm, o.power_dbm)
            })?;
        }
    }
    ensure(found == oracle.len(), || format!("recall {found}/{}", oracle.len()))?;
    ensure(paths.len() == oracle.len(), || format!("{} traced vs {} image sources", paths.len(), oracle.len()))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("{found}/{} image-source paths, no extras, {:.1} s", oracle.len(), start.elapsed().as_secs_f64()))
}

fn c5_reciprocity() -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig {
        tx_pos: [1.0, 1.0, 1.5],
        rx_pos: [4.5, 3.0, 0.8],
        n_rays: 1_000_000,
        max_reflections: 3,
        ..SimConfig::default()
    };
    let scene = box_scene();
    let key = |c: &SimConfig| -> Result<Vec<(f64, f64)>, String> {
        let mut v: Vec<(f64, f64)> =
            trace(&scene, c).map_err(|e| e.to_string())?.paths.iter().map(|p| (p.delay_s, p.power_dbm)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(v)
    };
    let (fwd, rev) = (key(&cfg)?, key(&cfg.swapped())?);
    ensure(fwd.len() == rev.len(), || format!("{} vs {} paths", fwd.len(), rev.len()))?;
    // multiset match: equal delays (to 1 ps) paired by closest power
    let mut used = vec![false; rev.len()];
    let mut worst = 0.0f64;
    for a in &fwd {
        let best = (0..rev.len())
            .filter(|&j| !used[j] && (rev[j].0 - a.0).abs() < 1e-12)
            .min_by(|&i, &j| (rev[i].1 - a.1).abs().total_cmp(&(rev[j].1 - a.1).abs()))
            .ok_or_else(|| format!("no reverse path with delay {} s", a.0))?;
        used[best] = true;
        worst = worst.max((rev[best].1 - a.1).abs());
    }
    ensure(worst <= 0.01, || format!("power differs by {worst} dB"))?;
    within(start.elapsed(), 120.0)?;
    Ok(format!("{} paths each way, max power difference {worst:.1e} dB", fwd.len()))
}

fn square(normal: Vec3, centroid: Vec3) -> PlanePrimitive {
    let n = normal.normalize();
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    let pts: Vec<(Vec3, f64)> = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        .iter()
        .map(|&(a, b)| (centroid + u * a + v * b, 0.25))
        .collect();
    let p = fit_plane(&pts).unwrap();
    if p.normal.dot(&n) < 0.0 {
        p.flipped()
    } else {
        p
    }
}

fn c6_geometry() -> Outcome {
    let start = Instant::now();
    let room = synthetic_room(&SynthConfig { n_points: 100_000, noise_sigma: 0.005, ..SynthConfig::default() });
    let table = MaterialTable::builtin();
    let model =
        build_rt_model(&room.cloud, &room.votes, &[], &table, &ReconConfig::default()).map_err(|e| e.to_string())?;
    ensure(model.planes.len() == 6, || format!("{} planes", model.planes.len()))?;
    let (mut worst_deg, mut worst_off) = (0.0f64, 0.0f64);
    for t in &room.truth {
        let (_, plane) = model.planes.iter().find(|(id, _)| *id == t.instance).ok_or("missing wall")?;
        worst_deg = worst_deg.max(plane.normal.dot(&t.normal).clamp(-1.0, 1.0).acos().to_degrees());
        worst_off = worst_off.max((plane.offset - t.offset).abs());
    }
    ensure(worst_deg <= 0.5, || format!("normal off by {worst_deg} deg"))?;
    ensure(worst_off <= 0.01, || format!("offset off by {worst_off} m"))?;

    // vertices sit on the fitted plane or on its offset copy one slab thickness out
    let mut worst_planarity = 0.0f64;
    for inst in &model.report.instances {
        let thickness = table.get(inst.material).thickness_m;
        for ps in &inst.planes {
            let mesh = model.scene.meshes().iter().find(|m| m.object_id == ps.object_id).ok_or("mesh for plane")?;
            let n = Vec3::from(ps.normal);
            for v in mesh.vertices() {
                let d = (n.dot(v) + ps.offset).abs();
                worst_planarity = worst_planarity.max(d.min((d - thickness).abs()));
            }
        }
    }
    ensure(worst_planarity <= 1e-9, || format!("planarity residual {worst_planarity:e} m"))?;

    let cfg = MergeConfig::default();
    let base = square(Vec3::z(), Vec3::zeros());
    let merges = |other: PlanePrimitive| merge_planes(&[base.clone(), other], &cfg).len() == 1;
    ensure(merges(square(Vec3::z(), Vec3::new(0.0, 0.0, 0.1))), || "0.1 m apart did not merge".into())?;
    ensure(!merges(square(Vec3::z(), Vec3::new(0.0, 0.0, 0.1 + 1e-6))), || "0.1 m + 1 um merged".into())?;
    let tilt = |deg: f64| {
        let t = f64::to_radians(deg);
        square(Vec3::new(t.sin(), 0.0, t.cos()), Vec3::zeros())
    };
    ensure(merges(tilt(10.0)), || "10 deg did not merge".into())?;
    ensure(!merges(tilt(10.0 + 1e-6)), || "10 deg + 1e-6 merged".into())?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "normals <= {worst_deg:.3} deg, offsets <= {:.2} mm, planarity {worst_planarity:.1e} m, merge boundaries honored",
        worst_off * 1e3
    ))
}

fn c7_filter_constants() -> Outcome {
    let k = HUBER_K;
    ensure(k == 1.345, || format!("k = {k}"))?;
    ensure(huber_weight(k, k) == 1.0 && huber_weight(-k, k) == 1.0, || "w(k) != 1".into())?;
    ensure(huber_weight(2.0 * k, k) == 0.5 && huber_weight(-2.0 * k, k) == 0.5, || "w(2k) != 0.5".into())?;

    let errs = [0.0, 0.05, 0.1, 0.1 + 1e-9, 0.1000001, 0.3];
    let pts: Vec<RawPoint> = errs.iter().map(|&e| RawPoint::new(Vec3::zeros(), 1.0, 1.0, 0, e)).collect();
    let kept: Vec<f64> = reprojection_gate(&PointCloud::new(pts, None, None).unwrap(), 0.1)
        .points()
        .iter()
        .map(|p| p.reproj_error)
        .collect();
    ensure(kept == [0.0, 0.05, 0.1], || format!("gate kept {kept:?}"))?;

    let line = |origin: Vec3, n: usize| -> Vec<RawPoint> {
        (0..n).map(|i| RawPoint::new(origin + Vec3::new(0.05 * i as f64, 0.0, 0.0), 1.0, 1.0, 0, 0.0)).collect()
    };
    let mut pts = line(Vec3::zeros(), 100);
    pts.extend(line(Vec3::new(0.0, 5.0, 0.0), 99));
    let (out, kept_clusters, removed) = cluster_filter(&PointCloud::new(pts, None, None).unwrap(), 0.1, 100);
    ensure(out.len() == 100 && kept_clusters == 1 && removed == 1, || {
        format!("{} points kept, {kept_clusters} clusters kept, {removed} removed", out.len())
    })?;
    Ok("huber w(k)=1, w(2k)=0.5; gate drops only > 0.1 m; 99-point cluster dropped, 100 kept".into())
}

fn c8_voting() -> Outcome {
    let start = Instant::now();
    // fixed tie-break order, highest priority first
    const ORDER: [MaterialClass; 6] = [
        MaterialClass::Concrete,
        MaterialClass::Metal,
        MaterialClass::Glass,
        MaterialClass::Wood,
        MaterialClass::Plywood,
        MaterialClass::Air,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ties = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=12);
        let picks: Vec<MaterialClass> = (0..n).map(|_| ORDER[rng.gen_range(0..ORDER.len())]).collect();
        let votes: Vec<FrameVote> = picks
            .iter()
            .enumerate()
            .map(|(f, &m)| FrameVote { object_id: 3, frame_id: f as u32, predicted_material: m })
            .collect();
        let counts: Vec<usize> = ORDER.iter().map(|m| picks.iter().filter(|p| *p == m).count()).collect();
        let top = *counts.iter().max().unwrap();
        let leaders: Vec<MaterialClass> =
            ORDER.iter().zip(&counts).filter(|(_, &c)| c == top).map(|(&m, _)| m).collect();
        let got = vote_material(&votes, 3).map_err(|e| e.to_string())?;
        ensure(got.material == leaders[0], || format!("case {case}: {:?} vs {:?}", got.material, leaders[0]))?;
        let expected_tied = if leaders.len() > 1 { leaders.clone() } else { Vec::new() };
        ensure(got.tied == expected_tied, || format!("case {case}: tie list {:?} vs {expected_tied:?}", got.tied))?;
        ties += usize::from(leaders.len() > 1);
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("1000 random multisets agree with brute force ({ties} ties)"))
}

fn c9_rmse() -> Outcome {
    let start = Instant::now();
    let mw = |dbm: f64| 10f64.powf(dbm / 10.0);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();

    let one = rmse(&[(mw(-50.0), mw(-53.0))]).map_err(|e| e.to_string())?;
    let want_lin = 1e-5 - 10f64.powf(-5.3);
    ensure(rel(one.rmse_linear_mw, want_lin) <= 1e-9, || format!("single pair {}", one.rmse_linear_mw))?;
    let want_db = 10.0 * want_lin.log10();
    ensure(rel(one.rmse_db.unwrap(), want_db) <= 1e-9, || format!("single pair {:?} dB", one.rmse_db))?;

    let two = rmse(&[(4e-6, 1e-6), (1e-6, 5e-6)]).map_err(|e| e.to_string())?;
    ensure(rel(two.rmse_linear_mw, 12.5e-12f64.sqrt()) <= 1e-9, || format!("two pairs {}", two.rmse_linear_mw))?;

    let same = rmse(&[(mw(-60.0), mw(-60.0)), (mw(-71.5), mw(-71.5))]).map_err(|e| e.to_string())?;
    ensure(same.status == RmseStatus::Exact && same.rmse_db.is_none(), || format!("identical pairs {same:?}"))?;

    let cfg = SimConfig { n_rays: 50_000, max_reflections: 2, ..SimConfig::default() };
    let res = trace(&box_scene(), &cfg).map_err(|e| e.to_string())?;
    let pdp = synthesize_pdp(&res.paths, &cfg);
    let link = LinkPdp::from_pdp("self", Scenario::Los, &pdp);
    let runs: BTreeMap<String, LinkPdp> = [("self".to_string(), link)].into_iter().collect();
    let report = compare_runs(&runs, &runs, &MatchParams::default()).map_err(|e| e.to_string())?;
    let pooled = report.rmse().ok_or("no pooled rmse")?;
    ensure(pooled.status == RmseStatus::Exact, || format!("self-comparison {pooled:?}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("examples within 1e-9; self-comparison exact over {} pairs", pooled.n))
}

fn c10_determinism() -> Outcome {
    let start = Instant::now();
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/room/run.toml");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<PathBuf, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sitewave"))
            .arg("run")
            .arg("--manifest")
            .arg(&manifest)
            .arg("--out-dir")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || format!("run {name}: {}", String::from_utf8_lossy(&status.stderr)))?;
        Ok(out)
    };
    let (a, b) = (run("a")?, run("b")?);
    let mut files = vec!["scene.xml".to_string(), "recon_report.json".to_string(), "report.json".to_string()];
    for dir in ["paths", "sim"] {
        let mut names: Vec<String> = std::fs::read_dir(a.join(dir))
            .map_err(|e| e.to_string())?
            .map(|e| format!("{dir}/{}", e.unwrap().file_name().to_string_lossy()))
            .collect();
        names.sort();
        ensure(!names.is_empty(), || format!("no files in {dir}/"))?;
        files.extend(names);
    }
    for f in &files {
        let (x, y) = (std::fs::read(a.join(f)), std::fs::read(b.join(f)));
        ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || format!("{f} differs between runs"))?;
    }
    let load = |p: &Path| -> Result<Value, String> {
        let mut v: Value = serde_json::from_slice(&std::fs::read(p.join("manifest.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let obj = v.as_object_mut().ok_or("manifest is not an object")?;
        obj.remove("timings_ms");
        obj.remove("started_unix");
        Ok(v)
    };
    ensure(load(&a)? == load(&b)?, || "manifests differ beyond timestamps".into())?;
    let report: Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    ensure(report["pooled"]["pooled"]["status"] == "exact", || "self-validation not exact".into())?;
    within(start.elapsed(), 300.0)?;
    Ok(format!(
        "{} outputs byte-identical, manifests equal modulo timing, {:.0} s",
        files.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn main() {
    let strict = std::env::var("SITEWAVE_STRICT_ACCEPTANCE").is_ok_and(|v| v == "1");
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "fresnel vs 50-digit oracle", c1_fresnel),
        (2, "concrete/wood reflection gap", c2_sensitivity),
        (3, "free-space trace", c3_free_space),
        (4, "image-source equivalence", c4_image_sources),
        (5, "reciprocity", c5_reciprocity),
        (6, "pipeline geometry recovery", c6_geometry),
        (7, "filter constants", c7_filter_constants),
        (8, "voting vs brute force", c8_voting),
        (9, "rmse metric", c9_rmse),
        (10, "end-to-end determinism", c10_determinism),
    ];
    let mut blocking = Vec::new();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {id:>2} {name}: {detail} ({secs:.2} s)"),
            Err(detail) => {
                failed += 1;
                let known = KNOWN_UNATTAINABLE.contains(&id);
                let tag = if known { " (known unattainable)" } else { "" };
                println!("[FAIL] {id:>2} {name}: {detail}{tag} ({secs:.2} s)");
                if strict || !known {
                    blocking.push(id);
                }
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if !blocking.is_empty() {
        println!("blocking failures: {blocking:?}");
        std::process::exit(1);
    }
}
