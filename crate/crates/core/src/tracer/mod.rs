//! Deterministic SBR + image-method ray tracer for a point receiver.
//!
//! Candidate reflection sequences are collected by shooting a Fibonacci
//! lattice of rays from the transmitter. Each sequence is then solved exactly
//! with transmitter images, checked against the geometry, and converted to a
//! complex amplitude by carrying a vertically polarized field vector through
//! every reflection and slab crossing.
//!
//! Scene conventions: closed meshes are solids whose normals point into air.
//! Reflections happen on the air side only; a ray crossing a solid pays one
//! slab transmission between its entry and exit faces. Open meshes (only with
//! `allow_open_meshes`) reflect on both sides and are crossed as thin slabs of
//! the material's tabulated thickness.

mod config;
mod field;
mod image;
mod pdp;
mod sbr;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::geometry::reflect_dir;
pub use config::{Mechanism, SimConfig};
pub use pdp::{synthesize_pdp, Pdp, PdpEntry};
pub use sbr::{fibonacci_direction, fibonacci_directions, SELF_HIT_OFFSET};

use crate::materials::{eval_permittivity, ComplexPermittivity, MaterialError, MaterialTable, SPEED_OF_LIGHT};
use crate::scene::{ManifoldReport, Scene};
use image::{Event, ImageParams, Reject};

#[derive(Debug, Error)]
pub enum TracerError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("{0} is not implemented")]
    NotImplemented(&'static str),
    #[error("scene is not watertight: {}", describe(.0))]
    NotWatertight(Vec<(String, ManifoldReport)>),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

fn describe(bad: &[(String, ManifoldReport)]) -> String {
    bad.iter()
        .map(|(id, r)| {
            format!(
                "{id} ({} boundary, {} non-manifold, {} inconsistent)",
                r.boundary_edge_count, r.nonmanifold_edge_count, r.inconsistent_normal_pairs
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Reflect,
    Penetrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    /// Global face index.
    pub face: u32,
    pub object: String,
    pub material: crate::materials::MaterialClass,
    pub point: [f64; 3],
    /// Radians from the face normal.
    pub incidence_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropPath {
    pub interactions: Vec<Interaction>,
    pub length_m: f64,
    pub delay_s: f64,
    /// Complex channel gain between isotropic 0 dBi antennas.
    pub amplitude: Complex64,
    pub power_dbm: f64,
}

impl PropPath {
    pub fn reflections(&self) -> usize {
        self.interactions.iter().filter(|i| i.kind == InteractionKind::Reflect).count()
    }

    pub fn penetrations(&self) -> usize {
        self.interactions.iter().filter(|i| i.kind == InteractionKind::Penetrate).count()
    }

    pub fn is_los(&self) -> bool {
        self.interactions.is_empty()
    }

    /// Ordered `(kind, face)` list identifying the path.
    pub fn sequence(&self) -> Vec<(InteractionKind, u32)> {
        self.interactions.iter().map(|i| (i.kind, i.face)).collect()
    }

    pub fn power_mw(&self) -> f64 {
        10f64.powf(self.power_dbm / 10.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDiagnostics {
    pub rays_launched: usize,
    pub candidates: usize,
    pub validated: usize,
    pub rejected_geometry: usize,
    pub rejected_obstructed: usize,
    /// Valid paths dropped because their amplitude vanished (e.g. air faces).
    pub zero_amplitude: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub paths: Vec<PropPath>,
    pub diagnostics: TraceDiagnostics,
}

/// Traces with the built-in material table.
pub fn trace(scene: &Scene, cfg: &SimConfig) -> Result<TraceResult, TracerError> {
    trace_with(scene, cfg, &MaterialTable::builtin())
}

pub fn trace_with(scene: &Scene, cfg: &SimConfig, table: &MaterialTable) -> Result<TraceResult, TracerError> {
    cfg.validate()?;
    let open: Vec<(String, ManifoldReport)> = scene
        .meshes()
        .iter()
        .zip(scene.manifold_reports())
        .filter(|(_, r)| !r.is_watertight)
        .map(|(m, r)| (m.object_id.clone(), *r))
        .collect();
    if !open.is_empty() {
        if !cfg.allow_open_meshes {
            return Err(TracerError::NotWatertight(open));
        }
        log::warn!("tracing with {} open mesh(es): {}", open.len(), describe(&open));
    }
    let (tx, rx) = (cfg.tx(), cfg.rx());
    let bounds = scene.bounds();
    if !bounds.is_empty() && !(bounds.contains(&tx) && bounds.contains(&rx)) {
        log::warn!("transmitter or receiver lies outside the scene bounds");
    }

    let mut eta = BTreeMap::new();
    for class in crate::materials::MaterialClass::ALL {
        let e: ComplexPermittivity = eval_permittivity(table.get(class), cfg.freq_hz)?.eta;
        eta.insert(class, e);
    }
    let thickness: BTreeMap<_, _> =
        crate::materials::MaterialClass::ALL.iter().map(|&m| (m, table.get(m).thickness_m)).collect();

    let reflect = cfg.has(Mechanism::Reflection);
    let penetrate = cfg.has(Mechanism::Penetration);
    let candidates: BTreeSet<Vec<u32>> = sbr::discover(
        scene,
        tx,
        cfg.n_rays,
        sbr::SbrLimits {
            max_reflections: if reflect { cfg.max_reflections } else { 0 },
            max_penetrations: cfg.max_penetrations,
            reflect,
            penetrate,
        },
    );
    let candidates: Vec<Vec<u32>> = candidates.into_iter().collect();

    let scale = 1.0 + bounds.extent().norm().max(0.0);
    let params = ImageParams {
        penetrate,
        max_penetrations: cfg.max_penetrations,
        plane_tol: if bounds.is_empty() { 1e-6 } else { 1e-6 * scale },
        open_thickness: &thickness,
    };
    let media = field::Media { eta: &eta, freq_hz: cfg.freq_hz };
    let p_tx_mw = 10f64.powf(cfg.tx_power_dbm / 10.0);

    let outcomes: Vec<Result<Option<PropPath>, Reject>> = candidates
        .par_iter()
        .map(|seq| {
            let valid = image::validate(scene, tx, rx, seq, &params)?;
            let (a, _) = field::amplitude(&valid, &media).expect("angles are clamped below grazing");
            Ok(build_path(scene, &valid, a, p_tx_mw))
        })
        .collect();

    let mut diagnostics =
        TraceDiagnostics { rays_launched: cfg.n_rays, candidates: candidates.len(), ..Default::default() };
    let mut paths = Vec::new();
    let mut seen = BTreeSet::new();
    for o in outcomes {
        match o {
            Err(Reject::Geometry) => diagnostics.rejected_geometry += 1,
            Err(Reject::Obstructed) => diagnostics.rejected_obstructed += 1,
            Ok(None) => diagnostics.zero_amplitude += 1,
            Ok(Some(p)) => {
                if seen.insert(p.sequence()) {
                    paths.push(p);
                }
            }
        }
    }
    diagnostics.validated = paths.len();
    paths.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s).then_with(|| a.sequence().cmp(&b.sequence())));
    if paths.is_empty() {
        log::warn!("no propagation paths found: {diagnostics:?}");
    }
    Ok(TraceResult { paths, diagnostics })
}

fn build_path(scene: &Scene, valid: &image::ValidPath, a: Complex64, p_tx_mw: f64) -> Option<PropPath> {
    let power_mw = a.norm_sqr() * p_tx_mw;
    if !(power_mw > 0.0) {
        return None;
    }
    let object = |face: u32| scene.meshes()[scene.mesh_of(face) as usize].object_id.clone();
    let mut interactions = Vec::new();
    for ev in &valid.events {
        match ev {
            Event::Reflect { face, point, angle, material, .. } => interactions.push(Interaction {
                kind: InteractionKind::Reflect,
                face: *face,
                object: object(*face),
                material: *material,
                point: (*point).into(),
                incidence_angle: *angle,
            }),
            Event::Slab { entry, exit, material, .. } => {
                for c in std::iter::once(entry).chain(exit.as_ref()) {
                    interactions.push(Interaction {
                        kind: InteractionKind::Penetrate,
                        face: c.face,
                        object: object(c.face),
                        material: *material,
                        point: c.point.into(),
                        incidence_angle: c.angle,
                    });
                }
            }
        }
    }
    Some(PropPath {
        interactions,
        length_m: valid.length,
        delay_s: valid.length / SPEED_OF_LIGHT,
        amplitude: a,
        power_dbm: 10.0 * power_mw.log10(),
    })
}
