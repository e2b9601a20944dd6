//! Image-method validation of candidate reflection sequences.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::geometry::{mirror_point, Vec3};
use crate::materials::MaterialClass;
use crate::scene::{Hit, Scene};

/// Keeps incidence angles strictly below grazing for the Fresnel formulas.
const MAX_ANGLE: f64 = FRAC_PI_2 - 1e-9;
/// Hits closer together than this along a segment are one crossing.
const SAME_HIT: f64 = 1e-9;

pub(crate) fn incidence_angle(dir: &Vec3, normal: &Vec3) -> f64 {
    dir.dot(normal).abs().min(1.0).acos().min(MAX_ANGLE)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Crossing {
    pub face: u32,
    pub point: Vec3,
    pub angle: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Event {
    Reflect {
        face: u32,
        point: Vec3,
        /// Facet normal facing the arriving ray.
        normal: Vec3,
        angle: f64,
        material: MaterialClass,
    },
    /// Entry into a solid (or a single open face) followed by the exit.
    Slab {
        entry: Crossing,
        exit: Option<Crossing>,
        /// Entry normal facing the arriving ray.
        normal: Vec3,
        /// Equivalent perpendicular thickness.
        thickness: f64,
        material: MaterialClass,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct ValidPath {
    /// TX, reflection points, RX.
    pub points: Vec<Vec3>,
    pub events: Vec<Event>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reject {
    Geometry,
    Obstructed,
}

pub(crate) struct ImageParams<'a> {
    pub penetrate: bool,
    pub max_penetrations: usize,
    pub plane_tol: f64,
    /// Thin-slab thickness per material, for open faces.
    pub open_thickness: &'a BTreeMap<MaterialClass, f64>,
}

/// Solves the specular chain for `facets` and checks it against the scene.
pub(crate) fn validate(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    facets: &[u32],
    p: &ImageParams,
) -> Result<ValidPath, Reject> {
    let planes: Vec<_> = facets.iter().map(|&f| &scene.facets()[f as usize]).collect();
    if facets.windows(2).any(|w| w[0] == w[1]) {
        return Err(Reject::Geometry);
    }
    let mut images = Vec::with_capacity(facets.len());
    let mut src = tx;
    for pl in &planes {
        src = mirror_point(&src, &pl.normal, pl.offset);
        images.push(src);
    }
    let mut points = vec![rx; facets.len() + 2];
    points[0] = tx;
    let mut target = rx;
    for j in (0..facets.len()).rev() {
        let pl = planes[j];
        let si = pl.normal.dot(&images[j]) + pl.offset;
        let st = pl.normal.dot(&target) + pl.offset;
        if !(si * st < 0.0) {
            return Err(Reject::Geometry);
        }
        let q = images[j] + (target - images[j]) * (si / (si - st));
        points[j + 1] = q;
        target = q;
    }

    let mut faces = Vec::with_capacity(facets.len());
    for (j, pl) in planes.iter().enumerate() {
        let (a, q, b) = (points[j], points[j + 1], points[j + 2]);
        let sa = pl.normal.dot(&a) + pl.offset;
        let sb = pl.normal.dot(&b) + pl.offset;
        if !(sa * sb > 0.0) {
            return Err(Reject::Geometry);
        }
        if scene.mesh_is_closed(pl.mesh) && sa < 0.0 {
            // arriving on the inside of a solid
            return Err(Reject::Geometry);
        }
        let face = scene.locate_on_facet(&q, facets[j], p.plane_tol).ok_or(Reject::Geometry)?;
        faces.push(face);
    }

    let mut events = Vec::new();
    let mut penetrations = 0;
    let mut length = 0.0;
    for s in 0..points.len() - 1 {
        let (a, b) = (points[s], points[s + 1]);
        let seg = b - a;
        let len = seg.norm();
        if len < 1e-9 {
            return Err(Reject::Geometry);
        }
        length += len;
        let dir = seg / len;
        let eps = 1e-9 * (1.0 + len);
        let hits = scene.hits_along(&a, &dir, eps, len - eps);
        segment_events(scene, &dir, &dedup(hits), p, &mut events, &mut penetrations)?;
        if s < faces.len() {
            let pl = planes[s];
            let normal = if dir.dot(&pl.normal) < 0.0 { pl.normal } else { -pl.normal };
            events.push(Event::Reflect {
                face: faces[s],
                point: b,
                normal,
                angle: incidence_angle(&dir, &normal),
                material: scene.material_of(faces[s]),
            });
        }
    }
    Ok(ValidPath { points, events, length })
}

fn dedup(hits: Vec<Hit>) -> Vec<Hit> {
    let mut out: Vec<Hit> = Vec::with_capacity(hits.len());
    for h in hits {
        if let Some(last) = out.last() {
            if last.mesh == h.mesh && last.front == h.front && (h.distance - last.distance).abs() < SAME_HIT {
                continue;
            }
        }
        out.push(h);
    }
    out
}

fn segment_events(
    scene: &Scene,
    dir: &Vec3,
    hits: &[Hit],
    p: &ImageParams,
    events: &mut Vec<Event>,
    penetrations: &mut usize,
) -> Result<(), Reject> {
    if hits.is_empty() {
        return Ok(());
    }
    if !p.penetrate {
        return Err(Reject::Obstructed);
    }
    let mut open: Vec<(u32, Hit)> = Vec::new();
    for h in hits {
        if !scene.mesh_is_closed(h.mesh) {
            *penetrations += 1;
            events.push(Event::Slab {
                entry: Crossing { face: h.face, point: h.point, angle: incidence_angle(dir, &h.normal) },
                exit: None,
                normal: h.normal,
                thickness: p.open_thickness[&h.material],
                material: h.material,
            });
        } else if h.front {
            *penetrations += 1;
            open.push((h.mesh, *h));
        } else {
            let k = open.iter().rposition(|(m, _)| *m == h.mesh).ok_or(Reject::Obstructed)?;
            let (_, entry) = open.remove(k);
            let angle = incidence_angle(dir, &entry.normal);
            events.push(Event::Slab {
                entry: Crossing { face: entry.face, point: entry.point, angle },
                exit: Some(Crossing { face: h.face, point: h.point, angle: incidence_angle(dir, &h.normal) }),
                normal: entry.normal,
                thickness: (h.distance - entry.distance) * angle.cos(),
                material: entry.material,
            });
        }
        if *penetrations > p.max_penetrations {
            return Err(Reject::Obstructed);
        }
    }
    if open.is_empty() {
        Ok(())
    } else {
        // segment ends inside a solid
        Err(Reject::Obstructed)
    }
}
