//! Vector field bookkeeping along a validated path.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::geometry::{any_orthonormal, reflect_dir, Vec3};
use crate::materials::{fresnel, slab_transmission, ComplexPermittivity, MaterialClass, MaterialError};

use super::image::{Event, ValidPath};

pub(crate) type CVec3 = [Complex64; 3];

fn dot(e: &CVec3, u: &Vec3) -> Complex64 {
    e[0] * u.x + e[1] * u.y + e[2] * u.z
}

fn along(c: Complex64, u: &Vec3) -> CVec3 {
    [c * u.x, c * u.y, c * u.z]
}

fn add(a: CVec3, b: CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn norm(e: &CVec3) -> f64 {
    e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Vertical unit polarization made transverse to `dir`.
pub(crate) fn vertical_transverse(dir: &Vec3) -> Vec3 {
    let e = Vec3::z() - dir * dir.z;
    if e.norm() < 1e-9 {
        any_orthonormal(dir)
    } else {
        e.normalize()
    }
}

fn perp_axis(dir: &Vec3, normal: &Vec3) -> Vec3 {
    let s = dir.cross(normal);
    if s.norm() < 1e-12 {
        any_orthonormal(dir)
    } else {
        s.normalize()
    }
}

pub(crate) struct Media<'a> {
    pub eta: &'a BTreeMap<MaterialClass, ComplexPermittivity>,
    pub freq_hz: f64,
}

/// Propagates the unit TX field through every event and returns the received
/// complex amplitude together with `|E|` after each event.
pub(crate) fn amplitude(path: &ValidPath, media: &Media) -> Result<(Complex64, Vec<f64>), MaterialError> {
    let pts = &path.points;
    let mut dir = (pts[1] - pts[0]).normalize();
    let pol = vertical_transverse(&dir);
    let mut e: CVec3 = along(Complex64::new(1.0, 0.0), &pol);
    let mut norms = Vec::with_capacity(path.events.len());
    let mut seg = 0;
    for ev in &path.events {
        match ev {
            Event::Reflect { normal, angle, material, .. } => {
                let c = fresnel(media.eta[material], *angle)?;
                let out = reflect_dir(&dir, normal).normalize();
                let s = perp_axis(&dir, normal);
                let p_in = s.cross(&dir);
                let p_out = s.cross(&out);
                e = add(along(c.r_perp * dot(&e, &s), &s), along(c.r_par * dot(&e, &p_in), &p_out));
                seg += 1;
                dir = (pts[seg + 1] - pts[seg]).normalize();
            }
            Event::Slab { normal, thickness, material, entry, .. } => {
                let t = slab_transmission(media.eta[material], entry.angle, *thickness, media.freq_hz)?;
                let s = perp_axis(&dir, normal);
                let p = s.cross(&dir);
                e = add(along(t.perp * dot(&e, &s), &s), along(t.par * dot(&e, &p), &p));
            }
        }
        norms.push(norm(&e));
    }
    let rx_pol = vertical_transverse(&dir);
    let lambda = crate::materials::SPEED_OF_LIGHT / media.freq_hz;
    let tau = path.length / crate::materials::SPEED_OF_LIGHT;
    let spread = lambda / (4.0 * PI * path.length);
    let phase = Complex64::from_polar(1.0, -2.0 * PI * media.freq_hz * tau);
    Ok((dot(&e, &rx_pol) * spread * phase, norms))
}
