//! Brute-force image-source enumeration for the axis-aligned box room.
//! Shares no geometry or polarization code with the tracer.

use sitewave_core::materials::{eval_permittivity, fresnel, MaterialTable, SPEED_OF_LIGHT};
use sitewave_core::scene::fixtures::{BOX_ROOM_DIMS, BOX_ROOM_MATERIALS};
use sitewave_core::Vec3;

#[derive(Debug, Clone)]
pub struct OraclePath {
    /// Wall indices in the order -x, +x, -y, +y, -z, +z.
    pub walls: Vec<usize>,
    pub delay_s: f64,
    pub power_dbm: f64,
}

fn wall(s: usize) -> (Vec3, f64) {
    let axis = s / 2;
    let mut n = Vec3::zeros();
    if s.is_multiple_of(2) {
        n[axis] = 1.0;
        (n, 0.0)
    } else {
        n[axis] = -1.0;
        (n, BOX_ROOM_DIMS[axis])
    }
}

/// Signed distance to wall `s` (positive inside the room).
fn dist(s: usize, p: &Vec3) -> f64 {
    let (n, d) = wall(s);
    n.dot(p) + d
}

fn mirror(s: usize, p: &Vec3) -> Vec3 {
    let (n, _) = wall(s);
    p - n * (2.0 * dist(s, p))
}

fn vertical_transverse(d: &Vec3) -> Vec3 {
    let z = Vec3::new(0.0, 0.0, 1.0);
    (z - d * d.dot(&z)).normalize()
}

pub fn wall_of_point(p: &[f64; 3]) -> Option<usize> {
    (0..6).find(|&s| dist(s, &Vec3::from(*p)).abs() < 1e-7)
}

pub fn enumerate(tx: Vec3, rx: Vec3, max_order: usize, freq_hz: f64) -> Vec<OraclePath> {
    let table = MaterialTable::builtin();
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier = seqs.clone();
    for _ in 0..max_order {
        let mut next = Vec::new();
        for s in &frontier {
            for w in 0..6 {
                if s.last() != Some(&w) {
                    let mut t = s.clone();
                    t.push(w);
                    next.push(t);
                }
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }

    let mut out = Vec::new();
    'seq: for seq in seqs {
        let mut images = vec![tx];
        for &w in &seq {
            let last = *images.last().unwrap();
            images.push(mirror(w, &last));
        }
        let mut pts = vec![rx];
        let mut target = rx;
        for (k, &w) in seq.iter().enumerate().rev() {
            let img = images[k + 1];
            let (a, b) = (dist(w, &img), dist(w, &target));
            let t = a / (a - b);
            if !(t > 0.0 && t < 1.0) {
                continue 'seq;
            }
            let p = img + (target - img) * t;
            for axis in 0..3 {
                if p[axis] < -1e-9 || p[axis] > BOX_ROOM_DIMS[axis] + 1e-9 {
                    continue 'seq;
                }
            }
            pts.push(p);
            target = p;
        }
        pts.push(tx);
        pts.reverse();

        let len: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let mut dir = (pts[1] - pts[0]).normalize();
        let mut e: [num_complex::Complex64; 3] = {
            let v = vertical_transverse(&dir);
            [v.x.into(), v.y.into(), v.z.into()]
        };
        for (k, &w) in seq.iter().enumerate() {
            let (n, _) = wall(w);
            let eta = eval_permittivity(table.get(BOX_ROOM_MATERIALS[w]), freq_hz).unwrap().eta;
            let theta = dir.dot(&n).abs().acos();
            let c = fresnel(eta, theta).unwrap();
            let s = dir.cross(&n);
            let s = if s.norm() < 1e-12 { any_perp(&dir) } else { s.normalize() };
            let p = s.cross(&dir);
            let es: num_complex::Complex64 = (0..3).map(|i| e[i] * s[i]).sum();
            let ep: num_complex::Complex64 = (0..3).map(|i| e[i] * p[i]).sum();
            let mp = p - n * (2.0 * p.dot(&n));
            for i in 0..3 {
                e[i] = c.r_perp * es * s[i] - c.r_par * ep * mp[i];
            }
            dir = (pts[k + 2] - pts[k + 1]).normalize();
        }
        let v = vertical_transverse(&dir);
        let a: num_complex::Complex64 = (0..3).map(|i| e[i] * v[i]).sum();
        let lambda = SPEED_OF_LIGHT / freq_hz;
        let gain = a.norm() * lambda / (4.0 * std::f64::consts::PI * len);
        out.push(OraclePath { walls: seq, delay_s: len / SPEED_OF_LIGHT, power_dbm: 20.0 * gain.log10() });
    }
    out
}

fn any_perp(d: &Vec3) -> Vec3 {
    let a = if d.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    d.cross(&a).normalize()
}
