use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexPermittivity, MaterialError};

/// Speed of light used throughout for delays and wavenumbers (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence.
    Perp,
    /// Electric field parallel to the plane of incidence.
    Par,
}

/// Air-to-material interface coefficients. `t = 1 + r` per polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FresnelCoeffs {
    pub r_perp: Complex64,
    pub r_par: Complex64,
    pub t_perp: Complex64,
    pub t_par: Complex64,
}

impl FresnelCoeffs {
    pub fn r(&self, pol: Polarization) -> Complex64 {
        match pol {
            Polarization::Perp => self.r_perp,
            Polarization::Par => self.r_par,
        }
    }
}

/// Principal square root (`Re >= 0`); on the branch cut the root with `Im <= 0` is taken.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im > 0.0) {
        -s
    } else {
        s
    }
}

/// Fresnel reflection coefficients for a wave incident from air at `theta_i`
/// (radians from the surface normal) onto a half-space with permittivity `eta`.
pub fn fresnel(eta: ComplexPermittivity, theta_i: f64) -> Result<FresnelCoeffs, MaterialError> {
    if !(0.0..FRAC_PI_2).contains(&theta_i) {
        return Err(MaterialError::IncidenceAngle(theta_i));
    }
    let eta = eta.0;
    let cos = theta_i.cos();
    // (eta - 1) + cos^2 equals eta - sin^2 without cancellation near grazing
    let q = principal_sqrt((eta - 1.0) + cos * cos);
    let r_perp = (cos - q) / (cos + q);
    let r_par = (eta * cos - q) / (eta * cos + q);
    Ok(FresnelCoeffs { r_perp, r_par, t_perp: 1.0 + r_perp, t_par: 1.0 + r_par })
}

/// `|r|^2` for the requested polarization.
pub fn reflected_power_fraction(coeffs: &FresnelCoeffs, pol: Polarization) -> f64 {
    coeffs.r(pol).norm_sqr()
}

/// Field transmission through a slab of thickness `d`, relative to free space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlabTransmission {
    pub perp: Complex64,
    pub par: Complex64,
}

/// Single-pass slab model: entry and exit interfaces (`(1 + r)(1 - r)`) times
/// the in-material propagation factor `exp(-j k0 (q - cos) d)`, where
/// `q = sqrt(eta - sin^2)`. Internal multiple reflections are ignored.
pub fn slab_transmission(
    eta: ComplexPermittivity,
    theta_i: f64,
    thickness_m: f64,
    freq_hz: f64,
) -> Result<SlabTransmission, MaterialError> {
    let coeffs = fresnel(eta, theta_i)?;
    let cos = theta_i.cos();
    let q = principal_sqrt((eta.0 - 1.0) + cos * cos);
    let k0 = 2.0 * PI * freq_hz / SPEED_OF_LIGHT;
    let propagation = (Complex64::new(0.0, -k0 * thickness_m) * (q - cos)).exp();
    let one = Complex64::new(1.0, 0.0);
    Ok(SlabTransmission {
        perp: (one - coeffs.r_perp * coeffs.r_perp) * propagation,
        par: (one - coeffs.r_par * coeffs.r_par) * propagation,
    })
}
