//! Electromagnetic material model.
//!
//! Materials are described by ITU-R P.2040 style power laws for the relative
//! permittivity and conductivity. From those, [`eval_permittivity`] produces
//! the complex relative permittivity `eta = eps_r - j*sigma/(eps0*omega)` and
//! [`fresnel`] the air-to-material reflection and transmission coefficients.

mod fresnel;
mod table;

pub use fresnel::{
    fresnel, principal_sqrt, reflected_power_fraction, slab_transmission, FresnelCoeffs, Polarization,
    SlabTransmission, SPEED_OF_LIGHT,
};
pub use table::{
    eval_permittivity, ComplexPermittivity, EvaluatedPermittivity, MaterialClass, MaterialRecord, MaterialTable,
    PowerLaw, EPS0,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("frequency must be positive and finite, got {0} Hz")]
    InvalidFrequency(f64),
    #[error("incidence angle {0} rad outside [0, pi/2)")]
    IncidenceAngle(f64),
    #[error("unknown material class `{0}`")]
    UnknownClass(String),
    #[error("material table: {0}")]
    Table(String),
    #[error("material table csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error reading material table: {0}")]
    Io(#[from] std::io::Error),
}
