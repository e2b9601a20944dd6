use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

use super::TracerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Reflection,
    Penetration,
    /// Accepted by the parser so that requesting it fails loudly.
    Diffraction,
}

/// Simulation parameters. Defaults follow a 6.75 GHz indoor setup with a
/// 10^6-ray Fibonacci launch and up to five reflections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    #[serde(alias = "freq")]
    pub freq_hz: f64,
    pub tx_pos: [f64; 3],
    pub rx_pos: [f64; 3],
    #[serde(alias = "tx_power")]
    pub tx_power_dbm: f64,
    pub n_rays: usize,
    pub max_reflections: usize,
    pub mechanisms: Vec<Mechanism>,
    /// MPCs weaker than the strongest by more than this are discarded (dB).
    #[serde(alias = "dynamic_range")]
    pub dynamic_range_db: f64,
    /// Upper bound on penetrated objects per path.
    pub max_penetrations: usize,
    /// Merge PDP entries into bins of this width (ns). Off when absent.
    pub delay_bin_ns: Option<f64>,
    /// Include complex amplitudes in exported path lists.
    pub export_complex: bool,
    /// Trace scenes with open meshes, treating each open face as a thin slab.
    pub allow_open_meshes: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            freq_hz: 6.75e9,
            tx_pos: [1.0, 1.0, 1.5],
            rx_pos: [4.0, 2.5, 1.5],
            tx_power_dbm: 0.0,
            n_rays: 1_000_000,
            max_reflections: 5,
            mechanisms: vec![Mechanism::Reflection, Mechanism::Penetration],
            dynamic_range_db: 25.0,
            max_penetrations: 2,
            delay_bin_ns: None,
            export_complex: false,
            allow_open_meshes: false,
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<SimConfig, TracerError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| TracerError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SimConfig, TracerError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| TracerError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn tx(&self) -> Vec3 {
        Vec3::from(self.tx_pos)
    }

    pub fn rx(&self) -> Vec3 {
        Vec3::from(self.rx_pos)
    }

    pub fn has(&self, m: Mechanism) -> bool {
        self.mechanisms.contains(&m)
    }

    pub fn wavelength(&self) -> f64 {
        crate::materials::SPEED_OF_LIGHT / self.freq_hz
    }

    pub fn validate(&self) -> Result<(), TracerError> {
        let bad = |m: String| Err(TracerError::Config(m));
        if self.has(Mechanism::Diffraction) {
            return Err(TracerError::NotImplemented("diffraction"));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return bad(format!("freq_hz must be positive, got {}", self.freq_hz));
        }
        if self.n_rays == 0 {
            return bad("n_rays must be at least 1".into());
        }
        if !(self.dynamic_range_db > 0.0) {
            return bad(format!("dynamic_range_db must be positive, got {}", self.dynamic_range_db));
        }
        if !self.tx_power_dbm.is_finite() {
            return bad("tx_power_dbm must be finite".into());
        }
        if !self.tx_pos.iter().chain(&self.rx_pos).all(|c| c.is_finite()) {
            return bad("tx_pos and rx_pos must be finite".into());
        }
        if self.tx_pos == self.rx_pos {
            return bad("tx_pos and rx_pos coincide".into());
        }
        if let Some(b) = self.delay_bin_ns {
            if !(b > 0.0) {
                return bad(format!("delay_bin_ns must be positive, got {b}"));
            }
        }
        Ok(())
    }

    /// Same configuration with transmitter and receiver exchanged.
    pub fn swapped(&self) -> SimConfig {
        SimConfig { tx_pos: self.rx_pos, rx_pos: self.tx_pos, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.n_rays, 1_000_000);
        assert_eq!(cfg.max_reflections, 5);
        assert_eq!(cfg.dynamic_range_db, 25.0);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = SimConfig::from_toml("n_rays = 1000\ntx_pos = [0.0, 0.0, 1.0]\n").unwrap();
        assert_eq!(cfg.n_rays, 1000);
        assert_eq!(cfg.freq_hz, 6.75e9);
    }

    #[test]
    fn diffraction_is_refused() {
        let r = SimConfig::from_toml("mechanisms = [\"reflection\", \"diffraction\"]\n");
        assert!(matches!(r, Err(TracerError::NotImplemented("diffraction"))));
    }

    #[test]
    fn invalid_values() {
        assert!(SimConfig::from_toml("n_rays = 0\n").is_err());
        assert!(SimConfig::from_toml("dynamic_range_db = 0.0\n").is_err());
        assert!(SimConfig::from_toml("rx_pos = [1.0, 1.0, 1.5]\n").is_err());
        assert!(SimConfig::from_toml("bogus = 1\n").is_err());
    }
}
