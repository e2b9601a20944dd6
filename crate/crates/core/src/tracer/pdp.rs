use serde::{Deserialize, Serialize};

use super::{PropPath, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdpEntry {
    pub delay_s: f64,
    pub power_mw: f64,
}

impl PdpEntry {
    pub fn power_dbm(&self) -> f64 {
        10.0 * self.power_mw.log10()
    }
}

/// Non-coherent power delay profile: path powers are added, never phasors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdp {
    pub entries: Vec<PdpEntry>,
    pub config: SimConfig,
}

impl Pdp {
    pub fn total_power_mw(&self) -> f64 {
        self.entries.iter().map(|e| e.power_mw).sum()
    }

    pub fn peak_mw(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.power_mw).reduce(f64::max)
    }
}

/// One entry per path sorted by delay. With `delay_bin_ns` set, paths falling
/// in the same bin `[k w, (k+1) w)` are merged into one entry at the bin
/// center carrying their summed power.
pub fn synthesize_pdp(paths: &[PropPath], cfg: &SimConfig) -> Pdp {
    let mut entries: Vec<PdpEntry> =
        paths.iter().map(|p| PdpEntry { delay_s: p.delay_s, power_mw: p.power_mw() }).collect();
    entries.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
    if let Some(w_ns) = cfg.delay_bin_ns {
        let w = w_ns * 1e-9;
        let mut binned: Vec<(i64, f64)> = Vec::new();
        for e in &entries {
            let k = (e.delay_s / w).floor() as i64;
            match binned.last_mut() {
                Some((bk, p)) if *bk == k => *p += e.power_mw,
                _ => binned.push((k, e.power_mw)),
            }
        }
        entries = binned.into_iter().map(|(k, p)| PdpEntry { delay_s: (k as f64 + 0.5) * w, power_mw: p }).collect();
    }
    Pdp { entries, config: cfg.clone() }
}
