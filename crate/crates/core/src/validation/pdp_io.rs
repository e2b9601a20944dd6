//! PDP CSV files:
//!
//! ```text
//! # freq_hz=6750000000
//! # scenario=LOS
//! link_id,delay_ns,power_dbm
//! tx1-rx1,33.356,-69.03
//! ```
//!
//! A file may hold several links; the header applies to all of them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::tracer::{Pdp, PdpEntry};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scenario {
    Los,
    Nlos,
    #[default]
    Unknown,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Los => "LOS",
            Scenario::Nlos => "NLOS",
            Scenario::Unknown => "UNKNOWN",
        })
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LOS" => Ok(Scenario::Los),
            "NLOS" => Ok(Scenario::Nlos),
            "" | "UNKNOWN" => Ok(Scenario::Unknown),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// The PDP of one TX-RX link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPdp {
    pub link_id: String,
    pub freq_hz: Option<f64>,
    pub scenario: Scenario,
    pub entries: Vec<PdpEntry>,
}

impl LinkPdp {
    pub fn from_pdp(link_id: &str, scenario: Scenario, pdp: &Pdp) -> LinkPdp {
        LinkPdp {
            link_id: link_id.to_string(),
            freq_hz: Some(pdp.config.freq_hz),
            scenario,
            entries: pdp.entries.clone(),
        }
    }
}

#[derive(Deserialize)]
struct Row {
    link_id: String,
    delay_ns: f64,
    power_dbm: f64,
}

/// Parses one file; `origin` names it in error messages.
pub fn parse_pdp_csv(text: &str, origin: &str) -> Result<Vec<LinkPdp>, ValidationError> {
    let err = |msg: String| ValidationError::Pdp { path: origin.to_string(), msg };
    let mut freq_hz = None;
    let mut scenario = Scenario::Unknown;
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('#')) {
        let Some((k, v)) = line.trim_start_matches('#').split_once('=') else { continue };
        match k.trim() {
            "freq_hz" => {
                let f: f64 = v.trim().parse().map_err(|_| err(format!("bad freq_hz `{}`", v.trim())))?;
                freq_hz = Some(f);
            }
            "scenario" => scenario = v.parse().map_err(err)?,
            other => log::debug!("{origin}: ignoring header key `{other}`"),
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut links: BTreeMap<String, Vec<PdpEntry>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| err(format!("row {}: {e}", i + 1)))?;
        if !(row.delay_ns.is_finite() && row.delay_ns >= 0.0 && row.power_dbm.is_finite()) {
            return Err(err(format!("row {}: non-finite or negative value", i + 1)));
        }
        links
            .entry(row.link_id)
            .or_default()
            .push(PdpEntry { delay_s: row.delay_ns * 1e-9, power_mw: 10f64.powf(row.power_dbm / 10.0) });
    }
    Ok(links
        .into_iter()
        .map(|(link_id, mut entries)| {
            entries.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
            LinkPdp { link_id, freq_hz, scenario, entries }
        })
        .collect())
}

pub fn read_pdp_csv(path: &Path) -> Result<Vec<LinkPdp>, ValidationError> {
    let text = std::fs::read_to_string(path)?;
    parse_pdp_csv(&text, &path.display().to_string())
}

pub fn write_pdp_csv(link: &LinkPdp) -> String {
    let mut out = String::new();
    if let Some(f) = link.freq_hz {
        out.push_str(&format!("# freq_hz={f}\n"));
    }
    out.push_str(&format!("# scenario={}\n", link.scenario));
    out.push_str("link_id,delay_ns,power_dbm\n");
    for e in &link.entries {
        out.push_str(&format!("{},{},{}\n", link.link_id, e.delay_s * 1e9, e.power_dbm()));
    }
    out
}

/// Loads every `*.csv` under `dir` keyed by link id.
pub fn load_pdp_dir(dir: &Path) -> Result<BTreeMap<String, LinkPdp>, ValidationError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    files.sort();
    let mut out = BTreeMap::new();
    for f in files {
        for link in read_pdp_csv(&f)? {
            if out.contains_key(&link.link_id) {
                return Err(ValidationError::Pdp {
                    path: f.display().to_string(),
                    msg: format!("link `{}` defined twice", link.link_id),
                });
            }
            out.insert(link.link_id.clone(), link);
        }
    }
    Ok(out)
}
