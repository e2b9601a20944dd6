//! Simulated-versus-measured comparison of multipath components.
//!
//! PDPs are thresholded at a dynamic range below their peak, the surviving
//! components are paired one-to-one by a gated delay/power distance, and the
//! paired powers are scored with an RMSE taken over linear mW differences. An
//! RMSE over dB differences is reported next to it.

mod assign;
mod pdp_io;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assign::assign;
pub use pdp_io::{load_pdp_dir, parse_pdp_csv, read_pdp_csv, write_pdp_csv, LinkPdp, Scenario};
pub use report::{compare_runs, GroupStats, LinkReport, MatchReport, Summary};

use crate::tracer::PdpEntry;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("no matched pairs to score")]
    NoPairs,
    #[error("link sets differ: only simulated {only_sim:?}, only measured {only_meas:?}")]
    LinkMismatch { only_sim: Vec<String>, only_meas: Vec<String> },
    #[error("{path}: {msg}")]
    Pdp { path: String, msg: String },
    #[error("invalid match parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Simulated,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub delay_s: f64,
    pub power_dbm: f64,
    pub source: Source,
    pub link_id: String,
}

impl Mpc {
    pub fn power_mw(&self) -> f64 {
        10f64.powf(self.power_dbm / 10.0)
    }
}

/// Matching and thresholding parameters. Delays in ns, powers in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchParams {
    pub delay_scale_ns: f64,
    pub power_scale_db: f64,
    pub gate_delay_ns: f64,
    pub gate_power_db: f64,
    pub dynamic_range_db: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            delay_scale_ns: 10.0,
            power_scale_db: 10.0,
            gate_delay_ns: 20.0,
            gate_power_db: 25.0,
            dynamic_range_db: 25.0,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let all =
            [self.delay_scale_ns, self.power_scale_db, self.gate_delay_ns, self.gate_power_db, self.dynamic_range_db];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(ValidationError::Params(format!("all parameters must be positive and finite: {self:?}")))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        let p: MatchParams = toml::from_str(text).map_err(|e| ValidationError::Params(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Cost of pairing `a` with `b`, or `None` when a gate rejects the pair.
    pub fn cost(&self, a: &Mpc, b: &Mpc) -> Option<f64> {
        let dt = (a.delay_s - b.delay_s).abs() * 1e9;
        let dp = (a.power_dbm - b.power_dbm).abs();
        (dt <= self.gate_delay_ns && dp <= self.gate_power_db)
            .then(|| dt / self.delay_scale_ns + dp / self.power_scale_db)
    }
}

/// Entries within `dynamic_range_db` of the strongest one, sorted by delay.
pub fn extract_mpcs(entries: &[PdpEntry], dynamic_range_db: f64, source: Source, link_id: &str) -> Vec<Mpc> {
    let peak = entries.iter().map(|e| e.power_dbm()).fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<Mpc> = entries
        .iter()
        .filter(|e| e.power_dbm() >= peak - dynamic_range_db)
        .map(|e| Mpc { delay_s: e.delay_s, power_dbm: e.power_dbm(), source, link_id: link_id.to_string() })
        .collect();
    out.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s).then(b.power_dbm.total_cmp(&a.power_dbm)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub sim: Mpc,
    pub meas: Mpc,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_sim: Vec<Mpc>,
    pub unmatched_meas: Vec<Mpc>,
}

impl Matching {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.cost).sum()
    }
}

/// Weight of the squared-distance tie breaker added to the L1 cost.
const TIE_BREAK: f64 = 1e-9;

/// Optimal one-to-one pairing on the gated bipartite graph: the number of
/// pairs is maximised first, then their summed cost minimised. L1 costs tie
/// often (crossed and uncrossed pairings), so a vanishing squared-distance
/// term picks the uncrossed one, independently of list order.
pub fn match_mpcs(sim: &[Mpc], meas: &[Mpc], params: &MatchParams) -> Matching {
    let cost: Vec<Vec<Option<f64>>> = sim.iter().map(|s| meas.iter().map(|m| params.cost(s, m)).collect()).collect();
    let biased: Vec<Vec<Option<f64>>> = sim
        .iter()
        .zip(&cost)
        .map(|(s, row)| {
            meas.iter()
                .zip(row)
                .map(|(m, c)| {
                    c.map(|c| {
                        let dt = (s.delay_s - m.delay_s) * 1e9 / params.delay_scale_ns;
                        let dp = (s.power_dbm - m.power_dbm) / params.power_scale_db;
                        c + TIE_BREAK * (dt * dt + dp * dp)
                    })
                })
                .collect()
        })
        .collect();
    let chosen = assign(&biased);
    let mut sim_used = vec![false; sim.len()];
    let mut meas_used = vec![false; meas.len()];
    let pairs = chosen
        .into_iter()
        .map(|(i, j)| {
            sim_used[i] = true;
            meas_used[j] = true;
            MatchedPair { sim: sim[i].clone(), meas: meas[j].clone(), cost: cost[i][j].unwrap() }
        })
        .collect();
    let left = |v: &[Mpc], used: &[bool]| v.iter().zip(used).filter(|(_, u)| !**u).map(|(m, _)| m.clone()).collect();
    Matching { pairs, unmatched_sim: left(sim, &sim_used), unmatched_meas: left(meas, &meas_used) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RmseStatus {
    /// Every pair agrees exactly; the dB value would be minus infinity.
    Exact,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub n: usize,
    pub status: RmseStatus,
    /// sqrt(mean((P_sim - P_meas)^2)) with powers in mW.
    pub rmse_linear_mw: f64,
    /// 10 log10 of `rmse_linear_mw`; absent when exact.
    pub rmse_db: Option<f64>,
    /// sqrt(mean((P_sim_dBm - P_meas_dBm)^2)), a dB-domain alternative.
    pub rmse_db_domain: f64,
}

/// RMSE over `(sim_mw, meas_mw)` power pairs. Powers must be positive.
pub fn rmse(pairs_mw: &[(f64, f64)]) -> Result<Rmse, ValidationError> {
    if pairs_mw.is_empty() {
        return Err(ValidationError::NoPairs);
    }
    let n = pairs_mw.len() as f64;
    let lin = (pairs_mw.iter().map(|&(s, m)| (s - m).powi(2)).sum::<f64>() / n).sqrt();
    let dbd = (pairs_mw.iter().map(|&(s, m)| (10.0 * (s / m).log10()).powi(2)).sum::<f64>() / n).sqrt();
    let exact = lin == 0.0;
    Ok(Rmse {
        n: pairs_mw.len(),
        status: if exact { RmseStatus::Exact } else { RmseStatus::Finite },
        rmse_linear_mw: lin,
        rmse_db: (!exact).then(|| 10.0 * lin.log10()),
        rmse_db_domain: dbd,
    })
}

pub fn rmse_of(pairs: &[MatchedPair]) -> Result<Rmse, ValidationError> {
    rmse(&pairs.iter().map(|p| (p.sim.power_mw(), p.meas.power_mw())).collect::<Vec<_>>())
}
