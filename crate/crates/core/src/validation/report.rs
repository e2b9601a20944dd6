use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    extract_mpcs, match_mpcs, rmse_of, LinkPdp, MatchParams, MatchedPair, Mpc, Rmse, Scenario, Source, ValidationError,
};

/// Mean, population standard deviation and median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let k = s.len() / 2;
        let median = if s.len() % 2 == 1 { s[k] } else { 0.5 * (s[k - 1] + s[k]) };
        Some(Summary { count: values.len(), mean, std, median })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub link_id: String,
    pub scenario: Scenario,
    pub sim_mpcs: usize,
    pub meas_mpcs: usize,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_sim: Vec<Mpc>,
    pub unmatched_meas: Vec<Mpc>,
    /// Absent when nothing matched.
    pub rmse: Option<Rmse>,
    /// Per-pair `P_sim - P_meas` in dB.
    pub error_db: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub links: usize,
    pub pairs: usize,
    /// RMSE over every pair of the group.
    pub pooled: Option<Rmse>,
    /// Spread of the per-link linear-mW RMSE in dB (exact links excluded).
    pub link_rmse_db: Option<Summary>,
    /// Spread of the per-link dB-domain RMSE.
    pub link_rmse_db_domain: Option<Summary>,
}

impl GroupStats {
    fn of(links: &[&LinkReport]) -> GroupStats {
        let pairs: Vec<MatchedPair> = links.iter().flat_map(|l| l.pairs.iter().cloned()).collect();
        let per_link: Vec<&Rmse> = links.iter().filter_map(|l| l.rmse.as_ref()).collect();
        GroupStats {
            links: links.len(),
            pairs: pairs.len(),
            pooled: rmse_of(&pairs).ok(),
            link_rmse_db: Summary::of(&per_link.iter().filter_map(|r| r.rmse_db).collect::<Vec<_>>()),
            link_rmse_db_domain: Summary::of(&per_link.iter().map(|r| r.rmse_db_domain).collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub params: MatchParams,
    pub links: Vec<LinkReport>,
    pub pooled: GroupStats,
    pub by_scenario: BTreeMap<Scenario, GroupStats>,
}

impl MatchReport {
    pub fn pairs(&self) -> impl Iterator<Item = &MatchedPair> {
        self.links.iter().flat_map(|l| l.pairs.iter())
    }

    pub fn rmse(&self) -> Option<&Rmse> {
        self.pooled.pooled.as_ref()
    }
}

/// Extracts, matches and scores every link present in both sets.
pub fn compare_runs(
    sim: &BTreeMap<String, LinkPdp>,
    meas: &BTreeMap<String, LinkPdp>,
    params: &MatchParams,
) -> Result<MatchReport, ValidationError> {
    params.validate()?;
    let only_sim: Vec<String> = sim.keys().filter(|k| !meas.contains_key(*k)).cloned().collect();
    let only_meas: Vec<String> = meas.keys().filter(|k| !sim.contains_key(*k)).cloned().collect();
    if !only_sim.is_empty() || !only_meas.is_empty() {
        return Err(ValidationError::LinkMismatch { only_sim, only_meas });
    }
    let mut links = Vec::with_capacity(sim.len());
    for (id, s) in sim {
        let m = &meas[id];
        if let (Some(fs), Some(fm)) = (s.freq_hz, m.freq_hz) {
            if (fs - fm).abs() > 1e-9 * fs {
                log::warn!("link {id}: simulated at {fs} Hz but measured at {fm} Hz");
            }
        }
        let sm = extract_mpcs(&s.entries, params.dynamic_range_db, Source::Simulated, id);
        let mm = extract_mpcs(&m.entries, params.dynamic_range_db, Source::Measured, id);
        let matching = match_mpcs(&sm, &mm, params);
        let errors: Vec<f64> = matching.pairs.iter().map(|p| p.sim.power_dbm - p.meas.power_dbm).collect();
        links.push(LinkReport {
            link_id: id.clone(),
            scenario: if m.scenario != Scenario::Unknown { m.scenario } else { s.scenario },
            sim_mpcs: sm.len(),
            meas_mpcs: mm.len(),
            rmse: rmse_of(&matching.pairs).ok(),
            error_db: Summary::of(&errors),
            pairs: matching.pairs,
            unmatched_sim: matching.unmatched_sim,
            unmatched_meas: matching.unmatched_meas,
        });
    }
    let all: Vec<&LinkReport> = links.iter().collect();
    let pooled = GroupStats::of(&all);
    let mut by_scenario = BTreeMap::new();
    for sc in [Scenario::Los, Scenario::Nlos, Scenario::Unknown] {
        let group: Vec<&LinkReport> = links.iter().filter(|l| l.scenario == sc).collect();
        if !group.is_empty() {
            by_scenario.insert(sc, GroupStats::of(&group));
        }
    }
    Ok(MatchReport { params: params.clone(), links, pooled, by_scenario })
}
