use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use sitewave_core::validation::{compare_runs, load_pdp_dir, MatchParams, MatchReport};

use super::Outcome;
use crate::error::CliError;
use crate::util::{read_text, to_json, write_output};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Directory of simulated PDP CSVs.
    #[arg(long)]
    pub sim: PathBuf,
    /// Directory of measured PDP CSVs.
    #[arg(long)]
    pub meas: PathBuf,
    /// Matching parameters (TOML).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Report output (JSON).
    #[arg(long)]
    pub report: PathBuf,
}

pub fn load_params(path: Option<&std::path::Path>) -> Result<MatchParams, CliError> {
    match path {
        Some(p) => Ok(MatchParams::from_toml(&read_text(p)?)?),
        None => Ok(MatchParams::default()),
    }
}

pub fn summarize(report: &MatchReport) -> String {
    let mut text = String::new();
    let fmt_rmse = |r: Option<&sitewave_core::validation::Rmse>| match r {
        None => "no pairs".to_string(),
        Some(r) => match r.rmse_db {
            None => format!("exact (n={})", r.n),
            Some(db) => format!(
                "{db:.2} dB (linear {:.3e} mW), dB-domain {:.2} dB, n={}",
                r.rmse_linear_mw, r.rmse_db_domain, r.n
            ),
        },
    };
    for l in &report.links {
        text.push_str(&format!(
            "{:<16} {:<7} {:>3} pairs, {:>3} unmatched sim, {:>3} unmatched meas, rmse {}\n",
            l.link_id,
            l.scenario.to_string(),
            l.pairs.len(),
            l.unmatched_sim.len(),
            l.unmatched_meas.len(),
            fmt_rmse(l.rmse.as_ref())
        ));
    }
    for (sc, g) in &report.by_scenario {
        text.push_str(&format!("{sc:<24} rmse {}\n", fmt_rmse(g.pooled.as_ref())));
    }
    text.push_str(&format!("{:<24} rmse {}\n", "pooled", fmt_rmse(report.rmse())));
    text
}

pub fn run(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let params = load_params(args.params.as_deref())?;
    let sim = load_pdp_dir(&args.sim)?;
    let meas = load_pdp_dir(&args.meas)?;
    let report = compare_runs(&sim, &meas, &params)?;
    let sha = write_output(&args.report, to_json(&report).as_bytes())?;
    let json = json!({
        "report": args.report,
        "sha256": sha,
        "links": report.links.len(),
        "pairs": report.pooled.pairs,
        "pooled": report.pooled,
        "by_scenario": report.by_scenario,
    });
    Ok(Outcome::ok(json, summarize(&report)))
}
