use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use serde_json::json;
use sitewave_core::materials::{eval_permittivity, fresnel, EvaluatedPermittivity, FresnelCoeffs};
use sitewave_core::{MaterialClass, MaterialTable};

use super::Outcome;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Material class, or `all`.
    #[arg(long, alias = "class", default_value = "all")]
    pub material: String,
    /// Carrier frequency in Hz.
    #[arg(long, default_value_t = 6.75e9)]
    pub freq: f64,
    /// Incidence angle from the normal in degrees.
    #[arg(long, alias = "theta-deg", default_value_t = 0.0)]
    pub angle_deg: f64,
    /// Material table CSV replacing the built-in one.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Serialize)]
struct Row {
    material: MaterialClass,
    permittivity: EvaluatedPermittivity,
    angle_deg: f64,
    fresnel: FresnelCoeffs,
    r_perp_db: f64,
    r_par_db: f64,
    thickness_m: f64,
}

pub fn eval(args: &EvalArgs) -> Result<Outcome, CliError> {
    let table = match &args.table {
        Some(p) => MaterialTable::load(p)?,
        None => MaterialTable::builtin(),
    };
    let classes: Vec<MaterialClass> = if args.material.eq_ignore_ascii_case("all") {
        MaterialClass::ALL.to_vec()
    } else {
        vec![args
            .material
            .parse()
            .map_err(|e: sitewave_core::materials::MaterialError| CliError::input(e.to_string()))?]
    };
    let theta = args.angle_deg.to_radians();
    let mut rows = Vec::new();
    let mut text = format!(
        "{:<9} {:>8} {:>10} {:>22} {:>10} {:>10}\n",
        "material", "eps_r", "sigma", "eta", "|r_perp|dB", "|r_par|dB"
    );
    for class in classes {
        let rec = table.get(class);
        let p = eval_permittivity(rec, args.freq)?;
        let c = fresnel(p.eta, theta)?;
        let db = |x: f64| 20.0 * x.log10();
        let row = Row {
            material: class,
            permittivity: p,
            angle_deg: args.angle_deg,
            fresnel: c,
            r_perp_db: db(c.r_perp.norm()),
            r_par_db: db(c.r_par.norm()),
            thickness_m: rec.thickness_m,
        };
        text.push_str(&format!(
            "{:<9} {:>8.4} {:>10.4e} {:>10.4}{:+11.4}j {:>10.3} {:>10.3}{}\n",
            class.as_str(),
            p.eps_r,
            p.sigma,
            p.eta.0.re,
            p.eta.0.im,
            row.r_perp_db,
            row.r_par_db,
            if p.clamped_from_hz.is_some() { "  (frequency clamped)" } else { "" }
        ));
        rows.push(row);
    }
    Ok(Outcome::ok(json!({ "freq_hz": args.freq, "materials": rows }), text))
}
