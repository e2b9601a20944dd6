use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MaterialError;

/// Vacuum permittivity in F/m.
pub const EPS0: f64 = 8.854e-12;

const BUILTIN_TABLE: &str = include_str!("../../data/materials.csv");

/// Material vocabulary used for face labels and frame votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialClass {
    Concrete,
    Wood,
    Metal,
    Glass,
    Plywood,
    Air,
}

impl MaterialClass {
    pub const ALL: [MaterialClass; 6] = [
        MaterialClass::Concrete,
        MaterialClass::Wood,
        MaterialClass::Metal,
        MaterialClass::Glass,
        MaterialClass::Plywood,
        MaterialClass::Air,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaterialClass::Concrete => "concrete",
            MaterialClass::Wood => "wood",
            MaterialClass::Metal => "metal",
            MaterialClass::Glass => "glass",
            MaterialClass::Plywood => "plywood",
            MaterialClass::Air => "air",
        }
    }

    /// Rank used to break ties in frame voting; lower wins.
    pub fn vote_priority(self) -> u8 {
        match self {
            MaterialClass::Concrete => 0,
            MaterialClass::Metal => 1,
            MaterialClass::Glass => 2,
            MaterialClass::Wood => 3,
            MaterialClass::Plywood => 4,
            MaterialClass::Air => 5,
        }
    }
}

impl fmt::Display for MaterialClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaterialClass {
    type Err = MaterialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        MaterialClass::ALL
            .into_iter()
            .find(|m| m.as_str() == lower)
            .ok_or_else(|| MaterialError::UnknownClass(s.to_string()))
    }
}

/// `value = scale * f_GHz^exponent`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn eval(&self, freq_ghz: f64) -> f64 {
        if self.exponent == 0.0 {
            self.scale
        } else {
            self.scale * freq_ghz.powf(self.exponent)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub class: MaterialClass,
    pub eps_r: PowerLaw,
    pub sigma: PowerLaw,
    /// Validated frequency range in GHz, inclusive.
    pub freq_range_ghz: (f64, f64),
    pub thickness_m: f64,
}

/// Complex relative permittivity in the `exp(+j omega t)` convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPermittivity(pub Complex64);

impl ComplexPermittivity {
    pub const VACUUM: ComplexPermittivity = ComplexPermittivity(Complex64::new(1.0, 0.0));

    pub fn from_parts(eps_r: f64, sigma: f64, freq_hz: f64) -> Self {
        let omega = 2.0 * PI * freq_hz;
        ComplexPermittivity(Complex64::new(eps_r, -sigma / (EPS0 * omega)))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluatedPermittivity {
    pub eta: ComplexPermittivity,
    pub eps_r: f64,
    pub sigma: f64,
    /// Frequency actually used for the power laws.
    pub freq_hz: f64,
    /// Set when the requested frequency fell outside the validated range and was clamped.
    pub clamped_from_hz: Option<f64>,
}

/// Evaluates `eta(f)` for a record. Out-of-range frequencies are clamped to the
/// validated range and flagged in the result.
pub fn eval_permittivity(record: &MaterialRecord, freq_hz: f64) -> Result<EvaluatedPermittivity, MaterialError> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(MaterialError::InvalidFrequency(freq_hz));
    }
    let (lo, hi) = record.freq_range_ghz;
    let requested_ghz = freq_hz * 1e-9;
    let used_ghz = requested_ghz.clamp(lo, hi);
    let clamped_from_hz = if used_ghz != requested_ghz {
        log::warn!("{}: {requested_ghz} GHz outside validated range [{lo}, {hi}] GHz, clamped", record.class);
        Some(freq_hz)
    } else {
        None
    };
    let eps_r = record.eps_r.eval(used_ghz);
    let sigma = record.sigma.eval(used_ghz);
    // The permittivity law is clamped but the loss term keeps the true carrier.
    Ok(EvaluatedPermittivity {
        eta: ComplexPermittivity::from_parts(eps_r, sigma, freq_hz),
        eps_r,
        sigma,
        freq_hz,
        clamped_from_hz,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialTable {
    pub version: String,
    records: BTreeMap<MaterialClass, MaterialRecord>,
}

#[derive(Debug, Deserialize)]
struct Row {
    class: String,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    f_min_ghz: f64,
    f_max_ghz: f64,
    thickness_m: f64,
}

impl MaterialTable {
    /// The table shipped with the crate (`data/materials.csv`).
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TABLE).expect("bundled material table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, MaterialError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, MaterialError> {
        let version = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('#'))
            .find_map(|l| l.trim().strip_prefix("version:"))
            .map(|v| v.trim().to_string())
            .unwrap_or_else(|| "unversioned".to_string());

        let mut reader =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = BTreeMap::new();
        for row in reader.deserialize::<Row>() {
            let row = row?;
            let class: MaterialClass = row.class.parse()?;
            let record = MaterialRecord {
                class,
                eps_r: PowerLaw { scale: row.a, exponent: row.b },
                sigma: PowerLaw { scale: row.c, exponent: row.d },
                freq_range_ghz: (row.f_min_ghz, row.f_max_ghz),
                thickness_m: row.thickness_m,
            };
            validate_record(&record)?;
            if records.insert(class, record).is_some() {
                return Err(MaterialError::Table(format!("duplicate row for {class}")));
            }
        }
        for class in MaterialClass::ALL {
            if !records.contains_key(&class) {
                return Err(MaterialError::Table(format!("missing row for {class}")));
            }
        }
        Ok(MaterialTable { version, records })
    }

    pub fn get(&self, class: MaterialClass) -> &MaterialRecord {
        &self.records[&class]
    }

    pub fn records(&self) -> impl Iterator<Item = &MaterialRecord> {
        self.records.values()
    }

    /// Evaluates `eta` for every class at one frequency.
    pub fn evaluate_all(&self, freq_hz: f64) -> Result<BTreeMap<MaterialClass, EvaluatedPermittivity>, MaterialError> {
        self.records.iter().map(|(c, r)| eval_permittivity(r, freq_hz).map(|e| (*c, e))).collect()
    }
}

fn validate_record(r: &MaterialRecord) -> Result<(), MaterialError> {
    let (lo, hi) = r.freq_range_ghz;
    if !(lo > 0.0 && hi >= lo) {
        return Err(MaterialError::Table(format!("{}: bad frequency range [{lo}, {hi}]", r.class)));
    }
    if r.thickness_m < 0.0 {
        return Err(MaterialError::Table(format!("{}: negative thickness", r.class)));
    }
    // Both power laws are monotone, so the range endpoints bound them.
    for f in [lo, hi] {
        if r.eps_r.eval(f) < 1.0 || r.sigma.eval(f) < 0.0 {
            return Err(MaterialError::Table(format!("{}: eps_r < 1 or sigma < 0 at {f} GHz", r.class)));
        }
    }
    if r.class == MaterialClass::Air && (r.eps_r.eval(lo) != 1.0 || r.sigma.eval(lo) != 0.0) {
        return Err(MaterialError::Table("air must evaluate to eps_r = 1, sigma = 0".into()));
    }
    Ok(())
}
