use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    BulkModulus,
    FormationEnergy,
    BandGap,
    MagneticOrdering,
    TotalMagnetization,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Unit {
    GPa,
    Mbar,
    EV,
    MeV,
    EVPerAtom,
    MeVPerAtom,
    BohrMagnetonPerFu,
    None,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::GPa => "GPa",
            Unit::Mbar => "Mbar",
            Unit::EV => "eV",
            Unit::MeV => "meV",
            Unit::EVPerAtom => "eV/atom",
            Unit::MeVPerAtom => "meV/atom",
            Unit::BohrMagnetonPerFu => "µB/f.u.",
            Unit::None => "none",
        }
    }

    /// (dimension id, factor to the dimension's base unit)
    fn dimension(self) -> Option<(u8, f64)> {
        match self {
            Unit::GPa => Some((0, 1.0)),
            Unit::Mbar => Some((0, 100.0)),
            Unit::EV => Some((1, 1.0)),
            Unit::MeV => Some((1, 1e-3)),
            Unit::EVPerAtom => Some((2, 1.0)),
            Unit::MeVPerAtom => Some((2, 1e-3)),
            Unit::BohrMagnetonPerFu => Some((3, 1.0)),
            Unit::None => None,
        }
    }

    /// Converts `value` in `self` to `target`. Only conversions within one
    /// dimension (eV↔meV, GPa↔Mbar, ...) are defined.
    pub fn convert(self, value: f64, target: Unit) -> Option<f64> {
        let (d_from, f_from) = self.dimension()?;
        let (d_to, f_to) = target.dimension()?;
        if d_from != d_to {
            return None;
        }
        if self == target {
            Some(value)
        } else {
            Some(value * f_from / f_to)
        }
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "GPa" => Unit::GPa,
            "Mbar" => Unit::Mbar,
            "eV" => Unit::EV,
            "meV" => Unit::MeV,
            "eV/atom" => Unit::EVPerAtom,
            "meV/atom" => Unit::MeVPerAtom,
            "µB/f.u." | "μB/f.u." | "muB/f.u." => Unit::BohrMagnetonPerFu,
            "none" | "" => Unit::None,
            other => return Err(format!("unknown unit `{other}`")),
        })
    }
}

impl TryFrom<String> for Unit {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Unit> for String {
    fn from(u: Unit) -> Self {
        u.as_str().to_string()
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth answer: a number in the query unit or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Number(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchQuery {
    pub id: String,
    pub prompt: String,
    pub property: Property,
    pub expected_value: Expected,
    #[serde(default = "unit_none")]
    pub unit: Unit,
    #[serde(default = "default_trials")]
    pub n_trials: u32,
}

fn unit_none() -> Unit {
    Unit::None
}

fn default_trials() -> u32 {
    5
}

impl BenchQuery {
    pub fn is_categorical(&self) -> bool {
        matches!(self.expected_value, Expected::Category(_))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |reason: &str| {
            Err(BenchError::InvalidQuery {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() {
            return bad("empty id");
        }
        if self.n_trials == 0 {
            return bad("n_trials must be positive");
        }
        match (&self.expected_value, self.unit) {
            (Expected::Number(_), Unit::None) => bad("numeric queries need a unit"),
            (Expected::Category(_), u) if u != Unit::None => bad("categorical queries carry no unit"),
            (Expected::Category(_), _) if self.property != Property::MagneticOrdering && self.property != Property::Custom => {
                bad("only magnetic_ordering and custom queries may be categorical")
            }
            (Expected::Number(_), _) if self.property == Property::MagneticOrdering => {
                bad("magnetic_ordering expects a category")
            }
            _ => Ok(()),
        }
    }
}

/// Parses a JSON-lines query set. Blank lines are skipped.
pub fn parse_queries(text: &str) -> Result<Vec<BenchQuery>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: BenchQuery = serde_json::from_str(line).map_err(|e| BenchError::QueryFile {
            line: i + 1,
            reason: e.to_string(),
        })?;
        q.validate()?;
        out.push(q);
    }
    Ok(out)
}

pub fn load_queries(path: &Path) -> Result<Vec<BenchQuery>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::QueryFile {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    parse_queries(&text)
}
