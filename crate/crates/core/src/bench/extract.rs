use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::query::{Property, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MagneticOrdering {
    FM,
    FiM,
    AFM,
    NM,
    #[serde(rename = "unknown")]
    Unknown,
}

impl MagneticOrdering {
    pub const ALL: [MagneticOrdering; 5] = [Self::FM, Self::FiM, Self::AFM, Self::NM, Self::Unknown];

    pub fn label(self) -> &'static str {
        match self {
            Self::FM => "FM",
            Self::FiM => "FiM",
            Self::AFM => "AFM",
            Self::NM => "NM",
            Self::Unknown => "unknown",
        }
    }
}

impl fmt::Display for MagneticOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A value read out of a free-text response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Number(f64),
    Category(String),
}

impl Answer {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Answer::Number(x) => Some(*x),
            Answer::Category(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            Answer::Category(c) => Some(c),
            Answer::Number(_) => None,
        }
    }
}

static NUMBER_WITH_UNIT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"(?P<num>[-+−]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*",
        r"(?P<unit>",
        r"(?i:gigapascals?)|GPa|(?i:megabars?)|Mbar",
        r"|meV\s*/\s*atom|meV\s+per\s+atom",
        r"|eV\s*/\s*atom|eV\s+per\s+atom",
        r"|meV|eV|(?i:electron[- ]?volts?)",
        r"|[µμ]B\s*/\s*f\.\s*u\.?|muB\s*/\s*f\.\s*u\.?|[µμ]B\s+per\s+formula\s+unit|[µμ]_?B|(?i:bohr\s+magnetons?)(?:\s+per\s+formula\s+unit)?",
        r")",
    ))
    .unwrap()
});

static ORDERING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"\b(?P<word>(?i:antiferromagnetic|anti-ferromagnetic|ferrimagnetic|ferromagnetic|non-?magnetic|diamagnetic|unknown)",
        r"|AFM|FiM|FM|NM)\b",
    ))
    .unwrap()
});

fn unit_of(token: &str) -> Option<Unit> {
    let t: String = token.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let t = t.replace(" / ", "/").replace("/ ", "/").replace(" /", "/");
    Some(match t.as_str() {
        "gpa" | "gigapascal" | "gigapascals" => Unit::GPa,
        "mbar" | "megabar" | "megabars" => Unit::Mbar,
        "mev/atom" | "mev per atom" => Unit::MeVPerAtom,
        "ev/atom" | "ev per atom" => Unit::EVPerAtom,
        "mev" => Unit::MeV,
        "ev" | "electronvolt" | "electronvolts" | "electron-volt" | "electron-volts" | "electron volt"
        | "electron volts" => Unit::EV,
        _ if t.contains("b") => Unit::BohrMagnetonPerFu,
        _ => return None,
    })
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.replace('−', "-").parse().ok()
}

/// Reads the answer to `property` out of `response`, expressed in `unit`.
///
/// Numeric properties take the last number written directly before a unit
/// convertible to `unit`. Magnetic ordering takes the last ordering label.
/// Anything else (refusals, bare numbers, foreign units) is absent.
pub fn extract_value(response: &str, property: Property, unit: Unit) -> Option<Answer> {
    if property == Property::MagneticOrdering || (property == Property::Custom && unit == Unit::None) {
        return extract_ordering(response).map(|o| Answer::Category(o.label().to_string()));
    }
    let mut found = None;
    for caps in NUMBER_WITH_UNIT.captures_iter(response) {
        let num = caps.name("num").unwrap();
        let unit_match = caps.name("unit").unwrap();
        let mut raw = num.as_str();
        let before = response[..num.start()].chars().next_back();
        if let Some(c) = before {
            if c.is_alphanumeric() || c == '.' || c == '_' {
                // a range like "40-45 GPa": keep the upper bound, drop the dash
                let digit_then_sign = c.is_ascii_digit() && raw.starts_with(['-', '−', '+']);
                if !digit_then_sign {
                    continue;
                }
                raw = raw.trim_start_matches(['-', '−', '+']);
            }
        }
        if response[unit_match.end()..]
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic())
        {
            continue;
        }
        let Some(value) = parse_number(raw) else { continue };
        let Some(found_unit) = unit_of(unit_match.as_str()) else { continue };
        if let Some(converted) = found_unit.convert(value, unit) {
            found = Some(converted);
        }
    }
    found.map(Answer::Number)
}

fn extract_ordering(response: &str) -> Option<MagneticOrdering> {
    ORDERING
        .captures_iter(response)
        .filter_map(|c| {
            let w = c.name("word")?.as_str();
            Some(match w {
                "AFM" => MagneticOrdering::AFM,
                "FiM" => MagneticOrdering::FiM,
                "FM" => MagneticOrdering::FM,
                "NM" => MagneticOrdering::NM,
                other => match other.to_lowercase().as_str() {
                    "antiferromagnetic" | "anti-ferromagnetic" => MagneticOrdering::AFM,
                    "ferrimagnetic" => MagneticOrdering::FiM,
                    "ferromagnetic" => MagneticOrdering::FM,
                    "nonmagnetic" | "non-magnetic" | "diamagnetic" => MagneticOrdering::NM,
                    _ => MagneticOrdering::Unknown,
                },
            })
        })
        .last()
}
