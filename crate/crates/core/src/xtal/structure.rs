use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::elements::is_element;
use super::neighbors::neighbor_list;
use super::{Lattice, XtalError};

/// Two sites closer than this (Å, after periodic wrapping) are the same site.
pub const IDENTITY_TOLERANCE: f64 = 0.01;

/// Element symbol with an optional oxidation state, written like `Li`, `Li+`, `O2-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Species {
    element: String,
    oxidation: Option<i32>,
}

impl Species {
    pub fn element(symbol: &str) -> Result<Self, XtalError> {
        if !is_element(symbol) {
            return Err(XtalError::format("species", format!("unknown element `{symbol}`")));
        }
        Ok(Self {
            element: symbol.to_string(),
            oxidation: None,
        })
    }

    pub fn with_oxidation(mut self, oxidation: i32) -> Self {
        self.oxidation = Some(oxidation);
        self
    }

    pub fn symbol(&self) -> &str {
        &self.element
    }

    pub fn oxidation(&self) -> Option<i32> {
        self.oxidation
    }
}

impl FromStr for Species {
    type Err = XtalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let split = s
            .find(|c: char| c.is_ascii_digit() || c == '+' || c == '-')
            .unwrap_or(s.len());
        let (symbol, tag) = s.split_at(split);
        let species = Species::element(symbol)?;
        if tag.is_empty() {
            return Ok(species);
        }
        let bad = || XtalError::format("species", format!("invalid oxidation tag in `{s}`"));
        let (digits, sign) = tag.split_at(tag.len() - 1);
        let sign = match sign {
            "+" => 1,
            "-" => -1,
            _ => return Err(bad()),
        };
        let magnitude = if digits.is_empty() {
            1
        } else {
            digits.parse::<i32>().map_err(|_| bad())?
        };
        Ok(species.with_oxidation(sign * magnitude))
    }
}

impl TryFrom<String> for Species {
    type Error = XtalError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Species> for String {
    fn from(s: Species) -> Self {
        s.to_string()
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.element)?;
        match self.oxidation {
            None => Ok(()),
            Some(1) => f.write_str("+"),
            Some(-1) => f.write_str("-"),
            Some(q) if q > 0 => write!(f, "{q}+"),
            Some(q) => write!(f, "{}-", -q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub species: Species,
    pub frac: [f64; 3],
}

impl Site {
    pub fn new(species: Species, frac: [f64; 3]) -> Self {
        Self { species, frac }
    }

    pub fn frac_vector(&self) -> Vector3<f64> {
        Vector3::from(self.frac)
    }
}

/// A periodic crystal: one lattice plus at least one distinct site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureDoc {
    lattice: Lattice,
    sites: Vec<Site>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_id: Option<String>,
}

impl StructureDoc {
    pub fn new(lattice: Lattice, sites: Vec<Site>, source_id: Option<String>) -> Result<Self, XtalError> {
        Self::with_identity_tolerance(lattice, sites, source_id, IDENTITY_TOLERANCE)
    }

    pub fn with_identity_tolerance(
        lattice: Lattice,
        sites: Vec<Site>,
        source_id: Option<String>,
        tolerance: f64,
    ) -> Result<Self, XtalError> {
        if sites.is_empty() {
            return Err(XtalError::format("sites", "structure has no sites"));
        }
        for (i, site) in sites.iter().enumerate() {
            if site.frac.iter().any(|x| !x.is_finite()) {
                return Err(XtalError::format(format!("sites[{i}].abc"), "non-finite coordinate"));
            }
        }
        let doc = Self {
            lattice,
            sites,
            source_id,
        };
        if let Some(n) = neighbor_list(&doc, tolerance).into_iter().find(|n| n.i != n.j) {
            return Err(XtalError::format(
                "sites",
                format!(
                    "sites {} and {} are {:.4} Å apart, closer than {tolerance} Å",
                    n.i, n.j, n.distance
                ),
            ));
        }
        Ok(doc)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn source_id(&self) -> Option<&str> {
        self.source_id.as_deref()
    }

    pub fn composition(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for site in &self.sites {
            *out.entry(site.species.symbol().to_string()).or_insert(0) += 1;
        }
        out
    }

    pub fn cartesian(&self, index: usize) -> Vector3<f64> {
        self.lattice.to_cartesian(&self.sites[index].frac_vector())
    }

    /// Copy with every fractional coordinate wrapped into [0, 1).
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for site in &mut out.sites {
            for x in &mut site.frac {
                *x = wrap_unit(*x);
            }
        }
        out
    }

    /// Serializes to the pymatgen `Structure.as_dict()` layout that the
    /// Materials Project API returns.
    pub fn to_mp_value(&self) -> Value {
        let [a, b, c] = self.lattice.lengths();
        let [alpha, beta, gamma] = self.lattice.angles();
        let sites: Vec<Value> = self
            .sites
            .iter()
            .map(|s| {
                let xyz = self.lattice.to_cartesian(&s.frac_vector());
                let mut species = json!({"element": s.species.symbol(), "occu": 1});
                if let Some(q) = s.species.oxidation() {
                    species["oxidation_state"] = json!(q);
                }
                json!({
                    "species": [species],
                    "abc": s.frac,
                    "xyz": [xyz.x, xyz.y, xyz.z],
                    "properties": {},
                    "label": s.species.to_string(),
                })
            })
            .collect();
        let mut doc = json!({
            "@module": "pymatgen.core.structure",
            "@class": "Structure",
            "charge": 0.0,
            "lattice": {
                "matrix": self.lattice.rows(),
                "pbc": [true, true, true],
                "a": a, "b": b, "c": c,
                "alpha": alpha, "beta": beta, "gamma": gamma,
                "volume": self.lattice.volume(),
            },
            "sites": sites,
        });
        if let Some(id) = &self.source_id {
            doc["material_id"] = json!(id);
        }
        doc
    }
}

pub(crate) fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Parses a Materials Project structure document (bare pymatgen layout, or a
/// summary document carrying it under `structure`). Unknown keys are ignored.
pub fn parse_structure_doc(text: &str) -> Result<StructureDoc, XtalError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| XtalError::format("$", format!("not JSON: {e}")))?;
    parse_structure_value(&root)
}

pub fn parse_structure_value(root: &Value) -> Result<StructureDoc, XtalError> {
    let obj = root
        .as_object()
        .ok_or_else(|| XtalError::format("$", "expected an object"))?;
    let mut source_id = obj.get("material_id").and_then(Value::as_str).map(str::to_string);
    let body = match obj.get("structure") {
        Some(inner) if obj.get("lattice").is_none() => {
            if source_id.is_none() {
                source_id = inner.get("material_id").and_then(Value::as_str).map(str::to_string);
            }
            inner
        }
        _ => root,
    };

    let matrix = body
        .get("lattice")
        .ok_or_else(|| XtalError::format("lattice", "missing"))?
        .get("matrix")
        .ok_or_else(|| XtalError::format("lattice.matrix", "missing"))?;
    let rows = parse_matrix(matrix)?;
    let lattice = Lattice::new(rows)?;

    let raw_sites = body
        .get("sites")
        .ok_or_else(|| XtalError::format("sites", "missing"))?
        .as_array()
        .ok_or_else(|| XtalError::format("sites", "expected a list"))?;
    let sites = raw_sites
        .iter()
        .enumerate()
        .map(|(i, s)| parse_site(i, s))
        .collect::<Result<Vec<_>, _>>()?;
    StructureDoc::new(lattice, sites, source_id)
}

fn parse_matrix(v: &Value) -> Result<[[f64; 3]; 3], XtalError> {
    let bad = || XtalError::format("lattice.matrix", "expected a 3x3 list of numbers");
    let rows = v.as_array().filter(|r| r.len() == 3).ok_or_else(bad)?;
    let mut out = [[0.0; 3]; 3];
    for (r, row) in rows.iter().enumerate() {
        out[r] = parse_triple(row).ok_or_else(bad)?;
    }
    Ok(out)
}

fn parse_triple(v: &Value) -> Option<[f64; 3]> {
    let items = v.as_array().filter(|a| a.len() == 3)?;
    let mut out = [0.0; 3];
    for (k, x) in items.iter().enumerate() {
        out[k] = x.as_f64()?;
    }
    Some(out)
}

fn parse_site(index: usize, v: &Value) -> Result<Site, XtalError> {
    let field = |name: &str| format!("sites[{index}].{name}");
    let frac = v
        .get("abc")
        .ok_or_else(|| XtalError::format(field("abc"), "missing"))
        .and_then(|abc| {
            parse_triple(abc).ok_or_else(|| XtalError::format(field("abc"), "expected three numbers"))
        })?;
    let species = v
        .get("species")
        .ok_or_else(|| XtalError::format(field("species"), "missing"))?;
    let species = match species {
        Value::String(s) => s.parse().map_err(|_| XtalError::format(field("species"), format!("unknown species `{s}`")))?,
        Value::Array(list) => {
            let [entry] = list.as_slice() else {
                return Err(XtalError::format(
                    field("species"),
                    "disordered sites (more than one species) are not supported",
                ));
            };
            let symbol = entry
                .get("element")
                .and_then(Value::as_str)
                .ok_or_else(|| XtalError::format(field("species[0].element"), "missing"))?;
            let occu = entry.get("occu").and_then(Value::as_f64).unwrap_or(1.0);
            if (occu - 1.0).abs() > 1e-6 {
                return Err(XtalError::format(
                    field("species[0].occu"),
                    format!("partial occupancy {occu} is not supported"),
                ));
            }
            let mut sp = Species::element(symbol)
                .map_err(|_| XtalError::format(field("species[0].element"), format!("unknown element `{symbol}`")))?;
            if let Some(q) = entry.get("oxidation_state").and_then(Value::as_f64) {
                if q.fract() == 0.0 && q != 0.0 {
                    sp = sp.with_oxidation(q as i32);
                }
            }
            sp
        }
        _ => return Err(XtalError::format(field("species"), "expected a list")),
    };
    Ok(Site::new(species, frac))
}
