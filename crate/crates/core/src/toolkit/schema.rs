//! Endpoint tool schemas and argument validation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const DEFAULT_LIMIT: u32 = 10;
pub const MAX_LIMIT: u32 = 1000;

/// Tail appended to every validation message.
pub const REVISE_HINT: &str = "Please revise arguments or try smaller request by specifying 'limit' in request.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    String,
    Number,
    Integer,
    Boolean,
    /// Comma-separated list; a JSON array of strings is also accepted.
    CommaList,
}

impl ValueKind {
    fn json_type(self) -> &'static str {
        match self {
            ValueKind::String | ValueKind::CommaList => "string",
            ValueKind::Number => "number",
            ValueKind::Integer => "integer",
            ValueKind::Boolean => "boolean",
        }
    }
}

impl ValueKind {
    fn with_article(self) -> String {
        match self {
            ValueKind::Integer => "an integer".into(),
            other => format!("a {other}"),
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::String => "string",
            ValueKind::Number => "number",
            ValueKind::Integer => "integer",
            ValueKind::Boolean => "boolean",
            ValueKind::CommaList => "comma-separated list",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ValueKind,
    pub required: bool,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuardRule {
    /// `fields` must be present and non-empty.
    FieldsRequired,
    /// `limit` defaults to [`DEFAULT_LIMIT`] and may not exceed [`MAX_LIMIT`].
    LimitSuggested,
    /// A `formula` that contains '-' is a chemical system and belongs in
    /// `chemsys`.
    FormulaNotChemsys,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub endpoint_path: String,
    pub guard_rules: Vec<GuardRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("Error on {tool}: {reason}. {REVISE_HINT}")]
pub struct ValidationError {
    pub tool: String,
    pub reason: String,
}

impl ValidationError {
    pub fn observation(&self) -> String {
        self.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortField {
    pub field: String,
    pub descending: bool,
}

impl SortField {
    pub fn parse(token: &str) -> Self {
        match token.strip_prefix('-') {
            Some(f) => Self { field: f.to_string(), descending: true },
            None => Self { field: token.to_string(), descending: false },
        }
    }
}

impl fmt::Display for SortField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.descending {
            f.write_str("-")?;
        }
        f.write_str(&self.field)
    }
}

/// A validated request, ready to execute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPQuery {
    pub tool: String,
    pub endpoint_path: String,
    /// Endpoint filters, canonicalized to their query-string form.
    pub args: BTreeMap<String, String>,
    pub fields: Vec<String>,
    pub limit: u32,
    pub sort_fields: Vec<SortField>,
}

impl MPQuery {
    /// Query parameters in sorted order, including `_fields`, `_limit` and
    /// `_sort_fields`.
    pub fn query_pairs(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = self.args.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        if !self.fields.is_empty() {
            pairs.push(("_fields".into(), self.fields.join(",")));
        }
        pairs.push(("_limit".into(), self.limit.to_string()));
        if !self.sort_fields.is_empty() {
            let s: Vec<String> = self.sort_fields.iter().map(SortField::to_string).collect();
            pairs.push(("_sort_fields".into(), s.join(",")));
        }
        pairs.sort();
        pairs
    }

    pub fn resolved_url(&self, base_url: &str) -> String {
        let mut url = url::Url::parse(&format!("{}{}", base_url.trim_end_matches('/'), self.endpoint_path))
            .unwrap_or_else(|_| url::Url::parse("http://invalid.local/").expect("static url"));
        url.query_pairs_mut().extend_pairs(self.query_pairs());
        url.to_string()
    }

    /// Arguments that validate back to this query.
    pub fn to_args(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.args {
            m.insert(k.clone(), Value::String(v.clone()));
        }
        if !self.fields.is_empty() {
            m.insert("fields".into(), Value::String(self.fields.join(",")));
        }
        m.insert("limit".into(), json!(self.limit));
        if !self.sort_fields.is_empty() {
            let s: Vec<String> = self.sort_fields.iter().map(SortField::to_string).collect();
            m.insert("sort_fields".into(), Value::String(s.join(",")));
        }
        Value::Object(m)
    }
}

fn comma_list(v: &Value) -> Option<Vec<String>> {
    let items: Vec<String> = match v {
        Value::String(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
        Value::Array(a) => a
            .iter()
            .map(|x| x.as_str().map(|s| s.trim().to_string()))
            .collect::<Option<Vec<_>>>()?,
        _ => return None,
    };
    Some(items.into_iter().filter(|s| !s.is_empty()).collect())
}

/// Canonical query-string form of a value, or None on kind mismatch.
fn canonical(kind: ValueKind, v: &Value) -> Option<String> {
    match kind {
        ValueKind::String => v.as_str().map(|s| s.trim().to_string()),
        ValueKind::CommaList => comma_list(v).map(|l| l.join(",")),
        ValueKind::Integer => match v {
            Value::Number(n) => n.as_i64().map(|i| i.to_string()),
            Value::String(s) => s.trim().parse::<i64>().ok().map(|i| i.to_string()),
            _ => None,
        },
        ValueKind::Number => {
            let x = match v {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => s.trim().parse::<f64>().ok(),
                _ => None,
            }?;
            x.is_finite().then(|| serde_json::Number::from_f64(x).map(|n| n.to_string())).flatten()
        }
        ValueKind::Boolean => match v {
            Value::Bool(b) => Some(b.to_string()),
            Value::String(s) if s == "true" || s == "false" => Some(s.clone()),
            _ => None,
        },
    }
}

impl ToolSchema {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn has_rule(&self, rule: GuardRule) -> bool {
        self.guard_rules.contains(&rule)
    }

    /// `{param: {"type", "description"}}`, shown to the model.
    pub fn args_schema(&self) -> Value {
        let mut m = Map::new();
        for p in &self.params {
            let mut d = json!({"type": p.kind.json_type(), "description": p.description});
            if p.required {
                d["required"] = json!(true);
            }
            m.insert(p.name.clone(), d);
        }
        Value::Object(m)
    }

    fn fail(&self, reason: impl Into<String>) -> ValidationError {
        ValidationError { tool: self.name.clone(), reason: reason.into() }
    }

    pub fn validate_args(&self, args: &Value) -> Result<MPQuery, ValidationError> {
        let obj = match args {
            Value::Object(o) => o.clone(),
            // models sometimes send the object as a JSON string
            Value::String(s) => match serde_json::from_str::<Value>(s) {
                Ok(Value::Object(o)) => o,
                _ => return Err(self.fail("arguments must be a JSON object")),
            },
            _ => return Err(self.fail("arguments must be a JSON object")),
        };

        let mut canon: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in &obj {
            let spec = self.param(k).ok_or_else(|| {
                let names: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
                self.fail(format!("unknown parameter `{k}` (valid parameters: {})", names.join(", ")))
            })?;
            if v.is_null() {
                continue;
            }
            let c = canonical(spec.kind, v).ok_or_else(|| self.fail(format!("`{k}` must be {}", spec.kind.with_article())))?;
            canon.insert(k.clone(), c);
        }

        let fields: Vec<String> = canon
            .remove("fields")
            .map(|s| s.split(',').filter(|x| !x.is_empty()).map(str::to_string).collect())
            .unwrap_or_default();
        if self.has_rule(GuardRule::FieldsRequired) && fields.is_empty() {
            return Err(self.fail("`fields` must be specified in the query"));
        }

        for p in &self.params {
            if p.required && p.name != "fields" && !canon.contains_key(&p.name) {
                return Err(self.fail(format!("`{}` is required", p.name)));
            }
        }

        let limit = match canon.remove("limit") {
            Some(s) => {
                let n: i64 = s.parse().map_err(|_| self.fail("`limit` must be an integer"))?;
                if n < 1 {
                    return Err(self.fail("`limit` must be a positive integer"));
                }
                if self.has_rule(GuardRule::LimitSuggested) && n > MAX_LIMIT as i64 {
                    return Err(self.fail(format!("`limit` must not exceed {MAX_LIMIT}")));
                }
                u32::try_from(n).map_err(|_| self.fail("`limit` is too large"))?
            }
            None => DEFAULT_LIMIT,
        };

        if self.has_rule(GuardRule::FormulaNotChemsys) {
            if let Some(f) = canon.get("formula") {
                if f.contains('-') {
                    return Err(self.fail(format!(
                        "`formula` '{f}' looks like a chemical system; use `chemsys` instead"
                    )));
                }
            }
        }

        let sort_fields = canon
            .remove("sort_fields")
            .map(|s| s.split(',').filter(|x| !x.is_empty()).map(SortField::parse).collect())
            .unwrap_or_default();

        Ok(MPQuery {
            tool: self.name.clone(),
            endpoint_path: self.endpoint_path.clone(),
            args: canon,
            fields,
            limit,
            sort_fields,
        })
    }
}

fn p(name: &str, kind: ValueKind, description: &str) -> ParamSpec {
    ParamSpec { name: name.into(), kind, required: false, description: description.into() }
}

fn common_params() -> Vec<ParamSpec> {
    vec![
        p("material_ids", ValueKind::CommaList, "Comma-separated material_id values, e.g. mp-149,mp-13"),
        p("formula", ValueKind::CommaList, "Chemical formula(s), e.g. SiO2 or Fe2O3,LiFePO4 (anonymized like ABC3 allowed)"),
        p("chemsys", ValueKind::CommaList, "Dash-delimited chemical system(s), e.g. Si-O or Li-Fe-P-O"),
        p("elements", ValueKind::CommaList, "Elements that must be present, e.g. Li,O"),
        p("fields", ValueKind::CommaList, "Fields to return, comma-separated. Always specify only what you need"),
        p("limit", ValueKind::Integer, "Maximum number of documents to return"),
        p("sort_fields", ValueKind::CommaList, "Fields to sort by; prefix with '-' for descending order"),
    ]
}

fn range(field: &str, what: &str) -> [ParamSpec; 2] {
    [
        p(&format!("{field}_min"), ValueKind::Number, &format!("Minimum {what}")),
        p(&format!("{field}_max"), ValueKind::Number, &format!("Maximum {what}")),
    ]
}

fn schema(endpoint: &str, path: &str, description: &str, extra: Vec<ParamSpec>) -> ToolSchema {
    let mut params = common_params();
    params.extend(extra);
    ToolSchema {
        name: format!("search_materials_{endpoint}__get"),
        description: description.into(),
        params,
        endpoint_path: path.into(),
        guard_rules: vec![GuardRule::FieldsRequired, GuardRule::LimitSuggested, GuardRule::FormulaNotChemsys],
    }
}

/// One schema per supported endpoint.
pub fn catalog() -> Vec<ToolSchema> {
    let mut out = vec![
        schema(
            "summary",
            "/materials/summary/",
            "Search amalgamated material data (composition, symmetry, nsites, band_gap, energies, moduli, ordering).",
            [
                range("band_gap", "band gap in eV").to_vec(),
                range("energy_above_hull", "energy above hull in eV/atom").to_vec(),
                vec![p("is_stable", ValueKind::Boolean, "Restrict to thermodynamically stable materials")],
            ]
            .concat(),
        ),
        schema(
            "thermo",
            "/materials/thermo/",
            "Search computed thermodynamic data such as formation energy per atom and energy above hull.",
            [
                range("formation_energy_per_atom", "formation energy in eV/atom").to_vec(),
                range("energy_above_hull", "energy above hull in eV/atom").to_vec(),
                vec![p("is_stable", ValueKind::Boolean, "Restrict to thermodynamically stable materials")],
            ]
            .concat(),
        ),
        schema(
            "elasticity",
            "/materials/elasticity/",
            "Search bulk (k_vrh), shear (g_vrh) and Young's moduli, Poisson ratio and universal anisotropy.",
            [range("k_vrh", "Voigt-Reuss-Hill bulk modulus in GPa").to_vec(), range("g_vrh", "Voigt-Reuss-Hill shear modulus in GPa").to_vec()].concat(),
        ),
        schema(
            "magnetism",
            "/materials/magnetism/",
            "Search computed magnetic ordering (FM, FiM, AFM, NM) and total magnetization.",
            [
                vec![p("ordering", ValueKind::String, "Magnetic ordering: FM, FiM, AFM or NM")],
                range("total_magnetization", "total magnetization in µB/f.u.").to_vec(),
            ]
            .concat(),
        ),
        schema(
            "dielectric",
            "/materials/dielectric/",
            "Search dielectric data from density functional perturbation theory.",
            range("e_total", "total dielectric constant").to_vec(),
        ),
        schema(
            "piezoelectric",
            "/materials/piezoelectric/",
            "Search piezoelectric data from density functional perturbation theory.",
            range("piezo_modulus", "piezoelectric modulus in C/m²").to_vec(),
        ),
        schema(
            "electronic_structure",
            "/materials/electronic_structure/",
            "Search electronic structure data such as band gap, fermi level and gap type.",
            [range("band_gap", "band gap in eV").to_vec(), vec![p("is_gap_direct", ValueKind::Boolean, "Restrict to direct gaps")]].concat(),
        ),
        schema(
            "structure",
            "/materials/core/",
            "Fetch crystal structures and save them as pymatgen Structure JSON files in the workspace.",
            vec![],
        ),
    ];
    let mut synthesis = schema(
        "synthesis",
        "/materials/synthesis/",
        "Search text-mined synthesis recipes (targets, precursors, operations).",
        vec![
            p("target_formula", ValueKind::String, "Formula of the synthesis target"),
            p("precursor_formula", ValueKind::String, "Formula of a precursor"),
            p("keywords", ValueKind::CommaList, "Keywords to search recipe text for"),
        ],
    );
    // recipes are not keyed by material and always return whole documents
    synthesis.params.retain(|p| !["material_ids", "formula", "chemsys", "elements"].contains(&p.name.as_str()));
    synthesis.guard_rules = vec![GuardRule::LimitSuggested];
    out.push(synthesis);
    out
}

pub fn schema_by_name(name: &str) -> Option<ToolSchema> {
    catalog().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary() -> ToolSchema {
        schema_by_name("search_materials_summary__get").unwrap()
    }

    #[test]
    fn missing_fields_message() {
        let err = summary().validate_args(&json!({"material_ids": "mp-3666"})).unwrap_err();
        assert_eq!(
            err.observation(),
            "Error on search_materials_summary__get: `fields` must be specified in the query. Please revise arguments or try smaller request by specifying 'limit' in request."
        );
    }

    #[test]
    fn valid_thermo_query() {
        let s = schema_by_name("search_materials_thermo__get").unwrap();
        let q = s.validate_args(&json!({"formula": "LiTaO3", "fields": "formation_energy_per_atom", "limit": 1})).unwrap();
        assert_eq!(q.limit, 1);
        assert_eq!(q.fields, vec!["formation_energy_per_atom"]);
        assert_eq!(q.args["formula"], "LiTaO3");
        assert_eq!(
            q.resolved_url("https://api.materialsproject.org"),
            "https://api.materialsproject.org/materials/thermo/?_fields=formation_energy_per_atom&_limit=1&formula=LiTaO3"
        );
    }

    #[test]
    fn wrong_kind() {
        let s = schema_by_name("search_materials_elasticity__get").unwrap();
        let err = s.validate_args(&json!({"formula": 42, "fields": "k_vrh"})).unwrap_err();
        assert!(err.observation().starts_with("Error on search_materials_elasticity__get: `formula` must be a"));
    }

    #[test]
    fn guard_rules() {
        let s = summary();
        assert_eq!(s.validate_args(&json!({"fields": "material_id"})).unwrap().limit, DEFAULT_LIMIT);
        assert!(s.validate_args(&json!({"fields": "x", "limit": 5000})).is_err());
        assert!(s.validate_args(&json!({"fields": "x", "limit": 0})).is_err());
        let err = s.validate_args(&json!({"formula": "Si-O", "fields": "x"})).unwrap_err();
        assert!(err.reason.contains("use `chemsys`"));
        assert!(s.validate_args(&json!({"fields": "  , "})).is_err());
        assert!(s.validate_args(&json!({"bogus": 1, "fields": "x"})).unwrap_err().reason.starts_with("unknown parameter"));
        assert!(s.validate_args(&json!([1])).is_err());
    }

    #[test]
    fn canonicalization_and_idempotence() {
        let s = summary();
        let q = s
            .validate_args(&json!({"fields": [" material_id", "band_gap "], "limit": "3", "is_stable": true, "sort_fields": "-band_gap", "band_gap_min": 1}))
            .unwrap();
        assert_eq!(q.fields, vec!["material_id", "band_gap"]);
        assert_eq!(q.sort_fields, vec![SortField { field: "band_gap".into(), descending: true }]);
        assert_eq!(s.validate_args(&q.to_args()).unwrap(), q);
    }

    #[test]
    fn stringified_object_is_accepted() {
        let q = summary().validate_args(&json!("{\"fields\": \"material_id\"}")).unwrap();
        assert_eq!(q.fields, vec!["material_id"]);
    }

    #[test]
    fn catalog_is_consistent() {
        let c = catalog();
        assert_eq!(c.len(), 9);
        for s in &c {
            let mut names: Vec<&str> = s.params.iter().map(|p| p.name.as_str()).collect();
            names.sort();
            let n = names.len();
            names.dedup();
            assert_eq!(n, names.len(), "{}", s.name);
        }
    }
}
