//! Saving retrieved structures into a session workspace.

use std::path::Path;


use super::mp::{is_material_id, MPDocument};
use crate::xtal::parse_structure_value;

pub const SAVED_PREFIX: &str =
    "All retrieved structures are saved as Pymatgen Structure JSON files to the following paths: ";

/// Writes `<material_id>.json` for every document carrying a structure and
/// returns the file names in document order.
pub fn save_structures(tool: &str, docs: &[MPDocument], workspace: &Path) -> Result<Vec<String>, String> {
    std::fs::create_dir_all(workspace).map_err(|e| format!("Error on {tool}: cannot create workspace: {e}"))?;
    let mut names = Vec::new();
    for doc in docs {
        let Some(id) = doc.material_id.as_deref() else {
            return Err(format!("Error on {tool}: document without `material_id`; include it in `fields`"));
        };
        // ids become file names, so only accept the canonical shape
        if !is_material_id(id) {
            return Err(format!("Error on {tool}: refusing to save unexpected material_id `{id}`"));
        }
        let Some(structure) = doc.payload.get("structure") else {
            return Err(format!("Error on {tool}: document {id} has no `structure`; include it in `fields`"));
        };
        parse_structure_value(structure).map_err(|e| format!("Error on {tool}: {id}: {e}"))?;
        let name = format!("{id}.json");
        let text = serde_json::to_string_pretty(structure).expect("json value serializes");
        std::fs::write(workspace.join(&name), text).map_err(|e| format!("Error on {tool}: writing {name}: {e}"))?;
        names.push(name);
    }
    Ok(names)
}

pub fn saved_message(names: &[String]) -> String {
    format!("{SAVED_PREFIX}{}", names.join(", "))
}

