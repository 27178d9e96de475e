use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;

/// One recorded completion. A fixture file is JSON lines of these; entries
/// for the same (session, agent) pair are consumed in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub session_id: String,
    pub agent: String,
    /// Digest of the prompt the completion was recorded against; only used
    /// to warn about drift.
    #[serde(default)]
    pub prompt_digest: String,
    pub completion: String,
}

pub fn prompt_digest(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(user.as_bytes());
    hex::encode(h.finalize())
}

pub fn parse_fixture(text: &str) -> Result<Vec<FixtureEntry>, GatewayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GatewayError::Fixture(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn load_fixture(path: &Path) -> Result<Vec<FixtureEntry>, GatewayError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
    parse_fixture(&text)
}

pub fn write_entry(out: &mut dyn Write, entry: &FixtureEntry) -> Result<(), GatewayError> {
    let line = serde_json::to_string(entry).map_err(|e| GatewayError::Write(e.to_string()))?;
    writeln!(out, "{line}")
        .and_then(|_| out.flush())
        .map_err(|e| GatewayError::Write(e.to_string()))
}
