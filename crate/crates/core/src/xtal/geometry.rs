use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::neighbors::neighbor_list;
use super::StructureDoc;

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Distances of every directed `a`–`b` neighbor pair within `cutoff`.
pub fn bond_lengths(s: &StructureDoc, a: &str, b: &str, cutoff: f64) -> Vec<f64> {
    let sites = s.sites();
    neighbor_list(s, cutoff)
        .into_iter()
        .filter(|n| sites[n.i].species.symbol() == a && sites[n.j].species.symbol() == b)
        .map(|n| n.distance)
        .collect()
}

/// Angles n1–center–n2 (degrees) for every site of `center` species, over all
/// distinct pairs of its neighbors within `cutoff`.
pub fn bond_angles(s: &StructureDoc, center: &str, cutoff: f64) -> Vec<f64> {
    angles_impl(s, center, None, cutoff)
}

/// Like [`bond_angles`] but only neighbors of species `neighbor` take part.
pub fn bond_angles_between(s: &StructureDoc, center: &str, neighbor: &str, cutoff: f64) -> Vec<f64> {
    angles_impl(s, center, Some(neighbor), cutoff)
}

fn angles_impl(s: &StructureDoc, center: &str, neighbor: Option<&str>, cutoff: f64) -> Vec<f64> {
    let sites = s.sites();
    let list = neighbor_list(s, cutoff);
    let mut out = Vec::new();
    for (c, site) in sites.iter().enumerate() {
        if site.species.symbol() != center {
            continue;
        }
        let arms: Vec<Vector3<f64>> = list
            .iter()
            .filter(|n| n.i == c)
            .filter(|n| neighbor.is_none_or(|sp| sites[n.j].species.symbol() == sp))
            .map(|n| Vector3::from(n.vector))
            .collect();
        for p in 0..arms.len() {
            for q in p + 1..arms.len() {
                let cos = arms[p].dot(&arms[q]) / (arms[p].norm() * arms[q].norm());
                out.push(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
    }
    out
}

/// Which bonds and angles [`structure_delta`] compares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaOptions {
    pub bond: (String, String),
    pub bond_cutoff: f64,
    pub angle_center: String,
    pub angle_neighbor: Option<String>,
    pub angle_cutoff: f64,
}

impl DeltaOptions {
    /// Same-species bonds and angles, e.g. Si–Si and Si–Si–Si.
    pub fn homonuclear(species: &str, cutoff: f64) -> Self {
        Self {
            bond: (species.to_string(), species.to_string()),
            bond_cutoff: cutoff,
            angle_center: species.to_string(),
            angle_neighbor: Some(species.to_string()),
            angle_cutoff: cutoff,
        }
    }
}

/// Signed percentage errors of a structure against a reference. Bond and
/// angle errors are absent when either structure has no matching bonds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureDelta {
    pub bond_err_pct: Option<f64>,
    pub volume_err_pct: f64,
    pub angle_err_pct: Option<f64>,
}

fn pct(x: f64, reference: f64) -> f64 {
    100.0 * (x - reference) / reference
}

/// Compares `candidate` against `reference`: 100·(x − x_ref)/x_ref for mean
/// bond length, cell volume and mean bond angle.
pub fn structure_delta(candidate: &StructureDoc, reference: &StructureDoc, opts: &DeltaOptions) -> StructureDelta {
    let bond = |s: &StructureDoc| mean(&bond_lengths(s, &opts.bond.0, &opts.bond.1, opts.bond_cutoff));
    let angle = |s: &StructureDoc| {
        mean(&angles_impl(s, &opts.angle_center, opts.angle_neighbor.as_deref(), opts.angle_cutoff))
    };
    let both = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(x, r)| pct(x, r));
    StructureDelta {
        bond_err_pct: both(bond(candidate), bond(reference)),
        volume_err_pct: pct(candidate.lattice().volume(), reference.lattice().volume()),
        angle_err_pct: both(angle(candidate), angle(reference)),
    }
}
