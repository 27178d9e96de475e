//! Periodic crystal structures: parsing of Materials Project structure
//! documents, supercells, interstitial insertion, and periodic geometry
//! (neighbor lists, bond lengths, bond angles, cell volume).

mod edit;
pub mod elements;
mod geometry;
mod lattice;
mod neighbors;
mod structure;

use thiserror::Error;

pub use edit::{insert_site, insert_site_with_tolerance, make_supercell, INSERTION_TOLERANCE};
pub use geometry::{
    bond_angles, bond_angles_between, bond_lengths, mean, structure_delta, DeltaOptions,
    StructureDelta,
};
pub use lattice::Lattice;
pub use neighbors::{neighbor_list, Neighbor};
pub use structure::{parse_structure_doc, parse_structure_value, Site, Species, StructureDoc, IDENTITY_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XtalError {
    #[error("invalid structure document: `{field}`: {reason}")]
    Format { field: String, reason: String },
    #[error("new site is {distance:.3} Å from site {index} ({species}), closer than {tolerance} Å")]
    Collision {
        index: usize,
        species: String,
        distance: f64,
        tolerance: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl XtalError {
    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Format {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Cell volume in Å³.
pub fn volume(s: &StructureDoc) -> f64 {
    s.lattice().volume()
}
