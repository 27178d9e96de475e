use nalgebra::Vector3;

use super::neighbors::for_each_image;
use super::structure::wrap_unit;
use super::{Site, Species, StructureDoc, XtalError};

/// Minimum distance (Å) between an inserted site and any existing site.
pub const INSERTION_TOLERANCE: f64 = 0.5;

/// Replicates `s` `na × nb × nc` times. Sites are emitted site-major: every
/// image of site 0, then every image of site 1, and so on.
pub fn make_supercell(s: &StructureDoc, scale: [u32; 3]) -> Result<StructureDoc, XtalError> {
    if scale.contains(&0) {
        return Err(XtalError::InvalidArgument(format!(
            "supercell multipliers must be positive, got {scale:?}"
        )));
    }
    let factors = scale.map(f64::from);
    let lattice = s.lattice().scaled_rows(factors)?;
    let [na, nb, nc] = scale;
    let mut sites = Vec::with_capacity(s.len() * (na * nb * nc) as usize);
    for site in s.sites() {
        for i in 0..na {
            for j in 0..nb {
                for k in 0..nc {
                    let offset = [i, j, k].map(f64::from);
                    let frac = [0, 1, 2].map(|d| (site.frac[d] + offset[d]) / factors[d]);
                    sites.push(Site::new(site.species.clone(), frac));
                }
            }
        }
    }
    StructureDoc::new(lattice, sites, s.source_id().map(str::to_string))
}

pub fn insert_site(s: &StructureDoc, species: Species, frac: [f64; 3]) -> Result<StructureDoc, XtalError> {
    insert_site_with_tolerance(s, species, frac, INSERTION_TOLERANCE)
}

/// Appends a site, refusing positions within `tolerance` Å of any periodic
/// image of an existing site. The error names the closest blocking site.
pub fn insert_site_with_tolerance(
    s: &StructureDoc,
    species: Species,
    frac: [f64; 3],
    tolerance: f64,
) -> Result<StructureDoc, XtalError> {
    if frac.iter().any(|x| !x.is_finite()) {
        return Err(XtalError::InvalidArgument("non-finite coordinate".into()));
    }
    let lattice = s.lattice();
    let new = Vector3::from(frac.map(wrap_unit));
    let mut closest: Option<(usize, f64)> = None;
    for (index, site) in s.sites().iter().enumerate() {
        let existing = Vector3::from(site.frac.map(wrap_unit));
        for_each_image(lattice, &new, &existing, tolerance, |_, d, _| {
            if d < tolerance && closest.is_none_or(|(_, best)| d < best) {
                closest = Some((index, d));
            }
        });
    }
    if let Some((index, distance)) = closest {
        return Err(XtalError::Collision {
            index,
            species: s.sites()[index].species.to_string(),
            distance,
            tolerance,
        });
    }
    let mut sites = s.sites().to_vec();
    sites.push(Site::new(species, frac));
    StructureDoc::new(lattice.clone(), sites, s.source_id().map(str::to_string))
}
