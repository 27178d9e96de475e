use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::structure::wrap_unit;
use super::{Lattice, StructureDoc};

/// One directed neighbor pair. `image` is the lattice translation applied to
/// site `j` (in its stored fractional coordinates) to reach the neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub image: [i32; 3],
    /// Cartesian vector from site `i` to the image of site `j`.
    pub vector: [f64; 3],
}

/// Number of periodic images to scan along each lattice direction so that
/// every point within `cutoff` of a point inside the cell is reached.
pub(crate) fn image_range(lattice: &Lattice, cutoff: f64) -> [i32; 3] {
    // +1 covers the fractional offset between the two wrapped sites
    lattice
        .plane_spacings()
        .map(|h| (cutoff / h).ceil() as i32 + 1)
}

/// Visits every image of `to` (relative to `from`, both wrapped into the
/// cell) that lies within `cutoff`. The callback receives the image shift in
/// wrapped coordinates, the distance, and the Cartesian vector.
pub(crate) fn for_each_image(
    lattice: &Lattice,
    from: &Vector3<f64>,
    to: &Vector3<f64>,
    cutoff: f64,
    mut visit: impl FnMut([i32; 3], f64, Vector3<f64>),
) {
    let [ra, rb, rc] = image_range(lattice, cutoff);
    let delta = to - from;
    for na in -ra..=ra {
        for nb in -rb..=rb {
            for nc in -rc..=rc {
                let shift = Vector3::new(na as f64, nb as f64, nc as f64);
                let v = lattice.to_cartesian(&(delta + shift));
                let d = v.norm();
                if d <= cutoff {
                    visit([na, nb, nc], d, v);
                }
            }
        }
    }
}

/// All directed pairs `(i, j)` whose minimum-image or higher-image distance
/// is at most `cutoff`, including a site's own periodic images but never the
/// zero-distance self pair.
pub fn neighbor_list(s: &StructureDoc, cutoff: f64) -> Vec<Neighbor> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Vec::new();
    }
    let lattice = s.lattice();
    let wrapped: Vec<(Vector3<f64>, [i32; 3])> = s
        .sites()
        .iter()
        .map(|site| {
            let w = site.frac.map(wrap_unit);
            let shift = [0, 1, 2].map(|k| (site.frac[k] - w[k]).round() as i32);
            (Vector3::from(w), shift)
        })
        .collect();

    let mut out = Vec::new();
    for (i, (wi, si)) in wrapped.iter().enumerate() {
        for (j, (wj, sj)) in wrapped.iter().enumerate() {
            for_each_image(lattice, wi, wj, cutoff, |n, d, v| {
                if i == j && n == [0, 0, 0] {
                    return;
                }
                out.push(Neighbor {
                    i,
                    j,
                    distance: d,
                    image: [n[0] - sj[0] + si[0], n[1] - sj[1] + si[1], n[2] - sj[2] + si[2]],
                    vector: [v.x, v.y, v.z],
                });
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xtal::{Site, Species};

    fn cubic_single(a: f64) -> StructureDoc {
        StructureDoc::new(
            Lattice::cubic(a).unwrap(),
            vec![Site::new(Species::element("Po").unwrap(), [0.0; 3])],
            None,
        )
        .unwrap()
    }

    #[test]
    fn simple_cubic_self_images() {
        // 6 face neighbors at a; the 12 edge images are at a*sqrt(2) > 3.1
        let nl = neighbor_list(&cubic_single(3.0), 3.1);
        assert_eq!(nl.len(), 6);
        assert!(nl.iter().all(|n| (n.distance - 3.0).abs() < 1e-12 && n.i == 0 && n.j == 0));
    }

    #[test]
    fn tiny_cutoff_is_empty() {
        assert!(neighbor_list(&cubic_single(3.0), 0.5).is_empty());
        assert!(neighbor_list(&cubic_single(3.0), 0.0).is_empty());
    }

    #[test]
    fn image_offsets_refer_to_stored_coordinates() {
        let l = Lattice::cubic(4.0).unwrap();
        let sp = Species::element("Na").unwrap();
        let s = StructureDoc::new(
            l.clone(),
            vec![Site::new(sp.clone(), [0.1, 0.1, 0.1]), Site::new(sp, [1.9, 0.1, 0.1])],
            None,
        )
        .unwrap();
        for n in neighbor_list(&s, 5.0) {
            let fi = s.sites()[n.i].frac_vector();
            let fj = s.sites()[n.j].frac_vector()
                + Vector3::new(n.image[0] as f64, n.image[1] as f64, n.image[2] as f64);
            let v = l.to_cartesian(&(fj - fi));
            assert!((v.norm() - n.distance).abs() < 1e-9);
            assert!((v - Vector3::from(n.vector)).norm() < 1e-9);
        }
    }
}
