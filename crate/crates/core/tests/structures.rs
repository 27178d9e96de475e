mod common;

use common::*;
use mpagent_core::xtal::*;

fn load(name: &str) -> StructureDoc {
    parse_structure_doc(&std::fs::read_to_string(fixtures().join("structures").join(name)).unwrap()).unwrap()
}

fn li_shells(s: &StructureDoc, frac: [f64; 3], cutoff: f64) -> Vec<f64> {
    let with_li = insert_site(s, Species::element("Li").unwrap(), frac).unwrap();
    let mut d = bond_lengths(&with_li, "Li", "Si", cutoff);
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn body_center_is_hexagonal_in_mp149_setting() {
    // bases at 1/8 and 7/8: (½, ½, ½) has six equidistant Si
    let d = li_shells(&load("mp-149.json"), [0.5, 0.5, 0.5], 2.9);
    assert_eq!(d.len(), 6);
    assert!(d.iter().all(|x| (x - 2.257).abs() < 1e-3), "{d:?}");
}

#[test]
fn body_center_is_tetrahedral_in_origin_setting() {
    let si = load("mp-149.json");
    let origin = StructureDoc::new(
        si.lattice().clone(),
        vec![
            Site::new(Species::element("Si").unwrap(), [0.0, 0.0, 0.0]),
            Site::new(Species::element("Si").unwrap(), [0.25, 0.25, 0.25]),
        ],
        None,
    )
    .unwrap();
    let d = li_shells(&origin, [0.5, 0.5, 0.5], 2.9);
    // four nearest at the Si–Si bond length, then six more still inside 2.9 Å
    assert_eq!(d.len(), 10);
    assert!(d[..4].iter().all(|x| (x - 2.357).abs() < 1e-3), "{d:?}");
    assert!(d[4..].iter().all(|x| (x - 2.722).abs() < 1e-3), "{d:?}");
    assert_eq!(bond_lengths(&si, "Si", "Si", 2.5).len(), 8);
}

#[test]
fn distorted_cell_differs_from_reference() {
    let si = load("mp-149.json");
    let reference = insert_site(&si, Species::element("Li").unwrap(), [0.5, 0.5, 0.5]).unwrap();
    let distorted = load("si-li-distorted.json");
    assert_eq!(distorted.composition(), reference.composition());
    // 3 Å reaches three Si–Si arms in the distorted cell, four in the reference
    let delta = structure_delta(&distorted, &reference, &DeltaOptions::homonuclear("Si", 3.0));
    // expected values from a separate brute-force enumeration (numpy)
    assert!((delta.volume_err_pct - 66.253_409_372_675_55).abs() < 1e-9, "{delta:?}");
    assert!((delta.bond_err_pct.unwrap() - 13.576_346_646_526_6).abs() < 1e-9, "{delta:?}");
    assert!((delta.angle_err_pct.unwrap() + 4.471_184_917_767_707).abs() < 1e-9, "{delta:?}");
    let same = structure_delta(&reference, &reference, &DeltaOptions::homonuclear("Si", 2.6));
    assert_eq!((same.bond_err_pct, same.volume_err_pct, same.angle_err_pct), (Some(0.0), 0.0, Some(0.0)));
}
