use std::f64::consts::PI;
use std::sync::Arc;

use inducer::dynamics::catalog;
use inducer::geometry::{Grid, Region};
use inducer::partition::{certify_nice_boundary, Partition, PartitionScale};
use inducer::Error;

fn unit(eta: f64) -> Arc<Grid> {
    Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], eta).unwrap())
}

#[test]
fn paper_scale_on_the_unit_interval() {
    let g = Arc::new(Grid::new(&[0.0], &[1.0], 1.0 / 1024.0).unwrap());
    let p = Partition::new(&Region::full(g), 0.5, PartitionScale::Paper, None).unwrap();
    assert_eq!(p.c, 1.0 / 16.0);
    assert_eq!(p.side, 1.0 / 32.0);
    assert_eq!(p.len(), 32);
    // the square case only checks the arithmetic: c = 1 / (2^4 pi^2 sqrt 2)
    let c2 = 1.0 / (16.0 * PI * PI * 2f64.sqrt());
    assert!((PartitionScale::Paper.factor(2) - c2).abs() < 1e-15);
    assert!((c2 * 0.5 - 2.24e-3).abs() < 1e-5);
}

#[test]
fn cubes_below_eight_cells_are_rejected() {
    let g = unit(1.0 / 64.0);
    let err = Partition::new(&Region::full(g), 0.02, PartitionScale::Admissible, None).unwrap_err();
    assert!(matches!(err, Error::EpsilonBelowResolution { .. }));
}

#[test]
fn partition_tiles_every_catalog_space() {
    for (name, eta, delta) in [("M0", 1.0 / 1024.0, 0.05), ("M1", 1.0 / 256.0, 0.1), ("M2", 1.0 / 256.0, 0.1)] {
        let m = catalog::spec(name).unwrap().build(eta).unwrap();
        let x = m.space();
        let p = Partition::new(x, delta, PartitionScale::Admissible, None).unwrap();
        let total: f64 = p.elements.iter().map(Region::measure).sum();
        assert!((total - x.measure()).abs() < 1e-12, "{name}");
        for (k, e) in p.elements.iter().enumerate() {
            assert!(e.cells().all(|c| p.owner(&c) == Some(k)), "{name}");
        }
    }
}

#[test]
fn prescribed_element_comes_first_and_is_avoided() {
    let g = unit(1.0 / 128.0);
    let x = Region::full(g.clone());
    let z = Region::open_box(g, &[0.5, 0.5], &[0.55, 0.57]);
    let p = Partition::new(&x, 0.1, PartitionScale::Admissible, Some(&z)).unwrap();
    assert!(p.has_z);
    assert_eq!(p.elements[0], z);
    assert!(p.elements[1..].iter().all(|e| e.intersect(&z).is_empty()));
}

#[test]
fn selection_in_a_ball_around_a_cube_center() {
    let eta = 1.0 / 256.0;
    let g = unit(eta);
    let delta = 0.1;
    let p = Partition::new(&Region::full(g.clone()), delta, PartitionScale::Admissible, None).unwrap();
    let mut checked = 0;
    for k in 0..p.len() {
        let e = &p.elements[k];
        let (lo, hi) = e.coord_box();
        if hi[0] - lo[0] < p.side - 1e-12 || hi[1] - lo[1] < p.side - 1e-12 {
            continue;
        }
        let centre = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, 0.0];
        if centre[0] < delta || centre[1] < delta || centre[0] > 1.0 - delta || centre[1] > 1.0 - delta {
            continue;
        }
        let ball = Region::ball(g.clone(), &centre, delta + 2.0 * eta);
        let s = p.select_contained_element(&ball, 0.0, &[2.0 * eta, 4.0 * eta]).unwrap();
        assert_eq!(s.element, k);
        assert!(2.0 * e.measure() <= ball.measure());
        checked += 1;
    }
    assert!(checked > 20, "{checked}");
}

#[test]
fn selection_is_deterministic_under_ties() {
    let g = unit(1.0 / 256.0);
    let p = Partition::new(&Region::full(g.clone()), 0.05, PartitionScale::Admissible, None).unwrap();
    // a rectangle whose deepest cells form a whole row of equal depth
    let r = Region::open_box(g, &[0.2, 0.3], &[0.8, 0.3 + 2.0 * 0.05 + 2.0 / 256.0]);
    let (w, _) = r.deepest_cell().unwrap();
    let a = p.select_contained_element(&r, 0.0, &[]).unwrap();
    let b = p.select_contained_element(&r, 0.0, &[]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.witness, w);
    assert!(r.cells().filter(|c| r.depth_of(c) == Some(a.depth)).all(|c| w <= c));
}

#[test]
fn nice_boundary_certificates() {
    let eta = 1.0 / 256.0;
    let g = unit(eta);
    let x = Region::full(g.clone());
    let side = 0.25;
    let cube = Region::open_box(g.clone(), &[0.375, 0.375], &[0.375 + side, 0.375 + side]);
    let c = certify_nice_boundary(&cube, &x, 20, 1).unwrap();
    assert!(c >= 4.0 * side * 0.9 && c.is_finite(), "{c}");

    let disc = Region::ball(g.clone(), &[0.5, 0.5, 0.0], 0.2);
    let c = certify_nice_boundary(&disc, &x, 20, 1).unwrap();
    assert!(c >= 2.0 * PI * 0.2 * 0.9 && c.is_finite(), "{c}");

    // teeth one cell wide: no interior at any resolved scale
    let comb = Region::from_predicate(g, |p| {
        p[1] > 0.3 && p[1] < 0.7 && p[0] > 0.3 && p[0] < 0.7 && ((p[0] * 256.0) as usize) % 2 == 0
    });
    assert!(matches!(certify_nice_boundary(&comb, &x, 20, 1), Err(Error::NotNice(_))));
}
