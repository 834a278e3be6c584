use std::f64::consts::PI;
use std::sync::Arc;

use inducer::geometry::{bt_check, Grid, Hyperplane, Region};

fn unit(eta: f64) -> Arc<Grid> {
    Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], eta).unwrap())
}

fn unit_1d(eta: f64) -> Arc<Grid> {
    Arc::new(Grid::new(&[0.0], &[1.0], eta).unwrap())
}

#[test]
fn measure_of_square_empty_and_disc() {
    let g = unit(0.01);
    assert!((Region::full(g.clone()).measure() - 1.0).abs() < 1e-12);
    assert_eq!(Region::empty(g).measure(), 0.0);

    let eta = 1.0 / 2048.0;
    let disc = Region::ball(unit(eta), &[0.5, 0.5, 0.0], 0.25);
    let perimeter = 2.0 * PI * 0.25;
    assert!((disc.measure() - PI / 16.0).abs() <= 4.0 * perimeter * eta, "{}", disc.measure());
    assert_eq!(disc.measure(), disc.count() as f64 * eta * eta);
}

#[test]
fn collar_of_unit_square() {
    let sq = Region::full(unit(1.0 / 128.0));
    let c = sq.eps_boundary(0.1);
    assert!((c.measure() - 0.36).abs() <= sq.raster_slack(), "{}", c.measure());
    assert!(c.is_subset_of(&sq));
    assert_eq!(sq.eps_boundary_measure(0.0), 0.0);
    assert_eq!(sq.eps_boundary(sq.diameter()), sq);
}

/// Distance from `p` to the complement of the L-shape `[0,1]^2 \ [1/2,1]^2`.
fn l_depth(p: [f64; 2]) -> f64 {
    let (x, y) = (p[0], p[1]);
    let walls = x.min(y).min(1.0 - x).min(1.0 - y);
    let dx = (0.5 - x).max(0.0);
    let dy = (0.5 - y).max(0.0);
    walls.min((dx * dx + dy * dy).sqrt())
}

fn in_l(p: [f64; 2]) -> bool {
    !(p[0] > 0.5 && p[1] > 0.5)
}

#[test]
fn l_shape_collar_matches_fine_raster() {
    let eta = 1.0 / 256.0;
    let l = Region::from_predicate(unit(eta), |p| in_l([p[0], p[1]]));
    assert!((l.measure() - 0.75).abs() < 1e-12);
    let eps = 0.05;
    let fine = eta / 16.0;
    let n = (1.0 / fine) as usize;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            let p = [(i as f64 + 0.5) * fine, (j as f64 + 0.5) * fine];
            if in_l(p) && l_depth(p) < eps {
                count += 1;
            }
        }
    }
    let oracle = count as f64 * fine * fine;
    let got = l.eps_boundary_measure(eps);
    assert!((got - oracle).abs() <= l.raster_slack(), "{got} vs {oracle}");
}

#[test]
fn diameter_examples() {
    let eta = 1.0 / 64.0;
    let g = unit(eta);
    let one = Region::from_cells(g.clone(), &[[5, 7, 0]]);
    assert!((one.diameter() - eta * 2f64.sqrt()).abs() < 1e-12);
    let sq = Region::full(g.clone());
    assert!((sq.diameter() - 2f64.sqrt()).abs() <= eta * 2f64.sqrt() + 1e-12);
    let corners = Region::from_cells(g, &[[0, 0, 0], [63, 63, 0]]);
    assert!((corners.diameter() - 2f64.sqrt()).abs() <= 2.0 * eta * 2f64.sqrt() + 1e-12);
    let seg = Region::full(unit_1d(1.0 / 100.0));
    assert!((seg.diameter() - 1.0).abs() <= 0.01 + 1e-12);
}

#[test]
fn delta_regularity_examples() {
    let g = unit(1.0 / 100.0);
    let sq = Region::full(g.clone());
    assert!(sq.is_delta_regular(0.4));
    assert!(!sq.is_delta_regular(0.5));
    let strip = Region::open_box(g, &[0.0, 0.0], &[1.0, 0.01]);
    assert_eq!(strip.count(), 100);
    assert!(!strip.is_delta_regular(0.4));
}

#[test]
fn regular_witness_ball_lies_inside() {
    let eta = 1.0 / 128.0;
    let g = unit(eta);
    let shapes = [
        Region::from_predicate(g.clone(), |p| in_l([p[0], p[1]])),
        Region::ball(g.clone(), &[0.4, 0.6, 0.0], 0.3),
        Region::open_box(g.clone(), &[0.1, 0.2], &[0.9, 0.5]),
    ];
    for r in &shapes {
        for delta in [0.02, 0.05, 0.1] {
            let Some(w) = r.regular_witness(delta) else { continue };
            let x = g.center(&w);
            let ball = Region::ball(g.clone(), &x, delta);
            assert!(ball.is_subset_of(r), "delta {delta}");
        }
    }
}

#[test]
fn regions_are_compared_by_cell_set() {
    let g = unit(1.0 / 32.0);
    let a = Region::open_box(g.clone(), &[0.25, 0.25], &[0.75, 0.75]);
    // same cells from a slightly different closed description
    let b = Region::from_predicate(g.clone(), |p| p[0] >= 0.25 && p[0] <= 0.75 && p[1] >= 0.25 && p[1] <= 0.75);
    assert_eq!(a, b);
    let c = Region::from_cells(g, &a.cells().collect::<Vec<_>>());
    assert_eq!(a, c);
}

#[test]
fn collar_inequality_examples() {
    let g = unit(1.0 / 128.0);
    let sq = Region::full(g.clone());
    let mid = Hyperplane::new(&[1.0, 0.0], 0.5).unwrap();
    let r = bt_check(&sq, &mid, 0.1, 0.0).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(r.holds());

    let r = bt_check(&sq, &mid, 0.1, 1.0).unwrap();
    // direct evaluation: left slab 0.5 < x < ... of width 0.1 deeper than 0.1
    // is 0.1 x 0.8; right collar is 0.5 x 1 minus 0.4 x 0.8
    let lhs = 0.1 * 0.8;
    let rhs = 0.5 - 0.4 * 0.8;
    assert!((r.lhs - lhs).abs() <= sq.raster_slack() && (r.rhs - rhs).abs() <= sq.raster_slack(), "{r:?}");
    assert!(r.holds());

    let small = Region::open_box(g, &[0.1, 0.1], &[0.3, 0.3]);
    let far = Hyperplane::new(&[1.0, 0.0], 0.9).unwrap();
    let r = bt_check(&small, &far, 0.05, 1.0).unwrap();
    assert_eq!(r.lhs, 0.0);
}
