use std::sync::Arc;

use inducer::dynamics::catalog;
use inducer::families::{
    comparability_check, holder_seminorm, iterate, recovery_time, remainder, Density, GrowthConstants, IterateOptions,
    StandardFamily, StandardPair,
};
use inducer::geometry::{Grid, Region};
use inducer::Error;

fn unit(eta: f64) -> Arc<Grid> {
    Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], eta).unwrap())
}

fn segment(lo: f64, hi: f64, eta: f64) -> Region {
    let g = Arc::new(Grid::new(&[0.0], &[1.0], eta).unwrap());
    Region::open_box(g, &[lo], &[hi])
}

#[test]
fn seminorm_of_constant_and_exponential() {
    let sq = Region::full(unit(1.0 / 32.0));
    assert_eq!(holder_seminorm(&StandardPair::uniform(sq.clone()).unwrap(), 1.0, 0), 0.0);
    let flat = StandardPair::from_fn(sq, |_| 3.0).unwrap();
    assert!(holder_seminorm(&flat, 1.0, 0) < 1e-12);

    let e = StandardPair::from_fn(segment(0.0, 1.0, 1.0 / 256.0), |p| p[0].exp()).unwrap();
    assert!((holder_seminorm(&e, 1.0, 0) - 1.0).abs() < 1e-6);
}

#[test]
fn comparability_of_exponential_on_half_interval() {
    let eta = 1.0 / 1000.0;
    let pair = StandardPair::from_fn(segment(0.0, 0.5, eta), |p| p[0].exp()).unwrap();
    let j = segment(0.0, 0.1, eta);
    let jp = segment(0.4, 0.5, eta);
    let r = comparability_check(&pair, &j, &jp, 1.0, 0.5, 1.0).unwrap();
    // averages of e^x over (0, 0.1) and (0.4, 0.5) differ by exactly e^0.4
    assert!((r.avg_j_prime / r.avg_j - 0.4f64.exp()).abs() < 1e-4, "{r:?}");
    assert!(r.holds());
    let tight = comparability_check(&pair, &j, &jp, 1.0, 0.3, 1.0).unwrap();
    assert!(!tight.holds());

    let flat = StandardPair::uniform(segment(0.0, 0.5, eta)).unwrap();
    let r = comparability_check(&flat, &j, &jp, 0.0, 0.5, 1.0).unwrap();
    assert!(r.inf == r.sup && r.avg_j == r.sup && r.avg_j_prime == r.sup);

    let outside = segment(0.6, 0.7, eta);
    assert!(matches!(comparability_check(&pair, &outside, &jp, 1.0, 0.5, 1.0), Err(Error::NotContained(_))));
}

#[test]
fn boundary_weight_is_linear_and_vanishes() {
    let g = unit(1.0 / 128.0);
    let sq = Region::full(g.clone());
    let one = StandardFamily::single(StandardPair::uniform(sq.clone()).unwrap(), 1.0).unwrap();
    assert!((one.boundary_weight(0.1) - 0.36).abs() <= sq.raster_slack());
    assert_eq!(one.boundary_weight(0.0), 0.0);
    assert!(one.boundary_weight(1e-6) < 1e-12);

    let a = StandardPair::uniform(Region::open_box(g.clone(), &[0.0, 0.0], &[0.5, 0.5])).unwrap();
    let b = StandardPair::from_fn(Region::ball(g, &[0.6, 0.6, 0.0], 0.3), |p| 1.0 + p[0]).unwrap();
    let fam = StandardFamily::new(vec![a.clone(), b.clone()], vec![0.3, 1.7]).unwrap();
    for eps in [0.01, 0.05, 0.2] {
        let parts = 0.3 * StandardFamily::single(a.clone(), 1.0).unwrap().boundary_weight(eps)
            + 1.7 * StandardFamily::single(b.clone(), 1.0).unwrap().boundary_weight(eps);
        assert!((fam.boundary_weight(eps) - parts).abs() < 1e-12);
    }
}

#[test]
fn properness_of_uniform_square() {
    let sq = Region::full(unit(1.0 / 1024.0));
    let fam = StandardFamily::single(StandardPair::uniform(sq).unwrap(), 1.0).unwrap();
    let grid: Vec<f64> = (1..=8).map(|k| 2f64.powi(-k)).collect();
    assert!(fam.is_proper(4.0, &grid));
    assert!(!fam.is_proper(3.5, &grid));
    assert!((fam.properness(&grid) - (4.0 - 4.0 / 256.0)).abs() < 1e-9);
}

#[test]
fn doubling_map_splits_the_unit_pair() {
    let m = catalog::spec("M0").unwrap().build(1.0 / 1024.0).unwrap();
    let fam = StandardFamily::single(StandardPair::uniform(m.space().clone()).unwrap(), 1.0).unwrap();
    let out = iterate(&m, &fam, 1, &IterateOptions::new(1.0)).unwrap();
    assert_eq!(out.len(), 2);
    for (p, w) in out.pairs.iter().zip(&out.weights) {
        assert!((w - 0.5).abs() < 1e-12);
        assert_eq!(p.domain, *m.space());
        match &p.density {
            Density::Uniform(v) => assert!((v - 1.0).abs() < 1e-12),
            Density::Cells(v) => assert!(p.domain.indexed_cells().all(|(k, _)| (v[k] - 1.0).abs() < 1e-9)),
        }
    }
}

#[test]
fn remainder_examples() {
    let g = unit(1.0 / 64.0);
    let sq = Region::open_box(g.clone(), &[0.25, 0.25], &[0.75, 0.75]);
    let fam = StandardFamily::single(StandardPair::uniform(sq.clone()).unwrap(), 0.8).unwrap();

    let same = remainder(&fam, &[]).unwrap();
    assert!(same.stopped.is_empty());
    assert_eq!(same.family.len(), 1);
    assert_eq!(same.family.pairs[0].domain, sq);
    assert_eq!(same.family.weights[0], 0.8);

    let cube = Region::open_box(g.clone(), &[0.375, 0.375], &[0.5, 0.5]);
    let r = remainder(&fam, &[(0, cube.clone())]).unwrap();
    let want = 0.8 * (sq.measure() - cube.measure()) / sq.measure();
    assert!((r.family.weights[0] - want).abs() < 1e-12);
    assert!(r.family.weights[0] >= 0.4);
    assert!((r.stopped[0].1 + want - 0.8).abs() < 1e-12);

    let stray = Region::open_box(g, &[0.0, 0.0], &[0.1, 0.1]);
    assert!(matches!(remainder(&fam, &[(0, stray)]), Err(Error::NotContained(_))));
}

#[test]
fn recovery_needs_p_above_zeta4() {
    let m = catalog::spec("M0").unwrap().build(1.0 / 1024.0).unwrap();
    let base = GrowthConstants::new(&m, 50.0).unwrap();
    assert!(matches!(base.clone().with_zetas(1.0, 1.0, 60.0), Err(Error::Config(_))));
    let k = GrowthConstants { zeta4: Some(60.0), ..base };
    let opts = IterateOptions::new(k.eps0);
    assert!(matches!(recovery_time(&m, &k, 100.0, 2, 0, 5, &opts), Err(Error::NoRecovery(_))));
}

#[test]
fn recovery_time_is_at_least_one_and_monotone() {
    let m = catalog::spec("M0").unwrap().build(1.0 / 1024.0).unwrap();
    let k = GrowthConstants::new(&m, 50.0).unwrap();
    let opts = IterateOptions::new(k.eps0);
    let mut last = 0;
    for b in [50.0, 100.0, 500.0] {
        let r = recovery_time(&m, &k, b, 4, 7, 40, &opts).unwrap();
        assert!(r.n >= 1 && r.n >= r.empirical);
        assert!(r.empirical >= last, "B = {b}");
        last = r.empirical;
    }
}
