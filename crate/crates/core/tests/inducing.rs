use std::sync::OnceLock;

use inducer::dynamics::{catalog, PiecewiseMap};
use inducer::geometry::Region;
use inducer::inducing::{
    adjust_times, fit_tail, full_branch_report, gcd_all, tail_table, upgrade_full_branch, verify_gibbs_markov,
    BuildOptions, Builder, InducingScheme, RecurrenceSpec, Violation,
};
use inducer::Error;

struct Fixture {
    builder: Builder,
    gm: InducingScheme,
    full: InducingScheme,
}

/// Small doubling-map scheme on four seed elements and its upgrade.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = catalog::spec("M0").unwrap();
        let opts = BuildOptions { seeds: Some(4), round_cap: 8, max_unresolved_fraction: 1.0, ..Default::default() };
        let builder = Builder::new(&spec, 1.0 / 4096.0, opts, None).unwrap();
        let gm = builder.build_gm().unwrap();
        let target = gm.manifest.seeds[0];
        let full = upgrade_full_branch(&gm, &builder.map, Some(target), 4000, builder.tail_floor()).unwrap();
        Fixture { builder, gm, full }
    })
}

fn map() -> &'static PiecewiseMap {
    &fixture().builder.map
}

#[test]
fn geometric_tail_is_recovered_exactly() {
    let table: Vec<(usize, f64)> = (0..20).map(|n| (n, 0.5f64.powi(n as i32))).collect();
    let f = fit_tail(&table, 0.0).unwrap();
    assert!((f.kappa - 0.5).abs() < 1e-6 && (f.r2 - 1.0).abs() < 1e-12, "{f:?}");
    assert_eq!(f.points, 20);

    // every cell has tau = 3: the tail drops to zero after three entries
    let table = tail_table((0..10).map(|_| (3, 0.1)), 0.0);
    assert!(matches!(fit_tail(&table, 0.0), Err(Error::InsufficientTail(_))));
}

#[test]
fn cells_tile_the_seeds() {
    let f = fixture();
    let s = &f.gm;
    let seeds: f64 = s.manifest.seeds.iter().map(|&k| s.partition.elements[k].measure()).sum();
    assert!((s.base_measure - seeds).abs() < 1e-12);
    assert!((s.total_cell_measure() + s.unresolved - s.base_measure).abs() < 1e-9 * s.base_measure);
    assert!(s.cells.iter().all(|c| c.measure > 0.0 && s.manifest.seeds.contains(&c.seed)));
    assert!(s.images().len() <= s.partition.len());
    for c in &s.cells {
        assert_eq!(c.itinerary.len(), c.tau);
        assert!(c.domain.is_subset_of(&s.partition.elements[c.seed]));
    }
}

#[test]
fn every_round_stops_a_fixed_fraction() {
    let s = &fixture().gm;
    assert!(!s.rounds.is_empty());
    for r in &s.rounds {
        assert!(r.stopped >= s.manifest.t * r.remaining, "{r:?}");
        // unresolved weight shrinks by at least 1 / (1 + t) per round
        assert!(r.remaining - r.stopped <= r.remaining / (1.0 + s.manifest.t) + 1e-15);
    }
}

#[test]
fn clean_scheme_and_planted_fault() {
    let s = &fixture().gm;
    let rep = verify_gibbs_markov(s, map(), 6, 1);
    assert!(rep.passed(), "{:?}", rep.violations.first());
    assert!(rep.images <= s.partition.len());

    let mut bad = s.clone();
    let k = bad.cells.iter().position(|c| c.tau > 1).unwrap();
    bad.cells[k].tau -= 1;
    let rep = verify_gibbs_markov(&bad, map(), 6, 1);
    assert!(!rep.passed());
    assert!(rep.violations.iter().any(|v| matches!(v, Violation::Tau { .. }) && v.cell() == k));
    assert!(rep.violations.iter().all(|v| v.cell() == k));
}

#[test]
fn upgrade_is_full_branch_with_exact_return_times() {
    let f = fixture();
    let u = &f.full;
    let base = u.manifest.base.unwrap();
    assert_eq!(u.images(), vec![base]);
    let r = full_branch_report(u, map()).unwrap();
    assert!(r.worst_gap <= 1e-3, "{r:?}");
    assert_eq!(r.decomposition_failures, 0);
    for c in &u.cells {
        assert_eq!(c.parts.iter().sum::<usize>(), c.tau);
        assert_eq!(c.seed, base);
    }
    assert!(verify_gibbs_markov(u, map(), 6, 2).passed());
    let not_seed = (0..f.gm.partition.len()).find(|k| !f.gm.manifest.seeds.contains(k)).unwrap();
    assert!(upgrade_full_branch(&f.gm, map(), Some(not_seed), 100, 0.0).is_err());
}

/// Ulam estimate of the invariant density of the induced map on the base,
/// built from inverse chains of the cells' itineraries.
#[test]
fn induced_map_has_stationary_uniform_density() {
    let u = &fixture().full;
    let m = map();
    let g = m.grid();
    let z = &u.partition.elements[u.manifest.base.unwrap()];
    let zc: Vec<_> = z.cells().collect();
    let bins = 8;
    let per = zc.len() / bins;
    let bin_of = |x: &[f64; 3]| -> Option<usize> {
        let c = g.cell_of(x)?;
        let i = zc.iter().position(|q| *q == c)?;
        Some((i / per).min(bins - 1))
    };
    let vol = g.cell_volume();
    let mut p = vec![vec![0.0; bins]; bins];
    for (j, c) in zc.iter().enumerate() {
        let y = g.center(c);
        let to = (j / per).min(bins - 1);
        for cell in &u.cells {
            let Some((x, jac)) = m.inverse_chain(&cell.itinerary, &y) else { continue };
            if let Some(from) = bin_of(&x) {
                // each cylinder merged into the cell carries the same mass
                p[from][to] += cell.multiplicity * jac * vol;
            }
        }
    }
    let mut size = vec![0.0; bins];
    for j in 0..zc.len() {
        size[(j / per).min(bins - 1)] += vol;
    }
    for (row, s) in p.iter_mut().zip(&size) {
        row.iter_mut().for_each(|v| *v /= s);
    }
    let step = |v: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; bins];
        for i in 0..bins {
            for j in 0..bins {
                w[j] += v[i] * p[i][j];
            }
        }
        let t: f64 = w.iter().sum();
        w.iter().map(|x| x / t).collect()
    };
    let leb: Vec<f64> = size.iter().map(|s| s / z.measure()).collect();
    let mut v = leb.clone();
    for _ in 0..200 {
        v = step(&v);
    }
    let next = step(&v);
    let l1: f64 = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 <= 1e-2, "{l1}");
    // Lebesgue measure on the base is invariant for the affine map
    let uniform: f64 = v.iter().zip(&leb).map(|(a, b)| (a - b).abs()).sum();
    assert!(uniform <= 1e-2, "{v:?}");
}

#[test]
fn adjusted_times_examples() {
    let m = catalog::spec("M0").unwrap().build(1.0 / 65536.0).unwrap();
    let z = Region::open_box(m.grid().clone(), &[0.0], &[0.5]);
    let spec = RecurrenceSpec::search(&m, z.clone(), vec![2, 3]).unwrap();
    let a = adjust_times(&spec, 5.0, 5.0);
    assert_eq!(a.times, vec![8, 19]);
    assert_eq!(a.m[0], 2);
    assert_eq!(gcd_all(&a.times), 1);
    assert_eq!(a.itineraries[0].len(), 8);
    assert_eq!(a.itineraries[1].len(), 19);
    let covered = RecurrenceSpec::new(z, a.times.clone(), a.itineraries.clone()).unwrap();
    assert!(covered.verify(&m).is_ok());

    let same = adjust_times(&spec, 0.0, 0.0);
    assert_eq!(same.times, vec![2, 3]);
    assert_eq!(same.m, vec![0, 0]);
}

#[test]
fn gcd_one_rejects_a_degenerate_collar() {
    let spec = catalog::spec("M0").unwrap();
    let eta = 1.0 / 4096.0;
    let grid = spec.build(eta).unwrap().grid().clone();
    let z = Region::open_box(grid, &[0.0], &[1.0 / 256.0]);
    let b = Builder::new(&spec, eta, BuildOptions::default(), Some(&z)).unwrap();
    assert!(matches!(b.build_gcd_one(&z, 0), Err(Error::DegenerateCollar(_))));
}
