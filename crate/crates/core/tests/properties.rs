use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use inducer::dynamics::{catalog, transfer_apply, RasterDensity};
use inducer::families::{iterate, IterateOptions, StandardFamily, StandardPair};
use inducer::geometry::{Grid, Region};
use inducer::inducing::{adjust_times, gcd_all, RecurrenceSpec};

fn unit(eta: f64) -> Arc<Grid> {
    Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], eta).unwrap())
}

prop_compose! {
    fn boxes()(v in prop::collection::vec((0.0..0.8f64, 0.0..0.8f64, 0.05..0.5f64, 0.05..0.5f64), 1..4))
        -> Vec<[f64; 4]> {
        v.into_iter().map(|(x, y, w, h)| [x, y, (x + w).min(1.0), (y + h).min(1.0)]).collect()
    }
}

fn union(g: &Arc<Grid>, bs: &[[f64; 4]]) -> Region {
    bs.iter().fold(Region::empty(g.clone()), |acc, b| acc.union(&Region::open_box(g.clone(), &b[..2], &b[2..])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn collars_grow_with_eps(bs in boxes(), e1 in 0.0..0.3f64, e2 in 0.0..0.3f64) {
        let r = union(&unit(1.0 / 128.0), &bs);
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        prop_assert!(r.eps_boundary(lo).is_subset_of(&r.eps_boundary(hi)));
        prop_assert!(r.eps_boundary(hi).is_subset_of(&r));
        prop_assert_eq!(r.eps_boundary_measure(0.0), 0.0);
    }

    #[test]
    fn measure_counts_cells(bs in boxes(), k in 5u32..9) {
        let eta = 2f64.powi(-(k as i32));
        let r = union(&unit(eta), &bs);
        prop_assert_eq!(r.measure(), r.count() as f64 * eta * eta);
    }

    #[test]
    fn raster_area_is_within_perimeter_slack(x in 0.3..0.7f64, y in 0.3..0.7f64, rad in 0.05..0.3f64,
                                             w in 0.05..0.9f64, h in 0.05..0.9f64, k in 6u32..11) {
        let eta = 2f64.powi(-(k as i32));
        let g = unit(eta);
        let disc = Region::ball(g.clone(), &[x, y, 0.0], rad);
        let inside = rad.min(x).min(y).min(1.0 - x).min(1.0 - y) == rad;
        if inside {
            prop_assert!((disc.measure() - PI * rad * rad).abs() <= 4.0 * 2.0 * PI * rad * eta);
        }
        let b = Region::open_box(g, &[0.05, 0.05], &[0.05 + w * 0.9, 0.05 + h * 0.9]);
        let (bw, bh) = (w * 0.9, h * 0.9);
        prop_assert!((b.measure() - bw * bh).abs() <= 4.0 * 2.0 * (bw + bh) * eta);
    }

    #[test]
    fn iteration_conserves_weight(map in 0usize..4, n in 1usize..5, seed_box in boxes(), w in 0.1..3.0f64) {
        let name = catalog::NAMES[map];
        let spec = catalog::spec(name).unwrap();
        let m = spec.build(if name == "M0" || name == "M3" { 1.0 / 1024.0 } else { 1.0 / 64.0 }).unwrap();
        let dom = if m.dim() == 1 {
            let b = seed_box[0];
            Region::open_box(m.grid().clone(), &[b[0]], &[b[2]])
        } else {
            union(m.grid(), &seed_box[..1]).intersect(m.space())
        };
        prop_assume!(dom.count() >= 8);
        // M2 pieces rarely coalesce, so its family explodes past two steps
        let n = if name == "M2" { n.min(2) } else { n };
        let pair = StandardPair::from_fn(dom, |p| 1.0 + 0.5 * p[0]).unwrap();
        let fam = StandardFamily::single(pair, w).unwrap();
        let eps0 = m.constants().eps0();
        let out = iterate(&m, &fam, n, &IterateOptions::new(eps0)).unwrap();
        prop_assert!((out.total_weight() - w).abs() <= 1e-9 * w, "{} vs {}", out.total_weight(), w);
        prop_assert!(out.pairs.iter().all(|p| p.domain.diameter() <= eps0 + 1e-12 || p.domain.count() < 8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transfer_conserves_mass(map in 0usize..4, n in 1usize..7, a in 0.0..2.0f64) {
        let name = catalog::NAMES[map];
        let m = catalog::spec(name).unwrap().build(if name == "M0" || name == "M3" { 1.0 / 512.0 } else { 1.0 / 32.0 }).unwrap();
        let f = RasterDensity::from_fn(m.space().clone(), |p| 1.0 + a * p[0]).unwrap();
        // M2 images overlap, so its n-step preimage tree is walked in
        // chunks of at most three steps
        let chunk = if name == "M2" { 3 } else { n };
        let mut g = f.clone();
        let mut left = n;
        while left > 0 {
            let k = left.min(chunk);
            g = transfer_apply(&m, &g, k).unwrap();
            left -= k;
        }
        let slack = m.space().raster_slack() * (1.0 + a);
        prop_assert!((g.integral() - f.integral()).abs() <= slack, "{} vs {}", g.integral(), f.integral());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adjusting_times_keeps_gcd_and_spreads_them(
        raw in prop::collection::btree_set(1usize..30, 2..5), c1 in 0.0..40.0f64, c2 in 0.0..40.0f64
    ) {
        let times: Vec<usize> = raw.into_iter().collect();
        prop_assume!(gcd_all(&times) == 1);
        let g = Arc::new(Grid::new(&[0.0], &[1.0], 1.0 / 64.0).unwrap());
        let its = times.iter().map(|&n| vec![0; n]).collect();
        let spec = RecurrenceSpec::new(Region::full(g), times.clone(), its).unwrap();
        let a = adjust_times(&spec, c1, c2);
        prop_assert_eq!(gcd_all(&a.times), 1);
        prop_assert_eq!(a.times.len(), times.len());
        prop_assert!(a.times[0] as f64 >= c1);
        prop_assert!(a.times.windows(2).all(|w| w[1] > w[0] && (w[1] - w[0]) as f64 >= c2));
        prop_assert!(a.itineraries.iter().zip(&a.times).all(|(it, n)| it.len() == *n));
    }
}
