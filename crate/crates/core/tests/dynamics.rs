use std::collections::BTreeMap;

use inducer::dynamics::{catalog, estimate_complexity, transfer_apply, verify_distortion, verify_expansion, RasterDensity};
use inducer::geometry::Region;
use inducer::Error;

fn doubling(eta: f64) -> inducer::dynamics::PiecewiseMap {
    catalog::spec("M0").unwrap().build(eta).unwrap()
}

#[test]
fn composed_cylinders_match_forward_simulation() {
    for (name, eta, n) in [("M0", 1.0 / 256.0, 3), ("M2", 1.0 / 64.0, 2), ("M3", 1.0 / 512.0, 3)] {
        let m = catalog::spec(name).unwrap().build(eta).unwrap();
        let g = m.grid().clone();
        // oracle: follow every cell center forward and group by itinerary
        let mut groups: BTreeMap<Vec<usize>, Vec<[usize; 3]>> = BTreeMap::new();
        for c in m.space().cells() {
            let mut p = g.center(&c);
            let mut itin = Vec::new();
            for _ in 0..n {
                match m.forward(&p) {
                    Some((b, q)) => {
                        itin.push(b);
                        p = q;
                    }
                    None => break,
                }
            }
            if itin.len() == n {
                groups.entry(itin).or_default().push(c);
            }
        }
        let composed = m.compose_branches(n, 100_000).unwrap();
        assert_eq!(composed.len(), groups.len(), "{name}");
        for cb in composed {
            let want = Region::from_cells(g.clone(), &groups[&cb.itinerary]);
            assert_eq!(cb.domain, want, "{name} {:?}", cb.itinerary);
        }
    }
    assert_eq!(doubling(1.0 / 256.0).compose_branches(2, 1000).unwrap().len(), 4);
    assert!(matches!(doubling(1.0 / 256.0).compose_branches(6, 10), Err(Error::BranchExplosion { .. })));
}

#[test]
fn sampled_expansion_and_distortion_constants() {
    let m0 = doubling(1.0 / 1024.0);
    let e = verify_expansion(&m0, 2000, 1).unwrap();
    assert!((e.max - 0.5).abs() < 1e-9, "{e:?}");
    let m3 = catalog::spec("M3").unwrap().build(1.0 / 1024.0).unwrap();
    let e = verify_expansion(&m3, 20000, 2).unwrap();
    // sup |h'| = 0.55 at the right end of both images
    assert!(e.max <= 0.55 + 1e-12 && e.max > 0.55 - 1e-3, "{e:?}");
    let d = verify_distortion(&m3, 20000, 3).unwrap();
    // sup |d/dy ln(0.45 + 0.1 y)| = 0.1 / 0.45
    assert!(d.max <= 0.1 / 0.45 + 1e-9 && d.max > 0.1 / 0.45 - 1e-3, "{d:?}");
    let m2 = catalog::spec("M2").unwrap().build(1.0 / 128.0).unwrap();
    let e = verify_expansion(&m2, 500, 4).unwrap();
    assert!(e.max <= m2.constants().lambda, "{e:?}");
}

#[test]
fn nonpositive_jacobian_is_reported() {
    let text = catalog::spec("M0").unwrap().text().replacen("jacobian = \"0.5\"", "jacobian = \"0.5 - x\"", 1);
    let m = inducer::dynamics::MapSpec::parse(&text).unwrap().build(1.0 / 64.0).unwrap();
    assert!(matches!(verify_distortion(&m, 2000, 0), Err(Error::NonsingularViolation { branch: 0, .. })));
}

/// Exact interval computation of the complexity ratio for the doubling map
/// with `n0 = 2` on `I = (a, b)`.
fn doubling_complexity_oracle(a: f64, b: f64, eps: f64) -> f64 {
    let inner = eps / 4.0;
    let collar_i = |x: f64| x < a + inner || x > b - inner;
    let mut excess = 0.0;
    let mut collars: Vec<(f64, f64)> = Vec::new();
    for k in 0..4 {
        let (u, v) = (a.max(k as f64 / 4.0), b.min((k + 1) as f64 / 4.0));
        if u >= v {
            continue;
        }
        // T^2 is affine with slope 4: collars of the image pull back to
        // collars of width eps/4 at both ends of (u, v)
        let w = inner.min(v - u);
        collars.push((u, u + w));
        collars.push((v - w, v));
    }
    // measure of the union of collars minus the collar of I, by fine quadrature
    let steps = 400_000;
    for s in 0..steps {
        let x = a + (b - a) * (s as f64 + 0.5) / steps as f64;
        if !collar_i(x) && collars.iter().any(|&(l, r)| x > l && x < r) {
            excess += (b - a) / steps as f64;
        }
    }
    excess / (2.0 * inner).min(b - a)
}

#[test]
fn doubling_complexity_matches_interval_oracle() {
    let eta = 1.0 / 4096.0;
    let m = doubling(eta);
    let g = m.grid().clone();
    for (a, b) in [(0.1, 0.22), (0.2, 0.3), (0.45, 0.6), (0.24, 0.27), (0.7, 0.76)] {
        let eps = 64.0 * eta;
        let region = Region::open_box(g.clone(), &[a], &[b]);
        let got = estimate_complexity(&m, &region, eps).unwrap();
        let want = doubling_complexity_oracle(a, b, eps);
        assert!((got - want).abs() <= 4.0 * eta / (eps / 2.0), "({a},{b}): {got} vs {want}");
        assert!(got <= m.constants().sigma + 1e-9);
    }
    // an interval inside one cylinder has no complexity at aligned scales
    let inside = Region::open_box(g.clone(), &[0.3], &[0.45]);
    assert_eq!(estimate_complexity(&m, &inside, 64.0 * eta).unwrap(), 0.0);
    assert!(matches!(
        estimate_complexity(&m, &inside, eta),
        Err(Error::EpsilonBelowResolution { .. })
    ));
}

#[test]
fn transfer_conserves_mass_and_matches_doubling_formula() {
    let m = doubling(1.0 / 1024.0);
    let g = m.grid().clone();
    let f = RasterDensity::from_fn(Region::full(g.clone()), |p| 1.0 + p[0]).unwrap();
    let lf = transfer_apply(&m, &f, 1).unwrap();
    // L f(y) = (f(y/2) + f((y+1)/2)) / 2 = 1.25 + y/2, up to the cell lookup of f
    for (k, c) in lf.support.indexed_cells() {
        let y = g.center(&c)[0];
        assert!((lf.values[k] - (1.25 + 0.5 * y)).abs() <= 0.5 / 1024.0);
    }
    for name in catalog::NAMES {
        let m = catalog::spec(name).unwrap().build(1.0 / 64.0).unwrap();
        let g = m.grid().clone();
        let lo = vec![0.2; m.dim()];
        let hi = vec![0.55; m.dim()];
        let f = RasterDensity::from_fn(Region::open_box(g.clone(), &lo, &hi), |p| 1.0 + p[0] * p[0]).unwrap();
        let lf = transfer_apply(&m, &f, 2).unwrap();
        let slack = f.support.raster_slack() * 4.0;
        assert!((lf.integral() - f.integral()).abs() <= slack, "{name}: {} vs {}", lf.integral(), f.integral());
    }
}
