use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::map::PiecewiseMap;
use crate::error::{Error, Result};
use crate::geometry::{dist, Cell, Point, Region, MAX_DIM};

/// Per-branch sampled constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub per_branch: Vec<(String, f64)>,
    /// Largest value over all sampled branches.
    pub max: f64,
    /// Branches whose image has fewer than two raster cells.
    pub skipped: Vec<String>,
}

struct PairSampler<'a> {
    map: &'a PiecewiseMap,
    rng: ChaCha8Rng,
}

impl PairSampler<'_> {
    fn image_cells(&self, b: usize) -> Vec<Cell> {
        let g = self.map.grid();
        self.map.space().cells().filter(|c| self.map.inverse(b, &g.center(c)).is_some()).collect()
    }

    /// A pair of image points at log-uniform separation in `(1e-6 r, r]`.
    fn pair(&mut self, b: usize, cells: &[Cell], r: f64) -> Option<(Point, Point)> {
        let g = self.map.grid().clone();
        let d = g.dim();
        for _ in 0..64 {
            let c = cells[self.rng.random_range(0..cells.len())];
            let mut x = g.center(&c);
            for i in 0..d {
                x[i] += (self.rng.random::<f64>() - 0.5) * 0.999 * g.eta();
            }
            let mut u = [0.0; MAX_DIM];
            let mut norm = 0.0;
            for i in 0..d {
                u[i] = self.rng.random::<f64>() * 2.0 - 1.0;
                norm += u[i] * u[i];
            }
            if !(norm > 1e-12) {
                continue;
            }
            let s = r * 10f64.powf(-6.0 * self.rng.random::<f64>()) / norm.sqrt();
            let mut y = x;
            for i in 0..d {
                y[i] += s * u[i];
            }
            if self.map.inverse(b, &x).is_some() && self.map.inverse(b, &y).is_some() {
                return Some((x, y));
            }
        }
        None
    }
}

fn sample_branches(
    map: &PiecewiseMap,
    samples: usize,
    seed: u64,
    mut stat: impl FnMut(usize, &Point, &Point) -> Result<f64>,
) -> Result<SampleReport> {
    let mut s = PairSampler { map, rng: ChaCha8Rng::seed_from_u64(seed) };
    let r = map.constants().eps_exp;
    let mut report = SampleReport { per_branch: Vec::new(), max: 0.0, skipped: Vec::new() };
    for (b, br) in map.branches().iter().enumerate() {
        let cells = s.image_cells(b);
        if cells.len() < 2 {
            report.skipped.push(br.name.clone());
            continue;
        }
        let mut best = 0.0f64;
        for _ in 0..samples {
            if let Some((x, y)) = s.pair(b, &cells, r) {
                best = best.max(stat(b, &x, &y)?);
            }
        }
        report.max = report.max.max(best);
        report.per_branch.push((br.name.clone(), best));
    }
    Ok(report)
}

/// Sampled supremum of `d(h x, h y) / d(x, y)` over nearby image points.
pub fn verify_expansion(map: &PiecewiseMap, samples: usize, seed: u64) -> Result<SampleReport> {
    let d = map.dim();
    sample_branches(map, samples, seed, |b, x, y| {
        let (hx, _) = map.inverse(b, x).expect("sampled inside the image");
        let (hy, _) = map.inverse(b, y).expect("sampled inside the image");
        Ok(dist(&hx, &hy, d) / dist(x, y, d))
    })
}

/// Sampled Hölder constant of `ln Jh` over nearby image points.
pub fn verify_distortion(map: &PiecewiseMap, samples: usize, seed: u64) -> Result<SampleReport> {
    let d = map.dim();
    let alpha = map.constants().alpha;
    sample_branches(map, samples, seed, |b, x, y| {
        let jx = map.branches()[b].jacobian.eval(x);
        let jy = map.branches()[b].jacobian.eval(y);
        for (p, j) in [(x, jx), (y, jy)] {
            if !(j > 0.0) {
                return Err(Error::NonsingularViolation { branch: b, value: j, point: p[..d].to_vec() });
            }
        }
        Ok((jx.ln() - jy.ln()).abs() / dist(x, y, d).powf(alpha))
    })
}

/// Measured complexity of `T^{n0}` on the region `I` at scale `eps`:
/// the part of the pulled-back image collars not already within
/// `lambda^{n0} eps` of the boundary of `I`, relative to that collar.
pub fn estimate_complexity(map: &PiecewiseMap, region: &Region, eps: f64) -> Result<f64> {
    let c = map.constants();
    let g = map.grid().clone();
    let d = map.dim();
    let inner = c.lambda.powi(c.n0 as i32) * eps;
    if inner < g.eta() {
        return Err(Error::EpsilonBelowResolution { eps: inner, eta: g.eta() });
    }
    if region.is_empty() {
        return Err(Error::EmptyRegion("complexity of an empty region".into()));
    }
    let depths = region.depths();
    let mut stack: Vec<(Vec<usize>, Vec<(Cell, Point)>)> = vec![(
        Vec::new(),
        region.cells().map(|x| (x, g.center(&x))).collect(),
    )];
    let mut excess = 0usize;
    while let Some((itin, cells)) = stack.pop() {
        if itin.len() == c.n0 {
            let a: Vec<Cell> = cells.iter().map(|(x, _)| *x).collect();
            let a = Region::from_cells(g.clone(), &a);
            let (mut lo, mut hi) = a.coord_box();
            for &b in &itin {
                match map.forward_box(b, &lo, &hi) {
                    Some((l, h)) => (lo, hi) = (l, h),
                    None => break,
                }
            }
            let Some(bbox) = g.cells_meeting(&lo, &hi) else { continue };
            let image = Region::from_fn(g.clone(), bbox, |_, y| {
                map.inverse_chain(&itin, y).is_some_and(|(x, _)| a.contains_point(&x))
            });
            let collar = image.eps_boundary(eps);
            for (x, fx) in &cells {
                if collar.contains_point(fx) && depths[region.bbox().index(x)] >= inner {
                    excess += 1;
                }
            }
            continue;
        }
        for b in 0..map.branches().len() {
            let next: Vec<_> = cells
                .iter()
                .filter(|(_, y)| map.in_domain(b, y))
                .map(|(x, y)| (*x, map.branches()[b].forward.apply(y, d)))
                .collect();
            if !next.is_empty() {
                let mut it = itin.clone();
                it.push(b);
                stack.push((it, next));
            }
        }
    }
    let denom = region.eps_boundary_count(inner);
    Ok(excess as f64 / denom as f64)
}

/// Outcome of a complexity sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    /// Largest measured complexity.
    pub sigma_hat: f64,
    pub instances: usize,
    /// Box `(lo, hi)` and scale of the worst instance.
    pub worst: Option<(Vec<f64>, Vec<f64>, f64)>,
}

/// Measures the complexity of `T^{n0}` on `boxes` open boxes of diameter at
/// most `eps_cplx` at every admissible dyadic scale. Every other box is
/// centred on a cell at the edge of a branch domain, so that cuts cross it.
pub fn complexity_sweep(map: &PiecewiseMap, boxes: usize, seed: u64) -> Result<SweepReport> {
    let c = map.constants();
    let g = map.grid().clone();
    let d = g.dim();
    let eta = g.eta();
    let max_side = (c.eps_cplx / (d as f64).sqrt()).min(64.0 * eta * (8.0f64).powf(1.0 / d as f64));
    let eps_min = eta / c.lambda.powi(c.n0 as i32);
    if max_side < 4.0 * eps_min {
        return Err(Error::EpsilonBelowResolution { eps: c.eps_cplx, eta });
    }
    let edges: Vec<Cell> = (0..map.branches().len())
        .flat_map(|b| {
            let dom = map.domain(b);
            dom.boundary_cells().into_iter().filter(|x| {
                let p = g.center(x);
                (0..d).any(|i| {
                    [-1.0, 1.0].iter().any(|s| {
                        let mut q = p;
                        q[i] += s * eta;
                        map.in_space(&q) && !dom.contains_point(&q)
                    })
                })
            })
        })
        .collect();
    let lo = g.origin();
    let hi = g.upper();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SweepReport { sigma_hat: 0.0, instances: 0, worst: None };
    for k in 0..boxes {
        let side = rng.random_range(4.0 * eps_min..=max_side);
        let center: Point = if k % 2 == 1 && !edges.is_empty() {
            g.center(&edges[rng.random_range(0..edges.len())])
        } else {
            let mut p = [0.0; MAX_DIM];
            for i in 0..d {
                p[i] = rng.random_range(lo[i]..hi[i]);
            }
            p
        };
        let bl: Vec<f64> = (0..d).map(|i| (center[i] - side / 2.0).max(lo[i])).collect();
        let bh: Vec<f64> = (0..d).map(|i| (center[i] + side / 2.0).min(hi[i])).collect();
        let region = Region::open_box(g.clone(), &bl, &bh).intersect(map.space());
        if region.count() < 4 {
            continue;
        }
        let mut eps = eps_min;
        while eps <= side / 2.0 {
            let s = estimate_complexity(map, &region, eps)?;
            report.instances += 1;
            if s > report.sigma_hat || report.worst.is_none() {
                report.sigma_hat = report.sigma_hat.max(s);
                report.worst = Some((bl.clone(), bh.clone(), eps));
            }
            eps *= 2.0;
        }
    }
    Ok(report)
}
