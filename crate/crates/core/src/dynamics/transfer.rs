use super::map::PiecewiseMap;
use crate::error::{Error, Result};
use crate::geometry::{Point, Region, MAX_DIM};

/// A non-negative function given by one value per cell of its support.
#[derive(Clone, Debug)]
pub struct RasterDensity {
    pub support: Region,
    /// Values over the support's bounding box (zero off the support).
    pub values: Vec<f64>,
}

impl RasterDensity {
    pub fn new(support: Region, values: Vec<f64>) -> Result<RasterDensity> {
        if values.len() != support.bbox().len() {
            return Err(Error::Precondition("density values must cover the support's box".into()));
        }
        for (k, _) in support.indexed_cells() {
            if !(values[k] > 0.0) || !values[k].is_finite() {
                return Err(Error::Precondition(format!("density must be positive on its support, got {}", values[k])));
            }
        }
        Ok(RasterDensity { support, values })
    }

    /// Density given by `f` at cell centers.
    pub fn from_fn(support: Region, f: impl Fn(&Point) -> f64) -> Result<RasterDensity> {
        let g = support.grid().clone();
        let mut values = vec![0.0; support.bbox().len()];
        for (k, c) in support.indexed_cells() {
            values[k] = f(&g.center(&c));
        }
        RasterDensity::new(support, values)
    }

    #[inline]
    pub fn value_at(&self, p: &Point) -> f64 {
        match self.support.grid().cell_of(p).and_then(|c| self.support.local_index(&c)) {
            Some(k) => self.values[k],
            None => 0.0,
        }
    }

    pub fn integral(&self) -> f64 {
        let v = self.support.grid().cell_volume();
        self.support.indexed_cells().map(|(k, _)| self.values[k]).sum::<f64>() * v
    }
}

/// `L^n f(y) = sum_h f(h y) Jh(y) 1_{T^n O_h}(y)`, evaluated at every cell
/// center by walking the inverse branches of the `n`-th iterate.
pub fn transfer_apply(map: &PiecewiseMap, f: &RasterDensity, n: usize) -> Result<RasterDensity> {
    let g = map.grid().clone();
    if f.support.is_empty() {
        return Err(Error::EmptyRegion("transfer of a density with empty support".into()));
    }
    // boxes[k] covers T^k(supp f), one box per branch image until there
    // are too many to be worth keeping apart
    const BOX_CAP: usize = 512;
    let d = g.dim();
    let mut boxes: Vec<Vec<(Point, Point)>> = vec![block_cover(&f.support, 256)];
    for _ in 0..n {
        let mut next = Vec::new();
        for (lo, hi) in boxes.last().unwrap() {
            for b in 0..map.branches().len() {
                if let Some(bx) = map.forward_box(b, lo, hi) {
                    next.push(bx);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::EmptyRegion("transfer image is empty".into()));
        }
        if next.len() > BOX_CAP {
            next = vec![hull(&next, d)];
        }
        boxes.push(next);
    }
    let (lo, hi) = hull(&boxes[n], d);
    let bbox = g.cells_meeting(&lo, &hi).ok_or_else(|| Error::EmptyRegion("transfer image is empty".into()))?;
    let mut values = vec![0.0; bbox.len()];
    for (k, c) in bbox.iter().enumerate() {
        let y = g.center(&c);
        if map.space().contains_point(&y) && inside_any(&boxes[n], &y, d) {
            values[k] = pull(map, f, &boxes, &y, n, 1.0);
        }
    }
    let mask: Vec<bool> = values.iter().map(|&v| v > 0.0).collect();
    let support = Region::from_mask(g.clone(), bbox, mask);
    let mut packed = vec![0.0; support.bbox().len()];
    for (k, c) in support.indexed_cells() {
        packed[k] = values[bbox.index(&c)];
    }
    RasterDensity::new(support, packed)
}

/// Boxes of a coarse block grid (at most about `blocks` of them over the
/// bounding box) that meet the region.
fn block_cover(r: &Region, blocks: usize) -> Vec<(Point, Point)> {
    let g = r.grid();
    let d = g.dim();
    let bb = r.bbox();
    let ext = bb.extent();
    let per = ((bb.len() as f64 / blocks as f64).powf(1.0 / d as f64).ceil() as usize).max(1);
    let mut seen = std::collections::BTreeSet::new();
    for c in r.cells() {
        let mut key = [0usize; MAX_DIM];
        for i in 0..d {
            key[i] = (c[i] - bb.lo[i]) / per;
        }
        seen.insert(key);
    }
    let eta = g.eta();
    let origin = g.origin();
    seen.into_iter()
        .map(|key| {
            let mut lo = [0.0; MAX_DIM];
            let mut hi = [0.0; MAX_DIM];
            for i in 0..d {
                let a = bb.lo[i] + key[i] * per;
                let z = (a + per).min(bb.lo[i] + ext[i]);
                lo[i] = origin[i] + a as f64 * eta;
                hi[i] = origin[i] + z as f64 * eta;
            }
            (lo, hi)
        })
        .collect()
}

fn hull(boxes: &[(Point, Point)], d: usize) -> (Point, Point) {
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for (l, h) in boxes {
        for i in 0..d {
            lo[i] = lo[i].min(l[i]);
            hi[i] = hi[i].max(h[i]);
        }
    }
    (lo, hi)
}

fn inside_any(boxes: &[(Point, Point)], x: &Point, d: usize) -> bool {
    boxes.iter().any(|(lo, hi)| (0..d).all(|i| x[i] >= lo[i] && x[i] <= hi[i]))
}

fn pull(map: &PiecewiseMap, f: &RasterDensity, boxes: &[Vec<(Point, Point)>], z: &Point, k: usize, jac: f64) -> f64 {
    if k == 0 {
        return f.value_at(z) * jac;
    }
    let d = map.dim();
    let mut total = 0.0;
    for b in 0..map.branches().len() {
        if let Some((x, j)) = map.inverse(b, z) {
            if inside_any(&boxes[k - 1], &x, d) {
                total += pull(map, f, boxes, &x, k - 1, jac * j);
            }
        }
    }
    total
}
