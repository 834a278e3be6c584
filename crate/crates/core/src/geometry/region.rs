use std::fmt;
use std::sync::{Arc, OnceLock};

use super::edt::squared_edt;
use super::grid::{Cell, CellBox, Grid, Point, MAX_DIM};
use super::hull::max_pairwise_distance;
use crate::error::{Error, Result};

/// A finite union of grid cells: a cell belongs to the region iff its center
/// belongs to the underlying open set. Stored as a bitmask over its tight
/// bounding box; the distance transform is computed lazily and cached.
#[derive(Clone)]
pub struct Region {
    grid: Arc<Grid>,
    bbox: CellBox,
    mask: Vec<bool>,
    count: usize,
    depth: OnceLock<Arc<Vec<f64>>>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region").field("bbox", &self.bbox).field("cells", &self.count).finish()
    }
}

impl PartialEq for Region {
    fn eq(&self, o: &Region) -> bool {
        self.count == o.count && (self.count == 0 || (self.bbox == o.bbox && self.mask == o.mask))
    }
}

impl Region {
    /// Builds a region from a mask over `bbox`, cropping to the tight box.
    pub fn from_mask(grid: Arc<Grid>, bbox: CellBox, mask: Vec<bool>) -> Region {
        debug_assert_eq!(mask.len(), bbox.len());
        let dim = grid.dim();
        let mut lo = [usize::MAX; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        let mut count = 0;
        for (k, &m) in mask.iter().enumerate() {
            if m {
                count += 1;
                let c = bbox.cell(k);
                for i in 0..dim {
                    lo[i] = lo[i].min(c[i]);
                    hi[i] = hi[i].max(c[i] + 1);
                }
            }
        }
        if count == 0 {
            return Region::empty(grid);
        }
        for i in dim..MAX_DIM {
            lo[i] = 0;
            hi[i] = 1;
        }
        let tight = CellBox { lo, hi };
        if tight == bbox {
            return Region { grid, bbox, mask, count, depth: OnceLock::new() };
        }
        let mut packed = vec![false; tight.len()];
        for (k, p) in packed.iter_mut().enumerate() {
            *p = mask[bbox.index(&tight.cell(k))];
        }
        Region { grid, bbox: tight, mask: packed, count, depth: OnceLock::new() }
    }

    pub fn empty(grid: Arc<Grid>) -> Region {
        let bbox = CellBox { lo: [0; MAX_DIM], hi: [0; MAX_DIM] };
        Region { grid, bbox, mask: Vec::new(), count: 0, depth: OnceLock::new() }
    }

    pub fn full(grid: Arc<Grid>) -> Region {
        let bbox = grid.full_box();
        let mask = vec![true; bbox.len()];
        let count = mask.len();
        Region { grid, bbox, mask, count, depth: OnceLock::new() }
    }

    /// Cells of `bbox` whose center satisfies `f`.
    pub fn from_fn(grid: Arc<Grid>, bbox: CellBox, mut f: impl FnMut(&Cell, &Point) -> bool) -> Region {
        let mask = bbox.iter().map(|c| f(&c, &grid.center(&c))).collect();
        Region::from_mask(grid, bbox, mask)
    }

    /// Cells whose centers satisfy the point predicate anywhere on the grid.
    pub fn from_predicate(grid: Arc<Grid>, f: impl Fn(&Point) -> bool) -> Region {
        let bbox = grid.full_box();
        Region::from_fn(grid, bbox, |_, p| f(p))
    }

    pub fn from_cells(grid: Arc<Grid>, cells: &[Cell]) -> Region {
        if cells.is_empty() {
            return Region::empty(grid);
        }
        let mut bbox = CellBox { lo: cells[0], hi: cells[0].map(|x| x + 1) };
        for c in cells {
            bbox = bbox.hull(&CellBox { lo: *c, hi: c.map(|x| x + 1) });
        }
        let mut mask = vec![false; bbox.len()];
        for c in cells {
            mask[bbox.index(c)] = true;
        }
        Region::from_mask(grid, bbox, mask)
    }

    /// Cells whose centers lie in the open coordinate box `(lo, hi)`.
    pub fn open_box(grid: Arc<Grid>, lo: &[f64], hi: &[f64]) -> Region {
        let dim = grid.dim();
        let mut a = [0.0; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        a[..dim].copy_from_slice(&lo[..dim]);
        b[..dim].copy_from_slice(&hi[..dim]);
        let Some(bbox) = grid.cells_meeting(&a, &b) else {
            return Region::empty(grid);
        };
        Region::from_fn(grid, bbox, |_, p| (0..dim).all(|i| p[i] > a[i] && p[i] < b[i]))
    }

    /// Cells whose centers lie in the open ball `B(x, r)`.
    pub fn ball(grid: Arc<Grid>, x: &Point, r: f64) -> Region {
        let dim = grid.dim();
        let mut a = *x;
        let mut b = *x;
        for i in 0..dim {
            a[i] -= r;
            b[i] += r;
        }
        let Some(bbox) = grid.cells_meeting(&a, &b) else {
            return Region::empty(grid);
        };
        Region::from_fn(grid, bbox, |_, p| dist(p, x, dim) < r)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn bbox(&self) -> CellBox {
        self.bbox
    }

    /// Raw mask over the bounding box, axis 0 fastest.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn measure(&self) -> f64 {
        self.count as f64 * self.grid.cell_volume()
    }

    #[inline]
    pub fn contains_cell(&self, c: &Cell) -> bool {
        self.bbox.contains(c) && self.mask[self.bbox.index(c)]
    }

    #[inline]
    pub fn contains_point(&self, p: &Point) -> bool {
        match self.grid.cell_of(p) {
            Some(c) => self.contains_cell(&c),
            None => false,
        }
    }

    /// Local index of a member cell within the bounding box.
    #[inline]
    pub fn local_index(&self, c: &Cell) -> Option<usize> {
        if self.bbox.contains(c) {
            let k = self.bbox.index(c);
            if self.mask[k] {
                return Some(k);
            }
        }
        None
    }

    /// Cells of the region inside `b`.
    pub fn crop(&self, b: &CellBox) -> Region {
        let Some(ib) = self.bbox.intersect(b) else { return Region::empty(self.grid.clone()) };
        let mut mask = vec![false; ib.len()];
        let e = ib.extent();
        let mut k = 0;
        for z in ib.lo[2]..ib.hi[2] {
            for y in ib.lo[1]..ib.hi[1] {
                let start = self.bbox.index(&[ib.lo[0], y, z]);
                mask[k..k + e[0]].copy_from_slice(&self.mask[start..start + e[0]]);
                k += e[0];
            }
        }
        Region::from_mask(self.grid.clone(), ib, mask)
    }

    /// Member cells in storage order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(k, _)| self.bbox.cell(k))
    }

    /// Member cells paired with their local indices.
    pub fn indexed_cells(&self) -> impl Iterator<Item = (usize, Cell)> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(k, _)| (k, self.bbox.cell(k)))
    }

    /// Coordinate box spanned by the bounding box of cells.
    pub fn coord_box(&self) -> (Point, Point) {
        let g = &self.grid;
        let o = g.origin();
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for i in 0..g.dim() {
            lo[i] = o[i] + self.bbox.lo[i] as f64 * g.eta();
            hi[i] = o[i] + self.bbox.hi[i] as f64 * g.eta();
        }
        (lo, hi)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Cell) -> bool) -> Region {
        let mask = self
            .mask
            .iter()
            .enumerate()
            .map(|(k, &m)| m && keep(&self.bbox.cell(k)))
            .collect();
        Region::from_mask(self.grid.clone(), self.bbox, mask)
    }

    pub fn intersect(&self, o: &Region) -> Region {
        if self.is_empty() || o.is_empty() {
            return Region::empty(self.grid.clone());
        }
        match self.bbox.intersect(&o.bbox) {
            None => Region::empty(self.grid.clone()),
            Some(b) => {
                let mask = b.iter().map(|c| self.mask[self.bbox.index(&c)] && o.mask[o.bbox.index(&c)]).collect();
                Region::from_mask(self.grid.clone(), b, mask)
            }
        }
    }

    pub fn difference(&self, o: &Region) -> Region {
        if o.is_empty() || self.bbox.intersect(&o.bbox).is_none() {
            return self.clone_without_cache();
        }
        self.filter(|c| !o.contains_cell(c))
    }

    pub fn union(&self, o: &Region) -> Region {
        if self.is_empty() {
            return o.clone_without_cache();
        }
        if o.is_empty() {
            return self.clone_without_cache();
        }
        let b = self.bbox.hull(&o.bbox);
        let mask = b.iter().map(|c| self.contains_cell(&c) || o.contains_cell(&c)).collect();
        Region::from_mask(self.grid.clone(), b, mask)
    }

    pub fn is_subset_of(&self, o: &Region) -> bool {
        self.cells().all(|c| o.contains_cell(&c))
    }

    fn clone_without_cache(&self) -> Region {
        Region {
            grid: self.grid.clone(),
            bbox: self.bbox,
            mask: self.mask.clone(),
            count: self.count,
            depth: OnceLock::new(),
        }
    }

    /// Depth of every cell of the bounding box: distance from its center to
    /// the nearest complement cell center minus half a cell, so that the
    /// collar `depth < eps` approximates `{x : d(x, boundary) < eps}`. Cells
    /// outside the grid count as complement. Entries for non-members are 0.
    pub fn depths(&self) -> &[f64] {
        self.depth.get_or_init(|| Arc::new(self.compute_depths()))
    }

    fn compute_depths(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        let dim = self.grid.dim();
        let e = self.bbox.extent();
        let mut pe = [1; MAX_DIM];
        for i in 0..dim {
            pe[i] = e[i] + 2;
        }
        let mut seed = vec![true; pe.iter().product()];
        let off = |c: &Cell| -> usize {
            let mut q = [0; MAX_DIM];
            for i in 0..MAX_DIM {
                q[i] = c[i] - self.bbox.lo[i] + usize::from(i < dim);
            }
            q[0] + pe[0] * (q[1] + pe[1] * q[2])
        };
        for (_, c) in self.indexed_cells() {
            seed[off(&c)] = false;
        }
        let sq = squared_edt(&seed, pe, dim);
        let eta = self.grid.eta();
        let mut out = vec![0.0; self.mask.len()];
        for (k, c) in self.indexed_cells() {
            out[k] = sq[off(&c)].sqrt() * eta - 0.5 * eta;
        }
        out
    }

    pub fn depth_of(&self, c: &Cell) -> Option<f64> {
        self.local_index(c).map(|k| self.depths()[k])
    }

    /// The inner collar `{x in A : d(x, boundary A) < eps}`.
    pub fn eps_boundary(&self, eps: f64) -> Region {
        let d = self.depths();
        let mask = self.mask.iter().zip(d).map(|(&m, &x)| m && x < eps).collect();
        Region::from_mask(self.grid.clone(), self.bbox, mask)
    }

    pub fn eps_boundary_count(&self, eps: f64) -> usize {
        let d = self.depths();
        self.mask.iter().zip(d).filter(|(&m, &x)| m && x < eps).count()
    }

    pub fn eps_boundary_measure(&self, eps: f64) -> f64 {
        self.eps_boundary_count(eps) as f64 * self.grid.cell_volume()
    }

    /// Deepest member cell; ties are broken toward the lexicographically
    /// smallest cell coordinates.
    pub fn deepest_cell(&self) -> Option<(Cell, f64)> {
        let d = self.depths();
        let mut best: Option<(Cell, f64)> = None;
        for (k, c) in self.indexed_cells() {
            let better = match &best {
                None => true,
                Some((bc, bd)) => d[k] > *bd || (d[k] == *bd && c < *bc),
            };
            if better {
                best = Some((c, d[k]));
            }
        }
        best
    }

    /// A witness cell at depth at least `delta`, if the region is
    /// `delta`-regular.
    pub fn regular_witness(&self, delta: f64) -> Option<Cell> {
        self.deepest_cell().filter(|(_, d)| *d >= delta).map(|(c, _)| c)
    }

    pub fn is_delta_regular(&self, delta: f64) -> bool {
        self.regular_witness(delta).is_some()
    }

    /// Member cells with at least one face neighbour outside the region.
    pub fn boundary_cells(&self) -> Vec<Cell> {
        let dim = self.grid.dim();
        self.cells()
            .filter(|c| {
                (0..dim).any(|i| {
                    let mut a = *c;
                    let mut b = *c;
                    b[i] += 1;
                    let left_out = c[i] == 0 || {
                        a[i] -= 1;
                        !self.contains_cell(&a)
                    };
                    left_out || !self.contains_cell(&b)
                })
            })
            .collect()
    }

    /// Measure error budget of rasterized collar estimates: four cell volumes
    /// per boundary cell.
    pub fn raster_slack(&self) -> f64 {
        4.0 * self.boundary_cells().len() as f64 * self.grid.cell_volume()
    }

    /// Largest center-to-center distance plus one cell diagonal.
    pub fn diameter(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let pts: Vec<Point> = self.boundary_cells().iter().map(|c| self.grid.center(c)).collect();
        max_pairwise_distance(&pts, self.grid.dim()) + self.grid.diameter_pad()
    }

    /// Run-length encoding of the mask over the bounding box, alternating
    /// runs starting with a run of non-members.
    pub fn to_rle(&self) -> String {
        let dim = self.grid.dim();
        let join = |v: &[usize]| v[..dim].iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut runs = Vec::new();
        let mut cur = false;
        let mut len = 0usize;
        for &m in &self.mask {
            if m == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = m;
                len = 1;
            }
        }
        runs.push(len);
        let runs: Vec<String> = runs.iter().map(|x| x.to_string()).collect();
        format!("{};{};{}", join(&self.bbox.lo), join(&self.bbox.hi), runs.join(","))
    }

    pub fn from_rle(grid: Arc<Grid>, s: &str) -> Result<Region> {
        let bad = |m: &str| Error::Schema(format!("bad region encoding '{s}': {m}"));
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo;hi;runs"));
        }
        let nums = |p: &str| -> Result<Vec<usize>> {
            if p.is_empty() {
                return Ok(Vec::new());
            }
            p.split(',').map(|x| x.parse::<usize>().map_err(|e| bad(&e.to_string()))).collect()
        };
        let (lo, hi, runs) = (nums(parts[0])?, nums(parts[1])?, nums(parts[2])?);
        let dim = grid.dim();
        if lo.len() != dim || hi.len() != dim {
            return Err(bad("corner dimension mismatch"));
        }
        let mut bbox = CellBox::unit();
        for i in 0..dim {
            bbox.lo[i] = lo[i];
            bbox.hi[i] = hi[i];
        }
        let empty = (0..dim).all(|i| hi[i] == 0 && lo[i] == 0);
        if empty {
            return Ok(Region::empty(grid));
        }
        if (0..dim).any(|i| hi[i] <= lo[i] || hi[i] > grid.shape()[i]) {
            return Err(bad("corner outside the grid"));
        }
        let mut mask = Vec::with_capacity(bbox.len());
        for (j, &r) in runs.iter().enumerate() {
            mask.extend(std::iter::repeat(j % 2 == 1).take(r));
        }
        if mask.len() != bbox.len() {
            return Err(bad("run lengths do not cover the box"));
        }
        Ok(Region::from_mask(grid, bbox, mask))
    }
}

#[inline]
pub fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    (0..dim).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(eta: f64) -> Arc<Grid> {
        Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], eta).unwrap())
    }

    #[test]
    fn unit_square_collar_is_exact_on_aligned_grid() {
        let r = Region::full(grid2(1.0 / 64.0));
        let c = r.eps_boundary_measure(0.125);
        assert!((c - (1.0 - 0.75f64.powi(2))).abs() < 1e-12, "{c}");
        let fine = Region::full(grid2(1.0 / 256.0));
        assert!((fine.eps_boundary_measure(0.1) - 0.36).abs() < 0.01);
    }

    #[test]
    fn depth_is_distance_to_complement_minus_half_cell() {
        let g = Arc::new(Grid::new(&[0.0], &[1.0], 0.1).unwrap());
        let r = Region::open_box(g, &[0.2], &[0.7]);
        assert_eq!(r.count(), 5);
        let d: Vec<f64> = r.cells().map(|c| r.depth_of(&c).unwrap()).collect();
        let want = [0.05, 0.15, 0.25, 0.15, 0.05];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.is_delta_regular(0.25));
        assert!(!r.is_delta_regular(0.26));
    }

    #[test]
    fn diameter_of_square_and_disc() {
        let g = grid2(1.0 / 128.0);
        let sq = Region::open_box(g.clone(), &[0.25, 0.25], &[0.75, 0.75]);
        assert!((sq.diameter() - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        let disc = Region::ball(g, &[0.5, 0.5, 0.0], 0.3);
        assert!((disc.diameter() - 0.6).abs() < 2.0 * 2f64.sqrt() / 128.0);
    }

    #[test]
    fn set_operations_and_rle_round_trip() {
        let g = grid2(1.0 / 32.0);
        let a = Region::ball(g.clone(), &[0.4, 0.5, 0.0], 0.25);
        let b = Region::open_box(g.clone(), &[0.3, 0.0], &[1.0, 0.6]);
        let i = a.intersect(&b);
        let u = a.union(&b);
        let d = a.difference(&b);
        assert_eq!(i.count() + d.count(), a.count());
        assert_eq!(u.count(), a.count() + b.count() - i.count());
        for r in [&a, &i, &u, &d, &Region::empty(g.clone())] {
            assert_eq!(&Region::from_rle(g.clone(), &r.to_rle()).unwrap(), r);
        }
    }
}
