use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// A point of the ambient space; coordinates beyond the grid dimension are 0.
pub type Point = [f64; MAX_DIM];

/// Integer cell coordinates; unused axes are 0.
pub type Cell = [usize; MAX_DIM];

/// Uniform grid of cubes of side `eta` covering an axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: Point,
    eta: f64,
    shape: Cell,
}

impl Grid {
    /// Grid on the box `[lo, hi]`; every side length must be a multiple of `eta`.
    pub fn new(lo: &[f64], hi: &[f64], eta: f64) -> Result<Grid> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..={MAX_DIM}")));
        }
        if hi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: hi.len() });
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {eta} must be positive")));
        }
        let mut origin = [0.0; MAX_DIM];
        let mut shape = [1; MAX_DIM];
        for i in 0..dim {
            let len = hi[i] - lo[i];
            let n = (len / eta).round();
            if !(len > 0.0) || (n * eta - len).abs() > 1e-9 * len.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "side {len} of axis {i} is not a positive multiple of {eta}"
                )));
            }
            origin[i] = lo[i];
            shape[i] = n as usize;
        }
        Ok(Grid { dim, origin, eta, shape })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn shape(&self) -> Cell {
        self.shape
    }

    pub fn total_cells(&self) -> usize {
        self.shape.iter().product()
    }

    /// Lebesgue measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.eta.powi(self.dim as i32)
    }

    /// Extra length added to center-to-center distances when measuring diameters.
    pub fn diameter_pad(&self) -> f64 {
        self.eta * (self.dim as f64).sqrt()
    }

    pub fn upper(&self) -> Point {
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            p[i] = self.origin[i] + self.shape[i] as f64 * self.eta;
        }
        p
    }

    pub fn center(&self, c: &Cell) -> Point {
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            p[i] = self.origin[i] + (c[i] as f64 + 0.5) * self.eta;
        }
        p
    }

    /// Cell containing `p` (half-open cells), or `None` outside the grid box.
    #[inline]
    pub fn cell_of(&self, p: &Point) -> Option<Cell> {
        let mut c = [0; MAX_DIM];
        for i in 0..self.dim {
            let t = ((p[i] - self.origin[i]) / self.eta).floor();
            if !(t >= 0.0) || t >= self.shape[i] as f64 {
                return None;
            }
            c[i] = t as usize;
        }
        Some(c)
    }

    /// Continuous coordinate of `p` in cell units along axis `i`.
    #[inline]
    pub fn coord(&self, p: &Point, i: usize) -> f64 {
        (p[i] - self.origin[i]) / self.eta
    }

    /// Smallest cell box containing the centers of all cells that meet the
    /// closed coordinate box `[lo, hi]`, clipped to the grid.
    pub fn cells_meeting(&self, lo: &Point, hi: &Point) -> Option<CellBox> {
        let mut b = CellBox::unit();
        for i in 0..self.dim {
            let a = ((lo[i] - self.origin[i]) / self.eta).floor().max(0.0);
            let z = ((hi[i] - self.origin[i]) / self.eta).floor() + 1.0;
            let z = z.min(self.shape[i] as f64);
            if !(a < z) {
                return None;
            }
            b.lo[i] = a as usize;
            b.hi[i] = z as usize;
        }
        Some(b)
    }

    pub fn full_box(&self) -> CellBox {
        let mut b = CellBox::unit();
        b.hi[..self.dim].copy_from_slice(&self.shape[..self.dim]);
        b
    }
}

/// Half-open box of cells `lo[i] <= c[i] < hi[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellBox {
    pub lo: Cell,
    pub hi: Cell,
}

impl CellBox {
    pub fn unit() -> CellBox {
        CellBox { lo: [0; MAX_DIM], hi: [1; MAX_DIM] }
    }

    pub fn extent(&self) -> Cell {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }

    pub fn len(&self) -> usize {
        self.extent().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        (0..MAX_DIM).any(|i| self.hi[i] <= self.lo[i])
    }

    #[inline]
    pub fn contains(&self, c: &Cell) -> bool {
        (0..MAX_DIM).all(|i| c[i] >= self.lo[i] && c[i] < self.hi[i])
    }

    pub fn intersect(&self, o: &CellBox) -> Option<CellBox> {
        let mut b = *self;
        for i in 0..MAX_DIM {
            b.lo[i] = self.lo[i].max(o.lo[i]);
            b.hi[i] = self.hi[i].min(o.hi[i]);
            if b.hi[i] <= b.lo[i] {
                return None;
            }
        }
        Some(b)
    }

    pub fn hull(&self, o: &CellBox) -> CellBox {
        let mut b = *self;
        for i in 0..MAX_DIM {
            b.lo[i] = self.lo[i].min(o.lo[i]);
            b.hi[i] = self.hi[i].max(o.hi[i]);
        }
        b
    }

    /// Linear index of `c` inside the box, axis 0 fastest.
    #[inline]
    pub fn index(&self, c: &Cell) -> usize {
        let e = self.extent();
        (c[0] - self.lo[0]) + e[0] * ((c[1] - self.lo[1]) + e[1] * (c[2] - self.lo[2]))
    }

    #[inline]
    pub fn cell(&self, mut k: usize) -> Cell {
        let e = self.extent();
        let c0 = k % e[0];
        k /= e[0];
        let c1 = k % e[1];
        let c2 = k / e[1];
        [c0 + self.lo[0], c1 + self.lo[1], c2 + self.lo[2]]
    }

    pub fn iter(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |k| self.cell(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup_round_trips_through_centers() {
        let g = Grid::new(&[0.0, -1.0], &[1.0, 1.0], 0.125).unwrap();
        assert_eq!(g.shape(), [8, 16, 1]);
        for c in g.full_box().iter() {
            assert_eq!(g.cell_of(&g.center(&c)), Some(c));
        }
        assert_eq!(g.cell_of(&[1.0, 0.0, 0.0]), None);
        assert_eq!(g.cell_of(&[0.0, -1.0, 0.0]), Some([0, 0, 0]));
    }

    #[test]
    fn rejects_non_multiple_sides() {
        assert!(Grid::new(&[0.0], &[1.0], 0.3).is_err());
        assert!(Grid::new(&[0.0], &[1.0], -1.0).is_err());
        assert!(Grid::new(&[0.0; 4], &[1.0; 4], 0.5).is_err());
    }

    #[test]
    fn box_index_is_a_bijection() {
        let b = CellBox { lo: [2, 3, 0], hi: [5, 7, 2] };
        for k in 0..b.len() {
            assert_eq!(b.index(&b.cell(k)), k);
        }
    }
}
