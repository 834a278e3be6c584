//! Rasterized geometry: grids, regions, collars, diameters, regularity and
//! the hyperplane collar inequality used by the complexity estimates.

mod edt;
mod grid;
mod hull;
mod region;

pub use grid::{Cell, CellBox, Grid, Point, MAX_DIM};
pub use hull::{convex_hull, max_pairwise_distance};
pub use region::{dist, Region};

use crate::error::{Error, Result};

/// Oriented hyperplane `{x : <n, x> = c}` with unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Point,
    offset: f64,
    dim: usize,
}

impl Hyperplane {
    pub fn new(normal: &[f64], offset: f64) -> Result<Hyperplane> {
        let dim = normal.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionMismatch { expected: MAX_DIM, got: dim });
        }
        let norm = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateHyperplane);
        }
        let mut n = [0.0; MAX_DIM];
        for i in 0..dim {
            n[i] = normal[i] / norm;
        }
        Ok(Hyperplane { normal: n, offset: offset / norm, dim })
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance; negative on the left side.
    #[inline]
    pub fn signed_distance(&self, p: &Point) -> f64 {
        (0..self.dim).map(|i| self.normal[i] * p[i]).sum::<f64>() - self.offset
    }
}

/// Both sides of the hyperplane collar inequality plus the raster slack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BtReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BtReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

/// Compares the part of the left half of `region` within `xi * eps` of the
/// hyperplane but deeper than `eps` with `xi` times the right-half collar of
/// width `eps`.
pub fn bt_check(region: &Region, plane: &Hyperplane, eps: f64, xi: f64) -> Result<BtReport> {
    if region.is_empty() {
        return Err(Error::EmptyRegion("collar inequality needs a non-empty region".into()));
    }
    if plane.dim != region.grid().dim() {
        return Err(Error::DimensionMismatch { expected: region.grid().dim(), got: plane.dim });
    }
    let g = region.grid().clone();
    let depth = region.depths();
    let (mut left, mut right) = (0usize, 0usize);
    for (k, c) in region.indexed_cells() {
        let s = plane.signed_distance(&g.center(&c));
        if s < 0.0 && -s <= xi * eps && depth[k] > eps {
            left += 1;
        } else if s > 0.0 && depth[k] <= eps {
            right += 1;
        }
    }
    let v = g.cell_volume();
    Ok(BtReport { lhs: left as f64 * v, rhs: xi * right as f64 * v, slack: (1.0 + xi) * region.raster_slack() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn zero_normal_is_rejected() {
        assert!(matches!(Hyperplane::new(&[0.0, 0.0], 1.0), Err(Error::DegenerateHyperplane)));
    }

    #[test]
    fn collar_inequality_on_a_disc_through_the_center() {
        let g = Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], 1.0 / 256.0).unwrap());
        let disc = Region::ball(g, &[0.5, 0.5, 0.0], 0.3);
        let e = Hyperplane::new(&[1.0, 0.0], 0.5).unwrap();
        let r = bt_check(&disc, &e, 0.05, 1.0).unwrap();
        // strip 0.05 x 0.5 versus half annulus of width 0.05
        let strip = 0.05 * 2.0 * 0.249;
        let half_annulus = 0.5 * std::f64::consts::PI * (0.09 - 0.0625);
        assert!((r.lhs - strip).abs() < 0.01 && (r.rhs - half_annulus).abs() < 0.01);
        assert!(r.holds());
    }
}
