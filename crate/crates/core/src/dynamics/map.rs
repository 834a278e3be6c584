use std::sync::Arc;

use super::branch::Branch;
use crate::error::{Error, Result};
use crate::expr::Constraint;
use crate::geometry::{Grid, Point, Region, MAX_DIM};

/// Hypothesis constants declared for a map.
#[derive(Clone, Debug, PartialEq)]
pub struct MapConstants {
    /// Contraction of inverse branches.
    pub lambda: f64,
    /// Hölder exponent of the log-Jacobian.
    pub alpha: f64,
    /// Hölder constant of the log-Jacobian of single branches.
    pub d_tilde: f64,
    /// Iterate used for the complexity bound.
    pub n0: usize,
    /// Complexity bound for `n0`-fold compositions.
    pub sigma: f64,
    /// Complexity bound for single branches.
    pub c_bar: f64,
    pub eps_exp: f64,
    pub eps_cplx: f64,
    /// Hölder constant of admissible densities.
    pub a0: f64,
}

impl MapConstants {
    /// Distortion constant of arbitrary compositions.
    pub fn distortion(&self) -> f64 {
        self.d_tilde / (1.0 - self.lambda.powf(self.alpha))
    }

    /// Largest admissible piece diameter.
    pub fn eps0(&self) -> f64 {
        self.eps_exp.min(self.eps_cplx)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self;
        let bad = |m: String| Err(Error::Config(m));
        if !(c.lambda > 0.0 && c.lambda < 1.0) {
            return bad(format!("lambda = {} must lie in (0, 1)", c.lambda));
        }
        if !(c.alpha > 0.0 && c.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", c.alpha));
        }
        if c.n0 == 0 {
            return bad("n0 must be at least 1".into());
        }
        if !(c.d_tilde >= 0.0 && c.sigma >= 0.0 && c.c_bar >= 0.0) {
            return bad("d_tilde, sigma and c_bar must be non-negative".into());
        }
        if !(c.eps_exp > 0.0 && c.eps_cplx > 0.0) {
            return bad("eps_exp and eps_cplx must be positive".into());
        }
        let limit = c.lambda.powi(-(c.n0 as i32)) - 1.0;
        if !(c.sigma < limit) {
            return bad(format!("sigma = {} must be below lambda^-n0 - 1 = {limit}", c.sigma));
        }
        let a_min = c.d_tilde / (1.0 - c.lambda.powf(c.alpha)).powi(2);
        if !(c.a0 > a_min) {
            return bad(format!("a0 = {} must exceed {a_min}", c.a0));
        }
        Ok(())
    }
}

/// A piecewise-expanding map on a box `X` rasterized at a fixed spacing.
#[derive(Clone, Debug)]
pub struct PiecewiseMap {
    pub name: String,
    grid: Arc<Grid>,
    space_constraints: Vec<Constraint>,
    space: Region,
    branches: Vec<Branch>,
    domains: Vec<Region>,
    domain_boxes: Vec<(Point, Point)>,
    constants: MapConstants,
}

/// A branch of an iterate, labelled by its itinerary.
#[derive(Clone, Debug)]
pub struct ComposedBranch {
    pub itinerary: Vec<usize>,
    /// Raster cylinder: cells whose center follows the itinerary.
    pub domain: Region,
    pub contraction: f64,
}

impl PiecewiseMap {
    pub fn new(
        name: &str,
        grid: Grid,
        space_constraints: Vec<Constraint>,
        branches: Vec<Branch>,
        constants: MapConstants,
    ) -> Result<PiecewiseMap> {
        constants.validate()?;
        if branches.is_empty() {
            return Err(Error::Config("a map needs at least one branch".into()));
        }
        for b in &branches {
            if !(b.contraction > 0.0 && b.contraction <= constants.lambda + 1e-12) {
                return Err(Error::Config(format!(
                    "branch {} declares contraction {} outside (0, lambda]",
                    b.name, b.contraction
                )));
            }
        }
        let grid = Arc::new(grid);
        let sc = space_constraints.clone();
        let space = Region::from_predicate(grid.clone(), |p| sc.iter().all(|c| c.holds(p)));
        if space.is_empty() {
            return Err(Error::Config("the phase space has no grid cells".into()));
        }
        let mut domains = Vec::new();
        let mut boxes = Vec::new();
        for b in &branches {
            let d = space.filter(|c| b.domain_holds(&grid.center(c)));
            boxes.push(d.coord_box());
            domains.push(d);
        }
        Ok(PiecewiseMap {
            name: name.to_string(),
            grid,
            space_constraints,
            space,
            branches,
            domains,
            domain_boxes: boxes,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eta(&self) -> f64 {
        self.grid.eta()
    }

    /// Raster of the phase space `X`.
    pub fn space(&self) -> &Region {
        &self.space
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn constants(&self) -> &MapConstants {
        &self.constants
    }

    /// Raster domain of branch `b`.
    pub fn domain(&self, b: usize) -> &Region {
        &self.domains[b]
    }

    /// Whether `p` lies in the open set `X`.
    #[inline]
    pub fn in_space(&self, p: &Point) -> bool {
        let g = &self.grid;
        let lo = g.origin();
        let hi = g.upper();
        (0..g.dim()).all(|i| p[i] > lo[i] && p[i] < hi[i]) && self.space_constraints.iter().all(|c| c.holds(p))
    }

    #[inline]
    pub fn in_domain(&self, b: usize, p: &Point) -> bool {
        self.in_space(p) && self.branches[b].domain_holds(p)
    }

    /// Branch whose domain contains `p`, with the image point.
    #[inline]
    pub fn forward(&self, p: &Point) -> Option<(usize, Point)> {
        let d = self.dim();
        if !self.in_space(p) {
            return None;
        }
        self.branches
            .iter()
            .position(|b| b.domain_holds(p))
            .map(|k| (k, self.branches[k].forward.apply(p, d)))
    }

    /// `h_b(y)` and `Jh_b(y)` when `y` lies in the image of branch `b`.
    #[inline]
    pub fn inverse(&self, b: usize, y: &Point) -> Option<(Point, f64)> {
        if !self.in_space(y) {
            return None;
        }
        let br = &self.branches[b];
        let x = br.inverse.apply(y, self.dim());
        if self.in_domain(b, &x) {
            Some((x, br.jacobian.eval(y)))
        } else {
            None
        }
    }

    /// Applies the inverse branches of an itinerary (last symbol first) and
    /// multiplies the Jacobians.
    pub fn inverse_chain(&self, itinerary: &[usize], y: &Point) -> Option<(Point, f64)> {
        let mut p = *y;
        let mut jac = 1.0;
        for &b in itinerary.iter().rev() {
            let (q, j) = self.inverse(b, &p)?;
            p = q;
            jac *= j;
        }
        Some((p, jac))
    }

    /// Coordinate box containing `T_b(B ∩ O_b)` for the coordinate box `B`.
    pub fn forward_box(&self, b: usize, lo: &Point, hi: &Point) -> Option<(Point, Point)> {
        let d = self.dim();
        let (dlo, dhi) = &self.domain_boxes[b];
        if self.domains[b].is_empty() {
            return None;
        }
        let mut a = [0.0; MAX_DIM];
        let mut z = [0.0; MAX_DIM];
        for i in 0..d {
            a[i] = lo[i].max(dlo[i]);
            z[i] = hi[i].min(dhi[i]);
            if a[i] > z[i] {
                return None;
            }
        }
        let br = &self.branches[b];
        let mut out_lo = [f64::INFINITY; MAX_DIM];
        let mut out_hi = [f64::NEG_INFINITY; MAX_DIM];
        for corner in 0..(1usize << d) {
            let mut p = [0.0; MAX_DIM];
            for i in 0..d {
                p[i] = if corner >> i & 1 == 1 { z[i] } else { a[i] };
            }
            let q = br.forward.apply(&p, d);
            for i in 0..d {
                out_lo[i] = out_lo[i].min(q[i]);
                out_hi[i] = out_hi[i].max(q[i]);
            }
        }
        // one cell of margin for round-off and non-affine branches
        let eta = self.eta();
        let (glo, ghi) = (self.grid.origin(), self.grid.upper());
        for i in 0..d {
            out_lo[i] = (out_lo[i] - eta).max(glo[i]);
            out_hi[i] = (out_hi[i] + eta).min(ghi[i]);
            if out_lo[i] >= out_hi[i] {
                return None;
            }
        }
        Some((out_lo, out_hi))
    }

    /// All branches of `T^n` whose raster cylinder is non-empty.
    pub fn compose_branches(&self, n: usize, cap: usize) -> Result<Vec<ComposedBranch>> {
        if n == 0 {
            return Err(Error::Precondition("compose_branches needs n >= 1".into()));
        }
        let g = self.grid.clone();
        let d = self.dim();
        let mut out = Vec::new();
        // each stack entry: itinerary, member cells with their current images
        let mut stack: Vec<(Vec<usize>, Vec<([usize; MAX_DIM], Point)>)> = Vec::new();
        for b in (0..self.branches.len()).rev() {
            let cells: Vec<_> = self.domains[b]
                .cells()
                .map(|c| (c, self.branches[b].forward.apply(&g.center(&c), d)))
                .collect();
            if !cells.is_empty() {
                stack.push((vec![b], cells));
            }
        }
        while let Some((itin, cells)) = stack.pop() {
            if itin.len() == n {
                if out.len() >= cap {
                    return Err(Error::BranchExplosion { n, cap });
                }
                let cs: Vec<_> = cells.iter().map(|(c, _)| *c).collect();
                let contraction = itin.iter().map(|&b| self.branches[b].contraction).product();
                out.push(ComposedBranch { itinerary: itin, domain: Region::from_cells(g.clone(), &cs), contraction });
                continue;
            }
            for b in (0..self.branches.len()).rev() {
                let next: Vec<_> = cells
                    .iter()
                    .filter(|(_, y)| self.in_domain(b, y))
                    .map(|(c, y)| (*c, self.branches[b].forward.apply(y, d)))
                    .collect();
                if !next.is_empty() {
                    let mut it = itin.clone();
                    it.push(b);
                    stack.push((it, next));
                }
            }
        }
        Ok(out)
    }
}
