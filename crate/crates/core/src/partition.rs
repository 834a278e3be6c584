//! Fine partitions of the phase space into small cubes, the contained
//! element selected inside a regular domain, the fixed stopping ratio and
//! nice-boundary certificates.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::families::GrowthConstants;
use crate::geometry::{dist, Cell, Grid, Region, MAX_DIM};

/// Pieces with fewer cells are merged into a neighbour.
pub const SLIVER_CELLS: usize = 8;

/// Volume of the Euclidean unit ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => f64::NAN,
    }
}

/// Choice of the cube-side factor `c` (cubes have side `c delta`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PartitionScale {
    /// `1 / (2^{d+2} V_d^d sqrt d)`.
    Paper,
    /// The largest `c` keeping a cube around a `delta`-deep point inside the
    /// ball of radius `delta` and below half its volume:
    /// `min(1 / sqrt d, (V_d / 2)^{1/d})`.
    Admissible,
    Fixed(f64),
}

impl PartitionScale {
    pub fn factor(&self, d: usize) -> f64 {
        let v = unit_ball_volume(d);
        match self {
            PartitionScale::Paper => 1.0 / (2f64.powi(d as i32 + 2) * v.powi(d as i32) * (d as f64).sqrt()),
            PartitionScale::Admissible => (1.0 / (d as f64).sqrt()).min((v / 2.0).powf(1.0 / d as f64)),
            PartitionScale::Fixed(c) => *c,
        }
    }

    pub fn parse(s: &str) -> Result<PartitionScale> {
        match s {
            "paper" => Ok(PartitionScale::Paper),
            "admissible" => Ok(PartitionScale::Admissible),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|c| *c > 0.0)
                .map(PartitionScale::Fixed)
                .ok_or_else(|| Error::Config(format!("partition scale '{s}' is not paper, admissible or a positive number"))),
        }
    }
}

/// A partition of `X` into cubes of side `c delta` (snapped down to whole
/// cells), optionally with a prescribed element `Z` at index 0.
#[derive(Clone, Debug)]
pub struct Partition {
    pub c: f64,
    pub delta: f64,
    pub side: f64,
    pub elements: Vec<Region>,
    pub has_z: bool,
    owner: Vec<u32>,
    grid: Arc<Grid>,
}

/// The element chosen inside a regular domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub element: usize,
    pub witness: Cell,
    pub depth: f64,
    /// Radius of the smallest ball around the witness containing the element.
    pub radius: f64,
    /// Largest collar ratio `Leb(∂_eps(I \ R) \ ∂_eps I) / Leb(∂_eps I)` on
    /// the checked scales.
    pub collar_ratio: f64,
}

impl Partition {
    pub fn new(space: &Region, delta: f64, scale: PartitionScale, z: Option<&Region>) -> Result<Partition> {
        let g = space.grid().clone();
        let d = g.dim();
        let c = scale.factor(d);
        let eta = g.eta();
        let side = (c * delta / eta).floor() * eta;
        // a full cube must not itself be a sliver
        let cube_cells = ((side / eta).round() as usize).pow(g.dim() as u32);
        if side < eta || cube_cells < SLIVER_CELLS {
            return Err(Error::EpsilonBelowResolution { eps: c * delta, eta });
        }
        if let Some(z) = z {
            if z.is_empty() || !z.is_subset_of(space) {
                return Err(Error::Precondition("Z must be a non-empty subset of X".into()));
            }
            let e = z.bbox().extent();
            if (0..d).any(|i| e[i] as f64 * eta > c * delta + 1e-12) {
                return Err(Error::ZTooLarge(format!(
                    "Z spans {:?} cells but must fit in a cube of side c delta = {}",
                    &e[..d],
                    c * delta
                )));
            }
        }
        let per = (side / eta).round() as usize;
        let mut groups: BTreeMap<Cell, Vec<Cell>> = BTreeMap::new();
        for cell in space.cells() {
            if z.is_some_and(|z| z.contains_cell(&cell)) {
                continue;
            }
            let mut key = [0; MAX_DIM];
            for i in 0..d {
                key[i] = cell[i] / per;
            }
            groups.entry(key).or_default().push(cell);
        }
        let mut elements: Vec<Region> = Vec::new();
        if let Some(z) = z {
            elements.push(z.clone());
        }
        let offset = elements.len();
        let mut pieces: Vec<Vec<Cell>> = groups.into_values().collect();
        let n_total = g.total_cells();
        let mut owner = vec![u32::MAX; n_total];
        let full = g.full_box();
        for (i, cs) in pieces.iter().enumerate() {
            for c in cs {
                owner[full.index(c)] = (i + offset) as u32;
            }
        }
        if let Some(z) = z {
            for c in z.cells() {
                owner[full.index(&c)] = 0;
            }
        }
        // merge slivers into the neighbouring piece sharing most faces
        let mut alive = vec![true; pieces.len()];
        for i in 0..pieces.len() {
            if pieces[i].len() >= SLIVER_CELLS {
                continue;
            }
            let mut shared: BTreeMap<u32, usize> = BTreeMap::new();
            for c in &pieces[i] {
                for ax in 0..d {
                    for up in [false, true] {
                        let mut n = *c;
                        if up {
                            n[ax] += 1;
                            if n[ax] >= g.shape()[ax] {
                                continue;
                            }
                        } else {
                            if n[ax] == 0 {
                                continue;
                            }
                            n[ax] -= 1;
                        }
                        let o = owner[full.index(&n)];
                        if o != u32::MAX && o as usize != i + offset && (o as usize) >= offset {
                            *shared.entry(o).or_default() += 1;
                        }
                    }
                }
            }
            if let Some((&target, _)) = shared.iter().max_by_key(|(k, v)| (**v, std::cmp::Reverse(**k))) {
                let t = target as usize - offset;
                let moved = std::mem::take(&mut pieces[i]);
                for c in &moved {
                    owner[full.index(c)] = target;
                }
                pieces[t].extend(moved);
                alive[i] = false;
            }
        }
        let mut remap = vec![u32::MAX; pieces.len()];
        for (i, cs) in pieces.into_iter().enumerate() {
            if alive[i] {
                remap[i] = elements.len() as u32;
                elements.push(Region::from_cells(g.clone(), &cs));
            }
        }
        for o in owner.iter_mut() {
            if *o != u32::MAX && (*o as usize) >= offset {
                *o = remap[*o as usize - offset];
            }
        }
        Ok(Partition { c, delta, side, elements, has_z: z.is_some(), owner, grid: g })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Index of the element containing a cell of `X`.
    pub fn owner(&self, c: &Cell) -> Option<usize> {
        let o = self.owner[self.grid.full_box().index(c)];
        (o != u32::MAX).then_some(o as usize)
    }

    /// `Leb(R)`: the smallest element measure.
    pub fn min_measure(&self) -> f64 {
        self.elements.iter().map(Region::measure).fold(f64::INFINITY, f64::min)
    }

    /// Picks the element containing the deepest cell of `I` and checks that
    /// it lies in a ball of radius `delta` around that cell inside `I`, that
    /// it leaves at least half of `I`, and (on `collar_scales`) that the
    /// collar it creates is at most `max(2d, C_Z)` times the collar of `I`.
    pub fn select_contained_element(
        &self,
        region: &Region,
        c_z: f64,
        collar_scales: &[f64],
    ) -> Result<Selection> {
        let g = &self.grid;
        let d = g.dim();
        let (x, depth) = region.deepest_cell().ok_or_else(|| Error::EmptyRegion("selection in an empty set".into()))?;
        if depth < self.delta {
            return Err(Error::NotDeltaRegular { delta: self.delta });
        }
        let element = self.owner(&x).ok_or_else(|| Error::NotContained("witness outside X".into()))?;
        let r = &self.elements[element];
        let xc = g.center(&x);
        let radius = r.cells().map(|c| dist(&g.center(&c), &xc, d)).fold(0.0, f64::max) + 0.5 * g.diameter_pad();
        if !r.is_subset_of(region) {
            return Err(Error::NotContained(format!("element {element} is not inside the domain")));
        }
        if 2 * r.count() > region.count() {
            return Err(Error::NotContained(format!(
                "element {element} has {} of the domain's {} cells",
                r.count(),
                region.count()
            )));
        }
        let mut collar_ratio = 0.0f64;
        if !collar_scales.is_empty() {
            let rest = region.difference(r);
            let k = (2.0 * d as f64).max(c_z);
            let slack = rest.raster_slack() + region.raster_slack();
            for &e in collar_scales {
                let outer = region.eps_boundary(e);
                let new = rest.eps_boundary(e).difference(&outer).measure();
                let base = outer.measure();
                if base > 0.0 {
                    collar_ratio = collar_ratio.max(new / base);
                }
                if new > k * base + slack {
                    return Err(Error::NotContained(format!(
                        "collar of the remainder {new} exceeds {k} x {base} at eps = {e}"
                    )));
                }
            }
        }
        Ok(Selection { element, witness: x, depth, radius, collar_ratio })
    }
}

/// Lower bound `t` on the fraction of weight stopped per round:
/// `(2/3) c_a V(eps0)^{-1} Leb(R)^2 / ((1/3) Leb(R) + C_a V(eps0))` with
/// `V(eps0)` the volume of the ball of radius `eps0`.
pub fn fixed_ratio_constant(dim: usize, eps0: f64, leb_r: f64, c_a_inv: f64, c_a: f64) -> f64 {
    let vol = unit_ball_volume(dim) * eps0.powi(dim as i32);
    (2.0 / 3.0) * c_a_inv / vol * leb_r * leb_r / (leb_r / 3.0 + c_a * vol)
}

/// [`fixed_ratio_constant`] for a partition and growth constants.
pub fn fixed_ratio_for(k: &GrowthConstants, p: &Partition) -> f64 {
    fixed_ratio_constant(k.dim, k.eps0, p.min_measure(), k.c_a_inv, k.c_a)
}

/// Certificate `C_Z` for a nice boundary: `1.5` times the largest of
/// `Leb(∂_eps Z) / eps` and, over random boxes `I ⊇ Z` inside `X`, of
/// `Leb(∂_eps(I \ Z) \ ∂_eps I) / Leb(∂_eps I)`, on dyadic scales from half
/// the diameter of `Z` down to two cells. Fails when the finest scale sees no
/// interior (the set is all boundary at this resolution) or when the collar
/// ratio of `Z` keeps growing as the scale shrinks.
pub fn certify_nice_boundary(z: &Region, space: &Region, samples: usize, seed: u64) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptyRegion("nice-boundary certificate for an empty set".into()));
    }
    let g = z.grid().clone();
    let d = g.dim();
    let eta = g.eta();
    let mut scales = Vec::new();
    let mut e = z.diameter() / 2.0;
    while e >= 2.0 * eta {
        scales.push(e);
        e /= 2.0;
    }
    if scales.is_empty() {
        return Err(Error::NotNice("Z is smaller than the resolution".into()));
    }
    let ratios: Vec<f64> = scales.iter().map(|&e| z.eps_boundary_measure(e) / e).collect();
    let finest = *scales.last().unwrap();
    if z.eps_boundary_count(finest) == z.count() {
        return Err(Error::NotNice(format!("Z has no interior at scale {finest}")));
    }
    if ratios.len() >= 2 && ratios[ratios.len() - 1] >= 1.8 * ratios[ratios.len() - 2] {
        return Err(Error::NotNice(format!(
            "collar ratio grows from {} to {} as the scale halves",
            ratios[ratios.len() - 2],
            ratios[ratios.len() - 1]
        )));
    }
    let mut c = ratios.iter().copied().fold(0.0, f64::max);
    let (zlo, zhi) = z.coord_box();
    let (xlo, xhi) = space.coord_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for i in 0..d {
            lo[i] = zlo[i] - eta - rng.random::<f64>() * (zlo[i] - xlo[i] - eta).max(0.0);
            hi[i] = zhi[i] + eta + rng.random::<f64>() * (xhi[i] - zhi[i] - eta).max(0.0);
        }
        let i_box = Region::open_box(g.clone(), &lo, &hi).intersect(space);
        if !z.is_subset_of(&i_box) {
            continue;
        }
        let rest = i_box.difference(z);
        for &e in &scales {
            let outer = i_box.eps_boundary(e);
            let base = outer.measure();
            if base > 0.0 {
                c = c.max(rest.eps_boundary(e).difference(&outer).measure() / base);
            }
        }
    }
    Ok(1.5 * c)
}
