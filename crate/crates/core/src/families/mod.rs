//! Standard pairs and standard families: densities with controlled
//! log-Hölder seminorm on sets of small diameter, their iteration under the
//! map (with chopping), boundary weights, properness and recovery.

mod chop;
mod constants;
mod growth;
mod iterate;

pub use chop::{chop, chop_cost};
pub use constants::GrowthConstants;
pub use growth::{
    calibrate_zetas, calibration_suite, growth_check, recovery_time, GrowthReport, RecoveryReport, Zetas,
};
pub use iterate::{coalesce, iterate, remainder, remainder_with_z, IterateOptions, RemainderReport};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::RasterDensity;
use crate::error::{Error, Result};
use crate::geometry::{dist, Cell, Point, Region, MAX_DIM};

/// Density of a standard pair, normalized to unit mass on its domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Uniform(f64),
    /// One value per cell of the domain's bounding box (zero off the domain).
    Cells(Vec<f64>),
}

/// A domain with a probability density on it.
#[derive(Clone, Debug)]
pub struct StandardPair {
    pub domain: Region,
    pub density: Density,
}

impl StandardPair {
    pub fn uniform(domain: Region) -> Result<StandardPair> {
        if domain.is_empty() {
            return Err(Error::EmptyRegion("standard pair on an empty domain".into()));
        }
        let v = 1.0 / domain.measure();
        Ok(StandardPair { domain, density: Density::Uniform(v) })
    }

    /// Normalizes `values` (over the domain's bounding box) to unit mass.
    pub fn new(domain: Region, mut values: Vec<f64>) -> Result<StandardPair> {
        if domain.is_empty() {
            return Err(Error::EmptyRegion("standard pair on an empty domain".into()));
        }
        if values.len() != domain.bbox().len() {
            return Err(Error::Precondition("density must cover the domain's box".into()));
        }
        let mut total = 0.0;
        for (k, _) in domain.indexed_cells() {
            let v = values[k];
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("density must be positive and finite, got {v}")));
            }
            total += v;
        }
        let scale = 1.0 / (total * domain.grid().cell_volume());
        for (k, m) in domain.mask().iter().enumerate() {
            values[k] = if *m { values[k] * scale } else { 0.0 };
        }
        Ok(StandardPair { domain, density: Density::Cells(values) })
    }

    /// Density from a positive function of the cell centers.
    pub fn from_fn(domain: Region, f: impl Fn(&Point) -> f64) -> Result<StandardPair> {
        let g = domain.grid().clone();
        let mut values = vec![0.0; domain.bbox().len()];
        for (k, c) in domain.indexed_cells() {
            values[k] = f(&g.center(&c));
        }
        StandardPair::new(domain, values)
    }

    #[inline]
    pub fn value_local(&self, k: usize) -> f64 {
        match &self.density {
            Density::Uniform(v) => *v,
            Density::Cells(v) => v[k],
        }
    }

    pub fn value_at_cell(&self, c: &Cell) -> Option<f64> {
        self.domain.local_index(c).map(|k| self.value_local(k))
    }

    /// `int_S rho` over a sub-region `S` of the plane.
    pub fn mass_on(&self, s: &Region) -> f64 {
        let v = self.domain.grid().cell_volume();
        s.cells().filter_map(|c| self.value_at_cell(&c)).sum::<f64>() * v
    }

    /// The pair restricted to `sub ⊆ domain` and renormalized, with the mass
    /// of `sub`; `None` when `sub` carries no mass.
    pub fn restrict(&self, sub: &Region) -> Option<(StandardPair, f64)> {
        if sub.is_empty() {
            return None;
        }
        let vol = self.domain.grid().cell_volume();
        match &self.density {
            Density::Uniform(v) => {
                let mass = v * sub.measure();
                Some((StandardPair { domain: sub.clone(), density: Density::Uniform(1.0 / sub.measure()) }, mass))
            }
            Density::Cells(_) => {
                let mut values = vec![0.0; sub.bbox().len()];
                let mut total = 0.0;
                for (k, c) in sub.indexed_cells() {
                    let v = self.value_at_cell(&c)?;
                    values[k] = v;
                    total += v;
                }
                let mass = total * vol;
                for v in values.iter_mut() {
                    *v /= mass;
                }
                Some((StandardPair { domain: sub.clone(), density: Density::Cells(values) }, mass))
            }
        }
    }

    /// `int_{collar_eps} rho` for each `eps` in the list.
    pub fn collar_masses(&self, eps: &[f64]) -> Vec<f64> {
        let depth = self.domain.depths();
        let vol = self.domain.grid().cell_volume();
        let mut out = vec![0.0; eps.len()];
        for (k, _) in self.domain.indexed_cells() {
            let v = self.value_local(k) * vol;
            for (j, &e) in eps.iter().enumerate() {
                if depth[k] < e {
                    out[j] += v;
                }
            }
        }
        out
    }

    /// `ln rho(p)` by multilinear interpolation of the cell values of
    /// `ln rho`, falling back to the containing cell near the boundary.
    pub fn ln_value_at(&self, p: &Point) -> Option<f64> {
        let g = self.domain.grid();
        let cell = g.cell_of(p)?;
        let k = self.domain.local_index(&cell)?;
        let vals = match &self.density {
            Density::Uniform(v) => return Some(v.ln()),
            Density::Cells(v) => v,
        };
        let d = g.dim();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for i in 0..d {
            let t = g.coord(p, i) - 0.5;
            let b = t.floor();
            if b < 0.0 {
                return Some(vals[k].ln());
            }
            base[i] = b as usize;
            frac[i] = t - b;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut c = base;
            let mut w = 1.0;
            for i in 0..d {
                if corner >> i & 1 == 1 {
                    c[i] += 1;
                    w *= frac[i];
                } else {
                    w *= 1.0 - frac[i];
                }
            }
            match self.domain.local_index(&c) {
                Some(j) => acc += w * vals[j].ln(),
                None => return Some(vals[k].ln()),
            }
        }
        Some(acc)
    }
}

/// Persistent record of the branch sequence followed by a pair.
#[derive(Clone, Debug, Default)]
pub struct Itinerary(Option<Arc<ItinNode>>);

#[derive(Debug)]
struct ItinNode {
    branch: u32,
    len: usize,
    parent: Itinerary,
}

impl Itinerary {
    pub fn push(&self, branch: usize) -> Itinerary {
        Itinerary(Some(Arc::new(ItinNode { branch: branch as u32, len: self.len() + 1, parent: self.clone() })))
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self.0.clone();
        while let Some(n) = cur {
            out.push(n.branch as usize);
            cur = n.parent.0.clone();
        }
        out.reverse();
        out
    }

    pub fn from_slice(s: &[usize]) -> Itinerary {
        s.iter().fold(Itinerary::default(), |it, &b| it.push(b))
    }
}

/// Bookkeeping carried by each pair of a family.
#[derive(Clone, Debug, Default)]
pub struct PairTag {
    /// Representative itinerary since the family's initial time.
    pub itinerary: Itinerary,
    /// Caller-defined designation bits; pairs with different flags never merge.
    pub flags: u64,
    /// Number of single-itinerary pairs merged into this one.
    pub multiplicity: f64,
}

/// A weighted family of standard pairs.
#[derive(Clone, Debug, Default)]
pub struct StandardFamily {
    pub pairs: Vec<StandardPair>,
    pub weights: Vec<f64>,
    pub tags: Vec<PairTag>,
}

impl StandardFamily {
    pub fn new(pairs: Vec<StandardPair>, weights: Vec<f64>) -> Result<StandardFamily> {
        if pairs.len() != weights.len() {
            return Err(Error::Precondition("one weight per pair".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Precondition("weights must be positive".into()));
        }
        let tags = vec![PairTag { multiplicity: 1.0, ..PairTag::default() }; pairs.len()];
        Ok(StandardFamily { pairs, weights, tags })
    }

    pub fn single(pair: StandardPair, weight: f64) -> Result<StandardFamily> {
        StandardFamily::new(vec![pair], vec![weight])
    }

    pub fn push(&mut self, pair: StandardPair, weight: f64, tag: PairTag) {
        self.pairs.push(pair);
        self.weights.push(weight);
        self.tags.push(tag);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `|G| = sum_j w_j`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `|∂_eps G| = sum_j w_j int_{∂_eps I_j} rho_j`.
    pub fn boundary_weight(&self, eps: f64) -> f64 {
        self.boundary_profile(&[eps])[0]
    }

    pub fn boundary_profile(&self, eps: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; eps.len()];
        for (p, w) in self.pairs.iter().zip(&self.weights) {
            for (o, m) in out.iter_mut().zip(p.collar_masses(eps)) {
                *o += w * m;
            }
        }
        out
    }

    /// Smallest `B` with `|∂_eps G| <= B |G| eps` on the scale grid.
    pub fn properness(&self, eps_grid: &[f64]) -> f64 {
        let total = self.total_weight();
        if total <= 0.0 {
            return 0.0;
        }
        self.boundary_profile(eps_grid)
            .iter()
            .zip(eps_grid)
            .map(|(b, e)| b / (total * e))
            .fold(0.0, f64::max)
    }

    pub fn is_proper(&self, b: f64, eps_grid: &[f64]) -> bool {
        let total = self.total_weight();
        self.boundary_profile(eps_grid).iter().zip(eps_grid).all(|(m, e)| *m <= b * total * e)
    }

    /// `rho_G = sum_j w_j rho_j` on the union of the domains.
    pub fn density(&self) -> Result<RasterDensity> {
        let Some(first) = self.pairs.first() else {
            return Err(Error::EmptyRegion("density of an empty family".into()));
        };
        let g = first.domain.grid().clone();
        let hull = self.pairs.iter().skip(1).fold(first.domain.bbox(), |h, p| h.hull(&p.domain.bbox()));
        let mut mask = vec![false; hull.len()];
        let mut dense = vec![0.0; hull.len()];
        for (p, w) in self.pairs.iter().zip(&self.weights) {
            for (k, c) in p.domain.indexed_cells() {
                let i = hull.index(&c);
                mask[i] = true;
                dense[i] += w * p.value_local(k);
            }
        }
        let support = Region::from_mask(g, hull, mask);
        let sb = support.bbox();
        let mut values = vec![0.0; sb.len()];
        for c in support.cells() {
            values[sb.index(&c)] = dense[hull.index(&c)];
        }
        RasterDensity::new(support, values)
    }
}

/// Sampled `H_alpha(rho) = sup |ln rho(x) - ln rho(y)| / d(x, y)^alpha` over
/// cell centers: exhaustive for small domains, otherwise all pairs within a
/// few cells plus a fixed number of random far pairs.
pub fn holder_seminorm(pair: &StandardPair, alpha: f64, seed: u64) -> f64 {
    let vals = match &pair.density {
        Density::Uniform(_) => return 0.0,
        Density::Cells(v) => v,
    };
    let g = pair.domain.grid().clone();
    let d = g.dim();
    let cells: Vec<(usize, Cell)> = pair.domain.indexed_cells().collect();
    let ratio = |a: &(usize, Cell), b: &(usize, Cell)| {
        let r = dist(&g.center(&a.1), &g.center(&b.1), d);
        (vals[a.0].ln() - vals[b.0].ln()).abs() / r.powf(alpha)
    };
    let mut best = 0.0f64;
    if cells.len() <= 1500 {
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                best = best.max(ratio(a, b));
            }
        }
        return best;
    }
    let reach = 3i64;
    for a in &cells {
        let mut off = [0i64; MAX_DIM];
        let span = (2 * reach + 1).pow(d as u32);
        for code in 0..span {
            let mut t = code;
            for o in off.iter_mut().take(d) {
                *o = t % (2 * reach + 1) - reach;
                t /= 2 * reach + 1;
            }
            if off.iter().all(|&x| x == 0) {
                continue;
            }
            let mut c = a.1;
            let mut ok = true;
            for i in 0..d {
                let v = c[i] as i64 + off[i];
                if v < 0 {
                    ok = false;
                    break;
                }
                c[i] = v as usize;
            }
            if let Some(k) = ok.then(|| pair.domain.local_index(&c)).flatten() {
                best = best.max(ratio(a, &(k, c)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20_000 {
        let a = &cells[rng.random_range(0..cells.len())];
        let b = &cells[rng.random_range(0..cells.len())];
        if a.0 != b.0 {
            best = best.max(ratio(a, b));
        }
    }
    best
}

/// Largest `|ln(rho(x) / avg_A rho)|` over sampled boxes `A` meeting the
/// domain; comparability holds when it is at most `a eps0^alpha`.
pub fn comparability_deviation(pair: &StandardPair, samples: usize, seed: u64) -> f64 {
    let g = pair.domain.grid().clone();
    let d = g.dim();
    let (lo, hi) = pair.domain.coord_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut a = [0.0; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        for i in 0..d {
            let u = lo[i] + rng.random::<f64>() * (hi[i] - lo[i]);
            let v = lo[i] + rng.random::<f64>() * (hi[i] - lo[i]);
            a[i] = u.min(v) - g.eta();
            b[i] = u.max(v) + g.eta();
        }
        let sub = Region::open_box(g.clone(), &a[..d], &b[..d]).intersect(&pair.domain);
        if sub.is_empty() {
            continue;
        }
        let vals: Vec<f64> = sub.cells().filter_map(|c| pair.value_at_cell(&c)).collect();
        let avg = vals.iter().sum::<f64>() / vals.len() as f64;
        for v in vals {
            worst = worst.max((v / avg).ln().abs());
        }
    }
    worst
}

/// The four quantities of the comparability chain
/// `inf_I rho ~ A_J rho ~ A_J' rho ~ sup_I rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparabilityReport {
    pub inf: f64,
    pub avg_j: f64,
    pub avg_j_prime: f64,
    pub sup: f64,
    /// `e^{a eps0^alpha}`.
    pub bound: f64,
}

impl ComparabilityReport {
    /// Every two quantities of the chain are within a factor `bound`.
    pub fn holds(&self) -> bool {
        let k = self.bound * (1.0 + 1e-12);
        let q = [self.inf, self.avg_j, self.avg_j_prime, self.sup];
        q.iter().all(|x| q.iter().all(|y| x <= &(k * y)))
    }
}

/// Averages of the pair's density over `j` and `j_prime` against its extrema,
/// with `a` the seminorm bound of the pair and `eps0` its diameter bound.
pub fn comparability_check(
    pair: &StandardPair,
    j: &Region,
    j_prime: &Region,
    a: f64,
    eps0: f64,
    alpha: f64,
) -> Result<ComparabilityReport> {
    let avg = |s: &Region| -> Result<f64> {
        if s.is_empty() {
            return Err(Error::EmptyRegion("comparability over a null set".into()));
        }
        if !s.is_subset_of(&pair.domain) {
            return Err(Error::NotContained("comparability subset leaves the domain".into()));
        }
        Ok(s.cells().filter_map(|c| pair.value_at_cell(&c)).sum::<f64>() / s.count() as f64)
    };
    let avg_j = avg(j)?;
    let avg_j_prime = avg(j_prime)?;
    let (inf, sup) = pair
        .domain
        .indexed_cells()
        .map(|(k, _)| pair.value_local(k))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(ComparabilityReport { inf, avg_j, avg_j_prime, sup, bound: (a * eps0.powf(alpha)).exp() })
}
