use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use super::chop::chop;
use super::{Density, PairTag, StandardFamily, StandardPair};
use crate::dynamics::{PiecewiseMap, ScalarMap};
use crate::error::{Error, Result};
use crate::geometry::Region;

/// Options for [`iterate`].
#[derive(Clone, Debug)]
pub struct IterateOptions {
    pub eps0: f64,
    /// Set kept inside a single piece when chopping images that meet it.
    pub avoid: Option<Region>,
    /// Upper bound on the number of pairs at any step.
    pub pair_cap: usize,
    /// Itineraries (from the family's initial time) tracked by flag bits:
    /// bit `j` survives only along `designations[j]`.
    pub designations: Vec<Vec<usize>>,
}

impl IterateOptions {
    pub fn new(eps0: f64) -> IterateOptions {
        IterateOptions { eps0, avoid: None, pair_cap: 2_000_000, designations: Vec::new() }
    }
}

/// Image of a pair under one branch: the normalized pushed-forward pair and
/// the mass `int_{I ∩ O_b} rho` it carries. Membership is decided on the
/// raster: an image cell belongs to the image iff its center pulls back into
/// a cell of `I ∩ O_b`.
pub(crate) fn push_forward(map: &PiecewiseMap, pair: &StandardPair, b: usize) -> Option<(StandardPair, f64)> {
    let g = map.grid().clone();
    let vol = g.cell_volume();
    let pre = pair.domain.intersect(map.domain(b));
    if pre.is_empty() {
        return None;
    }
    let z = match &pair.density {
        Density::Uniform(v) => v * pre.count() as f64,
        Density::Cells(_) => pre.cells().filter_map(|c| pair.value_at_cell(&c)).sum(),
    } * vol;
    if z <= 0.0 {
        return None;
    }
    let (lo, hi) = pre.coord_box();
    let (ilo, ihi) = map.forward_box(b, &lo, &hi)?;
    let bbox = g.cells_meeting(&ilo, &ihi)?;
    let br = &map.branches()[b];
    let uniform = matches!(pair.density, Density::Uniform(_)) && matches!(br.jacobian, ScalarMap::Const(_));
    let space = map.space();
    let d = g.dim();
    let mut mask = vec![false; bbox.len()];
    let mut values = if uniform { Vec::new() } else { vec![0.0; bbox.len()] };
    for (k, c) in bbox.iter().enumerate() {
        if !space.contains_cell(&c) {
            continue;
        }
        let y = g.center(&c);
        let x = br.inverse.apply(&y, d);
        if pre.contains_point(&x) {
            mask[k] = true;
            if !uniform {
                values[k] = pair.ln_value_at(&x).expect("x lies in the domain").exp() * br.jacobian.eval(&y);
            }
        }
    }
    let domain = Region::from_mask(g.clone(), bbox, mask);
    if domain.is_empty() {
        return None;
    }
    let image = if uniform {
        StandardPair::uniform(domain).ok()?
    } else {
        let nb = domain.bbox();
        let mut packed = vec![0.0; nb.len()];
        for (k, c) in domain.indexed_cells() {
            packed[k] = values[bbox.index(&c)];
        }
        StandardPair::new(domain, packed).ok()?
    };
    Some((image, z))
}

/// The `n`-th iterate of a family: every pair is pushed through all branches
/// of `T^n`, then images of diameter above `eps0` are chopped.
pub fn iterate(map: &PiecewiseMap, family: &StandardFamily, n: usize, opts: &IterateOptions) -> Result<StandardFamily> {
    let mut cur = family.clone();
    for step in 0..n {
        let mut next = StandardFamily::default();
        for ((pair, &w), tag) in cur.pairs.iter().zip(&cur.weights).zip(&cur.tags) {
            for b in 0..map.branches().len() {
                let Some((img, z)) = push_forward(map, pair, b) else { continue };
                let t = tag.itinerary.len();
                let mut flags = 0u64;
                for (j, des) in opts.designations.iter().enumerate().take(64) {
                    if tag.flags >> j & 1 == 1 && des.get(t) == Some(&b) {
                        flags |= 1 << j;
                    }
                }
                let new_tag = PairTag { itinerary: tag.itinerary.push(b), flags, multiplicity: tag.multiplicity };
                next.push(img, w * z, new_tag);
            }
            if next.len() > opts.pair_cap {
                return Err(Error::PairCap { pairs: next.len(), step: step + 1, cap: opts.pair_cap });
            }
        }
        cur = next;
    }
    let mut out = StandardFamily::default();
    for ((pair, &w), tag) in cur.pairs.iter().zip(&cur.weights).zip(&cur.tags) {
        let pieces = chop(&pair.domain, opts.eps0, opts.avoid.as_ref())?;
        if pieces.len() == 1 {
            out.push(pair.clone(), w, tag.clone());
            continue;
        }
        for piece in pieces {
            if let Some((p, m)) = pair.restrict(&piece) {
                out.push(p, w * m, tag.clone());
            }
        }
    }
    if out.len() > opts.pair_cap {
        return Err(Error::PairCap { pairs: out.len(), step: n, cap: opts.pair_cap });
    }
    Ok(out)
}

/// Merges pairs with identical domains and flags into one pair carrying the
/// weighted average density; the result is an equivalent family. The tag of
/// the heaviest constituent is kept as representative.
pub fn coalesce(family: StandardFamily) -> StandardFamily {
    let mut index: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut out = StandardFamily::default();
    let mut best_w: Vec<f64> = Vec::new();
    for ((pair, w), tag) in family.pairs.into_iter().zip(family.weights).zip(family.tags) {
        let mut h = DefaultHasher::new();
        pair.domain.bbox().hash(&mut h);
        pair.domain.mask().hash(&mut h);
        tag.flags.hash(&mut h);
        let key = h.finish();
        let slot = index
            .get(&key)
            .and_then(|v| v.iter().copied().find(|&j| out.tags[j].flags == tag.flags && out.pairs[j].domain == pair.domain));
        match slot {
            None => {
                index.entry(key).or_default().push(out.len());
                best_w.push(w);
                out.push(pair, w, tag);
            }
            Some(j) => {
                let total = out.weights[j] + w;
                let merged = match (&out.pairs[j].density, &pair.density) {
                    (Density::Uniform(a), Density::Uniform(_)) => Density::Uniform(*a),
                    _ => {
                        let dom = &out.pairs[j].domain;
                        let mut v = vec![0.0; dom.bbox().len()];
                        for (k, _) in dom.indexed_cells() {
                            v[k] = (out.weights[j] * out.pairs[j].value_local(k) + w * pair.value_local(k)) / total;
                        }
                        Density::Cells(v)
                    }
                };
                out.pairs[j].density = merged;
                out.weights[j] = total;
                out.tags[j].multiplicity += tag.multiplicity;
                if w > best_w[j] {
                    best_w[j] = w;
                    let m = out.tags[j].multiplicity;
                    out.tags[j] = PairTag { multiplicity: m, ..tag };
                }
            }
        }
    }
    out
}

/// Result of removing stopped sets from a family.
#[derive(Clone, Debug)]
pub struct RemainderReport {
    pub family: StandardFamily,
    /// `(pair index, stopped weight)` for every removal.
    pub stopped: Vec<(usize, f64)>,
}

/// Removes `R` from the domain of each listed pair; the removed weight is
/// `w_j int_R rho_j` and the remaining piece is renormalized.
pub fn remainder(family: &StandardFamily, removals: &[(usize, Region)]) -> Result<RemainderReport> {
    let mut cut: HashMap<usize, &Region> = HashMap::new();
    for (j, r) in removals {
        if *j >= family.len() {
            return Err(Error::Precondition(format!("no pair {j} in a family of {}", family.len())));
        }
        cut.insert(*j, r);
    }
    let mut out = StandardFamily::default();
    let mut stopped = Vec::new();
    for (j, ((pair, &w), tag)) in family.pairs.iter().zip(&family.weights).zip(&family.tags).enumerate() {
        match cut.get(&j) {
            None => out.push(pair.clone(), w, tag.clone()),
            Some(r) => {
                if !r.is_subset_of(&pair.domain) {
                    return Err(Error::NotContained(format!("stopped set is not inside pair {j}")));
                }
                let stopped_mass = pair.mass_on(r);
                stopped.push((j, w * stopped_mass));
                let rest = pair.domain.difference(r);
                if let Some((p, m)) = pair.restrict(&rest) {
                    out.push(p, w * m, tag.clone());
                }
            }
        }
    }
    Ok(RemainderReport { family: out, stopped })
}

/// Removes `Z` from every pair whose domain contains `Z'`; fails when a
/// remaining piece would keep less than half of its pair.
pub fn remainder_with_z(family: &StandardFamily, z: &Region, z_prime: &Region) -> Result<RemainderReport> {
    let mut removals = Vec::new();
    for (j, pair) in family.pairs.iter().enumerate() {
        if z_prime.is_subset_of(&pair.domain) {
            let zz = z.intersect(&pair.domain);
            if 2 * zz.count() > pair.domain.count() {
                return Err(Error::DegenerateCollar(format!(
                    "removing Z leaves less than half of pair {j} ({} of {} cells)",
                    pair.domain.count() - zz.count(),
                    pair.domain.count()
                )));
            }
            removals.push((j, zz));
        }
    }
    remainder(family, &removals)
}
