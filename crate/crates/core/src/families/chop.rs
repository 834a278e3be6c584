use crate::error::{Error, Result};
use crate::geometry::{CellBox, Point, Region, MAX_DIM};
use crate::partition::SLIVER_CELLS;

const OFFSETS: usize = 32;

/// Splits `v` into pieces of diameter at most `eps0` along a grid of cubes of
/// side `eps0 / (3 sqrt d)`. The grid offset along each axis is the first of
/// 32 candidates whose slice volume (cells crossed by grid planes) does not
/// exceed the average over all candidates. When `avoid` meets `v`, the
/// `3^d` cubes around it are merged into a single piece containing it.
/// Pieces below eight cells join a neighbouring piece. Sets of diameter at
/// most `eps0` are returned unchanged.
pub fn chop(v: &Region, eps0: f64, avoid: Option<&Region>) -> Result<Vec<Region>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let g = v.grid().clone();
    let d = g.dim();
    let eta = g.eta();
    let sqrt_d = (d as f64).sqrt();
    let star = match avoid {
        Some(a) => {
            let s = a.intersect(v);
            let limit = eps0 / (4.0 * sqrt_d);
            let diam = s.diameter();
            if diam > limit {
                return Err(Error::AvoidSetTooLarge { diam, limit });
            }
            (!s.is_empty()).then_some(s)
        }
        None => None,
    };
    if v.diameter() <= eps0 {
        return Ok(vec![v.clone()]);
    }
    let side = (eps0 / (3.0 * sqrt_d) / eta).floor() * eta;
    if side < eta {
        return Err(Error::EpsilonBelowResolution { eps: eps0, eta });
    }
    let origin = g.origin();
    let mut offset = [0.0; MAX_DIM];
    let bb = v.bbox();
    for (i, o) in offset.iter_mut().enumerate().take(d) {
        // cells per index along axis i
        let mut hist = vec![0usize; bb.hi[i] - bb.lo[i]];
        for c in v.cells() {
            hist[c[i] - bb.lo[i]] += 1;
        }
        let counts: Vec<usize> = (0..OFFSETS)
            .map(|k| {
                let a = k as f64 * side / OFFSETS as f64;
                let mut m = ((bb.lo[i] as f64 * eta - a) / side).ceil();
                let mut n = 0;
                loop {
                    let j = ((a + m * side) / eta).floor();
                    if j >= bb.hi[i] as f64 {
                        break;
                    }
                    if j >= bb.lo[i] as f64 {
                        n += hist[j as usize - bb.lo[i]];
                    }
                    m += 1.0;
                }
                n
            })
            .collect();
        let mean = counts.iter().sum::<usize>() as f64 / OFFSETS as f64;
        let k = counts.iter().position(|&c| c as f64 <= mean).unwrap_or(0);
        *o = k as f64 * side / OFFSETS as f64;
    }
    // cube index of every cell index along each axis, as runs
    let mut runs: Vec<Vec<(i64, usize, usize)>> = Vec::with_capacity(d);
    for (i, off) in offset.iter().enumerate().take(d) {
        let mut r: Vec<(i64, usize, usize)> = Vec::new();
        for c in bb.lo[i]..bb.hi[i] {
            let x = origin[i] + (c as f64 + 0.5) * eta;
            let q = ((x - origin[i] - off) / side).floor() as i64;
            match r.last_mut() {
                Some(last) if last.0 == q => last.2 = c + 1,
                _ => r.push((q, c, c + 1)),
            }
        }
        runs.push(r);
    }
    let star_key: Option<Vec<i64>> = star.as_ref().and_then(|s| s.cells().next()).map(|c| {
        (0..d).map(|i| runs[i].iter().find(|r| c[i] >= r.1 && c[i] < r.2).expect("star lies in v").0).collect()
    });
    let mut boxes: Vec<CellBox> = Vec::new();
    let mut merged: Option<CellBox> = None;
    let mut idx = vec![0usize; d];
    'outer: loop {
        let mut b = CellBox::unit();
        let mut in_star = star_key.is_some();
        for i in 0..d {
            let r = runs[i][idx[i]];
            b.lo[i] = r.1;
            b.hi[i] = r.2;
            if let Some(sk) = &star_key {
                in_star &= (r.0 - sk[i]).abs() <= 1;
            }
        }
        if in_star {
            merged = Some(merged.map_or(b, |m| m.hull(&b)));
        } else {
            boxes.push(b);
        }
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < runs[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    let has_star = merged.is_some();
    let out: Vec<Region> = merged
        .iter()
        .chain(boxes.iter())
        .map(|b| v.crop(b))
        .filter(|r| !r.is_empty())
        .collect();
    let out = absorb_slivers(out, usize::from(has_star));
    if let Some(s) = &star {
        debug_assert!(out.iter().any(|p| s.is_subset_of(p)));
    }
    Ok(out)
}

/// Merges pieces below `SLIVER_CELLS` cells into the neighbouring piece
/// sharing most faces with them. Pieces before `first` (the piece kept
/// around the avoided set) never absorb slivers, so diameters stay within
/// the chopping bound.
fn absorb_slivers(mut pieces: Vec<Region>, first: usize) -> Vec<Region> {
    let d = match pieces.first() {
        Some(p) => p.grid().dim(),
        None => return pieces,
    };
    let shape = pieces[0].grid().shape();
    let mut gone = vec![false; pieces.len()];
    for i in first..pieces.len() {
        if pieces[i].count() >= SLIVER_CELLS {
            continue;
        }
        let mut shared = vec![0usize; pieces.len()];
        for c in pieces[i].cells() {
            for a in 0..d {
                for v in [c[a].wrapping_sub(1), c[a] + 1] {
                    if v >= shape[a] {
                        continue;
                    }
                    let mut n = c;
                    n[a] = v;
                    for (j, p) in pieces.iter().enumerate().skip(first) {
                        if j != i && !gone[j] && p.count() >= SLIVER_CELLS && p.contains_cell(&n) {
                            shared[j] += 1;
                        }
                    }
                }
            }
        }
        let best = (0..pieces.len()).filter(|&j| shared[j] > 0).max_by(|&a, &b| shared[a].cmp(&shared[b]).then(b.cmp(&a)));
        if let Some(j) = best {
            pieces[j] = pieces[j].union(&pieces[i]);
            gone[i] = true;
        }
    }
    pieces.into_iter().zip(gone).filter(|(_, g)| !g).map(|(p, _)| p).collect()
}

/// Chopping cost `sum_l int_{∂_eps U_l \ ∂_eps V} J / int_V J` for pieces
/// `U_l` of `V`, weighted by the Jacobian `J` of the inverse branch.
pub fn chop_cost(v: &Region, pieces: &[Region], eps: f64, jac: impl Fn(&Point) -> f64) -> f64 {
    let g = v.grid().clone();
    let total: f64 = v.cells().map(|c| jac(&g.center(&c))).sum();
    let outer = v.eps_boundary(eps);
    let mut cost = 0.0;
    for u in pieces {
        let depth = u.depths();
        for (k, c) in u.indexed_cells() {
            if depth[k] < eps && !outer.contains_cell(&c) {
                cost += jac(&g.center(&c));
            }
        }
    }
    cost / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::sync::Arc;

    #[test]
    fn pieces_partition_the_set_and_respect_the_diameter() {
        let g = Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], 1.0 / 256.0).unwrap());
        let v = Region::ball(g.clone(), &[0.5, 0.5, 0.0], 0.4);
        let z = Region::open_box(g.clone(), &[0.41, 0.52], &[0.43, 0.54]);
        let pieces = chop(&v, 0.2, Some(&z)).unwrap();
        assert_eq!(pieces.iter().map(Region::count).sum::<usize>(), v.count());
        assert!(pieces.iter().all(|p| p.diameter() <= 0.2 + 1e-12));
        assert!(pieces.iter().any(|p| z.is_subset_of(p)));
        let big = Region::open_box(g, &[0.1, 0.1], &[0.3, 0.3]);
        assert!(matches!(chop(&v, 0.2, Some(&big)), Err(Error::AvoidSetTooLarge { .. })));
    }
}
