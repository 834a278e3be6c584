use crate::dynamics::PiecewiseMap;
use crate::error::{Error, Result};
use crate::geometry::Region;

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub fn gcd_all(v: &[usize]) -> usize {
    v.iter().fold(0, |g, &x| gcd(g, x))
}

/// A fully recurrent set: `T^{n_j}` along `itineraries[j]` maps
/// `O_j ∩ Z` onto a superset of `Z`, the sets `O_j ∩ Z` are pairwise
/// disjoint and the times have gcd 1.
#[derive(Clone, Debug)]
pub struct RecurrenceSpec {
    pub z: Region,
    pub times: Vec<usize>,
    pub itineraries: Vec<Vec<usize>>,
}

/// Raster check of one covering branch.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    /// Cells of `Z` outside `T^n(O ∩ Z)`.
    pub uncovered: usize,
    /// Allowed number of uncovered cells.
    pub tolerance: usize,
    /// Cells of `Z` whose orbit follows the itinerary.
    pub start: Region,
}

impl RecurrenceSpec {
    pub fn new(z: Region, times: Vec<usize>, itineraries: Vec<Vec<usize>>) -> Result<RecurrenceSpec> {
        if times.len() < 2 || times.len() != itineraries.len() {
            return Err(Error::Precondition("a recurrence spec needs K >= 2 times, one itinerary each".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) || times[0] == 0 {
            return Err(Error::Precondition(format!("times {times:?} must be positive and increasing")));
        }
        if let Some(j) = (0..times.len()).find(|&j| itineraries[j].len() != times[j]) {
            return Err(Error::Precondition(format!("itinerary {j} has length {} but time {}", itineraries[j].len(), times[j])));
        }
        if gcd_all(&times) != 1 {
            return Err(Error::Precondition(format!("times {times:?} do not have gcd 1")));
        }
        if z.is_empty() {
            return Err(Error::EmptyRegion("recurrent set".into()));
        }
        Ok(RecurrenceSpec { z, times, itineraries })
    }

    /// Finds, for each time, an itinerary covering `Z` whose starting set is
    /// disjoint from those already chosen (depth-first over the branch
    /// sequences followed by some cell of `Z`).
    pub fn search(map: &PiecewiseMap, z: Region, times: Vec<usize>) -> Result<RecurrenceSpec> {
        const LEAF_CAP: usize = 1 << 16;
        let g = map.grid();
        let d = map.dim();
        let mut chosen: Vec<Vec<usize>> = Vec::new();
        let mut starts: Vec<Region> = Vec::new();
        for &n in &times {
            let mut found = None;
            let mut leaves = 0;
            let init: Vec<_> = z.cells().map(|c| g.center(&c)).collect();
            let mut stack: Vec<(Vec<usize>, Vec<crate::geometry::Point>)> = vec![(Vec::new(), init)];
            while let Some((itin, pts)) = stack.pop() {
                if itin.len() == n {
                    leaves += 1;
                    let r = cover_report(map, &z, &itin);
                    if r.uncovered <= r.tolerance && starts.iter().all(|s| s.intersect(&r.start).is_empty()) {
                        found = Some((itin, r.start));
                        break;
                    }
                    if leaves >= LEAF_CAP {
                        break;
                    }
                    continue;
                }
                for b in (0..map.branches().len()).rev() {
                    let next: Vec<_> = pts
                        .iter()
                        .filter(|p| map.in_domain(b, p))
                        .map(|p| map.branches()[b].forward.apply(p, d))
                        .collect();
                    if !next.is_empty() {
                        let mut it = itin.clone();
                        it.push(b);
                        stack.push((it, next));
                    }
                }
            }
            let (itin, start) = found.ok_or_else(|| Error::RecurrenceCoverFailed {
                time: n,
                detail: "no itinerary of this length covers Z from a fresh part of Z".into(),
            })?;
            chosen.push(itin);
            starts.push(start);
        }
        RecurrenceSpec::new(z, times, chosen)
    }

    /// Checks covering of every branch and disjointness of the starting sets.
    pub fn verify(&self, map: &PiecewiseMap) -> Result<Vec<CoverReport>> {
        let reports: Vec<CoverReport> = self
            .itineraries
            .iter()
            .map(|it| cover_report(map, &self.z, it))
            .collect();
        for (j, r) in reports.iter().enumerate() {
            if r.uncovered > r.tolerance {
                return Err(Error::RecurrenceCoverFailed {
                    time: self.times[j],
                    detail: format!("{} of {} cells of Z are not covered", r.uncovered, self.z.count()),
                });
            }
            for (i, q) in reports.iter().enumerate().take(j) {
                let overlap = r.start.intersect(&q.start).count();
                if overlap > 0 {
                    return Err(Error::Precondition(format!(
                        "covering branches {i} and {j} overlap in {overlap} cells of Z"
                    )));
                }
            }
        }
        Ok(reports)
    }
}

/// Covering of `Z` by `T^n(O ∩ Z)` along an itinerary: a cell `y` of `Z` is
/// covered when the inverse chain from its center is defined and ends in `Z`.
pub fn cover_report(map: &PiecewiseMap, z: &Region, itinerary: &[usize]) -> CoverReport {
    let g = map.grid();
    let uncovered = z
        .cells()
        .filter(|c| {
            !map.inverse_chain(itinerary, &g.center(c)).is_some_and(|(x, _)| z.contains_point(&x))
        })
        .count();
    let start = z.filter(|c| {
        let mut p = g.center(c);
        for &b in itinerary {
            if !map.in_domain(b, &p) {
                return false;
            }
            p = map.branches()[b].forward.apply(&p, map.dim());
        }
        true
    });
    CoverReport { uncovered, tolerance: z.boundary_cells().len(), start }
}

/// Adjusted times and the itineraries realizing them.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjustedTimes {
    pub times: Vec<usize>,
    pub itineraries: Vec<Vec<usize>>,
    pub m: Vec<usize>,
    /// Multiplier of the final time's extension.
    pub l: usize,
}

/// Moves the recurrence times so that `n_1 >= c1` and consecutive gaps are
/// at least `c2` while keeping gcd 1 and covering:
/// `n_j = ñ_j + m_j ñ_K` for `j < K` and `n_K = ñ_K + L sum_{j<K} n_j` with
/// the smallest `L >= 1` making the final gap at least `c2`. Times already
/// satisfying both bounds are returned unchanged.
pub fn adjust_times(spec: &RecurrenceSpec, c1: f64, c2: f64) -> AdjustedTimes {
    let t = &spec.times;
    let k = t.len();
    let ok = t[0] as f64 >= c1 && t.windows(2).all(|w| (w[1] - w[0]) as f64 >= c2);
    if ok {
        return AdjustedTimes { times: t.clone(), itineraries: spec.itineraries.clone(), m: vec![0; k], l: 0 };
    }
    let nk = t[k - 1];
    let step = (c2.max(0.0) / nk as f64).ceil() as usize;
    let mut m = vec![0usize; k];
    m[0] = (c1.max(0.0) / nk as f64).ceil() as usize;
    for j in 1..k - 1 {
        m[j] = m[j - 1] + step;
    }
    let mut times = Vec::with_capacity(k);
    let mut itins = Vec::with_capacity(k);
    let last = &spec.itineraries[k - 1];
    for j in 0..k - 1 {
        times.push(t[j] + m[j] * nk);
        let mut it = spec.itineraries[j].clone();
        for _ in 0..m[j] {
            it.extend_from_slice(last);
        }
        itins.push(it);
    }
    let sum: usize = times.iter().sum();
    let prev = times[k - 2];
    let mut l = 1;
    while ((nk + l * sum) as f64) < prev as f64 + c2 || nk + l * sum <= prev {
        l += 1;
    }
    times.push(nk + l * sum);
    let mut it = last.clone();
    for _ in 0..l {
        for p in &itins {
            it.extend_from_slice(p);
        }
    }
    itins.push(it);
    AdjustedTimes { times, itineraries: itins, m, l }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy(times: &[usize]) -> RecurrenceSpec {
        let g = std::sync::Arc::new(crate::geometry::Grid::new(&[0.0], &[1.0], 0.125).unwrap());
        let it = times.iter().map(|&n| vec![0; n]).collect();
        RecurrenceSpec::new(Region::full(g), times.to_vec(), it).unwrap()
    }

    #[test]
    fn worked_example() {
        let a = adjust_times(&dummy(&[2, 3]), 5.0, 5.0);
        assert_eq!(a.m[0], 2);
        assert_eq!(a.times, vec![8, 19]);
        assert_eq!(a.l, 2);
        assert!(a.itineraries.iter().zip(&a.times).all(|(i, &n)| i.len() == n));
    }

    #[test]
    fn already_spread_times_are_kept() {
        let a = adjust_times(&dummy(&[2, 3]), 0.0, 0.0);
        assert_eq!(a.times, vec![2, 3]);
    }
}
