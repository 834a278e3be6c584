use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::InducingScheme;
use crate::dynamics::PiecewiseMap;
use crate::geometry::{dist, Cell, Point, Region};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `tau` disagrees with the itinerary length or the sum of its parts.
    Tau { cell: usize, tau: usize, itinerary: usize, parts: usize },
    /// Image or seed index outside the partition.
    Index { cell: usize },
    /// The inverse chain from an image point is undefined or leaves the seed.
    Markov { cell: usize, point: Vec<f64> },
    Expansion { cell: usize, ratio: f64, bound: f64 },
    Distortion { cell: usize, value: f64, bound: f64 },
}

impl Violation {
    pub fn cell(&self) -> usize {
        match self {
            Violation::Tau { cell, .. }
            | Violation::Index { cell }
            | Violation::Markov { cell, .. }
            | Violation::Expansion { cell, .. }
            | Violation::Distortion { cell, .. } => *cell,
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Tau { cell, tau, itinerary, parts } => {
                write!(f, "cell {cell}: tau {tau} but itinerary length {itinerary} and parts sum {parts}")
            }
            Violation::Index { cell } => write!(f, "cell {cell}: seed or image outside the partition"),
            Violation::Markov { cell, point } => write!(f, "cell {cell}: inverse chain fails at {point:?}"),
            Violation::Expansion { cell, ratio, bound } => {
                write!(f, "cell {cell}: contraction {ratio:e} exceeds Lambda^tau = {bound:e}")
            }
            Violation::Distortion { cell, value, bound } => {
                write!(f, "cell {cell}: distortion {value} exceeds {bound}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GmReport {
    pub cells: usize,
    pub images: usize,
    /// Largest sampled `d(h x, h y) / (Lambda^tau d(x, y))`.
    pub expansion: f64,
    /// Largest sampled `|ln Jh(x) - ln Jh(y)| / d(x, y)^alpha`.
    pub distortion: f64,
    pub violations: Vec<Violation>,
}

impl GmReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn near(region: &Region, p: &Point) -> bool {
    let g = region.grid();
    let Some(c) = g.cell_of(p) else { return false };
    if region.contains_cell(&c) {
        return true;
    }
    let d = g.dim();
    let shape = g.shape();
    (0..d).any(|i| {
        [c[i].wrapping_sub(1), c[i] + 1].into_iter().any(|v| {
            if v >= shape[i] {
                return false;
            }
            let mut n: Cell = c;
            n[i] = v;
            region.contains_cell(&n)
        })
    })
}

fn random_point(rng: &mut ChaCha8Rng, region: &Region, cells: &[Cell]) -> Point {
    let g = region.grid();
    let c = cells[rng.random_range(0..cells.len())];
    let mut p = g.center(&c);
    for v in p.iter_mut().take(g.dim()) {
        *v += (rng.random::<f64>() - 0.5) * 0.5 * g.eta();
    }
    p
}

/// Samples every cell: its itinerary must pull the image element back into
/// the seed (within one cell), contract by `Lambda^tau` and keep `ln Jh`
/// Hölder with the composed distortion constant.
pub fn verify_gibbs_markov(scheme: &InducingScheme, map: &PiecewiseMap, samples: usize, seed: u64) -> GmReport {
    let part = &scheme.partition;
    let c = map.constants();
    let d = map.dim();
    let dist_bound = c.distortion();
    let eta = map.eta();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GmReport { cells: scheme.cells.len(), images: scheme.images().len(), ..Default::default() };
    let elem_cells: Vec<Vec<Cell>> = part.elements.iter().map(|e| e.cells().collect()).collect();
    for (i, cell) in scheme.cells.iter().enumerate() {
        let parts: usize = cell.parts.iter().sum();
        if cell.tau != cell.itinerary.len() || cell.tau != parts || cell.tau == 0 {
            report.violations.push(Violation::Tau { cell: i, tau: cell.tau, itinerary: cell.itinerary.len(), parts });
            continue;
        }
        if cell.image >= part.len() || cell.seed >= part.len() {
            report.violations.push(Violation::Index { cell: i });
            continue;
        }
        let image = &part.elements[cell.image];
        let seed_el = &part.elements[cell.seed];
        let ic = &elem_cells[cell.image];
        let bound = c.lambda.powi(cell.tau as i32);
        let mut pts: Vec<(Point, Point, f64)> = Vec::with_capacity(samples);
        for _ in 0..samples {
            let y = random_point(&mut rng, image, ic);
            match map.inverse_chain(&cell.itinerary, &y) {
                Some((x, j)) if near(seed_el, &x) => pts.push((y, x, j)),
                _ => {
                    report.violations.push(Violation::Markov { cell: i, point: y[..d].to_vec() });
                    break;
                }
            }
        }
        if pts.len() < samples {
            continue;
        }
        let mut worst_e = 0.0f64;
        let mut worst_d = 0.0f64;
        for w in pts.windows(2) {
            let (y1, x1, j1) = &w[0];
            let (y2, x2, j2) = &w[1];
            let dy = dist(y1, y2, d);
            // nearly coincident samples only measure rounding
            if dy < 0.25 * eta {
                continue;
            }
            // absolute rounding of the composed inverse chain
            let slack = 8.0 * cell.tau as f64 * f64::EPSILON;
            worst_e = worst_e.max((dist(x1, x2, d) - slack).max(0.0) / (bound * dy));
            worst_d = worst_d.max((j1.ln() - j2.ln()).abs() / dy.powf(c.alpha));
        }
        report.expansion = report.expansion.max(worst_e);
        report.distortion = report.distortion.max(worst_d);
        if worst_e > 1.0 + 1e-6 {
            report.violations.push(Violation::Expansion { cell: i, ratio: worst_e * bound, bound });
        }
        if worst_d > dist_bound * (1.0 + 1e-6) + 1e-9 {
            report.violations.push(Violation::Distortion { cell: i, value: worst_d, bound: dist_bound });
        }
    }
    report
}

/// Full-branch check of an upgraded scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct FullBranchReport {
    pub base: usize,
    /// Largest measure of base cells outside some cell's image, relative to
    /// the base measure.
    pub worst_gap: f64,
    pub worst_cell: Option<usize>,
    /// Cells where `tau` differs from the sum of the composed return times.
    pub decomposition_failures: usize,
}

/// For every cell, the measure of base cells whose inverse chain along the
/// cell's itinerary is undefined or leaves the base (image deficit), and the
/// exact integer identity `tau = sum of parts = itinerary length`.
pub fn full_branch_report(scheme: &InducingScheme, map: &PiecewiseMap) -> Option<FullBranchReport> {
    let base = scheme.manifest.base?;
    let z = &scheme.partition.elements[base];
    let g = map.grid();
    let zc: Vec<Cell> = z.cells().collect();
    let mut worst_gap = 0.0f64;
    let mut worst_cell = None;
    let mut decomposition_failures = 0;
    for (i, cell) in scheme.cells.iter().enumerate() {
        if cell.parts.iter().sum::<usize>() != cell.tau || cell.itinerary.len() != cell.tau || cell.image != base {
            decomposition_failures += 1;
        }
        let missing = zc
            .iter()
            .filter(|c| !map.inverse_chain(&cell.itinerary, &g.center(c)).is_some_and(|(x, _)| near(z, &x)))
            .count();
        let gap = missing as f64 / zc.len() as f64;
        if gap > worst_gap {
            worst_gap = gap;
            worst_cell = Some(i);
        }
    }
    Some(FullBranchReport { base, worst_gap, worst_cell, decomposition_failures })
}
