//! Inducing schemes: the Gibbs-Markov builder, the first-return upgrade to a
//! full-branch scheme, recurrent and gcd-one variants, tail fits and
//! verification of the induced map.
//!
//! A scheme cell is the set of points of a seed element that are stopped at
//! the same time `tau` into the same partition element. Its measure is exact
//! (carried by family weights); its raster domain is the pullback of the
//! image along a representative itinerary and is only an approximation once
//! the cylinder drops below the grid pitch.

mod build;
mod tail;
mod times;
mod upgrade;
mod verify;

use std::sync::Arc;

pub use build::{build_scheme_full_recurrent, build_scheme_gcd_one, build_scheme_gm, BuildOptions, Builder};
pub use tail::{fit_tail, tail_table, TailFit};
pub use times::{adjust_times, cover_report, gcd, gcd_all, AdjustedTimes, CoverReport, RecurrenceSpec};
pub use upgrade::upgrade_full_branch;
pub use verify::{full_branch_report, verify_gibbs_markov, FullBranchReport, GmReport, Violation};

use crate::geometry::Region;
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Gm,
    Full,
    Recurrent,
    Gcd1,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Gm => "gm",
            Mode::Full => "full",
            Mode::Recurrent => "recurrent",
            Mode::Gcd1 => "gcd1",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "gm" => Some(Mode::Gm),
            "full" => Some(Mode::Full),
            "recurrent" => Some(Mode::Recurrent),
            "gcd1" => Some(Mode::Gcd1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeCell {
    /// Partition element containing the cell.
    pub seed: usize,
    pub tau: usize,
    /// Partition element `T^tau` maps the cell onto.
    pub image: usize,
    /// Lebesgue measure of the cell.
    pub measure: f64,
    /// Number of cylinders merged into the cell.
    pub multiplicity: f64,
    /// Branch sequence of the heaviest cylinder.
    pub itinerary: Vec<usize>,
    /// Return times of the base scheme composing `tau` (a single entry
    /// outside upgraded schemes).
    pub parts: Vec<usize>,
    pub domain: Region,
}

/// Per-round record of a builder run.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundLog {
    pub seed: usize,
    pub round: usize,
    pub time: usize,
    pub steps: usize,
    pub pairs: usize,
    /// Properness constant of the family when stopping.
    pub properness: f64,
    /// Weight on `delta0`-regular pairs over total weight.
    pub regular_fraction: f64,
    pub stopped: f64,
    pub remaining: f64,
}

/// Run parameters recorded with a scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub mode: Mode,
    pub map_name: String,
    pub map_hash: String,
    pub map_spec: String,
    pub eta: f64,
    pub a0: f64,
    pub eps0: f64,
    pub p: f64,
    pub delta0: f64,
    pub n0: usize,
    pub t: f64,
    /// Cube factor of the partition.
    pub c: f64,
    pub seed: u64,
    /// Seed elements the scheme was built on.
    pub seeds: Vec<usize>,
    /// Base element of a full-branch scheme.
    pub base: Option<usize>,
    pub zeta4: f64,
    /// Largest number of recovery steps taken in a round.
    pub max_recovery: usize,
}

#[derive(Clone, Debug)]
pub struct InducingScheme {
    pub manifest: Manifest,
    pub partition: Arc<Partition>,
    /// Prescribed element 0 of the partition, if any.
    pub z: Option<Region>,
    pub cells: Vec<SchemeCell>,
    /// Measure of the set the scheme is defined on.
    pub base_measure: f64,
    /// Measure where `tau` is undefined when the builder halted.
    pub unresolved: f64,
    /// `(n, Leb(tau > n))`.
    pub tail: Vec<(usize, f64)>,
    /// Largest `n` for which the tail entry is exact: unresolved mass has
    /// return time beyond it. `None` when every entry is exact.
    pub cutoff: Option<usize>,
    pub fit: Option<TailFit>,
    pub rounds: Vec<RoundLog>,
}

impl InducingScheme {
    /// Distinct image elements.
    pub fn images(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(|c| c.image).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn total_cell_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Recomputes the tail table and, when the tail supports it, the fit
    /// over `n <= cutoff`; `floor` is the smallest tail mass used.
    pub fn refit(&mut self, floor: f64) {
        self.tail = tail_table(self.cells.iter().map(|c| (c.tau, c.measure)), self.unresolved);
        let n = self.cutoff.map_or(self.tail.len(), |c| (c + 1).min(self.tail.len()));
        self.fit = fit_tail(&self.tail[..n], floor).ok();
    }

    /// Measure of the cells with `tau = n`.
    pub fn measure_at(&self, n: usize) -> f64 {
        self.cells.iter().filter(|c| c.tau == n).map(|c| c.measure).sum()
    }

    /// Return times carrying positive measure.
    pub fn realized_times(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().filter(|c| c.measure > 0.0).map(|c| c.tau).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
