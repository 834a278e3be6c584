use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::times::{adjust_times, RecurrenceSpec};
use super::upgrade::upgrade_full_branch;
use super::{InducingScheme, Manifest, Mode, RoundLog, SchemeCell};
use crate::dynamics::{MapSpec, PiecewiseMap};
use crate::error::{Error, Result};
use crate::families::{
    calibrate_zetas, calibration_suite, coalesce, iterate, remainder, remainder_with_z, GrowthConstants,
    IterateOptions, StandardFamily, StandardPair,
};
use crate::geometry::{Cell, Region};
use crate::partition::{fixed_ratio_for, Partition, PartitionScale};

/// Parameters of the scheme builders.
#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Properness target `P`; `delta0 = 1 / (3 P)`.
    pub p: f64,
    pub scale: PartitionScale,
    /// A seed halts once its unresolved weight is below this fraction of its
    /// measure.
    pub halt_fraction: f64,
    pub round_cap: usize,
    /// Recovery steps allowed per round before stopping anyway.
    pub step_cap: usize,
    /// Largest unresolved fraction accepted when rounds run out.
    pub max_unresolved_fraction: f64,
    /// Build on a deterministic random subset of this many seed elements.
    pub seeds: Option<usize>,
    pub seed: u64,
    pub pair_cap: usize,
    /// Fraction of stops whose collar inequality is checked.
    pub audit_fraction: f64,
    /// Nice-boundary constant of the prescribed element.
    pub c_z: f64,
    /// Calibrate the growth constants (zeta4 must stay below `P`).
    pub calibrate: bool,
    /// Depth cap of the first-return composition, in base return times.
    pub return_cap: usize,
    /// Partition scale `delta`; `delta0` when unset.
    pub delta: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            p: 50.0,
            scale: PartitionScale::Admissible,
            halt_fraction: 1e-4,
            round_cap: 400,
            step_cap: 16,
            max_unresolved_fraction: 0.5,
            seeds: None,
            seed: 0,
            pair_cap: 2_000_000,
            audit_fraction: 0.0,
            c_z: 0.0,
            calibrate: true,
            return_cap: 4000,
            delta: None,
        }
    }
}

/// Shared state of a build: the map, constants, partition and ratio `t`.
#[derive(Clone, Debug)]
pub struct Builder {
    pub spec: MapSpec,
    pub map: PiecewiseMap,
    pub constants: GrowthConstants,
    pub partition: Arc<Partition>,
    pub t: f64,
    pub opts: BuildOptions,
    pub z: Option<Region>,
}

#[derive(Default)]
struct CellAcc {
    measure: f64,
    multiplicity: f64,
    heaviest: f64,
    itinerary: Vec<usize>,
}

#[derive(Default)]
struct SeedRun {
    cells: BTreeMap<(usize, usize), CellAcc>,
    unresolved: f64,
    logs: Vec<RoundLog>,
    max_steps: usize,
}

impl SeedRun {
    fn stop(&mut self, time: usize, image: usize, weight: f64, multiplicity: f64, itinerary: Vec<usize>) {
        let acc = self.cells.entry((time, image)).or_default();
        acc.measure += weight;
        acc.multiplicity += multiplicity;
        if weight > acc.heaviest {
            acc.heaviest = weight;
            acc.itinerary = itinerary;
        }
    }
}

impl Builder {
    /// Validates the map constants, fits the growth constants and builds the
    /// partition at `delta0`, with `z` as element 0 when given.
    pub fn new(spec: &MapSpec, eta: f64, opts: BuildOptions, z: Option<&Region>) -> Result<Builder> {
        spec.constants().validate()?;
        let map = spec.build(eta)?;
        let mut constants = GrowthConstants::new(&map, opts.p)?;
        if opts.calibrate {
            let iopts = IterateOptions::new(constants.eps0);
            let suite = calibration_suite(&map, &constants, opts.p, 4, opts.seed)?;
            let z = calibrate_zetas(&map, &constants, &suite, constants.n0, &iopts)?;
            constants = constants.with_zetas(z.zeta2, z.zeta3, z.zeta4)?;
        }
        let z = z.map(|z| on_grid(z, &map)).transpose()?;
        let delta = opts.delta.unwrap_or(constants.delta0);
        if !(delta > 0.0) {
            return Err(Error::Config(format!("partition scale delta = {delta} must be positive")));
        }
        let partition = Arc::new(Partition::new(map.space(), delta, opts.scale, z.as_ref())?);
        let t = fixed_ratio_for(&constants, &partition);
        Ok(Builder { spec: spec.clone(), map, constants, partition, t, opts, z })
    }

    fn iterate_options(&self) -> IterateOptions {
        IterateOptions { pair_cap: self.opts.pair_cap, ..IterateOptions::new(self.constants.eps0) }
    }

    /// Seed elements: all, or a deterministic subset (always keeping the
    /// prescribed element).
    pub fn seed_elements(&self) -> Vec<usize> {
        let n = self.partition.len();
        match self.opts.seeds {
            Some(k) if k < n => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed ^ 0x5eed);
                let mut v: Vec<usize> = sample(&mut rng, n, k).into_vec();
                if self.z.is_some() && !v.contains(&0) {
                    v[0] = 0;
                }
                v.sort_unstable();
                v
            }
            _ => (0..n).collect(),
        }
    }

    fn seed_family(&self, s: usize) -> Result<StandardFamily> {
        let r = &self.partition.elements[s];
        StandardFamily::single(StandardPair::uniform(r.clone())?, r.measure())
    }

    fn audited(&self, seed: usize, round: usize, j: usize) -> bool {
        if self.opts.audit_fraction <= 0.0 {
            return false;
        }
        let h = (seed as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (round as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
            ^ (j as u64).wrapping_mul(0x1656_67B1_9E37_79F9)
            ^ self.opts.seed;
        ((h >> 11) as f64 / (1u64 << 53) as f64) < self.opts.audit_fraction
    }

    /// Alternates recovery (single steps until `P`-proper) and stopping of
    /// every `delta0`-regular pair until the seed's weight is exhausted.
    fn stop_loop(&self, seed: usize, mut fam: StandardFamily, mut time: usize, run: &mut SeedRun) -> Result<()> {
        let k = &self.constants;
        let iopts = self.iterate_options();
        let halt = self.opts.halt_fraction * self.partition.elements[seed].measure();
        for round in 0..self.opts.round_cap {
            if fam.is_empty() || fam.total_weight() <= halt {
                break;
            }
            let mut steps = 0;
            let mut properness;
            loop {
                fam = coalesce(iterate(&self.map, &fam, 1, &iopts)?);
                steps += 1;
                time += 1;
                properness = fam.properness(&k.eps_grid);
                if fam.is_empty() || properness <= k.p || steps >= self.opts.step_cap {
                    break;
                }
            }
            run.max_steps = run.max_steps.max(steps);
            if fam.is_empty() {
                break;
            }
            let before = fam.total_weight();
            let mut removals = Vec::new();
            let mut images = Vec::new();
            let mut regular = 0.0;
            for (j, pair) in fam.pairs.iter().enumerate() {
                if !pair.domain.is_delta_regular(k.delta0) {
                    continue;
                }
                regular += fam.weights[j];
                let scales: &[f64] = if self.audited(seed, round, j) { &k.eps_grid } else { &[] };
                let sel = self.partition.select_contained_element(&pair.domain, self.opts.c_z, scales)?;
                removals.push((j, self.partition.elements[sel.element].clone()));
                images.push(sel.element);
            }
            let rep = remainder(&fam, &removals)?;
            let mut stopped = 0.0;
            for (&(j, w), &img) in rep.stopped.iter().zip(&images) {
                stopped += w;
                let tag = &fam.tags[j];
                run.stop(time, img, w, tag.multiplicity, tag.itinerary.to_vec());
            }
            fam = rep.family;
            let remaining = fam.total_weight();
            if properness <= k.p && stopped < self.t * remaining {
                return Err(Error::StopRatioViolated { round, stopped, required: self.t * remaining });
            }
            run.logs.push(RoundLog {
                seed,
                round,
                time,
                steps,
                pairs: rep.stopped.len().max(fam.len()),
                properness,
                regular_fraction: regular / before,
                stopped,
                remaining,
            });
        }
        run.unresolved += fam.total_weight();
        Ok(())
    }

    fn finish(&self, seed: usize, run: SeedRun) -> (Vec<SchemeCell>, f64, Vec<RoundLog>, usize) {
        let seed_region = &self.partition.elements[seed];
        let cells = run
            .cells
            .into_iter()
            .map(|((tau, image), acc)| SchemeCell {
                seed,
                tau,
                image,
                measure: acc.measure,
                multiplicity: acc.multiplicity,
                domain: pullback(&self.map, seed_region, &self.partition.elements[image], &acc.itinerary),
                parts: vec![tau],
                itinerary: acc.itinerary,
            })
            .collect();
        (cells, run.unresolved, run.logs, run.max_steps)
    }

    fn run_seed(&self, s: usize) -> Result<(Vec<SchemeCell>, f64, Vec<RoundLog>, usize)> {
        let mut run = SeedRun::default();
        self.stop_loop(s, self.seed_family(s)?, 0, &mut run)?;
        Ok(self.finish(s, run))
    }

    fn assemble(
        &self,
        mode: Mode,
        seeds: Vec<usize>,
        results: Vec<(Vec<SchemeCell>, f64, Vec<RoundLog>, usize)>,
    ) -> Result<InducingScheme> {
        let mut cells = Vec::new();
        let mut unresolved = 0.0;
        let mut rounds = Vec::new();
        let mut max_recovery = 0;
        let mut cutoff: Option<usize> = None;
        for (c, u, l, m) in results {
            if u > 0.0 {
                let halt = l.last().map_or(0, |r| r.time);
                cutoff = Some(cutoff.map_or(halt, |h| h.min(halt)));
            }
            cells.extend(c);
            unresolved += u;
            rounds.extend(l);
            max_recovery = max_recovery.max(m);
        }
        let base_measure: f64 = seeds.iter().map(|&s| self.partition.elements[s].measure()).sum();
        let limit = self.opts.max_unresolved_fraction * base_measure;
        if unresolved > limit {
            let rounds_run = rounds.iter().map(|r: &RoundLog| r.round + 1).max().unwrap_or(0);
            return Err(Error::RoundCap { rounds: rounds_run, unresolved, limit });
        }
        let k = &self.constants;
        let manifest = Manifest {
            mode,
            map_name: self.spec.name.clone(),
            map_hash: self.spec.hash(),
            map_spec: self.spec.text().to_string(),
            eta: k.eta,
            a0: k.a0,
            eps0: k.eps0,
            p: k.p,
            delta0: k.delta0,
            n0: k.n0,
            t: self.t,
            c: self.partition.c,
            seed: self.opts.seed,
            seeds,
            base: None,
            zeta4: k.zeta4.unwrap_or(0.0),
            max_recovery,
        };
        let mut scheme = InducingScheme {
            manifest,
            partition: self.partition.clone(),
            z: self.z.clone(),
            cells,
            base_measure,
            unresolved,
            tail: Vec::new(),
            cutoff,
            fit: None,
            rounds,
        };
        scheme.refit(self.tail_floor());
        Ok(scheme)
    }

    /// Smallest tail mass used in fits: ten cells.
    pub fn tail_floor(&self) -> f64 {
        10.0 * self.map.grid().cell_volume()
    }

    /// Gibbs-Markov scheme on every (or a subset of the) partition element.
    pub fn build_gm(&self) -> Result<InducingScheme> {
        let seeds = self.seed_elements();
        let results = seeds.par_iter().map(|&s| self.run_seed(s)).collect::<Result<Vec<_>>>()?;
        self.assemble(Mode::Gm, seeds, results)
    }

    /// Scheme on `Z` (element 0) with early stops of `h_{n_j}(Z)` at the
    /// adjusted recurrence times, followed by the generic loop and the
    /// first-return upgrade.
    pub fn build_recurrent(&self, spec: &RecurrenceSpec, c1: usize, c2: usize) -> Result<InducingScheme> {
        let z = self.z.as_ref().ok_or_else(|| Error::Precondition("recurrent mode needs a prescribed Z".into()))?;
        if spec.z != *z {
            return Err(Error::Precondition("recurrence spec and builder use different Z".into()));
        }
        spec.verify(&self.map)?;
        let adj = adjust_times(spec, c1 as f64, c2 as f64);
        let adjusted = RecurrenceSpec::new(z.clone(), adj.times.clone(), adj.itineraries.clone())?;
        adjusted.verify(&self.map)?;
        let k = adj.times.len();
        let mut iopts = self.iterate_options();
        iopts.avoid = Some(z.clone());
        iopts.designations = adj.itineraries.clone();
        let mut fam = self.seed_family(0)?;
        fam.tags[0].flags = (1u64 << k) - 1;
        let mut run = SeedRun::default();
        let mut time = 0;
        for (j, &n) in adj.times.iter().enumerate() {
            fam = coalesce(iterate(&self.map, &fam, n - time, &iopts)?);
            time = n;
            let target = fam
                .pairs
                .iter()
                .enumerate()
                .find(|(i, p)| fam.tags[*i].flags >> j & 1 == 1 && z.is_subset_of(&p.domain))
                .map(|(i, _)| i)
                .ok_or_else(|| Error::RecurrenceCoverFailed {
                    time: n,
                    detail: "no designated pair contains Z".into(),
                })?;
            let rep = remainder(&fam, &[(target, z.clone())])?;
            let (_, w) = rep.stopped[0];
            if !(w > 0.0) {
                return Err(Error::RecurrenceCoverFailed { time: n, detail: "stopped set has zero measure".into() });
            }
            run.stop(n, 0, w, 1.0, adj.itineraries[j].clone());
            fam = rep.family;
        }
        for t in fam.tags.iter_mut() {
            t.flags = 0;
        }
        self.stop_loop(0, fam, time, &mut run)?;
        let mut results = vec![self.finish(0, run)];
        let seeds = self.seed_elements();
        let others: Vec<usize> = seeds.iter().copied().filter(|&s| s != 0).collect();
        results.extend(others.par_iter().map(|&s| self.run_seed(s)).collect::<Result<Vec<_>>>()?);
        let mut order = vec![0];
        order.extend(others);
        let base = self.assemble(Mode::Recurrent, order, results)?;
        let mut up = upgrade_full_branch(&base, &self.map, Some(0), self.opts.return_cap, self.tail_floor())?;
        up.manifest.mode = Mode::Recurrent;
        Ok(up)
    }

    /// Scheme on `Z` (element 0) with a premature stop of `h(Z) ∩ Z` at time
    /// one, followed by the generic loop and the first-return upgrade.
    pub fn build_gcd_one(&self, z_prime: &Region, h: usize) -> Result<InducingScheme> {
        let z = self.z.as_ref().ok_or_else(|| Error::Precondition("gcd1 mode needs a prescribed Z".into()))?;
        let z_prime = on_grid(z_prime, &self.map)?;
        if !z.is_subset_of(&z_prime) {
            return Err(Error::Precondition("Z must be a subset of Z'".into()));
        }
        if z_prime.count() <= z.count() {
            return Err(Error::DegenerateCollar(format!(
                "Z' has {} cells and Z has {}; Z' must be strictly larger",
                z_prime.count(),
                z.count()
            )));
        }
        if h >= self.map.branches().len() {
            return Err(Error::Precondition(format!("no branch {h}")));
        }
        // T(O_h ∩ Z) ⊇ Z'
        let g = self.map.grid();
        let missing = z_prime
            .cells()
            .filter(|c| !self.map.inverse(h, &g.center(c)).is_some_and(|(x, _)| z.contains_point(&x)))
            .count();
        if missing > z_prime.boundary_cells().len() {
            return Err(Error::Precondition(format!(
                "T(O_h ∩ Z) misses {missing} cells of Z'; the branch must cover Z'"
            )));
        }
        let mut iopts = self.iterate_options();
        iopts.avoid = Some(z_prime.clone());
        let fam = coalesce(iterate(&self.map, &self.seed_family(0)?, 1, &iopts)?);
        let rep = remainder_with_z(&fam, z, &z_prime)?;
        let mut run = SeedRun::default();
        for &(j, w) in &rep.stopped {
            let tag = &fam.tags[j];
            run.stop(1, 0, w, tag.multiplicity, tag.itinerary.to_vec());
        }
        self.stop_loop(0, rep.family, 1, &mut run)?;
        let mut results = vec![self.finish(0, run)];
        let seeds = self.seed_elements();
        let others: Vec<usize> = seeds.iter().copied().filter(|&s| s != 0).collect();
        results.extend(others.par_iter().map(|&s| self.run_seed(s)).collect::<Result<Vec<_>>>()?);
        let mut order = vec![0];
        order.extend(others);
        let base = self.assemble(Mode::Gcd1, order, results)?;
        let mut up = upgrade_full_branch(&base, &self.map, Some(0), self.opts.return_cap, self.tail_floor())?;
        up.manifest.mode = Mode::Gcd1;
        Ok(up)
    }
}

/// A region re-attached to the map's grid and clipped to `X`.
fn on_grid(r: &Region, map: &PiecewiseMap) -> Result<Region> {
    if **r.grid() != **map.grid() {
        return Err(Error::InvalidGrid("region and map use different grids".into()));
    }
    Ok(Region::from_mask(map.grid().clone(), r.bbox(), r.mask().to_vec()).intersect(map.space()))
}

/// Raster pullback of `image` into `seed` along an itinerary: image cells are
/// sampled on a sublattice matching the contraction of `T^{-tau}` and the
/// seed cells containing their preimages are kept.
pub(crate) fn pullback(map: &PiecewiseMap, seed: &Region, image: &Region, itinerary: &[usize]) -> Region {
    let g = map.grid();
    let d = g.dim();
    let shrink = map.constants().lambda.powi(itinerary.len() as i32);
    let stride = if shrink > 0.0 { (1.0 / shrink).floor().clamp(1.0, 1e9) as usize } else { usize::MAX };
    let lo = image.bbox().lo;
    let visit = |c: &Cell, out: &mut HashSet<Cell>| {
        if let Some((x, _)) = map.inverse_chain(itinerary, &g.center(c)) {
            if let Some(xc) = g.cell_of(&x) {
                if seed.contains_cell(&xc) {
                    out.insert(xc);
                }
            }
        }
    };
    let mut out: HashSet<Cell> = HashSet::new();
    for c in image.cells() {
        if (0..d).all(|i| (c[i] - lo[i]) % stride == 0) {
            visit(&c, &mut out);
        }
    }
    if out.is_empty() {
        if let Some((c, _)) = image.deepest_cell() {
            visit(&c, &mut out);
        }
    }
    let mut cells: Vec<Cell> = out.into_iter().collect();
    cells.sort_unstable();
    Region::from_cells(g.clone(), &cells)
}

/// Gibbs-Markov scheme for a map spec at resolution `eta`.
pub fn build_scheme_gm(spec: &MapSpec, eta: f64, opts: BuildOptions) -> Result<InducingScheme> {
    Builder::new(spec, eta, opts, None)?.build_gm()
}

/// Full-branch scheme on a fully recurrent `Z` with gcd-one return times.
/// The times are adjusted with `C1 = n_rec(P)` and `C2 = n_rec(C_R P)`,
/// taken as the largest recovery observed in a preliminary run of the
/// generic loop on `Z` (at least one step each).
pub fn build_scheme_full_recurrent(
    spec: &MapSpec,
    eta: f64,
    opts: BuildOptions,
    recurrence: &RecurrenceSpec,
) -> Result<InducingScheme> {
    let b = Builder::new(spec, eta, opts, Some(&recurrence.z))?;
    let (_, _, _, steps) = b.run_seed(0)?;
    b.build_recurrent(recurrence, steps.max(1), steps.max(1))
}

/// Full-branch scheme on `Z` with a premature stop along branch `h`.
pub fn build_scheme_gcd_one(spec: &MapSpec, eta: f64, opts: BuildOptions, z: &Region, z_prime: &Region, h: usize) -> Result<InducingScheme> {
    Builder::new(spec, eta, opts, Some(z))?.build_gcd_one(z_prime, h)
}
