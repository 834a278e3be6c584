use super::build::pullback;
use super::{InducingScheme, Mode, SchemeCell};
use crate::dynamics::PiecewiseMap;
use crate::error::{Error, Result};

/// Upgrades a scheme to the first-return scheme `G^s` on one image `Z`
/// (the given element, or the image of smallest measure, ties by index).
///
/// Returns are composed as a Markov renewal: mass leaving a seed element
/// through a cell of measure `m` lands on the cell's image with fraction
/// `m / Leb(seed)`. This is exact for affine branches (the pushed measure is
/// uniform on every image) and holds up to the distortion constant
/// otherwise. Each return time `tau~` becomes one cell whose itinerary is the
/// heaviest composed path; mass still travelling after `return_cap` steps,
/// or entering an element without cells, is reported as unresolved.
pub fn upgrade_full_branch(
    scheme: &InducingScheme,
    map: &PiecewiseMap,
    target: Option<usize>,
    return_cap: usize,
    floor: f64,
) -> Result<InducingScheme> {
    let part = &scheme.partition;
    let n_el = part.len();
    let z = match target {
        Some(z) => z,
        None => {
            let images = scheme.images();
            *images
                .iter()
                .min_by(|&&a, &&b| part.elements[a].count().cmp(&part.elements[b].count()).then(a.cmp(&b)))
                .ok_or_else(|| Error::Precondition("scheme has no cells".into()))?
        }
    };
    if z >= n_el {
        return Err(Error::Precondition(format!("no element {z} in a partition of {n_el}")));
    }
    let mut by_seed: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_el];
    let mut seed_mass = vec![0.0; n_el];
    let mut built = vec![false; n_el];
    for &s in &scheme.manifest.seeds {
        built[s] = true;
    }
    if !built[z] {
        return Err(Error::Precondition(format!("element {z} is not a seed of the scheme")));
    }
    for (i, c) in scheme.cells.iter().enumerate() {
        let m = part.elements[c.seed].measure();
        by_seed[c.seed].push((i, c.measure / m));
        seed_mass[c.seed] += c.measure / m;
    }
    let leak: Vec<f64> = (0..n_el).map(|k| if built[k] { (1.0 - seed_mass[k]).max(0.0) } else { 1.0 }).collect();

    let cap = return_cap;
    let leb_z = part.elements[z].measure();
    let negligible = 1e-15 * leb_z;
    // mass[t][k]; back[t][k] = (cell index, best contribution)
    let mut mass = vec![vec![0.0f64; n_el]; cap + 1];
    let mut back: Vec<Vec<(u32, f64)>> = vec![vec![(u32::MAX, 0.0); n_el]; cap + 1];
    mass[0][z] = leb_z;
    let mut lost = 0.0;
    let mut overdue = 0.0;
    let mut returned: Vec<(usize, f64)> = Vec::new();
    for t in 0..=cap {
        for k in 0..n_el {
            let m = mass[t][k];
            if m <= 0.0 {
                continue;
            }
            if t > 0 && k == z {
                returned.push((t, m));
                continue;
            }
            if m < negligible {
                lost += m;
                continue;
            }
            lost += m * leak[k];
            for &(ci, f) in &by_seed[k] {
                let c = &scheme.cells[ci];
                let add = m * f;
                let nt = t + c.tau;
                if nt > cap {
                    overdue += add;
                    continue;
                }
                mass[nt][c.image] += add;
                if add > back[nt][c.image].1 {
                    back[nt][c.image] = (ci as u32, add);
                }
            }
        }
    }
    let mut cells = Vec::new();
    for (t, m) in returned {
        // follow backpointers to the start
        let mut path = Vec::new();
        let (mut tt, mut kk) = (t, z);
        while tt > 0 {
            let (ci, _) = back[tt][kk];
            let c = &scheme.cells[ci as usize];
            path.push(ci as usize);
            tt -= c.tau;
            kk = c.seed;
        }
        path.reverse();
        let mut itinerary = Vec::with_capacity(t);
        let mut parts = Vec::with_capacity(path.len());
        let mut multiplicity = 1.0;
        for &ci in &path {
            let c = &scheme.cells[ci];
            itinerary.extend_from_slice(&c.itinerary);
            parts.extend_from_slice(&c.parts);
            multiplicity *= c.multiplicity.max(1.0);
        }
        let zr = &part.elements[z];
        cells.push(SchemeCell {
            seed: z,
            tau: t,
            image: z,
            measure: m,
            multiplicity,
            domain: pullback(map, zr, zr, &itinerary),
            itinerary,
            parts,
        });
    }
    if cells.is_empty() {
        return Err(Error::ReturnDepthCap(format!("no mass returned to element {z} within {cap} steps")));
    }
    let unresolved = lost + overdue;
    let mut manifest = scheme.manifest.clone();
    manifest.mode = Mode::Full;
    manifest.base = Some(z);
    manifest.seeds = vec![z];
    let mut out = InducingScheme {
        manifest,
        partition: scheme.partition.clone(),
        z: scheme.z.clone(),
        cells,
        base_measure: leb_z,
        unresolved,
        tail: Vec::new(),
        cutoff: None,
        fit: None,
        rounds: scheme.rounds.clone(),
    };
    out.refit(floor);
    Ok(out)
}
