use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::iterate::{iterate, IterateOptions};
use super::{GrowthConstants, StandardFamily, StandardPair};
use crate::dynamics::PiecewiseMap;
use crate::error::{Error, Result};
use crate::geometry::Region;

/// Both sides of the growth inequality and the raster slack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl GrowthReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

/// Raster error budget of the boundary weight of a family.
pub(crate) fn family_slack(f: &StandardFamily) -> f64 {
    f.pairs
        .iter()
        .zip(&f.weights)
        .map(|(p, w)| {
            let peak = p.domain.indexed_cells().map(|(k, _)| p.value_local(k)).fold(0.0, f64::max);
            w * peak * p.domain.raster_slack()
        })
        .sum()
}

/// Checks `|∂_eps T^{n0} G| <= (1 + C_a sigma) |∂_{Lambda^{n0} eps} G| + zeta1 |G| eps`.
pub fn growth_check(
    map: &PiecewiseMap,
    k: &GrowthConstants,
    family: &StandardFamily,
    eps: f64,
    opts: &IterateOptions,
) -> Result<GrowthReport> {
    let inner = k.lambda.powi(k.n0 as i32) * eps;
    if inner < k.eta {
        return Err(Error::EpsilonBelowResolution { eps: inner, eta: k.eta });
    }
    if !(eps < k.eps0) {
        return Err(Error::Precondition(format!("eps = {eps} must be below eps0 = {}", k.eps0)));
    }
    let image = iterate(map, family, k.n0, opts)?;
    let lhs = image.boundary_weight(eps);
    let rhs = k.growth_factor() * family.boundary_weight(inner) + k.zeta1 * family.total_weight() * eps;
    Ok(GrowthReport { lhs, rhs, slack: family_slack(&image) + k.growth_factor() * family_slack(family) })
}

/// Families of uniform pairs on random axis-aligned cubes whose collars are
/// at most `B eps` in relative weight: side `2 d / B`, clamped to diameter
/// `eps0` and at least four cells. Every other family has three pairs with
/// random weights.
pub fn calibration_suite(map: &PiecewiseMap, k: &GrowthConstants, b: f64, count: usize, seed: u64) -> Result<Vec<StandardFamily>> {
    let g = map.grid().clone();
    let d = g.dim();
    let side = (2.0 * d as f64 / b).min(k.eps0 / (d as f64).sqrt()).max(4.0 * g.eta());
    let (lo, hi) = map.space().coord_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(Error::Precondition("could not place calibration cubes inside the phase space".into()));
        }
        let npairs = if out.len() % 2 == 0 { 1 } else { 3 };
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        for _ in 0..npairs {
            let mut a = vec![0.0; d];
            let mut z = vec![0.0; d];
            for i in 0..d {
                let span = (hi[i] - lo[i] - side).max(0.0);
                a[i] = lo[i] + rng.random::<f64>() * span;
                z[i] = a[i] + side;
            }
            let r = Region::open_box(g.clone(), &a, &z).intersect(map.space());
            if r.is_empty() {
                continue;
            }
            pairs.push(StandardPair::uniform(r)?);
            weights.push(0.5 + rng.random::<f64>());
        }
        if !pairs.is_empty() {
            out.push(StandardFamily::new(pairs, weights)?);
        }
    }
    Ok(out)
}

/// Fitted constants of the iterated growth bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zetas {
    pub zeta2: f64,
    pub zeta3: f64,
    pub zeta4: f64,
}

/// Fits the additive constants of
/// `|∂_eps T^m G| <= zeta3 (1 + C_a sigma)^{m/n0} |∂_{Lambda^m eps} G| + zeta4 |G| eps`
/// over the suite and `m = 1..=max_steps` with `zeta3 = 1`; `zeta2` is the
/// same fit restricted to multiples of `n0`. Both are inflated by 1.5.
pub fn calibrate_zetas(
    map: &PiecewiseMap,
    k: &GrowthConstants,
    suite: &[StandardFamily],
    max_steps: usize,
    opts: &IterateOptions,
) -> Result<Zetas> {
    let mut z2 = 0.0f64;
    let mut z4 = 0.0f64;
    for fam in suite {
        let total = fam.total_weight();
        for m in 1..=max_steps {
            let img = iterate(map, fam, m, opts)?;
            let grid: Vec<f64> = k.eps_grid.iter().copied().filter(|e| k.lambda.powi(m as i32) * e >= k.eta).collect();
            if grid.is_empty() {
                continue;
            }
            let inner: Vec<f64> = grid.iter().map(|e| k.lambda.powi(m as i32) * e).collect();
            let lhs = img.boundary_profile(&grid);
            let base = fam.boundary_profile(&inner);
            let factor = k.growth_factor().powf(m as f64 / k.n0 as f64);
            for ((l, b), e) in lhs.iter().zip(&base).zip(&grid) {
                let excess = ((l - factor * b) / (total * e)).max(0.0);
                z4 = z4.max(excess);
                if m % k.n0 == 0 {
                    z2 = z2.max(excess);
                }
            }
        }
    }
    Ok(Zetas { zeta2: 1.5 * z2, zeta3: 1.0, zeta4: 1.5 * z4 })
}

/// Recovery times for a properness constant `B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryReport {
    /// Smallest `n >= 1` after which every family of the calibration suite
    /// is `P`-proper.
    pub empirical: usize,
    /// Bound from the fitted zetas, when they are known.
    pub analytic: Option<usize>,
    /// `max(empirical, analytic)`.
    pub n: usize,
}

/// Recovery time `n_rec(B)` measured on a calibration suite of `B`-proper
/// families, and never below the analytic bound when the zetas are known.
pub fn recovery_time(
    map: &PiecewiseMap,
    k: &GrowthConstants,
    b: f64,
    suite_size: usize,
    seed: u64,
    cap: usize,
    opts: &IterateOptions,
) -> Result<RecoveryReport> {
    if let Some(z4) = k.zeta4 {
        if !(k.p > z4) {
            return Err(Error::NoRecovery(format!("P = {} does not exceed zeta4 = {z4}", k.p)));
        }
    }
    let suite = calibration_suite(map, k, b, suite_size, seed)?;
    let mut empirical = None;
    for n in 1..=cap {
        let ok = suite.iter().try_fold(true, |acc, f| -> Result<bool> {
            Ok(acc && iterate(map, f, n, opts)?.is_proper(k.p, &k.eps_grid))
        })?;
        if ok {
            empirical = Some(n);
            break;
        }
    }
    let Some(empirical) = empirical else {
        return Err(Error::NoRecovery(format!("calibration suite for B = {b} is not P-proper within {cap} steps")));
    };
    let analytic = k.analytic_recovery(b);
    Ok(RecoveryReport { empirical, analytic, n: empirical.max(analytic.unwrap_or(0)) })
}
