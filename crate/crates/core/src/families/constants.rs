use crate::dynamics::PiecewiseMap;
use crate::error::{Error, Result};

/// Constants of the growth lemma and the recovery bound, derived from the
/// map constants and the properness target `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthConstants {
    pub dim: usize,
    pub eta: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub n0: usize,
    pub sigma: f64,
    pub c_bar: f64,
    pub a0: f64,
    pub eps0: f64,
    /// Distortion of arbitrary compositions.
    pub distortion: f64,
    /// `C_a = exp(a0 eps0^alpha)`.
    pub c_a: f64,
    /// `c_a = 1 / C_a`.
    pub c_a_inv: f64,
    /// `Lambda^{n0} (1 + C_a sigma)`.
    pub theta1: f64,
    /// `theta1^{1/n0}`.
    pub theta2: f64,
    /// Chopping cost constant `exp(D diam(X)^alpha) 6 d^{3/2} / eps0`.
    pub c_eps0: f64,
    /// `C_a C_{eps0}`.
    pub zeta1: f64,
    /// Properness target.
    pub p: f64,
    /// `1 / (3 P)`.
    pub delta0: f64,
    pub zeta2: Option<f64>,
    pub zeta3: Option<f64>,
    pub zeta4: Option<f64>,
    /// Scales at which properness is tested, descending.
    pub eps_grid: Vec<f64>,
}

impl GrowthConstants {
    pub fn new(map: &PiecewiseMap, p: f64) -> Result<GrowthConstants> {
        let c = map.constants();
        let dim = map.dim();
        let eta = map.eta();
        let eps0 = c.eps0();
        if !(p > 0.0) {
            return Err(Error::Config(format!("properness target P = {p} must be positive")));
        }
        let distortion = c.distortion();
        let c_a = (c.a0 * eps0.powf(c.alpha)).exp();
        let theta1 = c.lambda.powi(c.n0 as i32) * (1.0 + c_a * c.sigma);
        if !(theta1 < 1.0) {
            return Err(Error::Hypothesis(format!(
                "Lambda^n0 (1 + C_a sigma) = {theta1} must be below 1; shrink eps_cplx or a0"
            )));
        }
        let diam_x = map.space().diameter();
        let c_eps0 = (distortion * diam_x.powf(c.alpha)).exp() * 6.0 * (dim as f64).powf(1.5) / eps0;
        let delta0 = 1.0 / (3.0 * p);
        let mut eps_grid = Vec::new();
        let mut e = eps0 / 2.0;
        while e >= 2.0 * eta {
            eps_grid.push(e);
            e /= 2.0;
        }
        if delta0 < eps0 && delta0 > 0.5 * eta && !eps_grid.iter().any(|&x| x == delta0) {
            eps_grid.push(delta0);
        }
        eps_grid.sort_by(|a, b| b.total_cmp(a));
        Ok(GrowthConstants {
            dim,
            eta,
            lambda: c.lambda,
            alpha: c.alpha,
            n0: c.n0,
            sigma: c.sigma,
            c_bar: c.c_bar,
            a0: c.a0,
            eps0,
            distortion,
            c_a,
            c_a_inv: 1.0 / c_a,
            theta1,
            theta2: theta1.powf(1.0 / c.n0 as f64),
            c_eps0,
            zeta1: c_a * c_eps0,
            p,
            delta0,
            zeta2: None,
            zeta3: None,
            zeta4: None,
            eps_grid,
        })
    }

    pub fn with_zetas(mut self, zeta2: f64, zeta3: f64, zeta4: f64) -> Result<GrowthConstants> {
        if !(self.p > zeta4) {
            return Err(Error::Config(format!("properness target P = {} must exceed zeta4 = {zeta4}", self.p)));
        }
        self.zeta2 = Some(zeta2);
        self.zeta3 = Some(zeta3);
        self.zeta4 = Some(zeta4);
        Ok(self)
    }

    /// `(1 + C_a sigma)`, the boundary growth factor per `n0` steps.
    pub fn growth_factor(&self) -> f64 {
        1.0 + self.c_a * self.sigma
    }

    /// Admissible seminorm bound after `n` steps from an `a0`-family.
    pub fn seminorm_bound(&self, n: usize) -> f64 {
        self.a0 * (self.lambda.powf(self.alpha * n as f64) + self.distortion / self.a0)
    }

    /// Analytic recovery time `min{n : B zeta3 theta2^n + zeta4 <= P}` when
    /// the zetas are known.
    pub fn analytic_recovery(&self, b: f64) -> Option<usize> {
        let (z3, z4) = (self.zeta3?, self.zeta4?);
        if !(self.p > z4) {
            return None;
        }
        let need = (self.p - z4) / (b * z3);
        if need >= 1.0 {
            return Some(0);
        }
        Some((need.ln() / self.theta2.ln()).ceil().max(0.0) as usize)
    }
}
