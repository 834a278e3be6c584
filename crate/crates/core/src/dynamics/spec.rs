//! Map-spec files: TOML documents describing the phase space, the branches
//! (as expression strings) and the hypothesis constants.

use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;

use super::branch::{Branch, PointMap, ScalarMap};
use super::map::{MapConstants, PiecewiseMap};
use crate::error::{Error, Result};
use crate::expr::{Constraint, Expr};
use crate::geometry::Grid;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: String,
    space: SpaceSpec,
    constants: ConstSpec,
    branch: Vec<BranchSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    #[serde(default)]
    constraints: Vec<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstSpec {
    lambda: f64,
    alpha: f64,
    d_tilde: f64,
    n0: usize,
    sigma: f64,
    c_bar: f64,
    eps_exp: f64,
    eps_cplx: f64,
    a0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchSpec {
    name: String,
    #[serde(default)]
    domain: Vec<Spanned<String>>,
    forward: Vec<Spanned<String>>,
    inverse: Vec<Spanned<String>>,
    jacobian: Spanned<String>,
    contraction: Option<f64>,
}

/// A parsed map-spec document; rasterize it with [`MapSpec::build`].
#[derive(Clone, Debug)]
pub struct MapSpec {
    pub name: String,
    text: String,
    lo: Vec<f64>,
    hi: Vec<f64>,
    space: Vec<Constraint>,
    branches: Vec<Branch>,
    constants: MapConstants,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

impl MapSpec {
    pub fn parse(text: &str) -> Result<MapSpec> {
        let f: SpecFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            Error::Parse { line, column, message: e.message().to_string() }
        })?;
        let located = |s: &Spanned<String>, err: Error| -> Error {
            match err {
                Error::Parse { column, message, .. } => {
                    // span includes the opening quote
                    let (line, col) = line_col(text, s.span().start + column);
                    Error::Parse { line, column: col, message }
                }
                other => other,
            }
        };
        let expr = |s: &Spanned<String>| Expr::parse(s.get_ref()).map_err(|e| located(s, e));
        let constraints = |v: &[Spanned<String>]| -> Result<Vec<Constraint>> {
            let mut out = Vec::new();
            for s in v {
                out.extend(Constraint::parse_all(s.get_ref()).map_err(|e| located(s, e))?);
            }
            Ok(out)
        };
        let dim = f.space.lo.len();
        if dim == 0 || dim > 3 || f.space.hi.len() != dim {
            return Err(Error::Config(format!("space must have matching lo/hi of dimension 1..=3, got {dim}")));
        }
        let c = &f.constants;
        let constants = MapConstants {
            lambda: c.lambda,
            alpha: c.alpha,
            d_tilde: c.d_tilde,
            n0: c.n0,
            sigma: c.sigma,
            c_bar: c.c_bar,
            eps_exp: c.eps_exp,
            eps_cplx: c.eps_cplx,
            a0: c.a0,
        };
        constants.validate()?;
        let mut branches = Vec::new();
        for b in &f.branch {
            if b.forward.len() != dim || b.inverse.len() != dim {
                return Err(Error::Config(format!(
                    "branch {}: forward and inverse need {dim} components",
                    b.name
                )));
            }
            let fw = b.forward.iter().map(expr).collect::<Result<Vec<_>>>()?;
            let inv = b.inverse.iter().map(expr).collect::<Result<Vec<_>>>()?;
            for e in fw.iter().chain(&inv) {
                if e.arity() > dim {
                    return Err(Error::Config(format!("branch {} uses a coordinate beyond dimension {dim}", b.name)));
                }
            }
            branches.push(Branch {
                name: b.name.clone(),
                domain: constraints(&b.domain)?,
                forward: PointMap::from_exprs(fw),
                inverse: PointMap::from_exprs(inv),
                jacobian: ScalarMap::from_expr(expr(&b.jacobian)?),
                contraction: b.contraction.unwrap_or(constants.lambda),
            });
        }
        Ok(MapSpec {
            name: f.name,
            text: text.to_string(),
            lo: f.space.lo,
            hi: f.space.hi,
            space: constraints(&f.space.constraints)?,
            branches,
            constants,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn constants(&self) -> &MapConstants {
        &self.constants
    }

    /// Hex SHA-256 of the source text.
    pub fn hash(&self) -> String {
        Sha256::digest(self.text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build(&self, eta: f64) -> Result<PiecewiseMap> {
        let grid = Grid::new(&self.lo, &self.hi, eta)?;
        PiecewiseMap::new(&self.name, grid, self.space.clone(), self.branches.clone(), self.constants.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_errors_carry_file_positions() {
        let text = "name = \"m\"\n[space]\nlo = [0.0]\nhi = [1.0]\n[constants]\nlambda = 0.5\nalpha = 1.0\nd_tilde = 0.0\nn0 = 1\nsigma = 0.5\nc_bar = 1.0\neps_exp = 1.0\neps_cplx = 0.1\na0 = 1.0\n[[branch]]\nname = \"b\"\nforward = [\"2*x\"]\ninverse = [\"x/2 + )\"]\njacobian = \"0.5\"\n";
        match MapSpec::parse(text) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (18, 19)),
            other => panic!("{other:?}"),
        }
        let broken = text.replace("lambda = 0.5", "lambda = ");
        assert!(matches!(MapSpec::parse(&broken), Err(Error::Parse { line: 6, .. })));
    }
}
