use crate::expr::{Constraint, Expr};
use crate::geometry::{Point, MAX_DIM};

/// A map `R^d -> R^d`, affine when possible for speed.
#[derive(Clone, Debug)]
pub enum PointMap {
    Affine { a: [[f64; MAX_DIM]; MAX_DIM], b: Point },
    Formula(Vec<Expr>),
}

impl PointMap {
    /// Uses the affine form when every component is affine.
    pub fn from_exprs(exprs: Vec<Expr>) -> PointMap {
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        for (i, e) in exprs.iter().enumerate() {
            match e.as_affine() {
                Some((g, c)) => {
                    a[i] = g;
                    b[i] = c;
                }
                None => return PointMap::Formula(exprs),
            }
        }
        PointMap::Affine { a, b }
    }

    #[inline]
    pub fn apply(&self, p: &Point, dim: usize) -> Point {
        let mut q = [0.0; MAX_DIM];
        match self {
            PointMap::Affine { a, b } => {
                for i in 0..dim {
                    let mut s = b[i];
                    for j in 0..dim {
                        s += a[i][j] * p[j];
                    }
                    q[i] = s;
                }
            }
            PointMap::Formula(f) => {
                for i in 0..dim {
                    q[i] = f[i].eval(p);
                }
            }
        }
        q
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, PointMap::Affine { .. })
    }
}

/// A scalar function of a point.
#[derive(Clone, Debug)]
pub enum ScalarMap {
    Const(f64),
    Formula(Expr),
}

impl ScalarMap {
    pub fn from_expr(e: Expr) -> ScalarMap {
        match e.as_affine() {
            Some((g, c)) if g.iter().all(|&x| x == 0.0) => ScalarMap::Const(c),
            _ => ScalarMap::Formula(e),
        }
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            ScalarMap::Const(c) => *c,
            ScalarMap::Formula(e) => e.eval(p),
        }
    }
}

/// One injective branch `T|O_h` with explicit inverse `h` and Jacobian
/// determinant `Jh` of the inverse, evaluated at image points.
#[derive(Clone, Debug)]
pub struct Branch {
    pub name: String,
    pub domain: Vec<Constraint>,
    pub forward: PointMap,
    pub inverse: PointMap,
    pub jacobian: ScalarMap,
    /// Declared contraction of the inverse, at most the map's constant.
    pub contraction: f64,
}

impl Branch {
    #[inline]
    pub fn domain_holds(&self, p: &Point) -> bool {
        self.domain.iter().all(|c| c.holds(p))
    }
}
