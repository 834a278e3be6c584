//! Built-in example maps, written in the map-spec language.
//!
//! * `M0`: the doubling map of the unit interval.
//! * `M1`: the product doubling map of the unit square (affine, Markov).
//! * `M2`: a piecewise-affine non-Markov map of the square whose cut lines
//!   have irrational slope.
//! * `M3`: a nonlinear full-branch map of the unit interval.

use super::spec::MapSpec;
use crate::error::{Error, Result};

/// Shear coefficient of `M2`: the golden ratio conjugate.
pub const M2_SHEAR: f64 = 0.618_033_988_749_894_9;

pub const NAMES: [&str; 4] = ["M0", "M1", "M2", "M3"];

pub fn spec(name: &str) -> Result<MapSpec> {
    let text = match name {
        "M0" => m0(),
        "M1" => m1(),
        "M2" => m2(),
        "M3" => m3(),
        _ => return Err(Error::Config(format!("unknown catalog map '{name}' (expected one of {NAMES:?})"))),
    };
    MapSpec::parse(&text)
}

fn m0() -> String {
    r#"name = "M0"

[space]
lo = [0.0]
hi = [1.0]

[constants]
lambda = 0.5
alpha = 1.0
d_tilde = 0.0
n0 = 2
sigma = 1.0
c_bar = 1.0
eps_exp = 1.0
eps_cplx = 0.1875
a0 = 0.5

[[branch]]
name = "left"
domain = ["x < 0.5"]
forward = ["2*x"]
inverse = ["x/2"]
jacobian = "0.5"

[[branch]]
name = "right"
domain = ["x > 0.5"]
forward = ["2*x - 1"]
inverse = ["(x + 1)/2"]
jacobian = "0.5"
"#
    .to_string()
}

fn m1() -> String {
    let mut s = String::from(
        r#"name = "M1"

[space]
lo = [0.0, 0.0]
hi = [1.0, 1.0]

[constants]
lambda = 0.5
alpha = 1.0
d_tilde = 0.0
n0 = 2
sigma = 2.0
c_bar = 2.0
eps_exp = 1.0
eps_cplx = 0.1325825214724776
a0 = 0.5
"#,
    );
    for a in 0..2 {
        for b in 0..2 {
            s.push_str(&format!(
                r#"
[[branch]]
name = "q{a}{b}"
domain = ["{a0} < x < {a1}", "{b0} < y < {b1}"]
forward = ["2*x - {a}", "2*y - {b}"]
inverse = ["(x + {a})/2", "(y + {b})/2"]
jacobian = "0.25"
"#,
                a0 = a as f64 * 0.5,
                a1 = (a + 1) as f64 * 0.5,
                b0 = b as f64 * 0.5,
                b1 = (b + 1) as f64 * 0.5,
            ));
        }
    }
    s
}

fn m2() -> String {
    let t = M2_SHEAR;
    let mut s = String::from(
        r#"name = "M2"

[space]
lo = [0.0, 0.0]
hi = [1.0, 1.0]

[constants]
lambda = 0.271
alpha = 1.0
d_tilde = 0.0
n0 = 1
sigma = 2.0
c_bar = 2.0
eps_exp = 1.0
eps_cplx = 0.24
a0 = 0.1
"#,
    );
    for a in 0..4 {
        for k in 0..5 {
            s.push_str(&format!(
                r#"
[[branch]]
name = "s{a}{k}"
domain = ["{x0} < x < {x1}", "{k} < {t}*x + 4*y < {k1}"]
forward = ["4*x - {a}", "{t}*x + 4*y - {k}"]
inverse = ["(x + {a})/4", "(y + {k} - {t}*(x + {a})/4)/4"]
jacobian = "0.0625"
"#,
                x0 = a as f64 * 0.25,
                x1 = (a + 1) as f64 * 0.25,
                k1 = k + 1,
            ));
        }
    }
    s
}

fn m3() -> String {
    r#"name = "M3"

[space]
lo = [0.0]
hi = [1.0]

[constants]
lambda = 0.55
alpha = 1.0
d_tilde = 0.2222222222222222
n0 = 2
sigma = 1.0
c_bar = 1.0
eps_exp = 1.0
eps_cplx = 0.2
a0 = 1.2

[[branch]]
name = "left"
domain = ["x < 0.5"]
forward = ["(sqrt(0.2025 + 0.2*x) - 0.45)/0.1"]
inverse = ["0.45*x + 0.05*x^2"]
jacobian = "0.45 + 0.1*x"

[[branch]]
name = "right"
domain = ["x > 0.5"]
forward = ["(sqrt(0.2025 + 0.2*(x - 0.5)) - 0.45)/0.1"]
inverse = ["0.5 + 0.45*x + 0.05*x^2"]
jacobian = "0.45 + 0.1*x"
"#
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_map_builds_and_inverts() {
        for name in NAMES {
            let m = spec(name).unwrap().build(1.0 / 64.0).unwrap();
            let g = m.grid().clone();
            for c in m.space().cells() {
                let p = g.center(&c);
                let (b, y) = m.forward(&p).expect("every center has a branch");
                let (x, j) = m.inverse(b, &y).expect("image point inverts");
                assert!((0..m.dim()).all(|i| (x[i] - p[i]).abs() < 1e-12), "{name} {p:?}");
                assert!(j > 0.0);
            }
        }
    }
}
