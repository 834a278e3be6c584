//! Arithmetic expressions over the coordinates `x`, `y`, `z` (aliases `x0`,
//! `x1`, `x2`), used by map-spec files for branch formulas and domains.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Floor,
}

impl Func {
    fn by_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "floor" => Func::Floor,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Floor => "floor",
        }
    }
}

impl Expr {
    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => p[*i],
            Expr::Neg(a) => -a.eval(p),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => {
                        if b == b.trunc() && b.abs() <= 16.0 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(p);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Atan => a.atan(),
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Floor => a.floor(),
                }
            }
        }
    }

    /// Largest variable index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    /// If the expression is affine in the variables, returns its gradient and
    /// constant term.
    pub fn as_affine(&self) -> Option<([f64; 3], f64)> {
        match self {
            Expr::Num(v) => Some(([0.0; 3], *v)),
            Expr::Var(i) => {
                let mut g = [0.0; 3];
                g[*i] = 1.0;
                Some((g, 0.0))
            }
            Expr::Neg(a) => a.as_affine().map(|(g, c)| (g.map(|x| -x), -c)),
            Expr::Bin(op, a, b) => {
                let (ga, ca) = a.as_affine()?;
                let (gb, cb) = b.as_affine()?;
                let konst = |g: &[f64; 3]| g.iter().all(|&x| x == 0.0);
                match op {
                    Op::Add => Some(([ga[0] + gb[0], ga[1] + gb[1], ga[2] + gb[2]], ca + cb)),
                    Op::Sub => Some(([ga[0] - gb[0], ga[1] - gb[1], ga[2] - gb[2]], ca - cb)),
                    Op::Mul if konst(&ga) => Some((gb.map(|x| x * ca), cb * ca)),
                    Op::Mul if konst(&gb) => Some((ga.map(|x| x * cb), ca * cb)),
                    Op::Div if konst(&gb) => Some((ga.map(|x| x / cb), ca / cb)),
                    Op::Pow if konst(&ga) && konst(&gb) => Some(([0.0; 3], self.eval(&[0.0; 3]))),
                    _ => None,
                }
            }
            Expr::Call(..) => {
                if self.arity() == 0 {
                    Some(([0.0; 3], self.eval(&[0.0; 3])))
                } else {
                    None
                }
            }
        }
    }

    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser::new(src);
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "{}", ["x", "y", "z"][*i]),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    Op::Add => "+",
                    Op::Sub => "-",
                    Op::Mul => "*",
                    Op::Div => "/",
                    Op::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A strict inequality `g(x) > 0`, parsed from forms such as `x < 0.5`,
/// `x + y > 1` or the chain `0 < x < 0.5` (which yields two constraints).
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint(pub Expr);

impl Constraint {
    #[inline]
    pub fn holds(&self, p: &Point) -> bool {
        self.0.eval(p) > 0.0
    }

    pub fn parse_all(src: &str) -> Result<Vec<Constraint>> {
        let mut p = Parser::new(src);
        let mut terms = vec![p.expr()?];
        let mut ops = Vec::new();
        loop {
            p.skip_ws();
            let op = if p.eat_str("<=") || p.eat_str("<") {
                '<'
            } else if p.eat_str(">=") || p.eat_str(">") {
                '>'
            } else {
                break;
            };
            ops.push(op);
            terms.push(p.expr()?);
        }
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.err("unexpected trailing input"));
        }
        if ops.is_empty() {
            return Err(p.err("expected a comparison such as 'x < 0.5'"));
        }
        Ok(ops
            .iter()
            .enumerate()
            .map(|(i, &op)| {
                let (a, b) = (terms[i].clone(), terms[i + 1].clone());
                let g = if op == '<' { (b, a) } else { (a, b) };
                Constraint(Expr::Bin(Op::Sub, Box::new(g.0), Box::new(g.1)))
            })
            .collect())
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(s: &str) -> Parser {
        Parser { chars: s.chars().collect(), pos: 0 }
    }

    fn err(&self, m: &str) -> Error {
        Error::Parse { line: 1, column: self.pos + 1, message: m.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let t: Vec<char> = s.chars().collect();
        if self.chars[self.pos..].starts_with(&t) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut a = self.term()?;
        while let Some(c) = self.peek() {
            let op = match c {
                '+' => Op::Add,
                '-' => Op::Sub,
                _ => break,
            };
            self.pos += 1;
            let b = self.term()?;
            a = Expr::Bin(op, Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut a = self.unary()?;
        while let Some(c) = self.peek() {
            let op = match c {
                '*' => Op::Mul,
                '/' => Op::Div,
                _ => break,
            };
            self.pos += 1;
            let b = self.unary()?;
            a = Expr::Bin(op, Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len() && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_') {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                let var = match name.as_str() {
                    "x" | "x0" => Some(0),
                    "y" | "x1" => Some(1),
                    "z" | "x2" => Some(2),
                    _ => None,
                };
                if let Some(i) = var {
                    return Ok(Expr::Var(i));
                }
                match name.as_str() {
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Num(std::f64::consts::E)),
                    _ => {}
                }
                let Some(f) = Func::by_name(&name) else {
                    self.pos = start;
                    return Err(self.err(&format!("unknown identifier '{name}'")));
                };
                if self.peek() != Some('(') {
                    return Err(self.err(&format!("expected '(' after {name}")));
                }
                self.pos += 1;
                let a = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(Expr::Call(f, Box::new(a)))
            }
            Some(c) => Err(self.err(&format!("unexpected character '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let n = self.chars.len();
        while self.pos < n && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < n && (self.chars[self.pos] == 'e' || self.chars[self.pos] == 'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < n && (self.chars[self.pos] == '+' || self.chars[self.pos] == '-') {
                self.pos += 1;
            }
            if self.pos < n && self.chars[self.pos].is_ascii_digit() {
                while self.pos < n && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse::<f64>().map(Expr::Num).map_err(|_| {
            self.pos = start;
            self.err(&format!("malformed number '{s}'"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_precedence() {
        let e = Expr::parse("1 + 2*x^2 - y/4 + sin(0)").unwrap();
        assert_eq!(e.eval(&[3.0, 8.0, 0.0]), 1.0 + 18.0 - 2.0);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(&[0.0; 3]), -4.0);
        assert_eq!(Expr::parse("2e-1*x").unwrap().eval(&[5.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn affine_detection() {
        let (g, c) = Expr::parse("(y + 1)/2 - 3*x").unwrap().as_affine().unwrap();
        assert_eq!((g, c), ([-3.0, 0.5, 0.0], 0.5));
        assert!(Expr::parse("x*y").unwrap().as_affine().is_none());
    }

    #[test]
    fn constraints_and_chains() {
        let c = Constraint::parse_all("0 < x < 0.5").unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|k| k.holds(&[0.25, 0.0, 0.0])));
        assert!(!c.iter().all(|k| k.holds(&[0.75, 0.0, 0.0])));
    }

    #[test]
    fn reports_error_columns() {
        match Expr::parse("x + foo(2)") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(Constraint::parse_all("x + 1").is_err());
    }
}
