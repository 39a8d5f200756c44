//! Arithmetic expressions over `y1 … yN` for user-supplied norms.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' '-'? integer)?
//! atom  := number | 'y' integer | '(' expr ')' | 'sqrt' '(' expr ')'
//! ```
//!
//! so `-y1^2` means `-(y1^2)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index (`y1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sqrt(Box<Expr>),
}

/// A parsed expression together with the number of variables it ranges over.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprTree {
    pub dim: usize,
    pub root: Expr,
}

impl ExprTree {
    pub fn eval<T: Scalar>(&self, y: &[T]) -> Result<T> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        self.root.eval(y)
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl Expr {
    pub fn eval<T: Scalar>(&self, y: &[T]) -> Result<T> {
        Ok(match self {
            Expr::Const(c) => y[0].lift(*c),
            Expr::Var(i) => y[*i].clone(),
            Expr::Neg(a) => -a.eval(y)?,
            Expr::Add(a, b) => a.eval(y)? + b.eval(y)?,
            Expr::Sub(a, b) => a.eval(y)? - b.eval(y)?,
            Expr::Mul(a, b) => a.eval(y)? * b.eval(y)?,
            Expr::Div(a, b) => a.eval(y)?.checked_div(&b.eval(y)?)?,
            Expr::Pow(a, n) => a.eval(y)?.checked_powi(*n)?,
            Expr::Sqrt(a) => a.eval(y)?.checked_sqrt()?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 0,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "y{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_at(f, 3)
            }
            Expr::Pow(a, n) => {
                a.write_at(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Sqrt(a) => {
                write!(f, "sqrt(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{s}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> Error {
        let found = match self.peek() {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        Error::Syntax {
            pos: self.pos(),
            msg: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        let pos = self.pos();
        match self.bump() {
            (Tok::Num(v), _) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let n = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            _ => Err(Error::Syntax {
                pos,
                msg: "exponent must be an integer literal".to_string(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected("`)`"));
                }
                Ok(e)
            }
            Tok::Ident(name) if name == "sqrt" => {
                self.bump();
                if !self.eat('(') {
                    return Err(self.unexpected("`(` after sqrt"));
                }
                let e = self.expr()?;
                if *self.peek() == Tok::Op(',') {
                    return Err(Error::Arity {
                        pos: self.pos(),
                        msg: "sqrt takes exactly one argument".to_string(),
                    });
                }
                if !self.eat(')') {
                    return Err(self.unexpected("`)`"));
                }
                Ok(Expr::Sqrt(Box::new(e)))
            }
            Tok::Ident(name) => {
                self.bump();
                let index = name
                    .strip_prefix('y')
                    .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&k| k >= 1 && k <= self.dim);
                match index {
                    Some(k) => {
                        if *self.peek() == Tok::Op('(') {
                            return Err(Error::Arity {
                                pos: self.pos(),
                                msg: format!("variable `{name}` is not a function"),
                            });
                        }
                        Ok(Expr::Var(k - 1))
                    }
                    None => Err(Error::UnknownVariable { name, pos }),
                }
            }
            _ => Err(self.unexpected("a number, variable, `(` or sqrt")),
        }
    }
}

/// Parses `text` as an expression in the variables `y1 … y{dim}`.
pub fn parse_norm(text: &str, dim: usize) -> Result<ExprTree> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            pos: 0,
            msg: "empty expression".to_string(),
        });
    }
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        dim,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(ExprTree { dim, root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sum_of_squares() {
        let t = parse_norm("y1^2 + y2^2", 2).unwrap();
        let sq = |k| Box::new(Expr::Pow(Box::new(Expr::Var(k)), 2));
        assert_eq!(t.root, Expr::Add(sq(0), sq(1)));
        assert_eq!(t.eval(&[3.0, 4.0]).unwrap(), 25.0);
    }

    #[test]
    fn doubled_operator_points_at_second_plus() {
        let err = parse_norm("y1^2 + + y2", 2).unwrap_err();
        assert!(matches!(err, Error::Syntax { pos: 7, .. }), "{err:?}");
    }

    #[test]
    fn unknown_and_out_of_range_variables() {
        assert!(matches!(
            parse_norm("y3 + 1", 2),
            Err(Error::UnknownVariable { pos: 0, .. })
        ));
        assert!(matches!(
            parse_norm("2*x1", 2),
            Err(Error::UnknownVariable { pos: 2, .. })
        ));
        assert!(matches!(parse_norm("y0", 2), Err(Error::UnknownVariable { .. })));
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(parse_norm("sqrt(y1, y2)", 2), Err(Error::Arity { .. })));
        assert!(matches!(parse_norm("y1(2)", 2), Err(Error::Arity { .. })));
        assert!(matches!(parse_norm("sqrt y1", 2), Err(Error::Syntax { .. })));
    }

    #[test]
    fn precedence() {
        let t = parse_norm("-y1^2 + 2*y2/4 - 1", 2).unwrap();
        assert_eq!(t.eval(&[3.0, 2.0]).unwrap(), -9.0 + 1.0 - 1.0);
        let t = parse_norm("2^-2*y1", 1).unwrap();
        assert_eq!(t.eval(&[8.0]).unwrap(), 2.0);
        let t = parse_norm("1e-2 * y1 + .5", 1).unwrap();
        assert_eq!(t.eval(&[100.0]).unwrap(), 1.5);
    }

    #[test]
    fn example_norm_text() {
        // H at (1, 0, 1): r = 1, θ = 0, z = 1, so A + B + ε₂.
        let text = "10*(y1^2+y2^2) + 0.01*y3*(3*y2*y1^2 - y2^3)/(y1^2+y2^2) \
                    + y3^2*(10 + 0.01*(y1^6 - 15*y1^4*y2^2 + 15*y1^2*y2^4 - y2^6)/(y1^2+y2^2)^3)";
        let t = parse_norm(text, 3).unwrap();
        let v = t.eval(&[1.0, 0.0, 1.0]).unwrap();
        assert!((v - 20.01).abs() < 1e-12, "{v}");
    }

    #[test]
    fn evaluation_errors_propagate() {
        let t = parse_norm("1/y1 + sqrt(y2)", 2).unwrap();
        assert!(t.eval(&[0.0, 1.0]).is_err());
        assert!(t.eval(&[1.0, -1.0]).is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|k| Expr::Const(k as f64 / 8.0)),
            (0usize..3).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                inner.clone().prop_map(|a| Expr::Sqrt(Box::new(a))),
                (inner.clone(), -3i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_print_round_trips(root in arb_expr()) {
            let tree = ExprTree { dim: 3, root };
            let printed = tree.to_string();
            let back = parse_norm(&printed, 3).unwrap();
            prop_assert_eq!(back, tree, "printed as {}", printed);
        }
    }
}
